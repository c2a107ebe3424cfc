"""From error rates to an epsilon lower bound, by hand.

The whole auditing pipeline reduces to one formula: a distinguisher
with false-positive rate fp and false-negative rate fn certifies
eps >= max(ln((1-fp)/fn), ln((1-fn)/fp)). This script exercises the
formula directly, shows what finite trials can and cannot certify,
and compares against the analytic oracle.
"""

import math

from ldpaudit.cli import oracle_report
from ldpaudit.harness import empirical_epsilon

print("perfectly symmetric errors:")
for rate in (0.4, 0.25, 0.1, 0.02):
    eps = empirical_epsilon(rate, rate)
    print(f"  fp = fn = {rate:<5} -> eps >= {eps:.4f}")

print("\nasymmetric errors take the stronger side:")
print(f"  fp=0.1, fn=0.2  -> {empirical_epsilon(0.1, 0.2):.4f}  (= ln 8)")
print(f"  fp=0.2, fn=0.1  -> {empirical_epsilon(0.2, 0.1):.4f}  (same by symmetry)")

print("\na useless guesser certifies nothing:")
print(f"  fp = fn = 0.5   -> {empirical_epsilon(0.5, 0.5):.4f}")

print("\nan anti-correlated guesser would certify a negative bound;")
print("audits floor it at zero rather than report nonsense:")
print(f"  fp = fn = 0.7   -> raw {empirical_epsilon(0.7, 0.7):.4f}")

# finite trials: zero observed errors cannot be read as fp = 0
print("\nwhat K trials can certify (zero observed errors):")
for k in (1000, 10_000, 100_000):
    ceiling = math.log(k / 2 - 1)
    print(f"  K = {k:>6} -> eps capped at ln(K/2 - 1) = {ceiling:.3f}")

print("\nanalytic oracle at the worst-case operating point:")
for eps in (0.5, 2.0, 8.0, 12.0):
    accuracy, implied = oracle_report(eps, trials=10_000)
    note = "  <- trial budget binds" if implied < eps - 0.01 else ""
    print(f"  eps = {eps:<4g} accuracy = {accuracy:.4f} implied bound = {implied:.4f}{note}")
