"""Tour of the client-side randomizer, one stage at a time.

Every report a client sends is a unit vector; privacy lives entirely in
which unit vector gets sent. This script feeds a fixed gradient through
each stage, checks the advertised frequencies against long-run counts,
and finishes by debiasing the aggregate back to the input.
"""

import math

import numpy as np

from ldpaudit.mechanism import (
    PrivacySpec,
    clip_gradient,
    debias_correction,
    norm_project,
    randomize_client,
    retention_prob,
    sample_unit_sphere,
)
from ldpaudit.rng import stream

privacy = PrivacySpec(epsilon=1.0, clip_norm=1.0, dim=5)
rng = stream(0, 0)

x = np.array([0.9, -0.3, 0.1, 0.0, 0.2])
print("input gradient     :", x)
print("norm               :", f"{np.linalg.norm(x):.4f}")

# stage 1: clipping only bites when the norm exceeds L
clipped = clip_gradient(x, privacy.clip_norm)
print("\nafter clipping     :", np.round(clipped, 4), "(unchanged, norm < L)")
big = clip_gradient(3.0 * x, privacy.clip_norm)
print("3x input clipped   :", np.round(big, 4), f"norm={np.linalg.norm(big):.4f}")

# stage 2: norm projection replaces the vector by +/- L * direction,
# with the sign biased by how long the input was
print("\nnorm projection, 20000 draws:")
keep = 0
trials = 20_000
for _ in range(trials):
    z = norm_project(clipped, privacy.clip_norm, rng)
    keep += np.dot(z, clipped) > 0
want = 0.5 + np.linalg.norm(clipped) / 2
print(f"  aligned fraction {keep / trials:.4f}, expected {want:.4f}")

# stage 3: the report is a uniform unit direction whose alignment with
# the projected gradient is kept with probability e^eps/(1+e^eps)
print("\nsign retention, 20000 draws:")
p = retention_prob(privacy.epsilon)
z = privacy.clip_norm * clipped / np.linalg.norm(clipped)
aligned = 0
for _ in range(trials):
    v = sample_unit_sphere(privacy.dim, rng)
    aligned += np.dot(z, v) > 0  # before retention, a coin flip
print(f"  raw alignment {aligned / trials:.4f} (direction is uniform: ~0.5)")
print(f"  retention probability e^eps/(1+e^eps) = {p:.4f}")

# full mechanism: reports are unit vectors whatever the input
report = randomize_client(x, privacy, rng).z_hat
print("\none full report    :", np.round(report, 4), f"norm={np.linalg.norm(report):.4f}")

# the server's correction constant makes the average come back to x
print("\ndebiasing, 200000 reports:")
total = np.zeros(privacy.dim)
n = 200_000
for _ in range(n):
    total += randomize_client(x, privacy, rng).z_hat
mean = debias_correction(privacy) * total / n
print("  corrected mean   :", np.round(mean, 3))
print("  original input   :", x)
print(f"  worst coordinate error: {np.abs(mean - x).max():.4f}")
print(f"  correction constant   : {debias_correction(privacy):.4f}")
print(f"  (grows like sqrt(d)/tanh(eps/2); here d=5, eps=1)")
