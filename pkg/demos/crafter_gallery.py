"""What each crafter actually hands to the randomizer.

Builds every gradient pair (g1, g2) on the same settled model and
prints the geometry that the distinguisher will later exploit: norms,
the angle between the candidates, and the losses involved. Run it to
get a feel for why some pairs are easy to tell apart after
randomization and others hopeless.
"""

import numpy as np

from ldpaudit.adversaries import (
    craft_benign,
    craft_collusion,
    craft_dummy,
    craft_gradient_flip,
    craft_input_perturbation,
    craft_parameter_retrogression,
    pretrain_malicious_model,
)
from ldpaudit.data import SyntheticSpec, generate_blobs
from ldpaudit.harness import _warmup
from ldpaudit.mechanism import PrivacySpec
from ldpaudit import nn
from ldpaudit.rng import stream

dataset = generate_blobs(SyntheticSpec(seed=0))
spec = nn.ModelSpec((20, 32, 10))
rng = stream(123, 0)

# settle the model first; at raw init every per-example gradient is huge
# and clipping would flatten the differences this gallery is about
theta = nn.init_params(spec, rng)
theta = _warmup(theta, dataset, steps=30, lr=0.5, batch=64, rng=rng)

x1 = dataset.example(0)
x2 = dataset.example(500)  # different class


def describe(name, pair, note=""):
    n1, n2 = np.linalg.norm(pair.g1), np.linalg.norm(pair.g2)
    cos = float(pair.g1 @ pair.g2 / (n1 * n2)) if n1 > 0 and n2 > 0 else float("nan")
    print(f"{name:<24} |g1|={n1:7.3f}  |g2|={n2:7.3f}  cos(g1,g2)={cos:+.3f} {note}")


print(f"loss at x1: {nn.loss(theta, x1):.4f}   loss at x2: {nn.loss(theta, x2):.4f}\n")

describe("benign", craft_benign(theta, x1, x2), "(two honest examples)")

pair = craft_input_perturbation(theta, x1, alpha=0.1)
describe("input_perturbation", pair, "(g2 from an FGSM-shifted x1)")

pair = craft_parameter_retrogression(theta, x1, alpha=1.0)
describe("parameter_retrogression", pair, "(g2 from a model stepped uphill)")

describe("gradient_flip", craft_gradient_flip(theta, x1), "(g2 = -g1, maximal angle)")

# collusion needs its own malicious model, pretrained on one label;
# the probe example must carry some other label
target = 3
mal_theta = pretrain_malicious_model(spec, dataset, target, steps=200, lr=0.1,
                                     rng=stream(123, 1))
off_target = next(dataset.example(i) for i in range(len(dataset))
                  if dataset.example(i).label != target)
describe("collusion", craft_collusion(mal_theta, off_target, target),
         "(pretrained model inflates |g|)")

privacy = PrivacySpec(epsilon=1.0, clip_norm=1.0, dim=nn.param_count(spec))
describe("dummy_gradient", craft_dummy(privacy), "(constant fill, exactly norm L)")

print("""
reading the table:
  - the benign pair is just two unrelated per-example gradients; nothing
    about it is adversarially aligned, so it is the hardest to separate
  - flip and dummy pairs are antipodal: the report's sign carries
    everything, which is exactly the worst case for the mechanism
  - collusion norms sit far above clip scale, so after clipping the
    pair behaves like gradient_flip at full norm L""")
