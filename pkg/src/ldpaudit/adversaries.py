"""Gradient crafters and distinguishers for the auditing game.

A crafter produces a pair of candidate gradients (g1, g2); the client
randomizes one of them, chosen by a hidden fair coin. A distinguisher
then guesses which one was randomized, either from the served model
update (black box) or from the randomized report itself (white box).
Ties always resolve to G1.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import nn
from .data import filter_by_label

__all__ = [
    "CrafterKind",
    "DistinguisherKind",
    "Guess",
    "GradientPair",
    "black_box_rule_for",
    "craft_benign",
    "craft_input_perturbation",
    "craft_parameter_retrogression",
    "craft_gradient_flip",
    "pretrain_malicious_model",
    "craft_collusion",
    "craft_dummy",
    "distinguish_black_delta",
    "distinguish_black_loss_decrease",
    "distinguish_black_sign_sum",
    "distinguish_white_cosine",
    "worst_case_success_prob",
]


class CrafterKind(Enum):
    BENIGN = "benign"
    INPUT_PERTURBATION = "input_perturbation"
    PARAMETER_RETROGRESSION = "parameter_retrogression"
    GRADIENT_FLIP = "gradient_flip"
    COLLUSION = "collusion"
    DUMMY_GRADIENT = "dummy_gradient"


class DistinguisherKind(Enum):
    BLACK_DELTA = "black_delta"
    BLACK_LOSS_DECREASE = "black_loss_decrease"
    BLACK_SIGN_SUM = "black_sign_sum"
    WHITE_COSINE = "white_cosine"


class Guess(Enum):
    G1 = "g1"
    G2 = "g2"


# Which black-box decision rule each crafter's distinguisher uses. The
# benign observer can compare both examples; the dummy crafter knows the
# coordinates share one sign; everyone else watches the victim's loss.
_BLACK_RULES = {
    CrafterKind.BENIGN: DistinguisherKind.BLACK_DELTA,
    CrafterKind.INPUT_PERTURBATION: DistinguisherKind.BLACK_LOSS_DECREASE,
    CrafterKind.PARAMETER_RETROGRESSION: DistinguisherKind.BLACK_LOSS_DECREASE,
    CrafterKind.GRADIENT_FLIP: DistinguisherKind.BLACK_LOSS_DECREASE,
    CrafterKind.COLLUSION: DistinguisherKind.BLACK_LOSS_DECREASE,
    CrafterKind.DUMMY_GRADIENT: DistinguisherKind.BLACK_SIGN_SUM,
}


def black_box_rule_for(crafter):
    return _BLACK_RULES[crafter]


@dataclass(frozen=True)
class GradientPair:
    g1: np.ndarray
    g2: np.ndarray
    crafter: CrafterKind
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.g1.shape != self.g2.shape:
            raise ValueError(f"gradient shapes differ: {self.g1.shape} vs {self.g2.shape}")
        if not (np.all(np.isfinite(self.g1)) and np.all(np.isfinite(self.g2))):
            raise ValueError("gradients must be finite")


def _same_example(x1, x2):
    return x1.label == x2.label and np.array_equal(x1.features, x2.features)


def craft_benign(theta, x1, x2):
    """Honest pair: the gradients of two distinct examples."""
    if _same_example(x1, x2):
        raise ValueError("benign crafter needs two distinct examples")
    g1 = nn.grad_params(theta, x1)
    g2 = nn.grad_params(theta, x2)
    return GradientPair(g1, g2, CrafterKind.BENIGN, {"labels": (x1.label, x2.label)})


def craft_input_perturbation(theta, x1, alpha=1.0):
    """FGSM-style pair: g2 comes from x1 pushed along the sign of its
    input gradient (same label), maximally changing the loss per step."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    step = np.sign(nn.grad_input(theta, x1))
    x2 = nn.Example(x1.features + alpha * step, x1.label)
    g1 = nn.grad_params(theta, x1)
    g2 = nn.grad_params(theta, x2)
    return GradientPair(g1, g2, CrafterKind.INPUT_PERTURBATION, {"alpha": alpha})


def craft_parameter_retrogression(theta, x1, alpha=1.0):
    """g2 is the gradient of the same example after stepping the model
    uphill (toward larger x1 loss). alpha=0 is allowed for testing and
    collapses to g1 = g2."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    g1 = nn.grad_params(theta, x1)
    theta_up = nn.ModelState(theta.spec, theta.params + alpha * g1)
    g2 = nn.grad_params(theta_up, x1)
    # raw norms recorded for inspection; clipping erases the difference
    context = {
        "alpha": alpha,
        "raw_norm_g1": float(np.linalg.norm(g1)),
        "raw_norm_g2": float(np.linalg.norm(g2)),
    }
    return GradientPair(g1, g2, CrafterKind.PARAMETER_RETROGRESSION, context)


def craft_gradient_flip(theta, x1):
    """g2 is exactly the negated honest gradient."""
    g1 = nn.grad_params(theta, x1)
    return GradientPair(g1, -g1, CrafterKind.GRADIENT_FLIP, {"label": x1.label})


def pretrain_malicious_model(spec, dataset, target_label, steps=200, lr=0.1, rng=None):
    """Overfit a fresh model to a single label with full-batch descent.

    The returned model assigns huge loss to every other label, so honest
    gradients computed under it have large norms.
    """
    if rng is None:
        raise ValueError("rng is required for deterministic pretraining")
    subset = filter_by_label(dataset, target_label)
    state = nn.init_params(spec, rng)
    for _ in range(steps):
        grad = np.mean(
            [nn.grad_params(state, subset.example(i)) for i in range(len(subset))],
            axis=0,
        )
        state = nn.ModelState(spec, state.params - lr * grad)
    return state


def craft_collusion(theta_malicious, x1, target_label):
    """Flip attack boosted by a colluding server: g1 is the gradient of an
    off-target example under the single-label model, so its raw norm is
    large; g2 flips it."""
    if x1.label == target_label:
        raise ValueError("collusion example must not carry the pretraining label")
    g1 = nn.grad_params(theta_malicious, x1)
    return GradientPair(
        g1, -g1, CrafterKind.COLLUSION, {"target_label": target_label, "label": x1.label}
    )


def craft_dummy(privacy, norm_fraction=1.0):
    """Constant-filled pair: every coordinate is norm_fraction * L / sqrt(d),
    so the norm is exactly norm_fraction * L; g2 flips it."""
    if not 0 < norm_fraction <= 1:
        raise ValueError("norm_fraction must be in (0, 1]")
    lam = norm_fraction * privacy.clip_norm / math.sqrt(privacy.dim)
    g1 = np.full(privacy.dim, lam)
    return GradientPair(g1, -g1, CrafterKind.DUMMY_GRADIENT, {"norm_fraction": norm_fraction})


def _check_same_spec(theta_t, theta_t1):
    if theta_t.spec != theta_t1.spec:
        raise ValueError("model states must share one architecture")


def distinguish_black_delta(theta_t, theta_t1, x1, x2):
    """Guess G1 iff x1's absolute loss change is at least x2's."""
    _check_same_spec(theta_t, theta_t1)
    delta1 = abs(nn.loss(theta_t1, x1) - nn.loss(theta_t, x1))
    delta2 = abs(nn.loss(theta_t1, x2) - nn.loss(theta_t, x2))
    return Guess.G1 if delta1 >= delta2 else Guess.G2


def distinguish_black_loss_decrease(theta_t, theta_t1, x1):
    """Guess G1 iff the victim example's loss did not increase."""
    _check_same_spec(theta_t, theta_t1)
    return Guess.G1 if nn.loss(theta_t1, x1) <= nn.loss(theta_t, x1) else Guess.G2


def distinguish_black_sign_sum(theta_t, theta_t1):
    """Guess G1 iff the summed signs of the parameter deltas are >= 0.

    This is the literal published rule. The server applies a descent
    step, so against a positive dummy g1 the statistic is anti-aligned;
    the harness calibrates an inversion flag once per audit rather than
    changing the rule here.
    """
    _check_same_spec(theta_t, theta_t1)
    total = np.sign(theta_t1.params - theta_t.params).sum()
    return Guess.G1 if total >= 0 else Guess.G2


def distinguish_white_cosine(z_hat, g1, g2):
    """Guess whichever candidate has the larger cosine to the report."""
    vector = z_hat.z_hat if hasattr(z_hat, "z_hat") else np.asarray(z_hat, dtype=float)
    n1 = np.linalg.norm(g1)
    n2 = np.linalg.norm(g2)
    if n1 == 0.0 or n2 == 0.0:
        raise ValueError("cosine rule needs non-zero candidate gradients")
    cos1 = (vector @ g1) / n1
    cos2 = (vector @ g2) / n2
    return Guess.G1 if cos1 >= cos2 else Guess.G2


def worst_case_success_prob(epsilon):
    """Best possible distinguishing accuracy e^eps/(1+e^eps) against a
    norm-L crafted pair under the white-box rule."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    return 1.0 / (1.0 + math.exp(-epsilon))
