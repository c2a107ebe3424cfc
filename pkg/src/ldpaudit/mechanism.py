"""Two-stage local randomizer for gradients, plus the debiased server step.

Client side: clip the raw gradient to norm L, project it onto the
L-sphere with a norm-dependent random sign, then emit a uniform sphere
direction whose halfspace (relative to the projected gradient) is kept
with probability e^eps / (1 + e^eps). The report is always a unit vector,
so a single report carries one noisy bit of direction information.

Server side: average the reports, rescale by the closed-form debiasing
constant that makes the average an unbiased estimate of the mean clipped
gradient, take a step and project back onto the feasible parameter ball.
"""

import math
from dataclasses import dataclass

import numpy as np

from .nn import ModelState, param_count

__all__ = [
    "MIN_EPSILON",
    "PrivacySpec",
    "RandomizedReport",
    "ServerSpec",
    "retention_prob",
    "clip_gradient",
    "norm_project",
    "sample_unit_sphere",
    "randomize_client",
    "log_gamma",
    "debias_correction",
    "server_debias_and_update",
]

# Below this, e^eps - 1 is dominated by float rounding and the debiasing
# constant loses meaning.
MIN_EPSILON = 1e-6


@dataclass(frozen=True)
class PrivacySpec:
    """Privacy budget eps, clipping norm L and gradient dimension d."""

    epsilon: float
    clip_norm: float
    dim: int

    def __post_init__(self):
        if not self.epsilon >= MIN_EPSILON:
            raise ValueError(f"epsilon must be >= {MIN_EPSILON}, got {self.epsilon}")
        if not self.clip_norm > 0:
            raise ValueError(f"clip_norm must be positive, got {self.clip_norm}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")


@dataclass(frozen=True)
class RandomizedReport:
    """Unit-norm randomized gradient emitted by a client."""

    z_hat: np.ndarray

    def __post_init__(self):
        norm = np.linalg.norm(self.z_hat)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"report must be unit norm, got {norm}")


@dataclass(frozen=True)
class ServerSpec:
    """Radius of the feasible parameter ball and expected client count."""

    projection_radius: float
    num_clients: int

    def __post_init__(self):
        if not self.projection_radius > 0:
            raise ValueError("projection_radius must be positive")
        if self.num_clients < 1:
            raise ValueError("num_clients must be >= 1")


def retention_prob(epsilon):
    """Probability e^eps/(1+e^eps) that the report keeps the gradient's halfspace."""
    return 1.0 / (1.0 + math.exp(-epsilon))


def clip_gradient(g, clip_norm):
    """Scale g down to norm clip_norm if it is longer; direction unchanged."""
    g = np.asarray(g, dtype=float)
    norm = np.linalg.norm(g)
    if norm <= clip_norm:
        return g.copy()
    return g * (clip_norm / norm)


def norm_project(x, clip_norm, rng):
    """Map a clipped gradient onto the sphere of radius clip_norm.

    Returns +L * x/|x| with probability 1/2 + |x|/(2L), else the antipode,
    which makes the output an unbiased estimate of x. A zero gradient has
    no direction, so a fresh uniform direction with a fair sign is used.
    """
    x = np.asarray(x, dtype=float)
    norm = np.linalg.norm(x)
    if norm > clip_norm + 1e-9:
        raise ValueError(f"norm {norm} exceeds clip_norm {clip_norm}")
    if norm == 0.0:
        direction = sample_unit_sphere(x.size, rng)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return sign * clip_norm * direction
    p_plus = 0.5 + norm / (2.0 * clip_norm)
    sign = 1.0 if rng.random() < p_plus else -1.0
    return sign * clip_norm / norm * x


def sample_unit_sphere(d, rng):
    """Uniform direction in R^d: normalized Gaussian, resampled if the
    draw is exactly zero (measure-zero guard)."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    while True:
        v = rng.standard_normal(d)
        norm = np.linalg.norm(v)
        if norm > 0.0:
            return v / norm


def randomize_client(g, spec, rng):
    """Full client-side randomizer: clip, sphere-project, then report a
    uniform direction biased toward the projected gradient's halfspace."""
    g = np.asarray(g, dtype=float)
    if g.shape != (spec.dim,):
        raise ValueError(f"gradient shape {g.shape} != ({spec.dim},)")
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient must be finite")
    x = clip_gradient(g, spec.clip_norm)
    z = norm_project(x, spec.clip_norm, rng)
    v = sample_unit_sphere(spec.dim, rng)
    # <z, v> = 0 keeps +v so the report stays unit norm either way
    aligned = v if z @ v >= 0.0 else -v
    if rng.random() < retention_prob(spec.epsilon):
        return RandomizedReport(aligned)
    return RandomizedReport(-aligned)


_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-06,
    1.5056327351493116e-07,
)


def log_gamma(x):
    """Natural log of Gamma(x) for x > 0 via the Lanczos approximation."""
    if x <= 0:
        raise ValueError(f"log_gamma needs x > 0, got {x}")
    if x < 0.5:
        # reflection keeps the series argument in its accurate range
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    y = x - 1.0
    series = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        series += _LANCZOS_COEF[i] / (y + i)
    t = y + _LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (y + 0.5) * math.log(t) - t + math.log(series)


def debias_correction(spec):
    """Constant c such that c * E[z_hat] equals the clipped gradient.

    The sphere direction retains only the halfspace of the projected
    gradient, shrinking the expectation by E|v_1| = Gamma(d/2) /
    (sqrt(pi) * Gamma((d+1)/2)), and the halfspace coin shrinks it by
    tanh(eps/2); the correction inverts both along with the norm L.
    """
    d = spec.dim
    gamma_ratio = math.exp(log_gamma((d + 1) / 2.0) - log_gamma(d / 2.0))
    return spec.clip_norm * math.sqrt(math.pi) * gamma_ratio / math.tanh(spec.epsilon / 2.0)


def server_debias_and_update(theta, reports, spec, server):
    """One server round: debias the averaged reports into a gradient
    estimate, step with the mechanism's matched learning rate, and
    project the parameters back onto the feasible ball."""
    if not reports:
        raise ValueError("need at least one report")
    if len(reports) != server.num_clients:
        raise ValueError(f"got {len(reports)} reports for {server.num_clients} clients")
    if param_count(theta.spec) != spec.dim:
        raise ValueError("model parameter count does not match spec.dim")
    for r in reports:
        if r.z_hat.shape != (spec.dim,):
            raise ValueError(f"report shape {r.z_hat.shape} != ({spec.dim},)")
    g_t = debias_correction(spec) * np.mean([r.z_hat for r in reports], axis=0)
    eta = (
        server.projection_radius
        * math.sqrt(len(reports))
        / (spec.clip_norm * math.sqrt(spec.dim))
        * math.tanh(spec.epsilon / 2.0)
    )
    new_params = theta.params - eta * g_t
    norm = np.linalg.norm(new_params)
    if norm > server.projection_radius:
        new_params = new_params * (server.projection_radius / norm)
    return ModelState(theta.spec, new_params)
