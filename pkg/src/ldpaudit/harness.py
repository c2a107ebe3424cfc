"""Hypothesis-testing harness that measures empirical privacy.

One trial: a crafter produces candidate gradients (g1, g2), a hidden
fair coin picks which one the client actually randomizes, and a
distinguisher guesses the coin from what it can see. K trials form one
measurement; false-positive/false-negative rates give an empirical
lower bound on the privacy parameter, and R measurements are averaged.

Every random draw derives from (master_seed, namespace, measurement,
trial), so runs are reproducible regardless of execution order.
"""

import math
import statistics
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import nn
from .adversaries import (
    CrafterKind,
    DistinguisherKind,
    Guess,
    black_box_rule_for,
    craft_benign,
    craft_collusion,
    craft_dummy,
    craft_gradient_flip,
    craft_input_perturbation,
    craft_parameter_retrogression,
    distinguish_black_delta,
    distinguish_black_loss_decrease,
    distinguish_black_sign_sum,
    distinguish_white_cosine,
    pretrain_malicious_model,
)
from .mechanism import PrivacySpec, ServerSpec, randomize_client, server_debias_and_update
from .rng import NS_CALIBRATION_SETUP, NS_CALIBRATION_TRIAL, NS_MEASUREMENT, NS_TRIAL, stream

__all__ = [
    "Mode",
    "AuditConfig",
    "TrialRecord",
    "MeasurementResult",
    "AuditResult",
    "MeasurementSetup",
    "empirical_epsilon",
    "prepare_measurement",
    "run_trial_black",
    "run_trial_white",
    "calibrate_sign_sum",
    "run_measurement",
    "run_audit",
]

CALIBRATION_TRIALS = 400


class Mode(Enum):
    BLACK_BOX = "black_box"
    WHITE_BOX = "white_box"


@dataclass(frozen=True, eq=False)
class AuditConfig:
    """Everything one audit needs; immutable so it can be shipped to
    worker processes and echoed into result files."""

    privacy: PrivacySpec
    crafter: CrafterKind
    mode: Mode
    model: "nn.ModelSpec"
    dataset: object  # data.Dataset
    master_seed: int
    trials: int = 10_000
    measurements: int = 10
    num_clients: int = 1
    alpha: float = 1.0
    dummy_norm_fraction: float = 1.0
    projection_radius: float = None  # defaults to 10 * clip_norm
    # Gradient norms of a freshly initialised softmax classifier sit well
    # above typical clip norms (the output-bias gradient alone has norm
    # ~sqrt(1 - 1/num_classes), plus hidden terms), which would pin every
    # model-derived crafter at the clip boundary. A short deterministic
    # settling phase per measurement brings per-example norms into the
    # regime where clipping is inactive and norm differences are visible.
    warmup_steps: int = 30
    warmup_lr: float = 0.5
    warmup_batch: int = 64
    collusion_steps: int = 200
    collusion_lr: float = 0.1

    def __post_init__(self):
        if self.trials < 100:
            raise ValueError(f"trials must be >= 100, got {self.trials}")
        if self.measurements < 1:
            raise ValueError("measurements must be >= 1")
        if self.num_clients < 1:
            raise ValueError("num_clients must be >= 1")
        if not 0 < self.dummy_norm_fraction <= 1:
            raise ValueError("dummy_norm_fraction must be in (0, 1]")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.privacy.dim != nn.param_count(self.model):
            raise ValueError(
                f"privacy.dim {self.privacy.dim} != model parameter count "
                f"{nn.param_count(self.model)}"
            )
        if self.model.layer_sizes[0] != self.dataset.input_dim:
            raise ValueError("model input width != dataset input_dim")
        if self.model.layer_sizes[-1] != self.dataset.num_classes:
            raise ValueError("model output width != dataset num_classes")
        if self.projection_radius is None:
            object.__setattr__(self, "projection_radius", 10.0 * self.privacy.clip_norm)
        if self.projection_radius <= 0:
            raise ValueError("projection_radius must be positive")
        if self.warmup_steps < 0 or self.collusion_steps < 0:
            raise ValueError("step counts must be non-negative")


@dataclass(frozen=True)
class TrialRecord:
    truth: Guess
    guess: Guess


@dataclass(frozen=True)
class MeasurementResult:
    fp_count: int
    fn_count: int
    trials_g1: int
    trials_g2: int
    fp_rate: float  # raw count/trials, before any clamping
    fn_rate: float
    eps_empirical: float
    clamped: bool


@dataclass(frozen=True, eq=False)
class AuditResult:
    config: AuditConfig
    measurements: tuple  # of MeasurementResult
    eps_mean: float
    eps_std: float  # sample stddev across measurements; 0 when R = 1
    sign_sum_invert: bool = None  # set only when the sign-sum rule ran


@dataclass(frozen=True, eq=False)
class MeasurementSetup:
    """Per-measurement context shared by all K trials: the round's model,
    the crafted pair, and the server description."""

    config: AuditConfig
    pair: object
    theta_t: object  # ModelState; None in white-box dummy audits
    x1: object
    x2: object
    server: ServerSpec
    sign_sum_invert: bool = False


def empirical_epsilon(fp, fn):
    """Lower bound on the privacy parameter implied by error rates:
    max(ln((1-fp)/fn), ln((1-fn)/fp)). Negative when fp + fn > 1."""
    if not (0.0 < fp < 1.0 and 0.0 < fn < 1.0):
        raise ValueError(f"rates must lie strictly in (0,1), got fp={fp}, fn={fn}")
    return max(math.log((1.0 - fp) / fn), math.log((1.0 - fn) / fp))


def _clamped_rate(count, n):
    """Error rate with zero and full counts pulled one resolution step
    inside (0,1) so the epsilon formula stays finite."""
    if count == 0:
        return 1.0 / n, True
    if count == n:
        return 1.0 - 1.0 / n, True
    return count / n, False


def _summarize(fp_count, fn_count, trials_g1, trials_g2):
    if trials_g1 == 0 or trials_g2 == 0:
        raise RuntimeError("a hypothesis received no trials; increase K")
    fp_adj, c1 = _clamped_rate(fp_count, trials_g1)
    fn_adj, c2 = _clamped_rate(fn_count, trials_g2)
    # an anti-correlated guesser can push the raw bound below zero; the
    # reported lower bound never is
    eps = max(0.0, empirical_epsilon(fp_adj, fn_adj))
    return MeasurementResult(
        fp_count=fp_count,
        fn_count=fn_count,
        trials_g1=trials_g1,
        trials_g2=trials_g2,
        fp_rate=fp_count / trials_g1,
        fn_rate=fn_count / trials_g2,
        eps_empirical=eps,
        clamped=c1 or c2,
    )


def _needs_model(config):
    """White-box dummy audits never touch the model: the pair is constant
    and the distinguisher sees only the report."""
    return not (
        config.crafter is CrafterKind.DUMMY_GRADIENT and config.mode is Mode.WHITE_BOX
    )


def _warmup(state, dataset, steps, lr, batch, rng):
    if steps == 0:
        return state
    idx = rng.choice(len(dataset), size=min(batch, len(dataset)), replace=False)
    for _ in range(steps):
        grad = np.mean(
            [nn.grad_params(state, dataset.example(int(i))) for i in idx], axis=0
        )
        state = nn.ModelState(state.spec, state.params - lr * grad)
    return state


def _draw_example(dataset, rng, exclude_label=None):
    while True:
        i = int(rng.integers(len(dataset)))
        if exclude_label is None or int(dataset.labels[i]) != exclude_label:
            return dataset.example(i)


def prepare_measurement(config, measurement_index, sign_sum_invert=False, namespace=NS_MEASUREMENT):
    """Materialize the round shared by a measurement's trials.

    Draw order is fixed: model initialisation (and settling or
    pretraining), then example selection, then pair construction.
    """
    rng = stream(config.master_seed, namespace, measurement_index)
    ds = config.dataset
    crafter = config.crafter
    theta_t = None
    x1 = x2 = None

    if crafter is CrafterKind.COLLUSION:
        target = int(rng.integers(ds.num_classes))
        theta_t = pretrain_malicious_model(
            config.model, ds, target, config.collusion_steps, config.collusion_lr, rng
        )
        x1 = _draw_example(ds, rng, exclude_label=target)
        pair = craft_collusion(theta_t, x1, target)
    elif crafter is CrafterKind.DUMMY_GRADIENT:
        if _needs_model(config):
            theta_t = _warmup(
                nn.init_params(config.model, rng),
                ds, config.warmup_steps, config.warmup_lr, config.warmup_batch, rng,
            )
        pair = craft_dummy(config.privacy, config.dummy_norm_fraction)
    else:
        theta_t = _warmup(
            nn.init_params(config.model, rng),
            ds, config.warmup_steps, config.warmup_lr, config.warmup_batch, rng,
        )
        x1 = _draw_example(ds, rng)
        if crafter is CrafterKind.BENIGN:
            while x2 is None or (x2.label == x1.label and np.array_equal(x2.features, x1.features)):
                x2 = _draw_example(ds, rng)
            pair = craft_benign(theta_t, x1, x2)
        elif crafter is CrafterKind.INPUT_PERTURBATION:
            pair = craft_input_perturbation(theta_t, x1, config.alpha)
        elif crafter is CrafterKind.PARAMETER_RETROGRESSION:
            pair = craft_parameter_retrogression(theta_t, x1, config.alpha)
        elif crafter is CrafterKind.GRADIENT_FLIP:
            pair = craft_gradient_flip(theta_t, x1)
        else:
            raise ValueError(f"unknown crafter {crafter}")

    server = ServerSpec(config.projection_radius, config.num_clients)
    return MeasurementSetup(
        config=config,
        pair=pair,
        theta_t=theta_t,
        x1=x1,
        x2=x2,
        server=server,
        sign_sum_invert=sign_sum_invert,
    )


def _flip(guess):
    return Guess.G2 if guess is Guess.G1 else Guess.G1


def run_trial_white(setup, rng):
    """One white-box trial: randomize the coin-chosen gradient and apply
    the cosine rule directly to the report."""
    pair = setup.pair
    truth = Guess.G1 if rng.random() < 0.5 else Guess.G2
    chosen = pair.g1 if truth is Guess.G1 else pair.g2
    report = randomize_client(chosen, setup.config.privacy, rng)
    return TrialRecord(truth, distinguish_white_cosine(report, pair.g1, pair.g2))


def run_trial_black(setup, rng):
    """One black-box trial: randomize the chosen gradient, mix in honest
    client reports, apply the server update, and guess from the models."""
    config = setup.config
    pair = setup.pair
    truth = Guess.G1 if rng.random() < 0.5 else Guess.G2
    chosen = pair.g1 if truth is Guess.G1 else pair.g2
    reports = [randomize_client(chosen, config.privacy, rng)]
    for _ in range(config.num_clients - 1):
        honest = _draw_example(config.dataset, rng)
        reports.append(
            randomize_client(nn.grad_params(setup.theta_t, honest), config.privacy, rng)
        )
    theta_t1 = server_debias_and_update(setup.theta_t, reports, config.privacy, setup.server)

    rule = black_box_rule_for(config.crafter)
    if rule is DistinguisherKind.BLACK_DELTA:
        guess = distinguish_black_delta(setup.theta_t, theta_t1, setup.x1, setup.x2)
    elif rule is DistinguisherKind.BLACK_SIGN_SUM:
        guess = distinguish_black_sign_sum(setup.theta_t, theta_t1)
        if setup.sign_sum_invert:
            guess = _flip(guess)
    else:
        guess = distinguish_black_loss_decrease(setup.theta_t, theta_t1, setup.x1)
    return TrialRecord(truth, guess)


def _uses_sign_sum(config):
    return (
        config.mode is Mode.BLACK_BOX
        and black_box_rule_for(config.crafter) is DistinguisherKind.BLACK_SIGN_SUM
    )


def calibrate_sign_sum(config, trials=CALIBRATION_TRIALS):
    """Decide once per audit whether the literal sign-sum rule should be
    inverted: the published statistic reads > 0 as "the positive dummy",
    but a descent server step moves parameters the other way.

    Runs a held-out round on dedicated calibration streams and returns
    True iff the literal rule scores below chance there.
    """
    setup = prepare_measurement(config, 0, namespace=NS_CALIBRATION_SETUP)
    correct = 0
    for k in range(trials):
        rng = stream(config.master_seed, NS_CALIBRATION_TRIAL, 0, k)
        record = run_trial_black(setup, rng)
        correct += record.guess is record.truth
    return correct < trials / 2


def run_measurement(config, measurement_index, sign_sum_invert=None):
    """K trials on a fresh round; returns tallied rates and the epsilon
    lower bound. sign_sum_invert may be precomputed by the caller; by
    default it is calibrated here when the audit needs it."""
    if sign_sum_invert is None:
        sign_sum_invert = calibrate_sign_sum(config) if _uses_sign_sum(config) else False
    setup = prepare_measurement(config, measurement_index, sign_sum_invert)
    run_trial = run_trial_black if config.mode is Mode.BLACK_BOX else run_trial_white
    fp = fn = n1 = n2 = 0
    for k in range(config.trials):
        rng = stream(config.master_seed, NS_TRIAL, measurement_index, k)
        record = run_trial(setup, rng)
        if record.truth is Guess.G1:
            n1 += 1
            fp += record.guess is Guess.G2
        else:
            n2 += 1
            fn += record.guess is Guess.G1
    return _summarize(fp, fn, n1, n2)


def run_audit(config):
    """R measurements plus their mean and sample standard deviation."""
    invert = calibrate_sign_sum(config) if _uses_sign_sum(config) else None
    results = tuple(
        run_measurement(config, m, invert if invert is not None else False)
        for m in range(config.measurements)
    )
    values = [r.eps_empirical for r in results]
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return AuditResult(
        config=config,
        measurements=results,
        eps_mean=mean,
        eps_std=std,
        sign_sum_invert=invert,
    )
