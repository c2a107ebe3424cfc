"""Empirical privacy auditing for locally randomized gradient reports.

The package simulates one round of LDP-SGD between a crafting client
and a distinguishing adversary and converts the adversary's error
rates into an empirical lower bound on the privacy parameter.
"""

from .adversaries import (
    CrafterKind,
    DistinguisherKind,
    GradientPair,
    Guess,
    worst_case_success_prob,
)
from .data import Dataset, SyntheticSpec, generate_blobs, load_idx_images, load_idx_labels
from .harness import (
    AuditConfig,
    AuditResult,
    MeasurementResult,
    Mode,
    empirical_epsilon,
    run_audit,
    run_measurement,
)
from .mechanism import (
    PrivacySpec,
    RandomizedReport,
    ServerSpec,
    debias_correction,
    randomize_client,
    server_debias_and_update,
)
from .nn import Example, ModelSpec, ModelState, param_count
from .plan import ExperimentPlan, default_plan, parse_config, run_plan

__version__ = "0.1.0"

__all__ = [
    "AuditConfig",
    "AuditResult",
    "CrafterKind",
    "Dataset",
    "DistinguisherKind",
    "Example",
    "ExperimentPlan",
    "GradientPair",
    "Guess",
    "MeasurementResult",
    "Mode",
    "ModelSpec",
    "ModelState",
    "PrivacySpec",
    "RandomizedReport",
    "ServerSpec",
    "SyntheticSpec",
    "debias_correction",
    "default_plan",
    "empirical_epsilon",
    "generate_blobs",
    "load_idx_images",
    "load_idx_labels",
    "param_count",
    "parse_config",
    "randomize_client",
    "run_audit",
    "run_measurement",
    "run_plan",
    "server_debias_and_update",
    "worst_case_success_prob",
    "__version__",
]
