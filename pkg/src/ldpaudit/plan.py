"""Config-driven experiment plans.

A plan is a list of named audits, usually generated from a small INI
file: a [plan] section for shared defaults, an optional [grid] section
that expands epsilon x crafter x mode, and any number of [audit:NAME]
sections for hand-picked settings. Results land in one CSV row per
measurement plus a JSON summary, both written once at the end so
concurrent execution cannot interleave them.
"""

import configparser
import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import nn
from .adversaries import CrafterKind, black_box_rule_for
from .data import Dataset, SyntheticSpec, generate_blobs, load_idx_images, load_idx_labels
from .harness import AuditConfig, Mode, run_audit
from .mechanism import PrivacySpec

__all__ = [
    "ConfigError",
    "ExperimentPlan",
    "DEFAULT_MASTER_SEED",
    "DEFAULT_EPS_GRID",
    "default_plan",
    "parse_config",
    "run_plan",
    "write_results_csv",
    "write_summary_json",
    "emit_figure_data",
]

DEFAULT_MASTER_SEED = 7
DEFAULT_EPS_GRID = (0.5, 1.0, 2.0, 4.0)

RESULT_COLUMNS = [
    "crafter",
    "mode",
    "epsilon_theoretical",
    "num_clients",
    "dummy_norm_fraction",
    "measurement_index",
    "trials_g1",
    "trials_g2",
    "fp_count",
    "fn_count",
    "fp_rate",
    "fn_rate",
    "clamped",
    "eps_empirical",
]


class ConfigError(ValueError):
    """Raised for malformed or inconsistent plan files."""


@dataclass(frozen=True, eq=False)
class ExperimentPlan:
    audits: tuple  # of (name, AuditConfig) pairs
    out_dir: str = "results"
    formats: tuple = ("csv", "json")

    def __post_init__(self):
        if not self.audits:
            raise ConfigError("plan contains no audits")
        names = [name for name, _ in self.audits]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate audit names in plan")
        bad = set(self.formats) - {"csv", "json"}
        if bad:
            raise ConfigError(f"unknown output formats: {sorted(bad)}")


_PLAN_KEYS = {
    "master_seed", "out_dir", "formats", "trials", "measurements",
    "clip_norm", "num_clients", "alpha", "dummy_norm_fraction",
    "projection_radius", "warmup_steps", "warmup_lr", "warmup_batch",
    "collusion_steps", "collusion_lr", "hidden",
    "dataset", "input_dim", "num_classes", "examples_per_class",
    "class_separation", "noise_sigma", "dataset_seed",
    "mnist_images", "mnist_labels",
}
_GRID_KEYS = {"eps", "crafters", "modes"}
_AUDIT_KEYS = {
    "crafter", "mode", "epsilon", "trials", "measurements", "num_clients",
    "alpha", "dummy_norm_fraction", "clip_norm", "projection_radius",
    "warmup_steps", "warmup_lr", "warmup_batch",
    "collusion_steps", "collusion_lr",
}

_AUDIT_DEFAULTS = {
    "trials": 10_000,
    "measurements": 10,
    "num_clients": 1,
    "clip_norm": 1.0,
    "alpha": 1.0,
    "dummy_norm_fraction": 1.0,
    "projection_radius": None,
    "warmup_steps": 30,
    "warmup_lr": 0.5,
    "warmup_batch": 64,
    "collusion_steps": 200,
    "collusion_lr": 0.1,
}

_INT_KEYS = {
    "trials", "measurements", "num_clients",
    "warmup_steps", "warmup_batch", "collusion_steps",
}
_FLOAT_KEYS = {
    "clip_norm", "alpha", "dummy_norm_fraction", "projection_radius",
    "warmup_lr", "collusion_lr", "epsilon",
}


def _check_keys(section, present, allowed):
    unknown = set(present) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")


def _convert(section, key, raw):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None
    return raw


def _crafter(section, raw):
    try:
        return CrafterKind(raw.strip())
    except ValueError:
        valid = ", ".join(c.value for c in CrafterKind)
        raise ConfigError(f"[{section}] unknown crafter {raw!r}; expected one of {valid}") from None


def _mode(section, raw):
    try:
        return Mode(raw.strip())
    except ValueError:
        raise ConfigError(f"[{section}] unknown mode {raw!r}; expected black_box or white_box") from None


def _build_dataset(plan_opts):
    kind = plan_opts.get("dataset", "synthetic")
    if kind == "synthetic":
        spec = SyntheticSpec(
            num_classes=int(plan_opts.get("num_classes", 10)),
            input_dim=int(plan_opts.get("input_dim", 20)),
            examples_per_class=int(plan_opts.get("examples_per_class", 100)),
            class_separation=float(plan_opts.get("class_separation", 3.0)),
            noise_sigma=float(plan_opts.get("noise_sigma", 0.5)),
            seed=int(plan_opts.get("dataset_seed", 0)),
        )
        return generate_blobs(spec), {"kind": "synthetic", **spec.__dict__}
    if kind == "mnist":
        try:
            images = plan_opts["mnist_images"]
            labels = plan_opts["mnist_labels"]
        except KeyError as missing:
            raise ConfigError(f"dataset=mnist requires {missing.args[0]} in [plan]") from None
        features = load_idx_images(images)
        label_vec = load_idx_labels(labels)
        num_classes = int(plan_opts.get("num_classes", 10))
        return Dataset(features, label_vec, num_classes), {
            "kind": "mnist", "images": images, "labels": labels,
        }
    raise ConfigError(f"unknown dataset kind {kind!r}; expected synthetic or mnist")


def _model_spec(plan_opts, dataset):
    hidden = str(plan_opts.get("hidden", "32"))
    try:
        widths = tuple(int(h) for h in hidden.split(",") if h.strip())
    except ValueError:
        raise ConfigError(f"[plan] hidden: cannot parse {hidden!r}") from None
    return nn.ModelSpec((dataset.input_dim, *widths, dataset.num_classes))


def _make_config(section, opts, model, dataset, master_seed):
    settings = dict(_AUDIT_DEFAULTS)
    settings.update(opts)
    try:
        privacy = PrivacySpec(
            epsilon=settings.pop("epsilon"),
            clip_norm=settings.pop("clip_norm"),
            dim=nn.param_count(model),
        )
        return AuditConfig(
            privacy=privacy,
            crafter=settings.pop("crafter"),
            mode=settings.pop("mode"),
            model=model,
            dataset=dataset,
            master_seed=master_seed,
            **settings,
        )
    except (ValueError, KeyError) as err:
        raise ConfigError(f"[{section}]: {err}") from None


def _grid_audits(cp, plan_opts, model, dataset, master_seed):
    eps_values = list(DEFAULT_EPS_GRID)
    crafters = list(CrafterKind)
    modes = list(Mode)
    if cp.has_section("grid"):
        items = dict(cp.items("grid"))
        _check_keys("grid", items, _GRID_KEYS)
        if "eps" in items:
            try:
                eps_values = [float(e) for e in items["eps"].split(",") if e.strip()]
            except ValueError:
                raise ConfigError(f"[grid] eps: cannot parse {items['eps']!r}") from None
            if not eps_values:
                raise ConfigError("[grid] eps: empty list")
        if "crafters" in items:
            crafters = [_crafter("grid", c) for c in items["crafters"].split(",") if c.strip()]
        if "modes" in items:
            modes = [_mode("grid", m) for m in items["modes"].split(",") if m.strip()]
    shared = {
        k: v for k, v in plan_opts.items()
        if k in _AUDIT_KEYS and k not in ("crafter", "mode", "epsilon")
    }
    audits = []
    for crafter in crafters:
        for mode in modes:
            for eps in eps_values:
                name = f"{crafter.value}-{mode.value}-eps{eps:g}"
                opts = dict(shared, crafter=crafter, mode=mode, epsilon=eps)
                audits.append((name, _make_config(name, opts, model, dataset, master_seed)))
    return audits


def parse_config(path, master_seed=None, out_dir=None):
    """Read an INI plan file. master_seed/out_dir override the file."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    except configparser.Error as err:
        raise ConfigError(f"malformed config {path}: {err}") from None

    known = {"plan", "grid"}
    for section in cp.sections():
        if section not in known and not section.startswith("audit:"):
            raise ConfigError(f"unknown section [{section}]")

    plan_raw = dict(cp.items("plan")) if cp.has_section("plan") else {}
    _check_keys("plan", plan_raw, _PLAN_KEYS)
    plan_opts = {k: _convert("plan", k, v) for k, v in plan_raw.items()}

    if master_seed is None:
        try:
            master_seed = int(plan_opts.get("master_seed", DEFAULT_MASTER_SEED))
        except ValueError:
            raise ConfigError("[plan] master_seed: not an integer") from None
    if out_dir is None:
        out_dir = plan_opts.get("out_dir", "results")
    formats = tuple(
        f.strip() for f in str(plan_opts.get("formats", "csv,json")).split(",") if f.strip()
    )

    dataset, _ = _build_dataset(plan_opts)
    model = _model_spec(plan_opts, dataset)

    audit_sections = [s for s in cp.sections() if s.startswith("audit:")]
    audits = []
    if audit_sections:
        shared = {
            k: v for k, v in plan_opts.items()
            if k in _AUDIT_KEYS and k not in ("crafter", "mode", "epsilon")
        }
        for section in audit_sections:
            name = section[len("audit:"):]
            if not name:
                raise ConfigError("audit section needs a name: [audit:NAME]")
            items = dict(cp.items(section))
            _check_keys(section, items, _AUDIT_KEYS)
            for required in ("crafter", "mode", "epsilon"):
                if required not in items:
                    raise ConfigError(f"[{section}] missing required key {required}")
            opts = dict(shared)
            opts.update({k: _convert(section, k, v) for k, v in items.items()})
            opts["crafter"] = _crafter(section, items["crafter"])
            opts["mode"] = _mode(section, items["mode"])
            audits.append((name, _make_config(section, opts, model, dataset, master_seed)))
    if cp.has_section("grid") or not audit_sections:
        audits.extend(_grid_audits(cp, plan_opts, model, dataset, master_seed))
    return ExperimentPlan(audits=tuple(audits), out_dir=out_dir, formats=formats)


def default_plan(master_seed=DEFAULT_MASTER_SEED, out_dir="results", **overrides):
    """The stock 6 crafters x 2 modes x 4 epsilon grid."""
    dataset, _ = _build_dataset({})
    model = _model_spec({}, dataset)
    audits = []
    for crafter in CrafterKind:
        for mode in Mode:
            for eps in DEFAULT_EPS_GRID:
                name = f"{crafter.value}-{mode.value}-eps{eps:g}"
                opts = dict(overrides, crafter=crafter, mode=mode, epsilon=eps)
                audits.append((name, _make_config(name, opts, model, dataset, master_seed)))
    return ExperimentPlan(audits=tuple(audits), out_dir=out_dir)


def _run_named(item):
    name, config = item
    return name, run_audit(config)


def run_plan(plan, threads=1):
    """Execute all audits; returns [(name, AuditResult)] in plan order.

    With threads > 1 audits run in worker processes. Results are keyed
    by per-audit seeds, so the schedule cannot affect any output.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if threads == 1 or len(plan.audits) == 1:
        return [_run_named(item) for item in plan.audits]
    with ProcessPoolExecutor(max_workers=min(threads, len(plan.audits))) as pool:
        return list(pool.map(_run_named, plan.audits))


def _fmt(value):
    return format(value, ".17g")


def write_results_csv(results, path):
    """One row per (audit, measurement); floats at 17 significant digits
    so reruns can be compared bytewise."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for _, result in results:
            config = result.config
            for index, m in enumerate(result.measurements):
                writer.writerow([
                    config.crafter.value,
                    config.mode.value,
                    _fmt(config.privacy.epsilon),
                    config.num_clients,
                    _fmt(config.dummy_norm_fraction),
                    index,
                    m.trials_g1,
                    m.trials_g2,
                    m.fp_count,
                    m.fn_count,
                    _fmt(m.fp_rate),
                    _fmt(m.fn_rate),
                    "true" if m.clamped else "false",
                    _fmt(m.eps_empirical),
                ])


def _config_echo(name, result):
    config = result.config
    echo = {
        "name": name,
        "crafter": config.crafter.value,
        "mode": config.mode.value,
        "epsilon": config.privacy.epsilon,
        "clip_norm": config.privacy.clip_norm,
        "dim": config.privacy.dim,
        "master_seed": config.master_seed,
        "trials": config.trials,
        "measurements": config.measurements,
        "num_clients": config.num_clients,
        "alpha": config.alpha,
        "dummy_norm_fraction": config.dummy_norm_fraction,
        "projection_radius": config.projection_radius,
        "warmup_steps": config.warmup_steps,
        "warmup_lr": config.warmup_lr,
        "warmup_batch": config.warmup_batch,
        "collusion_steps": config.collusion_steps,
        "collusion_lr": config.collusion_lr,
        "model_layer_sizes": list(config.model.layer_sizes),
        "black_box_rule": black_box_rule_for(config.crafter).value
        if config.mode is Mode.BLACK_BOX else None,
        "sign_sum_invert": result.sign_sum_invert,
        "eps_mean": result.eps_mean,
        "eps_std": result.eps_std,
        "eps_measurements": [m.eps_empirical for m in result.measurements],
    }
    return echo


def write_summary_json(results, path, master_seed):
    summary = {
        "master_seed": master_seed,
        "num_audits": len(results),
        "audits": [_config_echo(name, result) for name, result in results],
    }
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def emit_figure_data(results, out_dir):
    """Tidy per-figure CSVs for downstream plotting.

    - fig_epsilon: measured vs theoretical epsilon, one series per
      crafter/mode cell, plus an identity reference series.
    - fig_clients: benign black-box trend over num_clients.
    - fig_norm_effect: dummy-gradient white-box trend over norm fraction.

    The latter two appear only when a plan sweeps those settings;
    returns the written paths.
    """
    paths = []

    base = [(name, r) for name, r in results
            if r.config.num_clients == 1 and r.config.dummy_norm_fraction == 1.0]
    if base:
        path = os.path.join(out_dir, "fig_epsilon.csv")
        eps_seen = sorted({r.config.privacy.epsilon for _, r in base})
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["series", "distinguisher", "epsilon_theoretical", "eps_mean", "eps_std"])
            for _, r in base:
                config = r.config
                rule = ("cosine" if config.mode is Mode.WHITE_BOX
                        else black_box_rule_for(config.crafter).value)
                writer.writerow([
                    f"{config.crafter.value}:{config.mode.value}", rule,
                    _fmt(config.privacy.epsilon), _fmt(r.eps_mean), _fmt(r.eps_std),
                ])
            for eps in eps_seen:
                writer.writerow(["theory", "identity", _fmt(eps), _fmt(eps), _fmt(0.0)])
        paths.append(path)

    clients = [(name, r) for name, r in results
               if r.config.crafter is CrafterKind.BENIGN
               and r.config.mode is Mode.BLACK_BOX and r.config.num_clients > 1]
    if clients:
        clients = [(name, r) for name, r in results
                   if r.config.crafter is CrafterKind.BENIGN
                   and r.config.mode is Mode.BLACK_BOX]
        path = os.path.join(out_dir, "fig_clients.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["num_clients", "epsilon_theoretical", "eps_mean", "eps_std"])
            for _, r in sorted(clients, key=lambda item: (item[1].config.num_clients,
                                                          item[1].config.privacy.epsilon)):
                writer.writerow([
                    r.config.num_clients, _fmt(r.config.privacy.epsilon),
                    _fmt(r.eps_mean), _fmt(r.eps_std),
                ])
        paths.append(path)

    fractions = [(name, r) for name, r in results
                 if r.config.crafter is CrafterKind.DUMMY_GRADIENT
                 and r.config.mode is Mode.WHITE_BOX
                 and r.config.dummy_norm_fraction < 1.0]
    if fractions:
        fractions = [(name, r) for name, r in results
                     if r.config.crafter is CrafterKind.DUMMY_GRADIENT
                     and r.config.mode is Mode.WHITE_BOX]
        path = os.path.join(out_dir, "fig_norm_effect.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["dummy_norm_fraction", "epsilon_theoretical", "eps_mean", "eps_std"])
            for _, r in sorted(fractions, key=lambda item: (item[1].config.dummy_norm_fraction,
                                                            item[1].config.privacy.epsilon)):
                writer.writerow([
                    _fmt(r.config.dummy_norm_fraction), _fmt(r.config.privacy.epsilon),
                    _fmt(r.eps_mean), _fmt(r.eps_std),
                ])
        paths.append(path)
    return paths


def write_outputs(plan, results, master_seed):
    """Write every requested format; returns the list of file paths."""
    os.makedirs(plan.out_dir, exist_ok=True)
    paths = []
    if "csv" in plan.formats:
        path = os.path.join(plan.out_dir, "results.csv")
        write_results_csv(results, path)
        paths.append(path)
        paths.extend(emit_figure_data(results, plan.out_dir))
    if "json" in plan.formats:
        path = os.path.join(plan.out_dir, "summary.json")
        write_summary_json(results, path, master_seed)
        paths.append(path)
    return paths
