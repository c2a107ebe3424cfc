import json
import math
import subprocess

import pytest

from ldpaudit.cli import main, oracle_report
from ldpaudit.plan import (
    RESULT_COLUMNS,
    ConfigError,
    DEFAULT_EPS_GRID,
    default_plan,
    parse_config,
    run_plan,
    write_outputs,
)

TINY = """
[plan]
master_seed = 5
trials = 100
measurements = 2
num_classes = 3
input_dim = 5
examples_per_class = 10
hidden = 4
warmup_steps = 2
collusion_steps = 5

[audit:dum]
crafter = dummy_gradient
mode = white_box
epsilon = 1.0

[audit:ben]
crafter = benign
mode = black_box
epsilon = 2.0

[audit:col]
crafter = collusion
mode = white_box
epsilon = 0.5
"""


def write_plan(tmp_path, text, name="plan.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# --- plan parsing ---


def test_default_plan_is_full_grid():
    plan = default_plan()
    assert len(plan.audits) == 6 * 2 * len(DEFAULT_EPS_GRID)
    names = {name for name, _ in plan.audits}
    assert "benign-white_box-eps0.5" in names
    assert "dummy_gradient-black_box-eps4" in names
    assert len(names) == len(plan.audits)


def test_bare_config_expands_grid(tmp_path):
    path = write_plan(tmp_path, "[plan]\nmaster_seed = 3\n")
    plan = parse_config(path)
    assert len(plan.audits) == 48
    assert all(cfg.master_seed == 3 for _, cfg in plan.audits)


def test_grid_section_restricts_grid(tmp_path):
    path = write_plan(tmp_path, """
[plan]
num_classes = 3
input_dim = 5
examples_per_class = 10
hidden = 4

[grid]
eps = 0.5, 2
crafters = dummy_gradient, benign
modes = white_box
""")
    plan = parse_config(path)
    names = [name for name, _ in plan.audits]
    assert names == [
        "dummy_gradient-white_box-eps0.5",
        "dummy_gradient-white_box-eps2",
        "benign-white_box-eps0.5",
        "benign-white_box-eps2",
    ]


def test_audit_sections_suppress_grid(tmp_path):
    plan = parse_config(write_plan(tmp_path, TINY))
    assert [name for name, _ in plan.audits] == ["dum", "ben", "col"]
    dum = plan.audits[0][1]
    assert dum.trials == 100
    assert dum.measurements == 2
    assert dum.privacy.epsilon == 1.0
    assert dum.model.layer_sizes == (5, 4, 3)


def test_audit_sections_plus_grid_section(tmp_path):
    path = write_plan(tmp_path, """
[plan]
num_classes = 3
input_dim = 5
examples_per_class = 10
hidden = 4

[grid]
eps = 1
crafters = benign
modes = white_box

[audit:extra]
crafter = dummy_gradient
mode = white_box
epsilon = 2
""")
    plan = parse_config(path)
    assert [name for name, _ in plan.audits] == ["extra", "benign-white_box-eps1"]


def test_seed_and_out_overrides(tmp_path):
    path = write_plan(tmp_path, TINY)
    plan = parse_config(path, master_seed=99, out_dir="elsewhere")
    assert all(cfg.master_seed == 99 for _, cfg in plan.audits)
    assert plan.out_dir == "elsewhere"


@pytest.mark.parametrize("snippet,match", [
    ("[mystery]\nx = 1\n", "unknown section"),
    ("[plan]\nbogus_key = 1\n", "unknown key"),
    ("[plan]\n\n[grid]\nbogus = 1\n", "unknown key"),
    (TINY + "\n[audit:bad]\ncrafter = benign\nmode = white_box\n", "missing required key"),
    (TINY + "\n[audit:bad]\ncrafter = martian\nmode = white_box\nepsilon = 1\n", "unknown crafter"),
    (TINY + "\n[audit:bad]\ncrafter = benign\nmode = sideways\nepsilon = 1\n", "unknown mode"),
    (TINY + "\n[audit:bad]\ncrafter = benign\nmode = white_box\nepsilon = nope\n", "cannot parse"),
    (TINY + "\n[audit:bad]\ncrafter = benign\nmode = white_box\nepsilon = -1\n", "epsilon"),
    (TINY + "\n[audit:bad]\ncrafter = benign\nmode = white_box\nepsilon = 1\ntrials = 10\n", "trials"),
    ("[plan]\nformats = csv,yaml\n", "unknown output formats"),
    ("[grid]\neps = ,\n", "empty list"),
    ("[plan]\ndataset = parquet\n", "unknown dataset"),
])
def test_config_errors(tmp_path, snippet, match):
    path = write_plan(tmp_path, snippet)
    with pytest.raises(ConfigError, match=match):
        parse_config(path)


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(str(tmp_path / "nope.ini"))


def test_duplicate_sections_rejected(tmp_path):
    path = write_plan(tmp_path, "[audit:a]\nx=1\n[audit:a]\ny=2\n")
    with pytest.raises(ConfigError, match="malformed"):
        parse_config(path)


def test_minimum_trials_accepted(tmp_path):
    path = write_plan(tmp_path, TINY.replace("trials = 100", "trials = 100\n"))
    plan = parse_config(path)
    assert plan.audits[0][1].trials == 100


# --- outputs ---


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("tiny")
    config = write_plan(tmp_path, TINY)
    out = tmp_path / "results"
    code = main(["run", config, "--out", str(out)])
    assert code == 0
    return tmp_path, config, out


def test_results_csv_shape(tiny_run):
    _, _, out = tiny_run
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0] == ",".join(RESULT_COLUMNS)
    assert len(lines) == 1 + 3 * 2  # three audits, two measurements each
    first = lines[1].split(",")
    assert first[0] == "dummy_gradient"
    assert first[1] == "white_box"
    assert float(first[2]) == 1.0
    assert first[12] in ("true", "false")
    float(first[13])  # eps parses


def test_summary_json_contents(tiny_run):
    _, _, out = tiny_run
    summary = json.loads((out / "summary.json").read_text())
    assert summary["master_seed"] == 5
    assert summary["num_audits"] == 3
    names = [a["name"] for a in summary["audits"]]
    assert names == ["dum", "ben", "col"]
    ben = summary["audits"][1]
    assert ben["black_box_rule"] == "black_delta"
    assert ben["sign_sum_invert"] is None
    assert len(ben["eps_measurements"]) == 2
    dum = summary["audits"][0]
    assert dum["black_box_rule"] is None
    assert dum["model_layer_sizes"] == [5, 4, 3]


def test_figure_data_emitted(tiny_run):
    _, _, out = tiny_run
    fig = (out / "fig_epsilon.csv").read_text().splitlines()
    assert fig[0] == "series,distinguisher,epsilon_theoretical,eps_mean,eps_std"
    series = [line.split(",")[0] for line in fig[1:]]
    assert series == [
        "dummy_gradient:white_box", "benign:black_box", "collusion:white_box",
        "theory", "theory", "theory",
    ]
    # no client or norm sweeps in this plan
    assert not (out / "fig_clients.csv").exists()
    assert not (out / "fig_norm_effect.csv").exists()


def test_rerun_is_byte_identical(tiny_run):
    tmp_path, config, out = tiny_run
    out2 = tmp_path / "again"
    assert main(["run", config, "--out", str(out2)]) == 0
    for name in ("results.csv", "summary.json", "fig_epsilon.csv"):
        assert (out / name).read_bytes() == (out2 / name).read_bytes()


def test_threads_do_not_change_output(tiny_run):
    tmp_path, config, out = tiny_run
    out3 = tmp_path / "pooled"
    assert main(["run", config, "--out", str(out3), "--threads", "3"]) == 0
    for name in ("results.csv", "summary.json", "fig_epsilon.csv"):
        assert (out / name).read_bytes() == (out3 / name).read_bytes()


def test_seed_override_changes_results(tiny_run):
    tmp_path, config, out = tiny_run
    out4 = tmp_path / "reseeded"
    assert main(["run", config, "--out", str(out4), "--seed", "77"]) == 0
    summary = json.loads((out4 / "summary.json").read_text())
    assert summary["master_seed"] == 77
    assert (out / "results.csv").read_bytes() != (out4 / "results.csv").read_bytes()


def test_sweep_figures_appear_when_swept(tmp_path):
    config = write_plan(tmp_path, TINY + """
[audit:ben2]
crafter = benign
mode = black_box
epsilon = 2
num_clients = 2

[audit:dum_frac]
crafter = dummy_gradient
mode = white_box
epsilon = 1
dummy_norm_fraction = 0.25
""")
    out = tmp_path / "swept"
    assert main(["run", config, "--out", str(out)]) == 0
    clients = (out / "fig_clients.csv").read_text().splitlines()
    # both benign black audits, sorted by num_clients
    assert [line.split(",")[0] for line in clients[1:]] == ["1", "2"]
    norms = (out / "fig_norm_effect.csv").read_text().splitlines()
    assert [line.split(",")[0] for line in norms[1:]] == ["0.25", "1"]
    # swept cells stay out of the headline figure
    fig = (out / "fig_epsilon.csv").read_text().splitlines()
    assert all("ben2" not in line for line in fig)
    series = [line.split(",")[0] for line in fig[1:]]
    assert series.count("benign:black_box") == 1
    assert series.count("dummy_gradient:white_box") == 1


def test_csv_only_format(tmp_path):
    config = write_plan(tmp_path, TINY.replace("[plan]", "[plan]\nformats = csv"))
    out = tmp_path / "csvonly"
    assert main(["run", config, "--out", str(out)]) == 0
    assert (out / "results.csv").exists()
    assert not (out / "summary.json").exists()


def test_run_reports_config_errors(tmp_path, capsys):
    config = write_plan(tmp_path, "[plan]\nbogus = 1\n")
    assert main(["run", config]) == 2
    assert "error:" in capsys.readouterr().err


def test_run_prints_progress(tiny_run, capsys):
    tmp_path, config, _ = tiny_run
    main(["run", config, "--out", str(tmp_path / "printed")])
    out = capsys.readouterr().out
    assert "running 3 audit(s), master_seed=5" in out
    assert "dum: eps_empirical =" in out
    assert "wrote" in out


# --- the oracle ---


def test_oracle_report_at_two():
    accuracy, implied = oracle_report(2.0)
    assert accuracy == pytest.approx(math.exp(2) / (1 + math.exp(2)), abs=1e-12)
    assert implied == pytest.approx(2.0, abs=1e-9)


def test_oracle_report_caps_at_trial_budget():
    accuracy, implied = oracle_report(20.0, trials=10_000)
    assert accuracy > 0.999999
    assert implied == pytest.approx(math.log(4999.0), abs=1e-12)


def test_oracle_report_degenerate_points():
    accuracy, implied = oracle_report(0.0)
    assert accuracy == 0.5
    assert implied == 0.0
    with pytest.raises(ValueError):
        oracle_report(2.0, trials=3)


def test_oracle_command_output(capsys):
    assert main(["oracle", "--epsilon", "2"]) == 0
    out = capsys.readouterr().out
    assert "0.880797" in out
    assert "2.000000" in out


def test_console_script_installed():
    proc = subprocess.run(
        ["audit", "oracle", "--epsilon", "1", "--trials", "1000"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "worst-case accuracy" in proc.stdout
