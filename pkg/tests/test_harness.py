import glob
import math
import os
import time

import numpy as np
import pandas as pd
import pytest

from app.config import defaults
from app.estimation import DUAL_QUADRATURE, SINGLE_QUADRATURE, estimate_phases
from app.harness import (
    EXIT_OK,
    EXIT_RUNTIME,
    EXIT_VALIDATION,
    ExperimentOutput,
    emit_plot_data,
    load_config,
    main,
    run,
    run_selftest,
    validate_config,
)
from app.utils.errors import ConfigValidationError, InvalidArgumentError

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")


def _parity_config(**overrides):
    data = {
        "kind": "parity-sweep",
        "seed": 1,
        "shots": 2000,
        "array": {"n_sites": 10},
        "sweep": {"start": 0.0, "stop": 1396.8, "points": 41},
    }
    data.update(overrides)
    return validate_config(data)


# Configs

@pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(CONFIG_DIR, "*.toml"))))
def test_shipped_configs_validate(path):
    config = load_config(path)
    assert config.seed >= 0


def test_validation_collects_every_error():
    with pytest.raises(ConfigValidationError) as info:
        validate_config({"kind": "dual-quadrature", "seed": -1, "shots": 0, "colour": "blue"})
    errors = info.value.errors
    joined = "\n".join(errors)
    for expected in ("seed", "shots", "colour", "time: section required", "noise: section required"):
        assert expected in joined
    assert len(errors) >= 5


def test_validation_rejects_unknown_kind_and_nested_keys():
    with pytest.raises(ConfigValidationError):
        validate_config({"kind": "stopwatch", "seed": 0})
    with pytest.raises(ConfigValidationError) as info:
        validate_config({"kind": "parity-sweep", "seed": 0, "sweep": {"start": 0, "stopp": 10}})
    assert any("stopp" in e for e in info.value.errors)


def test_semantic_checks():
    with pytest.raises(ConfigValidationError) as info:
        validate_config({
            "kind": "multi-ensemble-slip",
            "seed": 0,
            "slip": {"M_values": [0, 2], "sigma_full": [-1.0]},
            "analysis": {"epsilon": [0.0, 0.5]},
        })
    joined = "\n".join(info.value.errors)
    assert "slip.M_values" in joined and "slip.sigma_full" in joined and "analysis.epsilon" in joined


def test_load_config_errors(tmp_path):
    broken = tmp_path / "broken.toml"
    broken.write_text("kind = \n")
    with pytest.raises(ConfigValidationError):
        load_config(str(broken))
    with pytest.raises(ConfigValidationError):
        load_config(str(tmp_path / "missing.toml"))


def test_population_stderr_scales_with_shots():
    out = ExperimentOutput()
    out.add_population("population", "t", 1.0, "X", 0.5, 100)
    out.add_population("population", "t", 1.0, "X", 0.5, 400)
    assert [row["stderr"] for row in out.rows] == pytest.approx([0.05, 0.025])


# Experiments

def test_parity_sweep_recovers_wavelength():
    result = run(_parity_config())
    report = result.report
    assert abs(report["period_relative_error"]) < 1e-3
    assert report["static_outcomes_identical"]
    assert report["static_population_spread"] == 0.0
    assert report["crosstalk_amplitude"] < 1e-9
    assert report["config.seed"] == 1
    assert report["config.array.n_sites"] == 10
    assert set(result.table["group"]) == {"shifted", "static"}
    assert list(result.table.columns) == ["experiment", "quantity", "axis", "x", "group", "mean", "stderr", "n"]


def test_runs_are_byte_identical(tmp_path):
    config = _parity_config(shots=100, sweep={"start": 0.0, "stop": 700.0, "points": 8})
    first = run(config).write(str(tmp_path / "a"))
    second = run(config).write(str(tmp_path / "b"))
    for key in ("table", "report", "report_json", "config"):
        with open(first[key], "rb") as f, open(second[key], "rb") as g:
            assert f.read() == g.read()


@pytest.mark.slow
def test_full_parity_sweep_runtime():
    config = _parity_config(shots=200, array={"n_sites": 39}, sweep={"start": 0.0, "stop": 1396.8, "points": 200})
    started = time.perf_counter()
    report = run(config).report
    assert time.perf_counter() - started < 10.0
    assert abs(report["period_relative_error"]) < 1e-3


def test_phase_pattern_fringe_offsets():
    config = validate_config({
        "kind": "phase-pattern",
        "seed": 2,
        "shots": 4000,
        "array": {"n_sites": 4},
        "noise": {"kind": "none", "detuning": 2.0},
        "time": {"start": 0.1, "stop": 4.0, "points": 12},
    })
    report = run(config).report
    assert report["pattern_phase_error_max"] < 0.05
    assert report["fringe_phase_offsets"][1] == pytest.approx(math.pi / 4, abs=0.05)


def test_cardinal_tomography_with_readout_errors():
    config = validate_config({
        "kind": "cardinal-tomography",
        "seed": 3,
        "shots": 4000,
        "spam": {"survival": 0.9995, "detect": 0.9997, "eject": 0.9967, "readout_pulse_fidelity": 0.99},
    })
    report = run(config).report
    assert report["mean_fidelity_prepared"] == pytest.approx(1.0, abs=1e-9)
    assert 0.95 < report["mean_fidelity"] < 1.0
    assert report["mean_fidelity_spam_corrected"] > report["mean_fidelity"]
    assert set(report["fidelity"]) == {"+X", "-X", "+Y", "-Y", "+Z", "-Z"}


def test_cardinal_tomography_with_reference_budget():
    result = run(load_config(os.path.join(CONFIG_DIR, "cardinal_tomography.toml")))
    report = result.report
    assert 0.975 <= report["mean_fidelity"] <= 0.995
    assert report["mean_fidelity_prepared"] < 1.0
    assert report["mean_fidelity_spam_corrected"] > report["mean_fidelity"]


def test_local_dd_rate_ratios():
    config = load_config(os.path.join(CONFIG_DIR, "local_dd.toml"))
    config = validate_config({**config.model_dump(exclude_none=True), "shots": 400})
    result = run(config)
    assert result.report["effective_phase_fractions"] == pytest.approx([1.0, 0.5, 0.25])
    assert result.report["rate_ratio_error_max"] < 0.01
    assert result.report["rate_ratios"] == pytest.approx([1.0, 2.0, 4.0], rel=0.01)


def test_kernel_schedule_segment_sums():
    config = validate_config({
        "kind": "kernel-schedule",
        "seed": 6,
        "shots": 400,
        "array": {"ensembles": 3, "atoms_per_quadrature": 5},
        "noise": {"kind": "none", "detuning": 1.5},
        "time": {"start": 1.0, "stop": 8.0, "points": 29},
        "sequence": {"kernels": 2},
    })
    report = run(config).report
    assert report["schedule_fractions"] == pytest.approx([1.0, 0.5, 0.25])
    assert report["segment_sum_max_error"] < 1e-9
    assert report["rate_ratio_error_max"] < 0.02


def test_multi_ensemble_slip_curves():
    config = validate_config({
        "kind": "multi-ensemble-slip",
        "seed": 7,
        "slip": {"sigma_full": [1.0, 2.0], "M_values": [1, 2, 3], "trials": 20000},
    })
    result = run(config)
    table = result.table
    assert not result.warnings
    closed = table[table["quantity"] == "slip_closed_form"]
    assert list(closed["group"]) == ["M=1", "M=1"]
    slip = table[(table["quantity"] == "slip_probability") & (table["x"] == 2.0)]
    assert list(slip["mean"]) == sorted(slip["mean"], reverse=True)
    assert result.report["ideal_stability_gain_M3"] == pytest.approx(math.sqrt(4 / 3))


def test_shift_fidelity_is_perfect_without_errors():
    config = validate_config({
        "kind": "shift-fidelity",
        "seed": 8,
        "shots": 200,
        "array": {"n_sites": 4},
        "sweep": {"start": 598.4, "stop": 798.4, "points": 5},
        "sequence": {"shift_times_us": [10.0, 32.0]},
    })
    result = run(config)
    assert result.report["global_pi_fidelity"] == 1.0
    assert result.report["shift_fidelity"] == 1.0
    assert any("shift" in w for w in result.warnings)


def test_shift_fidelity_with_reference_budget():
    report = run(load_config(os.path.join(CONFIG_DIR, "shift_fidelity.toml"))).report
    assert report["global_pi_fidelity"] == pytest.approx(defaults.GLOBAL_PI_FIDELITY, abs=0.003)
    assert report["shift_fidelity"] == pytest.approx(defaults.SHIFT_FIDELITY, abs=0.003)
    assert report["shift_fidelity"] <= 1.0
    assert report["shift_fidelity_spam_corrected"] <= 1.0


def _dual_config(**overrides):
    data = {
        "kind": "dual-quadrature",
        "seed": 4,
        "shots": 300,
        "array": {"atoms_per_quadrature": 10},
        "noise": {"kind": "power-law-sigma", "beta": defaults.PAPER_BETA, "alpha": defaults.PAPER_ALPHA},
        "time": {"start": 0.5, "stop": 4.0, "points": 6},
        "analysis": {"epsilon": [1e-3, 1e-2]},
    }
    data.update(overrides)
    return validate_config(data)


def test_dual_quadrature_outputs(tmp_path):
    result = run(_dual_config())
    report = result.report
    for key in ("beta", "alpha", "sigma_qpn", "tmax_ratio", "gain_db", "fringe_amplitude"):
        assert key in report
    assert report["tmax_ratio"] == pytest.approx(2.0 ** (1.0 / report["alpha"]))
    assert report["gain_db_from_tmax"] == pytest.approx(report["gain_db"])
    quantities = set(result.table["quantity"])
    assert {"population", "deviation_hist", "sigma_total", "sigma_laser", "slip_probability", "t_max"} <= quantities
    sigma = result.table[(result.table["quantity"] == "sigma_total") & (result.table["group"] == "dual")]
    assert np.allclose(sigma["stderr"], sigma["mean"] / np.sqrt(2.0 * sigma["n"]))

    [path] = emit_plot_data(result.table, "fig3d", str(tmp_path))
    hist = pd.read_csv(path)
    assert list(hist.columns) == ["t", "series", "bin_low", "bin_high", "density", "count"]
    assert sorted(hist["t"].unique()) == pytest.approx(list(np.linspace(0.5, 4.0, 6)))
    assert (hist["bin_high"] > hist["bin_low"]).all()


@pytest.mark.slow
def test_dual_quadrature_recovers_power_law():
    config = _dual_config(shots=500, array={"atoms_per_quadrature": 10},
                          time={"start": 0.5, "stop": 15.0, "points": 50})
    report = run(config).report
    assert report["alpha"] == pytest.approx(defaults.PAPER_ALPHA, rel=0.05)
    assert report["beta"] == pytest.approx(defaults.PAPER_BETA, rel=0.05)
    assert report["tmax_ratio"] == pytest.approx(defaults.TMAX_RATIO, rel=0.1)


# Plot data

def test_emit_parity_panel(tmp_path):
    table = run(_parity_config(shots=50, sweep={"start": 0.0, "stop": 700.0, "points": 8})).table
    [path] = emit_plot_data(table, "fig1d", str(tmp_path))
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["delta_x_nm", "series", "quantity", "mean", "stderr", "n"]
    assert len(frame) == 16
    with pytest.raises(InvalidArgumentError):
        emit_plot_data(table, "fig9z", str(tmp_path))
    with pytest.raises(InvalidArgumentError):
        emit_plot_data(table, "fig3c", str(tmp_path))
    with pytest.raises(InvalidArgumentError):
        emit_plot_data(table.iloc[0:0], "fig1d", str(tmp_path))


# Self-test

def test_selftest_passes():
    summary = run_selftest(shots=100)
    assert summary.passed, summary.format()


def test_selftest_catches_a_flipped_estimator():
    summary = run_selftest(shots=50, estimator=lambda p_x, p_y: -estimate_phases(p_x, p_y))
    assert [c.name for c in summary.failures] == ["phase inversion over (-pi, pi]"]


def test_selftest_catches_a_halved_range():
    summary = run_selftest(shots=50, dual_range=SINGLE_QUADRATURE)
    assert [c.name for c in summary.failures] == ["metrological gain"]
    assert run_selftest(shots=50, dual_range=DUAL_QUADRATURE).passed


# Command line

def _write_config(tmp_path, text):
    path = tmp_path / "experiment.toml"
    path.write_text(text)
    return str(path)


PARITY_TOML = """
kind = "parity-sweep"
seed = 1
shots = 50

[array]
n_sites = 4

[sweep]
start = 0.0
stop = 700.0
points = 8
"""


def test_cli_run_and_emit(tmp_path, capsys):
    out_dir = tmp_path / "out"
    assert main(["run", _write_config(tmp_path, PARITY_TOML), "--out", str(out_dir), "--shots", "20"]) == EXIT_OK
    assert "config.shots" in capsys.readouterr().out
    table = out_dir / "table.csv"
    assert table.exists() and (out_dir / "report.json").exists() and (out_dir / "config.json").exists()
    assert main(["emit", str(table), "fig1d"]) == EXIT_OK
    assert (out_dir / "fig1d.csv").exists()
    assert main(["emit", str(table), "fig3c"]) == EXIT_RUNTIME


def test_cli_overrides_are_recorded_and_replayable(tmp_path):
    out_dir = tmp_path / "out"
    argv = ["run", _write_config(tmp_path, PARITY_TOML), "--out", str(out_dir), "--seed", "9", "--shots", "30"]
    assert main(argv) == EXIT_OK
    replayed = load_config(str(out_dir / "config.json"))
    assert (replayed.seed, replayed.shots) == (9, 30)
    assert replayed.drive.wavevector == pytest.approx(2 * math.pi / 698.4)

    again = tmp_path / "again"
    assert main(["run", str(out_dir / "config.json"), "--out", str(again)]) == EXIT_OK
    assert (again / "table.csv").read_bytes() == (out_dir / "table.csv").read_bytes()
    assert (again / "config.json").read_bytes() == (out_dir / "config.json").read_bytes()


def test_cli_invalid_config(tmp_path, capsys):
    path = _write_config(tmp_path, 'kind = "parity-sweep"\nseed = -3\n')
    assert main(["run", path]) == EXIT_VALIDATION
    assert "config error" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "nope.toml")]) == EXIT_VALIDATION


def test_cli_strict_turns_warnings_into_failure(tmp_path):
    text = """
kind = "shift-fidelity"
seed = 2
shots = 20

[array]
n_sites = 2

[sweep]
values = [698.4]

[sequence]
shift_times_us = [5.0]
"""
    path = _write_config(tmp_path, text)
    out = str(tmp_path / "out")
    assert main(["run", path, "--out", out]) == EXIT_OK
    assert main(["--strict", "run", path, "--out", out]) == EXIT_RUNTIME


def test_cli_selftest():
    assert main(["selftest", "--shots", "50"]) == EXIT_OK
