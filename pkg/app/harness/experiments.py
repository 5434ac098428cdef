import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from langsmith import traceable
from tqdm import tqdm

from app.config import defaults
from app.config.settings import settings
from app.ensembles.readout import quadrature_fractions
from app.ensembles.slip_monte_carlo import ideal_stability_gain, slip_probability_multi
from app.estimation.folded_gaussian import deviation_sigma, fit_folded_gaussian
from app.estimation.fringe_fit import fit_fringes, fit_period, mean_phase_curve
from app.estimation.growth_fit import fit_sigma_growth
from app.estimation.phase import estimate_phases, phase_deviation, single_basis_phase, wrap_phase
from app.estimation.phase_slip import (
    decay_envelope,
    gain_db_from_ranges,
    metrological_gain_db,
    phase_slip_probability,
    subtract_qpn_with_flag,
    t_max,
)
from app.estimation.records import DUAL_QUADRATURE, SINGLE_QUADRATURE, ShotRecord
from app.harness.config import ExperimentConfig
from app.noise.qpn import cached_qpn_sigma
from app.qubit.tomography import cardinal_state, state_fidelity, tomography_reconstruct
from app.sequence.analysis import accumulated_phase, effective_phase_fraction, validate
from app.sequence.builders import (
    CARDINAL_ORDER,
    build_cardinal_array,
    build_dual_quadrature,
    build_kernel_schedule,
    build_local_dd,
    build_parity_addressing,
    build_phase_pattern,
    build_shift_fidelity,
)
from app.sequence.layout import EnsembleLayout
from app.simulation.simulator import SequenceSimulator, ShotOutcomes
from app.utils.errors import QClockError
from app.utils.logger import setup_logger
from app.utils.rng import derive_rng, derive_seed

logger = setup_logger(__name__)

UNIT_US = settings.FIT_TIME_UNIT_US
# Reference level for the single-number T_max ratio and gain
REFERENCE_EPSILON = 1e-2


@dataclass
class ExperimentOutput:
    rows: List[Dict[str, Any]] = field(default_factory=list)
    report: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def add(self, quantity: str, axis: str, x: float, group: str, mean: float,
            stderr: float = float("nan"), n: int = 0) -> None:
        self.rows.append({
            "quantity": quantity,
            "axis": axis,
            "x": float(x),
            "group": group,
            "mean": float(mean),
            "stderr": float(stderr),
            "n": int(n),
        })

    def add_population(self, quantity: str, axis: str, x: float, group: str, p: float, n: int) -> None:
        self.add(quantity, axis, x, group, p, math.sqrt(max(p * (1.0 - p), 0.0) / n), n)

    def warn(self, message: str) -> None:
        logger.warning(message)
        self.warnings.append(message)


EXPERIMENTS: Dict[str, Callable[[ExperimentConfig], ExperimentOutput]] = {}


def experiment(kind: str):
    def register(fn):
        EXPERIMENTS[kind] = fn
        return fn
    return register


def _progress(iterable, desc: str):
    return tqdm(iterable, desc=desc, disable=not settings.PROGRESS_BAR)


def _run(sim: SequenceSimulator, config: ExperimentConfig, seq, seed: int) -> ShotOutcomes:
    return sim.run(
        seq,
        config.shots,
        seed,
        noise=config.noise_or_silent,
        spam=config.spam_or_perfect,
        errors=config.gate_errors,
    )


def _check_sequence(out: ExperimentOutput, seq, label: str) -> None:
    for violation in validate(seq):
        out.warn(f"{label}: instruction {violation.index} {violation.kind}: {violation.message}")


@experiment("parity-sweep")
@traceable(name="parity_sweep", run_type="chain")
def parity_sweep(config: ExperimentConfig) -> ExperimentOutput:
    """Odd sites moved by delta_x between the Ramsey pulses, even sites static."""
    out = ExperimentOutput()
    n = config.array.n_sites
    sweep = config.sweep.as_array()
    sim = SequenceSimulator(config.drive)
    options = config.sequence_options()
    odd, even = list(range(1, n, 2)), list(range(0, n, 2))
    # Common random numbers across the sweep so static sites can be compared bit for bit
    seed = derive_seed(config.seed, "parity-sweep")

    shifted, static, static_outcomes = [], [], []
    for i, dx in enumerate(_progress(sweep, "parity sweep")):
        seq = build_parity_addressing(n, float(dx), options)
        if i == 0:
            _check_sequence(out, seq, "parity sweep")
        outcomes = _run(sim, config, seq, seed)
        population = outcomes.population()
        shifted.append(float(population[odd].mean()))
        static.append(float(population[even].mean()))
        static_outcomes.append(outcomes.outcomes[:, even])
        out.add_population("population", "delta_x_nm", dx, "shifted", shifted[-1], config.shots * len(odd))
        out.add_population("population", "delta_x_nm", dx, "static", static[-1], config.shots * len(even))

    wavelength = config.drive.wavelength_nm
    out.report["static_outcomes_identical"] = all(np.array_equal(static_outcomes[0], s) for s in static_outcomes)
    out.report["static_population_spread"] = float(np.ptp(static))
    try:
        period = fit_period(sweep, shifted)
        out.report["fitted_period_nm"] = period.period
        out.report["fitted_period_stderr_nm"] = period.period_stderr
        out.report["period_relative_error"] = period.period / wavelength - 1.0
        out.report["fringe_amplitude"] = period.amplitude
        out.report["crosstalk_amplitude"] = fit_period(sweep, static, period=wavelength).amplitude
    except QClockError as e:
        out.warn(f"Period fit failed: {e}")
    out.report["reference_period_nm"] = defaults.MEASURED_PERIOD_NM
    return out


@experiment("phase-pattern")
@traceable(name="phase_pattern", run_type="chain")
def phase_pattern(config: ExperimentConfig) -> ExperimentOutput:
    """Ramsey fringes with an arbitrary per-site phase imprinted mid dark time."""
    out = ExperimentOutput()
    n = config.array.n_sites
    pattern = config.sequence.pattern or [j * math.pi / 4 for j in range(n)]
    times = config.time.as_array()
    sim = SequenceSimulator(config.drive)
    options = config.sequence_options()

    populations = np.empty((times.size, len(pattern)))
    dark_times = np.empty(times.size)
    for i, t in enumerate(_progress(times, "phase pattern")):
        seq = build_phase_pattern(pattern, t * UNIT_US, options)
        outcomes = _run(sim, config, seq, derive_seed(config.seed, "phase-pattern", i))
        populations[i] = outcomes.population()
        dark_times[i] = seq.dark_time / UNIT_US
        for site, p in enumerate(populations[i]):
            out.add_population("population", "t", t, f"site={site}", p, config.shots)

    out.report["pattern_rad"] = [float(p) for p in pattern]
    detuning = config.noise_or_silent.detuning
    if detuning == 0.0 or times.size < 4:
        out.warn("No detuning or too few times; fringe phases not fitted")
        return out

    # P_j = (1 + cos(detuning T + phi_j)) / 2
    period = 2.0 * math.pi / abs(detuning)
    sign = 1.0 if detuning > 0 else -1.0
    phases = []
    for site in range(len(pattern)):
        fit = fit_period(dark_times, populations[:, site], period=period)
        phases.append(sign * fit.phase)
    offsets = [float(wrap_phase(p - phases[0])) for p in phases]
    expected = [float(wrap_phase(p - pattern[0])) for p in pattern]
    out.report["fringe_phase_offsets"] = offsets
    out.report["pattern_phase_error_max"] = float(
        np.max(np.abs(wrap_phase(np.array(offsets) - np.array(expected))))
    )
    return out


@experiment("cardinal-tomography")
@traceable(name="cardinal_tomography", run_type="chain")
def cardinal_tomography(config: ExperimentConfig) -> ExperimentOutput:
    """Six cardinal states prepared in parallel and reconstructed from X, Y and Z readout."""
    out = ExperimentOutput()
    sim = SequenceSimulator(config.drive)
    spam = config.spam_or_perfect
    seq = build_cardinal_array(config.sequence_options())
    _check_sequence(out, seq, "cardinal array")

    populations = {}
    ideal = None
    for basis in ("X", "Y", "Z"):
        outcomes = _run(sim, config, seq.with_measurement(basis), derive_seed(config.seed, "cardinal", basis))
        populations[basis] = outcomes.population()
        if basis == "Z":
            ideal = outcomes

    fidelity, corrected, prepared = {}, {}, {}
    for i, label in enumerate(CARDINAL_ORDER):
        target = cardinal_state(label)
        p = {b: float(populations[b][i]) for b in ("X", "Y", "Z")}
        for b, value in p.items():
            out.add_population(f"p_{b.lower()}", "state", i, label, value, config.shots)

        fidelity[label] = state_fidelity(tomography_reconstruct(p["X"], p["Y"], p["Z"]), target)
        fixed = [float(spam.correct(p[b], rotated_basis=(b != "Z"))) for b in ("X", "Y", "Z")]
        corrected[label] = state_fidelity(tomography_reconstruct(*fixed), target)
        rho = ideal.density_matrix(i)
        prepared[label] = state_fidelity(rho / np.trace(rho).real, target)

        out.add("fidelity", "state", i, label, fidelity[label], n=config.shots)
        out.add("fidelity_spam_corrected", "state", i, label, corrected[label], n=config.shots)
        out.add("fidelity_prepared", "state", i, label, prepared[label], n=config.shots)

    out.report["fidelity"] = fidelity
    out.report["mean_fidelity"] = float(np.mean(list(fidelity.values())))
    out.report["mean_fidelity_spam_corrected"] = float(np.mean(list(corrected.values())))
    out.report["mean_fidelity_prepared"] = float(np.mean(list(prepared.values())))
    out.report["reference_mean_fidelity"] = defaults.CARDINAL_MEAN_FIDELITY
    out.report["reference_mean_fidelity_spam_corrected"] = defaults.CARDINAL_MEAN_FIDELITY_SPAM_CORRECTED
    return out


def _histogram_rows(out: ExperimentOutput, deviations: np.ndarray, t: float, bins: int, B: float, group: str) -> None:
    counts, edges = np.histogram(deviations, bins=bins, range=(-B, B))
    width = edges[1] - edges[0]
    total = max(int(counts.sum()), 1)
    for c, lo in zip(counts, edges[:-1]):
        out.add("deviation_hist", "delta", lo + 0.5 * width, f"{group},t={t:.6g}", c / (total * width), n=int(c))


@experiment("dual-quadrature")
@traceable(name="dual_quadrature", run_type="chain")
def dual_quadrature(config: ExperimentConfig) -> ExperimentOutput:
    """
    Dual-quadrature Ramsey over a time grid: phase spread per time, the
    sigma(t) growth fit, and the phase-slip and T_max figures derived from it.
    """
    out = ExperimentOutput()
    N = config.array.atoms_per_quadrature
    layout = EnsembleLayout.alternating(2 * N)
    times = config.time.as_array()
    sim = SequenceSimulator(config.drive)
    options = config.sequence_options()
    analysis = config.analysis

    # 1. Simulate every time point
    records: List[ShotRecord] = []
    fractions = []
    for i, t in enumerate(_progress(times, "dual quadrature")):
        seq = build_dual_quadrature(layout, t * UNIT_US, options)
        if i == 0:
            _check_sequence(out, seq, "dual quadrature")
        outcomes = _run(sim, config, seq, derive_seed(config.seed, "dual-quadrature", i))
        p_x, p_y = quadrature_fractions(outcomes, layout, 0)
        fractions.append((p_x, p_y))
        records.extend(
            ShotRecord.from_counts(float(t), int(round(a * N)), N, int(round(b * N)), N) for a, b in zip(p_x, p_y)
        )
        out.add_population("population", "t", t, "X", float(p_x.mean()), config.shots * N)
        out.add_population("population", "t", t, "Y", float(p_y.mean()), config.shots * N)

    # 2. Mean phase from the fringe fit
    try:
        curve = mean_phase_curve(records)
    except QClockError as e:
        out.warn(f"Mean phase fit failed: {e}")
        return out
    out.report["fringe_frequency"] = curve.fit.frequency
    out.report["fringe_amplitude"] = curve.fit.amplitude

    # 3. Spread per time point
    theta_bar = dict(zip(curve.t.tolist(), curve.theta_bar.tolist()))
    sigma_total, sigma_single, undefined = [], [], 0
    for i, t in enumerate(times):
        p_x, p_y = fractions[i]
        theta = estimate_phases(p_x, p_y)
        defined = ~np.isnan(theta)
        undefined += int((~defined).sum())
        deviations = phase_deviation(theta[defined], theta_bar[float(t)])
        _histogram_rows(out, deviations, t, analysis.histogram_bins, DUAL_QUADRATURE.B, "dual")
        try:
            sigma = deviation_sigma({"ensemble-0": deviations}, DUAL_QUADRATURE, analysis.pooling, analysis.fold_method)
            sigma_total.append((float(t), sigma))
            out.add("sigma_total", "t", t, "dual", sigma, sigma / math.sqrt(2.0 * deviations.size), deviations.size)
        except QClockError as e:
            out.warn(f"t={t:.6g}: dual-quadrature spread fit failed: {e}")

        if analysis.single_basis:
            reference = single_basis_phase(curve.fit.p_y(t))
            folded = np.arcsin(np.sin(single_basis_phase(p_y) - reference))
            try:
                sigma_sb = fit_folded_gaussian(folded, SINGLE_QUADRATURE, analysis.fold_method, mode="reflect")
                sigma_single.append(sigma_sb)
                out.add("sigma_total", "t", t, "single", sigma_sb, sigma_sb / math.sqrt(2.0 * folded.size), folded.size)
            except QClockError as e:
                out.warn(f"t={t:.6g}: single-basis spread fit failed: {e}")
    if undefined:
        out.warn(f"{undefined} shots had a zero quadrature vector and were left out")

    # 4. Projection noise and the growth fit
    contrast = float(np.clip(2.0 * curve.fit.amplitude, 0.05, 1.0))
    sigma_qpn = analysis.sigma_qpn if analysis.sigma_qpn is not None else cached_qpn_sigma(N, contrast, config.seed)
    out.report["sigma_qpn"] = sigma_qpn
    out.report["contrast"] = contrast
    if sigma_total:
        laser, flagged = subtract_qpn_with_flag(np.array([s for _, s in sigma_total]), sigma_qpn)
        if flagged:
            out.warn("Some spreads fell below projection noise and were clamped to zero laser noise")
        for (t, _), s in zip(sigma_total, np.atleast_1d(laser)):
            out.add("sigma_laser", "t", t, "dual", s)
    try:
        fit = fit_sigma_growth(sigma_total, sigma_qpn)
    except QClockError as e:
        out.warn(f"sigma(t) fit failed: {e}")
        return out
    out.report.update(fit.as_dict())
    if not fit.alpha_identifiable:
        out.warn("alpha is not identifiable from this data")

    # 5. Slip probability, envelope, T_max and gain
    for t in times:
        laser_sigma = float(fit.sigma_laser(t))
        out.add("slip_probability", "t", t, "B=pi", phase_slip_probability(laser_sigma, DUAL_QUADRATURE))
        out.add("slip_probability", "t", t, "B=pi/2", phase_slip_probability(laser_sigma, SINGLE_QUADRATURE))
        out.add("contrast", "t", t, "predicted", decay_envelope(laser_sigma))
        out.add("contrast", "t", t, "fringe", 2.0 * float(curve.fit.envelope(t)))
    if fit.beta > 0.0:
        for eps in analysis.epsilon:
            out.add("t_max", "epsilon", eps, "B=pi/2", t_max(eps, fit, SINGLE_QUADRATURE))
            out.add("t_max", "epsilon", eps, "B=pi", t_max(eps, fit, DUAL_QUADRATURE))
        out.report["tmax_ratio"] = t_max(REFERENCE_EPSILON, fit, DUAL_QUADRATURE) / t_max(
            REFERENCE_EPSILON, fit, SINGLE_QUADRATURE
        )
        out.report["gain_db"] = metrological_gain_db(fit.alpha)
        out.report["gain_db_from_tmax"] = gain_db_from_ranges(fit, REFERENCE_EPSILON, SINGLE_QUADRATURE, DUAL_QUADRATURE)
    out.report["reference_gain_db"] = defaults.GAIN_DB
    out.report["reference_tmax_ratio"] = defaults.TMAX_RATIO
    return out


def _ladder_run(config: ExperimentConfig, layout: EnsembleLayout, build, label: str) -> ExperimentOutput:
    """Shared driver for schedules that give every ensemble its own phase fraction."""
    out = ExperimentOutput()
    times = config.time.as_array()
    sim = SequenceSimulator(config.drive)
    M = layout.M
    N = min(min(layout.atoms_per_quadrature(m)) for m in range(M))

    dark, p_x, p_y = [], np.empty((times.size, M)), np.empty((times.size, M))
    seq = None
    for i, t in enumerate(_progress(times, label)):
        seq = build(t * UNIT_US)
        if i == 0:
            _check_sequence(out, seq, label)
        outcomes = _run(sim, config, seq, derive_seed(config.seed, label, i))
        dark.append(seq.dark_time / UNIT_US)
        for m in range(M):
            fx, fy = quadrature_fractions(outcomes, layout, m)
            p_x[i, m], p_y[i, m] = fx.mean(), fy.mean()
            out.add_population("population", "t", t, f"m={m},X", p_x[i, m], config.shots * N)
            out.add_population("population", "t", t, f"m={m},Y", p_y[i, m], config.shots * N)

    fractions = [effective_phase_fraction(seq, layout.ensemble_sites(m)[0]) for m in range(M)]
    out.report["effective_phase_fractions"] = fractions

    frequencies = []
    for m in range(M):
        try:
            fit = fit_fringes(np.array(dark), p_x[:, m], p_y[:, m])
            frequencies.append(fit.frequency)
            out.add("fringe_frequency", "ensemble", m, f"m={m}", fit.frequency, fit.frequency_stderr, times.size)
        except QClockError as e:
            out.warn(f"Ensemble {m}: fringe fit failed: {e}")
    if len(frequencies) == M and frequencies[0] != 0.0:
        ratios = [frequencies[0] / f if f != 0.0 else float("inf") for f in frequencies]
        out.report["rate_ratios"] = ratios
        out.report["rate_ratio_error_max"] = float(max(abs(r / 2.0 ** m - 1.0) for m, r in enumerate(ratios)))
    return out


@experiment("local-dd")
@traceable(name="local_dd", run_type="chain")
def local_dd(config: ExperimentConfig) -> ExperimentOutput:
    layout = EnsembleLayout.blocks(3, config.array.atoms_per_quadrature)
    options = config.sequence_options()
    out = _ladder_run(config, layout, lambda T: build_local_dd(layout, T, options), "local-dd")
    out.report["reference_rate_ratios"] = list(defaults.MEASURED_DD_RATES)
    return out


@experiment("kernel-schedule")
@traceable(name="kernel_schedule", run_type="chain")
def kernel_schedule(config: ExperimentConfig) -> ExperimentOutput:
    """
    k kernels of length tau = T / k. Besides the fringe ratios, checks the
    schedule against a detuning that jumps at every kernel boundary.
    """
    M, k = config.array.ensembles, config.sequence.kernels
    layout = EnsembleLayout.blocks(M, config.array.atoms_per_quadrature)
    options = config.sequence_options()

    def build(T: float):
        seq, _ = build_kernel_schedule(M, k, T / k, layout, options)
        return seq

    out = _ladder_run(config, layout, build, "kernel-schedule")

    T = float(config.time.as_array().max()) * UNIT_US
    seq, schedule = build_kernel_schedule(M, k, T / k, layout, options)
    out.report["schedule_fractions"] = [schedule.fraction(m) for m in range(M)]

    # Piecewise-constant detuning, one value per kernel, rad per fit unit
    scale = config.noise_or_silent.detuning or 1.0
    detunings = derive_rng(config.seed, "kernel-detuning").normal(0.0, abs(scale), k)
    tau = T / k

    def piecewise_phase(t_us: np.ndarray) -> np.ndarray:
        t_us = np.asarray(t_us, dtype=float)
        edges = tau * np.arange(k + 1)
        overlap = np.clip(t_us[:, None] - edges[None, :-1], 0.0, tau)
        overlap[:, -1] = np.maximum(t_us - edges[-2], 0.0)
        return overlap @ detunings / UNIT_US

    total = float(piecewise_phase(np.array([seq.dark_time]))[0])
    errors = [
        abs(accumulated_phase(seq, layout.ensemble_sites(m)[0], piecewise_phase) - 2.0 ** (-m) * total)
        for m in range(M)
    ]
    out.report["segment_sum_max_error"] = float(max(errors))
    if seq.dark_time > T + 1e-9:
        out.warn(f"Readout window stretched the dark time to {seq.dark_time:.1f} us; segment sums are approximate")
    return out


@experiment("multi-ensemble-slip")
@traceable(name="multi_ensemble_slip", run_type="chain")
def multi_ensemble_slip(config: ExperimentConfig) -> ExperimentOutput:
    """Slip probability of cascaded unwrapping against the full-phase spread, per M."""
    out = ExperimentOutput()
    slip = config.slip
    previous: Optional[List[float]] = None
    for M in slip.M_values:
        stage = slip.per_stage_sigma[:M] if slip.per_stage_sigma is not None else None
        if stage is not None and len(stage) < M:
            out.warn(f"M={M}: per_stage_sigma too short, using projection noise instead")
            stage = None
        curve = []
        for sigma in _progress(slip.sigma_full, f"slip M={M}"):
            estimate = slip_probability_multi(sigma, M, stage, slip.trials, config.seed, slip.n_atoms)
            curve.append(estimate.probability)
            out.add("slip_probability", "sigma_full", sigma, f"M={M}", estimate.probability, estimate.stderr,
                    estimate.n_trials)
            out.add("slip_ci_low", "sigma_full", sigma, f"M={M}", estimate.ci_low)
            out.add("slip_ci_high", "sigma_full", sigma, f"M={M}", estimate.ci_high)
            if M == 1:
                out.add("slip_closed_form", "sigma_full", sigma, "M=1", phase_slip_probability(sigma, DUAL_QUADRATURE))
        if previous is not None and stage is None and slip.n_atoms is None:
            if any(c > p for c, p in zip(curve, previous)):
                out.warn(f"Slip probability increased from M={M - 1} to M={M} without estimation noise")
        previous = curve
        out.report[f"ideal_stability_gain_M{M}"] = ideal_stability_gain(M)
    return out


def _fidelity_ratio(shifted: float, static: float) -> float:
    """shifted/static, capped at 1 where shot noise pushes it over."""
    if static <= 0.0:
        return float("nan")
    return min(shifted / static, 1.0)


@experiment("shift-fidelity")
@traceable(name="shift_fidelity", run_type="chain")
def shift_fidelity(config: ExperimentConfig) -> ExperimentOutput:
    """
    A global X(pi) split around a move of the odd sites. At delta_x = lambda
    the move should be invisible; the static sites measure the bare X(pi).
    """
    out = ExperimentOutput()
    n = config.array.n_sites
    sim = SequenceSimulator(config.drive)
    spam = config.spam_or_perfect
    options = config.sequence_options()
    wavelength = config.drive.wavelength_nm
    sweep = config.sweep.as_array() if config.sweep is not None else np.linspace(wavelength - 100, wavelength + 100, 41)
    odd, even = list(range(1, n, 2)), list(range(0, n, 2))
    sweep_seed = derive_seed(config.seed, "shift-fidelity", "sweep")

    for dx in _progress(sweep, "shift sweep"):
        outcomes = _run(sim, config, build_shift_fidelity(float(dx), None, n, options), sweep_seed)
        population = outcomes.population()
        out.add_population("population", "delta_x_nm", dx, "shifted", float(population[odd].mean()),
                           config.shots * len(odd))
        out.add_population("population", "delta_x_nm", dx, "static", float(population[even].mean()),
                           config.shots * len(even))

    seq = build_shift_fidelity(wavelength, None, n, options)
    outcomes = _run(sim, config, seq, derive_seed(config.seed, "shift-fidelity", "lambda"))
    population = outcomes.population()
    p_shift, p_static = float(population[odd].mean()), float(population[even].mean())
    c_shift, c_static = float(spam.correct(p_shift)), float(spam.correct(p_static))
    out.report["global_pi_fidelity"] = p_static
    out.report["global_pi_fidelity_spam_corrected"] = c_static
    out.report["shift_fidelity"] = _fidelity_ratio(p_shift, p_static)
    out.report["shift_fidelity_spam_corrected"] = _fidelity_ratio(c_shift, c_static)
    out.report["reference_global_pi_fidelity"] = defaults.GLOBAL_PI_FIDELITY
    out.report["reference_shift_fidelity"] = defaults.SHIFT_FIDELITY

    for i, shift_time in enumerate(config.sequence.shift_times_us):
        seq = build_shift_fidelity(wavelength, shift_time, n, options)
        _check_sequence(out, seq, f"shift time {shift_time} us")
        population = _run(sim, config, seq, derive_seed(config.seed, "shift-time", i)).population()
        ratio = _fidelity_ratio(float(population[odd].mean()), float(population[even].mean()))
        out.add("shift_fidelity", "shift_time_us", shift_time, "shifted/static", ratio, n=config.shots * len(odd))
    return out
