import math
from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np
from langsmith import traceable

from app.config import defaults
from app.config.settings import settings
from app.ensembles.slip_monte_carlo import slip_probability_multi
from app.ensembles.unwrap import cascaded_unwrap, ladder_readings
from app.estimation.folded_gaussian import fit_folded_gaussian, sample_folded
from app.estimation.phase import estimate_phases, phase_deviation, single_basis_phase, wrap_phase
from app.estimation.phase_slip import gain_db_from_ranges, metrological_gain_db, phase_slip_probability, subtract_qpn
from app.estimation.records import DUAL_QUADRATURE, SINGLE_QUADRATURE, PhaseFit, RangeLike
from app.qubit.state import DriveParams
from app.qubit.tomography import cardinal_state, state_fidelity
from app.sequence.analysis import effective_phase_fraction, validate
from app.sequence.builders import (
    CARDINAL_ORDER,
    SequenceOptions,
    build_cardinal_array,
    build_dual_quadrature,
    build_kernel_schedule,
    build_local_dd,
    build_parity_addressing,
)
from app.sequence.instructions import GlobalPulse, LocalShift, Measure, PulseSequence
from app.sequence.layout import EnsembleLayout
from app.simulation.simulator import SequenceSimulator
from app.utils.logger import setup_logger

logger = setup_logger(__name__)

Estimator = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class SelftestSummary:
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def format(self) -> str:
        lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}  {c.detail}".rstrip() for c in self.checks]
        lines.append(f"{len(self.checks) - len(self.failures)}/{len(self.checks)} checks passed")
        return "\n".join(lines) + "\n"


def _inversion(estimator: Estimator, **_) -> CheckResult:
    theta = np.linspace(-math.pi, math.pi, 721)[1:]
    recovered = estimator((1.0 + np.cos(theta)) / 2.0, (1.0 + np.sin(theta)) / 2.0)
    error = float(np.max(np.abs(wrap_phase(recovered - theta))))
    return CheckResult("phase inversion over (-pi, pi]", error < 1e-12, f"max error {error:.3g}")


def _aliasing(**_) -> CheckResult:
    theta = np.linspace(-math.pi / 2, math.pi / 2, 101)
    a = single_basis_phase((1.0 + np.sin(theta)) / 2.0)
    b = single_basis_phase((1.0 + np.sin(math.pi - theta)) / 2.0)
    return CheckResult("single-basis aliasing", bool(np.allclose(a, b, atol=1e-12)))


def _wrap(**_) -> CheckResult:
    deviations = phase_deviation(np.array([3.0, -3.0]), np.array([-3.0, 3.0]))
    ok = wrap_phase(-math.pi) == math.pi and bool(np.all(np.abs(deviations) <= math.pi))
    ok = ok and bool(np.allclose(deviations, [6.0 - 2 * math.pi, 2 * math.pi - 6.0]))
    return CheckResult("deviation wrap onto (-pi, pi]", ok)


def _gain(dual_range: RangeLike, **_) -> CheckResult:
    fit = PhaseFit(beta=defaults.PAPER_BETA, alpha=defaults.PAPER_ALPHA, sigma_qpn=0.0)
    closed = metrological_gain_db(defaults.PAPER_ALPHA)
    from_ranges = gain_db_from_ranges(fit, 1e-2, SINGLE_QUADRATURE, dual_range)
    ok = abs(closed - defaults.GAIN_DB) < 0.05 and abs(from_ranges - closed) < 1e-9
    return CheckResult("metrological gain", ok, f"{closed:.3f} dB closed form, {from_ranges:.3f} dB from T_max")


def _folded_fit(seed: int, **_) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for sigma in (0.3, 1.0, 2.0):
        fitted = fit_folded_gaussian(sample_folded(sigma, DUAL_QUADRATURE, 4000, rng), DUAL_QUADRATURE)
        worst = max(worst, abs(fitted / sigma - 1.0))
    return CheckResult("folded Gaussian recovers sigma", worst < 0.08, f"worst relative error {worst:.3f}")


def _qpn_subtraction(**_) -> CheckResult:
    ok = subtract_qpn(0.1, 0.2) == 0.0 and abs(subtract_qpn(math.hypot(0.5, 0.3), 0.3) - 0.5) < 1e-12
    return CheckResult("projection-noise subtraction", ok)


def _unwrap(**_) -> CheckResult:
    worst = 0.0
    for M in (1, 2, 3, 4):
        # Whole unambiguous range (-2^(M-1) pi, 2^(M-1) pi]
        half_range = 2.0 ** (M - 1) * math.pi
        for theta in np.linspace(-half_range, half_range, 1000 * 2 ** (M - 1) + 1)[1:]:
            result = cascaded_unwrap(ladder_readings(float(theta), M))
            worst = max(worst, abs(result.theta_full - theta))
    return CheckResult("noise-free cascaded unwrap", worst < 1e-9, f"max error {worst:.3g}")


def _slip_single(seed: int, **_) -> CheckResult:
    estimate = slip_probability_multi(1.0, 1, n_trials=40_000, seed=seed)
    expected = phase_slip_probability(1.0, DUAL_QUADRATURE)
    ok = estimate.ci_low - 1e-3 <= expected <= estimate.ci_high + 1e-3
    return CheckResult("M=1 slip matches erfc", ok, f"{estimate.probability:.4f} vs {expected:.4f}")


def _sequence_fractions(**_) -> CheckResult:
    options = SequenceOptions()
    layout = EnsembleLayout.blocks(3)
    dd = build_local_dd(layout, 8000.0, options)
    kernel, _ = build_kernel_schedule(3, 3, 8000.0, layout, options)
    fractions = [
        [effective_phase_fraction(seq, layout.ensemble_sites(m)[0]) for m in range(3)] for seq in (dd, kernel)
    ]
    ok = all(np.allclose(f, [1.0, 0.5, 0.25], atol=1e-12) for f in fractions)
    return CheckResult("effective phase fractions 1, 1/2, 1/4", ok, str(fractions))


def _validate(**_) -> CheckResult:
    seq = PulseSequence(array_size=2, instructions=[
        GlobalPulse(angle=math.pi / 2),
        LocalShift(shifts={1: 100.0}, shift_time=5.0),
        Measure(bases={0: "Z", 1: "Z"}),
        GlobalPulse(angle=math.pi / 2),
    ])
    kinds = {v.kind for v in validate(seq)}
    return CheckResult("sequence validation", kinds == {"shift-time", "measure-order"}, str(sorted(kinds)))


def _parity(shots: int, seed: int, **_) -> CheckResult:
    drive = DriveParams()
    sim = SequenceSimulator(drive)
    population = sim.run(build_parity_addressing(6, drive.wavelength_nm / 2), shots, seed).population()
    ok = bool(np.all(population[1::2] == 0.0) and np.all(population[0::2] == 1.0))
    return CheckResult("parity addressing at half a wavelength", ok)


def _crosstalk(shots: int, seed: int, **_) -> CheckResult:
    sim = SequenceSimulator()
    runs = [sim.run(build_parity_addressing(6, dx), shots, seed).outcomes[:, 0::2] for dx in (0.0, 123.4, 500.0)]
    return CheckResult("static sites unaffected by neighbour moves", all(np.array_equal(runs[0], r) for r in runs))


def _cardinal(shots: int, seed: int, **_) -> CheckResult:
    outcomes = SequenceSimulator().run(build_cardinal_array(), shots, seed)
    fidelities = [state_fidelity(outcomes.density_matrix(i), cardinal_state(label))
                  for i, label in enumerate(CARDINAL_ORDER)]
    return CheckResult("cardinal states prepared", min(fidelities) > 1.0 - 1e-9, f"min {min(fidelities):.12f}")


def _dual_quadrature(shots: int, seed: int, **_) -> CheckResult:
    layout = EnsembleLayout.alternating(4)
    outcomes = SequenceSimulator().run(build_dual_quadrature(layout, 1000.0), shots, seed)
    p = outcomes.ideal_population()
    ok = np.allclose(p[layout.sites(0, "X")], 1.0) and np.allclose(p[layout.sites(0, "Y")], 0.5)
    return CheckResult("dual quadrature at zero detuning", bool(ok), f"P_x={p[0]:.6f} P_y={p[1]:.6f}")


CHECKS = (
    _inversion,
    _aliasing,
    _wrap,
    _gain,
    _folded_fit,
    _qpn_subtraction,
    _unwrap,
    _slip_single,
    _sequence_fractions,
    _validate,
    _parity,
    _crosstalk,
    _cardinal,
    _dual_quadrature,
)


@traceable(name="selftest", run_type="chain")
def run_selftest(
    shots: int = settings.SELFTEST_SHOTS,
    seed: int = settings.SELFTEST_SEED,
    estimator: Estimator = estimate_phases,
    dual_range: RangeLike = DUAL_QUADRATURE,
) -> SelftestSummary:
    """
    Fast invariant checks across every module. estimator and dual_range can
    be swapped to confirm that a broken inversion or range is caught.
    """
    summary = SelftestSummary()
    for check in CHECKS:
        try:
            result = check(shots=shots, seed=seed, estimator=estimator, dual_range=dual_range)
        except Exception as e:
            result = CheckResult(check.__name__.lstrip("_").replace("_", " "), False, f"raised {e!r}")
        if not result.passed:
            logger.error(f"Self-test failed: {result.name} {result.detail}")
        summary.checks.append(result)
    logger.info(f"Self-test: {len(summary.checks) - len(summary.failures)}/{len(summary.checks)} passed")
    return summary
