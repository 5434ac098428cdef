from app.estimation.records import (
    ShotRecord,
    PhaseFit,
    DynamicRange,
    SINGLE_QUADRATURE,
    DUAL_QUADRATURE,
)
from app.estimation.phase import (
    wrap_phase,
    estimate_phase,
    estimate_phases,
    single_basis_phase,
    phase_deviation,
)
from app.estimation.folded_gaussian import fit_folded_gaussian, deviation_sigma, folded_density
from app.estimation.phase_slip import (
    subtract_qpn,
    subtract_qpn_with_flag,
    phase_slip_probability,
    decay_envelope,
    t_max,
    metrological_gain_db,
)
from app.estimation.growth_fit import fit_sigma_growth
from app.estimation.fringe_fit import FringeFit, PeriodFit, fit_fringes, fit_period, mean_phase_curve
from app.estimation.shot_table import load_shot_table, save_shot_table, records_from_table
