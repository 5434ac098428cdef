from app.ensembles.unwrap import (
    EnsembleEstimate,
    UnwrapResult,
    cascaded_unwrap,
    cascaded_unwrap_array,
    fault_displacement,
    ladder_readings,
)
from app.ensembles.slip_monte_carlo import SlipEstimate, slip_probability_multi, ideal_stability_gain
from app.ensembles.readout import ensemble_phases, estimates_for_shot, quadrature_fractions, shot_table
