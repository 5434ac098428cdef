from app.qubit.state import QubitState, SitePosition, DriveParams
from app.qubit.gates import (
    rotate_global,
    phase_shift_from_move,
    apply_local_phase,
    measure_population,
)
from app.qubit.tomography import (
    TomographyResult,
    tomography_reconstruct,
    state_fidelity,
    bloch_vector,
    cardinal_state,
)
