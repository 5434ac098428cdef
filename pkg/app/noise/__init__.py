from app.noise.laser import LaserNoiseParams, NoiseTrajectory, sample_trajectory
from app.noise.spam import SpamParams, apply_spam
from app.noise.gate_errors import GateErrorParams
from app.noise.qpn import qpn_sigma_oracle, cached_qpn_sigma
