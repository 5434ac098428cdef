# Reference values quoted for the Sr-88 tweezer clock

import math

# Phase growth fit, sigma(t)^2 = (beta t^alpha)^2 + sigma_qpn^2, time in ms
PAPER_BETA = math.pi * 0.117
PAPER_ALPHA = 0.59
PAPER_SIGMA_QPN = math.pi * 0.0915
PAPER_SIGMA_QPN_N9 = math.pi * 0.0934
PAPER_SIGMA_QPN_N10 = math.pi * 0.0897

# Measurement error budget
SURVIVAL = 0.9995
DETECTION = 0.9997
EJECTION = 0.9967
READOUT_PULSE_FIDELITY = 0.9982

# Finite temperature infidelity of one global X(pi)
TEMPERATURE_PI_INFIDELITY = 2e-3

# Quoted operation fidelities
GLOBAL_PI_FIDELITY = 0.9956
SHIFT_FIDELITY = 0.9984
CARDINAL_MEAN_FIDELITY = 0.984
CARDINAL_MEAN_FIDELITY_SPAM_CORRECTED = 0.987

# Quoted headline numbers
TMAX_RATIO = 3.24
GAIN_DB = 2.55
MEASURED_DD_RATES = (1.0, 1.99, 4.10)
MEASURED_PERIOD_NM = 699.0
