"""Physical constants (CODATA 2018) and shared defaults.

All internal rates and detunings in this package are angular frequencies
(rad/s); lengths are meters. Conversion from ordinary frequencies happens
at the user-facing boundary (CLI / config parsing).
"""

import math

TWO_PI = 2.0 * math.pi

HBAR = 1.054571817e-34      # J s
K_B = 1.380649e-23          # J / K
C_LIGHT = 299792458.0       # m / s
ATOMIC_MASS = 1.66053906660e-27  # kg
M_RB87 = 86.909180531 * ATOMIC_MASS  # kg, Rb-87

DEFAULT_WAVELENGTH = 780e-9  # m, D2-line probe; lambda/2 = 390 nm
