"""Physical and geodetic constants used across the package.

Two Earth radii deliberately coexist: the WGS-84 ellipsoid parameters are
used for user coordinates, while the spherical radius R_E_SPHERICAL feeds
the dimensionless scaling factors (that is the convention of the scaling
formulas, not an inconsistency).
"""

# WGS-84 ellipsoid
WGS84_A = 6378137.0              # semi-major axis, m
WGS84_F = 1.0 / 298.257223563    # flattening
WGS84_B = WGS84_A * (1.0 - WGS84_F)   # semi-minor axis, m
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)  # first eccentricity squared

# Spherical Earth radius used by the DDOP scaling factors, m
R_E_SPHERICAL = 6371e3

# Earth gravitational parameter, m^3/s^2
MU_EARTH = 3.986004418e14

# Speed of light, m/s
C_LIGHT = 299792458.0

# Earth rotation rate (GMST rate), rad/s
OMEGA_EARTH = 7.292115146706979e-5

# chi-square quantile for a 95% confidence region with 2 degrees of freedom
CHI2_95_2DOF = 5.991

# Default visibility mask angle, deg
DEFAULT_MASK_ANGLE_DEG = 5.0

# Default carrier wavelength: VHF downlink near 137 MHz, m
DEFAULT_WAVELENGTH = C_LIGHT / 137.0e6

SECONDS_PER_DAY = 86400.0
