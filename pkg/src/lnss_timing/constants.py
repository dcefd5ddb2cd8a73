"""Physical constants shared across the package (km, s, rad unless noted)."""

import math

SPEED_OF_LIGHT = 299792458.0  # m/s
BOLTZMANN = 1.380649e-23  # J/K

MU_MOON = 4902.800066  # km^3/s^2
MU_EARTH = 398600.4418
MU_SUN = 1.32712440018e11

R_MOON = 1737.4  # km
R_EARTH = 6378.137

EARTH_MOON_DISTANCE = 384400.0  # km
AU = 149597870.7  # km
SIDEREAL_YEAR = 365.256363004 * 86400.0  # s

# Earth-Moon mass ratio for the restricted three-body model.
CR3BP_MU = 0.012150585

GPS_L1_FREQ = 1575.42e6  # Hz
GPS_L1_WAVELENGTH = SPEED_OF_LIGHT / GPS_L1_FREQ  # m
GPS_CA_CHIP_LENGTH = SPEED_OF_LIGHT / 1.023e6  # m

SECONDS_PER_DAY = 86400.0
TWO_PI = 2.0 * math.pi
