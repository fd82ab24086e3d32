"""Internal unit conventions.

All frequencies are stored as angular frequencies in rad/us, lengths in um,
times in us.  Configuration files quote frequencies the way the literature
does ("2pi x value MHz"), so every external field name carries a `_2pi_mhz`
or `_2pi_khz` suffix and is converted exactly once on load.
"""

import math

TWO_PI = 2.0 * math.pi

# Tabulated dipole constants ("GHz um^3" for C3, "GHz um^6" for C6) are
# angular frequencies in disguise: 1 GHz = 1e3 rad/us.  This single constant
# reproduces the worked pair-coupling values (2pi x 3.88 / 4.69 MHz at
# r = 7.1 um) and the 6.2 um blockade radius, so it is used everywhere a
# tabulated constant enters a formula.
GHZ_TO_RAD_PER_US = 1.0e3

# |k| of a near-infrared drive laser (780 nm), in um^-1.  Only the phase
# bookkeeping k0 . r_j depends on it; the write dynamics do not.
K0_MAGNITUDE = TWO_PI / 0.780


def mhz_2pi(value: float) -> float:
    """Convert a frequency quoted as '2pi x value MHz' to rad/us."""
    return TWO_PI * value


def khz_2pi(value: float) -> float:
    """Convert a frequency quoted as '2pi x value kHz' to rad/us."""
    return TWO_PI * 1.0e-3 * value


def as_mhz_2pi(omega: float) -> float:
    """Express an internal angular frequency as the '2pi x ... MHz' value."""
    return omega / TWO_PI
