"""Gaussian atomic ensemble and the tweezer-held communication atom.

The ensemble density is

    rho(x, y, z) = 8 N / ((2 pi)^(3/2) sp^2 sz)
                   * exp(-2 (x^2 + y^2) / sp^2 - 2 z^2 / sz^2)

with transverse waist sp and longitudinal waist sz, measured from the cloud
center.  The module provides sampling of atom positions, the on-axis optical
depth, the probability of an ensemble atom wandering into the tweezer's
indistinguishability cube, and the blockade radius of the target spin-wave
state.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import QuadratureError
from .seeding import derive_rng
from .units import GHZ_TO_RAD_PER_US, TWO_PI


@dataclass(frozen=True)
class CloudGeometry:
    """Gaussian cloud parameters: atom number, waists (um), center (um)."""

    n_atoms: int
    sigma_perp: float
    sigma_z: float
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.n_atoms < 0:
            raise ValueError(f"n_atoms must be >= 0, got {self.n_atoms}")
        if self.sigma_perp <= 0 or self.sigma_z <= 0:
            raise ValueError(
                f"waists must be positive, got sigma_perp={self.sigma_perp}, "
                f"sigma_z={self.sigma_z}"
            )
        if len(self.center) != 3:
            raise ValueError("center must be a 3-vector")

    @property
    def peak_density(self) -> float:
        """Density at the cloud center, um^-3."""
        return 8.0 * self.n_atoms / (
            TWO_PI ** 1.5 * self.sigma_perp**2 * self.sigma_z
        )


@dataclass(frozen=True)
class AtomCloud:
    """One sampled realization of a CloudGeometry."""

    geometry: CloudGeometry
    positions: np.ndarray  # (n_atoms, 3) um
    seed: int

    def __post_init__(self):
        if self.positions.shape != (self.geometry.n_atoms, 3):
            raise ValueError(
                f"positions shape {self.positions.shape} does not match "
                f"n_atoms={self.geometry.n_atoms}"
            )


@dataclass(frozen=True)
class TweezerSpec:
    """Communication-atom tweezer: position (um) and the distance below
    which an ensemble atom is considered indistinguishable from it."""

    position: tuple[float, float, float] = (7.1, 0.0, 0.0)
    exclusion_radius: float = 1.0

    def __post_init__(self):
        if self.exclusion_radius <= 0:
            raise ValueError("exclusion_radius must be positive")
        if len(self.position) != 3:
            raise ValueError("position must be a 3-vector")


def density_at(geometry: CloudGeometry, point) -> float | np.ndarray:
    """Ensemble density rho at one point or an (n, 3) array of points, um^-3."""
    p = np.asarray(point, dtype=float) - np.asarray(geometry.center)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    expo = (
        -2.0 * (p[:, 0] ** 2 + p[:, 1] ** 2) / geometry.sigma_perp**2
        - 2.0 * p[:, 2] ** 2 / geometry.sigma_z**2
    )
    rho = geometry.peak_density * np.exp(expo)
    return float(rho[0]) if single else rho


def sample(geometry: CloudGeometry, seed: int) -> AtomCloud:
    """Draw one cloud realization.

    Each coordinate is an independent Gaussian of standard deviation sigma/2
    (the exponent -2 x^2 / sigma^2 is a normal with variance sigma^2/4), so
    the position density of the sample matches density_at.  Bit-exact in the
    seed.
    """
    rng = derive_rng(seed, "cloud-sample")
    scale = np.array(
        [geometry.sigma_perp / 2.0, geometry.sigma_perp / 2.0, geometry.sigma_z / 2.0]
    )
    positions = np.asarray(geometry.center) + rng.standard_normal(
        (geometry.n_atoms, 3)
    ) * scale
    return AtomCloud(geometry=geometry, positions=positions, seed=int(seed))


def optical_depth(geometry: CloudGeometry, cross_section: float) -> float:
    """On-axis OD = sigma_abs * rho_peak * sigma_z * sqrt(pi/2).

    cross_section is the absorption cross section in um^2.
    """
    if cross_section < 0:
        raise ValueError("cross_section must be >= 0")
    return cross_section * geometry.peak_density * geometry.sigma_z * np.sqrt(np.pi / 2.0)


def _gauss_panels(panels, n):
    """Gauss-Legendre nodes/weights on a list of (a, b) panels."""
    g, w = np.polynomial.legendre.leggauss(n)
    xs = [0.5 * (b - a) * g + 0.5 * (a + b) for a, b in panels]
    ws = [0.5 * (b - a) * w for a, b in panels]
    return np.concatenate(xs), np.concatenate(ws)


def escape_probability(
    geometry: CloudGeometry, tweezer: TweezerSpec, rel_tol: float = 1e-6
) -> float:
    """Expected number of ensemble atoms inside the tweezer's
    indistinguishability cube (side 2 * exclusion_radius, centered on the
    tweezer position).

    Evaluated by deterministic tensor Gauss-Legendre quadrature of the 3D
    density over the cube, refined until the relative change is below
    rel_tol.
    """
    if geometry.n_atoms == 0:
        return 0.0
    a = tweezer.exclusion_radius
    cx, cy, cz = tweezer.position

    def integrate(n):
        x, wx = _gauss_panels([(cx - a, cx + a)], n)
        y, wy = _gauss_panels([(cy - a, cy + a)], n)
        z, wz = _gauss_panels([(cz - a, cz + a)], n)
        X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
        rho = density_at(geometry, pts).reshape(X.shape)
        return np.einsum("i,j,k,ijk->", wx, wy, wz, rho)

    coarse, fine = integrate(16), integrate(32)
    if abs(fine - coarse) > rel_tol * max(abs(fine), 1e-300):
        raise QuadratureError(
            f"escape-probability quadrature did not converge: "
            f"{coarse:.9g} -> {fine:.9g}"
        )
    return float(fine)


def blockade_radius(c6: float, omega_eff: float) -> float:
    """Blockade radius R_b = (C6 / Omega_eff)^(1/6) in um.

    c6 is the tabulated van der Waals constant in GHz um^6 and omega_eff the
    effective angular Rabi frequency in rad/us.  The tabulated GHz figure is
    treated as 1e3 rad/us (see units.GHZ_TO_RAD_PER_US); with
    C6 = 360.7 GHz um^6 and Omega_eff = 2pi x 1 MHz this gives the worked
    value R_b = 6.2 um.
    """
    if c6 <= 0:
        raise ValueError(f"c6 must be positive, got {c6}")
    if omega_eff <= 0:
        raise ValueError(f"omega_eff must be positive, got {omega_eff}")
    return float((c6 * GHZ_TO_RAD_PER_US / omega_eff) ** (1.0 / 6.0))
