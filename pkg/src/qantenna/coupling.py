"""Dipole-dipole couplings between the communication atom and the ensemble.

The exchange coupling between the tweezer atom and ensemble atom j is

    D_j = C3 / (2 |dr|^3) * (1 - 3 cos^2 theta_j),   dr = r_j - r_c,

with theta_j measured from the quantization axis.  Adiabatic elimination of
the far-detuned intermediate Rydberg state turns the N-atom problem into an
effective two-level avoided crossing between |u, G> and the collective spin
wave |d, S>, with per-atom couplings D~_j = Omega D_j / Delta, Stark-shifted
detunings, and collective gap Dbar = sqrt(sum |D~_j|^2).

Also provided: the deterministic quadrature for the ensemble-averaged Dbar,
the two-level eigensystem, the Landau-Zener sweep probability, and the
five-level reduction that justifies neglecting cross-channel couplings.
"""

from dataclasses import dataclass, field

import numpy as np

from .cloud import AtomCloud, CloudGeometry, TweezerSpec, _gauss_panels
from .errors import HierarchyError, QuadratureError, SingularityError
from .units import GHZ_TO_RAD_PER_US, K0_MAGNITUDE, TWO_PI

# Below this atom-tweezer separation the 1/r^3 law is meaningless for
# trapped atoms; such a sample signals an unphysical configuration.
SEPARATION_FLOOR = 0.05  # um

Z_AXIS = (0.0, 0.0, 1.0)


@dataclass(frozen=True)
class RydbergChannel:
    """One Rydberg write channel (up or down).

    c3 is the tabulated dipole constant in GHz um^3; omega_max, delta_single
    and gamma_s are angular frequencies in rad/us; k0 is the drive wave
    vector in um^-1.
    """

    label: str
    c3: float
    omega_max: float
    delta_single: float
    k0: tuple[float, float, float] = (0.0, 0.0, K0_MAGNITUDE)
    gamma_s: float = 0.0

    def __post_init__(self):
        if self.label not in ("up", "down"):
            raise ValueError(f"label must be 'up' or 'down', got {self.label!r}")
        if self.delta_single == 0:
            raise ValueError("delta_single must be nonzero")
        if abs(self.omega_max) >= abs(self.delta_single):
            raise ValueError(
                "adiabatic elimination requires |omega_max| < |delta_single| "
                f"(got {self.omega_max:.4g} vs {self.delta_single:.4g})"
            )
        if len(self.k0) != 3:
            raise ValueError("k0 must be a 3-vector")


@dataclass(frozen=True)
class CouplingSet:
    """Per-atom couplings of one channel for one cloud realization.

    d_j          bare exchange couplings D_j (signed, rad/us)
    d_tilde_j    effective couplings Omega_max D_j / Delta
    delta_tilde_j  per-atom Stark offset at full drive power, excluding the
                 swept external detuning: light_shift - D_j^2 / Delta
    light_shift  Omega_max^2/Delta plus the partner channel's contribution;
                 this is the part of delta_tilde_j that follows the drive
                 envelope squared
    d_bar        collective strength sqrt(sum d_tilde_j^2)
    phases       k0 . r_j (absorbed into the spin-wave ansatz; recorded for
                 the emission-direction bookkeeping)
    """

    channel: RydbergChannel
    d_j: np.ndarray
    d_tilde_j: np.ndarray
    delta_tilde_j: np.ndarray
    light_shift: float
    d_bar: float
    phases: np.ndarray

    def __post_init__(self):
        n = len(self.d_j)
        for name in ("d_tilde_j", "delta_tilde_j", "phases"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match d_j")
        expected = float(np.sqrt(np.sum(np.abs(self.d_tilde_j) ** 2)))
        if not np.isclose(self.d_bar, expected, rtol=1e-12, atol=1e-300):
            raise ValueError("d_bar does not equal sqrt(sum |d_tilde_j|^2)")

    @property
    def n_atoms(self) -> int:
        return len(self.d_j)


def pair_coupling(c3: float, r_atom, r_comm, quantization_axis=Z_AXIS) -> float:
    """Exchange coupling D = C3/(2 r^3) (1 - 3 cos^2 theta), rad/us.

    c3 is tabulated in GHz um^3 and converted with GHZ_TO_RAD_PER_US, which
    reproduces the worked center values 2pi x 3.88 / 4.69 MHz at 7.1 um.
    """
    dr = np.asarray(r_atom, dtype=float) - np.asarray(r_comm, dtype=float)
    r = float(np.linalg.norm(dr))
    if r < SEPARATION_FLOOR:
        raise SingularityError(r)
    axis = np.asarray(quantization_axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    cos_t = float(np.dot(dr, axis)) / r
    return c3 * GHZ_TO_RAD_PER_US / (2.0 * r**3) * (1.0 - 3.0 * cos_t**2)


def build_couplings(
    cloud: AtomCloud,
    tweezer: TweezerSpec,
    channel: RydbergChannel,
    delta2_base: float = 0.0,
    quantization_axis=Z_AXIS,
) -> CouplingSet:
    """Couplings of every cloud atom to the tweezer atom for one channel.

    delta2_base is the partner channel's static light shift
    Omega_partner^2 / Delta_partner at full power (rad/us); it is added to
    every atom's Stark offset and scales with the drive envelope squared.
    """
    if cloud.geometry.n_atoms == 0:
        raise ValueError("cloud is empty; couplings are undefined")
    dr = cloud.positions - np.asarray(tweezer.position)
    r = np.linalg.norm(dr, axis=1)
    too_close = np.flatnonzero(r < SEPARATION_FLOOR)
    if too_close.size:
        idx = int(too_close[0])
        raise SingularityError(float(r[idx]), atom_index=idx)
    axis = np.asarray(quantization_axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    cos_t = dr @ axis / r
    d_j = channel.c3 * GHZ_TO_RAD_PER_US / (2.0 * r**3) * (1.0 - 3.0 * cos_t**2)
    d_tilde_j = channel.omega_max * d_j / channel.delta_single
    light_shift = channel.omega_max**2 / channel.delta_single + delta2_base
    delta_tilde_j = light_shift - d_j**2 / channel.delta_single
    d_bar = float(np.sqrt(np.sum(d_tilde_j**2)))
    phases = cloud.positions @ np.asarray(channel.k0, dtype=float)
    return CouplingSet(
        channel=channel,
        d_j=d_j,
        d_tilde_j=d_tilde_j,
        delta_tilde_j=delta_tilde_j,
        light_shift=light_shift,
        d_bar=d_bar,
        phases=phases,
    )


@dataclass(frozen=True)
class QuadratureStrength:
    """Deterministic ensemble average of the collective coupling."""

    d_bar: float        # rad/us
    i_integral: float   # (rad/us)^2: I = integral rho~ |D|^2
    i_constant: float   # the dimensionless scaled-geometry integral


def collective_strength_quadrature(
    geometry: CloudGeometry,
    tweezer: TweezerSpec,
    channel: RydbergChannel,
    quantization_axis=Z_AXIS,
    rel_tol: float = 1e-4,
    base_nodes: int = 32,
) -> QuadratureStrength:
    """Dbar from Dbar^2 = |Omega|^2 N I / Delta^2 with
    I = integral rho~(r) |D(r - r_c)|^2 d^3r.

    The integral is evaluated in waist-scaled coordinates with the x-range
    truncated to +-sigma_perp around the cloud center, which keeps the
    integration region away from the 1/r^6 divergence at the tweezer.  The
    dimensionless value of the scaled integral is exposed as i_constant.
    Tensor Gauss-Legendre panels are refined once; a relative change above
    rel_tol raises QuadratureError.
    """
    sp, sz = geometry.sigma_perp, geometry.sigma_z
    ratio = sp / sz
    tw = (np.asarray(tweezer.position) - np.asarray(geometry.center)) / sp
    axis = np.asarray(quantization_axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    ly = 4.0
    lz = max(4.0, min(16.0, 3.0 / ratio))

    def scaled_integral(n):
        x, wx = _gauss_panels([(-1.0, 0.0), (0.0, 1.0)], n)
        y, wy = _gauss_panels([(-ly, 0.0), (0.0, ly)], n)
        z, wz = _gauss_panels([(-lz, 0.0), (0.0, lz)], n)
        X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
        dx, dy, dz = X - tw[0], Y - tw[1], Z - tw[2]
        r2 = dx**2 + dy**2 + dz**2
        cos_t = (dx * axis[0] + dy * axis[1] + dz * axis[2]) / np.sqrt(r2)
        ang = (1.0 - 3.0 * cos_t**2) ** 2
        f = np.exp(-2.0 * (ratio * Z) ** 2 - 2.0 * X**2 - 2.0 * Y**2) * ang / r2**3
        return np.einsum("i,j,k,ijk->", wx, wy, wz, f)

    coarse = scaled_integral(base_nodes)
    fine = scaled_integral(2 * base_nodes)
    if abs(fine - coarse) > rel_tol * max(abs(fine), 1e-300):
        raise QuadratureError(
            f"collective-strength quadrature did not converge: "
            f"{coarse:.8g} -> {fine:.8g}"
        )
    i_constant = float(fine)
    c3_int = channel.c3 * GHZ_TO_RAD_PER_US
    i_integral = 2.0 * c3_int**2 / (TWO_PI**1.5 * sp**5 * sz) * i_constant
    d_bar = abs(channel.omega_max / channel.delta_single) * np.sqrt(
        geometry.n_atoms * i_integral
    )
    return QuadratureStrength(d_bar=float(d_bar), i_integral=float(i_integral), i_constant=i_constant)


@dataclass(frozen=True)
class TwoLevelEff:
    """Effective avoided crossing: gap d_bar, swept detuning delta_tilde."""

    d_bar: float
    delta_tilde: float

    def __post_init__(self):
        if self.d_bar < 0:
            raise ValueError("d_bar must be >= 0")

    def matrix(self) -> np.ndarray:
        """Hamiltonian in the basis (|u, G>, |d, S>)."""
        return np.array(
            [[0.0, self.d_bar], [self.d_bar, -self.delta_tilde]]
        )


@dataclass(frozen=True)
class EigenSystem:
    e_plus: float
    e_minus: float
    v_plus: np.ndarray   # amplitudes on (|u, G>, |d, S>)
    v_minus: np.ndarray


def eigensystem(model: TwoLevelEff) -> EigenSystem:
    """Eigenvalues E_+- = -delta~/2 +- sqrt(Dbar^2 + delta~^2/4) and the
    normalized eigenvector amplitude pairs."""
    dbar, dt = model.d_bar, model.delta_tilde
    root = np.sqrt(dbar**2 + 0.25 * dt**2)
    e_plus, e_minus = -0.5 * dt + root, -0.5 * dt - root
    if root == 0.0:
        v_plus = np.array([1.0, 0.0])
        v_minus = np.array([0.0, 1.0])
    else:
        s = 0.5 * dt / root
        v_plus = np.array([np.sqrt(0.5 * (1.0 + s)), np.sqrt(0.5 * (1.0 - s))])
        v_minus = np.array([np.sqrt(0.5 * (1.0 - s)), -np.sqrt(0.5 * (1.0 + s))])
    return EigenSystem(e_plus=float(e_plus), e_minus=float(e_minus),
                       v_plus=v_plus, v_minus=v_minus)


def landau_zener_probability(d_bar: float, alpha: float) -> float:
    """Diabatic (transfer-failure) probability exp(-2 pi Dbar^2 / alpha)
    for a linear sweep at rate alpha (rad/us^2).  Adiabatic success is the
    complement."""
    if alpha <= 0:
        raise ValueError(f"sweep rate alpha must be positive, got {alpha}")
    return float(np.exp(-TWO_PI * d_bar**2 / abs(alpha)))


@dataclass(frozen=True)
class FiveLevelParams:
    """Parameters of the five-state subspace with both Rydberg channels.

    All values are angular frequencies in rad/us.  delta_dn/omega_dn/d refer
    to the channel being written; delta_up/omega_up/d_prime to the partner
    channel whose cross coupling is being bounded; delta2 and delta2_prime
    are the same- and cross-channel two-photon detunings.
    """

    delta_dn: float
    delta_up: float
    omega_dn: float
    omega_up: float
    d: float
    d_prime: float
    delta2: float
    delta2_prime: float


@dataclass(frozen=True)
class FiveLevelReduction:
    exact: np.ndarray      # 2x2 on (|u, g>, |d, s_same>)
    approx: np.ndarray     # 2x2 with the cross-channel correction dropped
    hamiltonian: np.ndarray  # the rotated 5x5 used for the elimination
    a: float
    b: float
    lam: float
    lam0: float


def five_level_hamiltonian(p: FiveLevelParams) -> np.ndarray:
    """The five-state matrix in the basis
    (|u, i_same>, |u, i_other>, |d, s_other>, |u, g>, |d, s_same>)."""
    return np.array(
        [
            [-p.delta_dn, 0.0, 0.0, p.omega_dn, p.d],
            [0.0, -p.delta_up, p.d_prime, p.omega_up, 0.0],
            [0.0, p.d_prime, -p.delta2_prime, 0.0, 0.0],
            [p.omega_dn, p.omega_up, 0.0, 0.0, 0.0],
            [p.d, 0.0, 0.0, 0.0, -p.delta2],
        ]
    )


def five_level_reduce(params: FiveLevelParams) -> FiveLevelReduction:
    """Adiabatic elimination of the three fast states of the five-level
    model onto (|u, g>, |d, s_same>).

    A local rotation on the (|u, i_other>, |d, s_other>) pair with
    a = (Delta_other - delta2')/2, b = D', lam = sqrt(a^2 + b^2),
    lam0 = (Delta_other + delta2')/2 diagonalizes the cross-channel block;
    second-order elimination of the rotated fast states yields the exact
    2x2.  The approximate 2x2 keeps only the same-channel entries
    (Omega^2/Delta, Omega D / Delta, -delta2 + D^2/Delta); the dropped
    cross-channel diagonal term tends to Omega_other^2 / Delta_other.
    """
    p = params
    a = 0.5 * (p.delta_up - p.delta2_prime)
    b = p.d_prime
    lam = float(np.hypot(a, b))
    lam0 = 0.5 * (p.delta_up + p.delta2_prime)

    scale = max(abs(p.omega_dn), abs(p.omega_up), abs(p.d), abs(p.d_prime))
    fast = (abs(p.delta_dn), abs(-lam0 - lam), abs(-lam0 + lam))
    if min(fast) < 5.0 * scale:
        raise HierarchyError(
            "fast-state energies must exceed 5x the couplings for the "
            f"elimination to hold: min |fast| = {min(fast):.4g} vs "
            f"5 x {scale:.4g}"
        )

    same = np.array(
        [
            [p.omega_dn**2 / p.delta_dn, p.omega_dn * p.d / p.delta_dn],
            [p.omega_dn * p.d / p.delta_dn, -p.delta2 + p.d**2 / p.delta_dn],
        ]
    )
    # Cross-channel second-order shift of |u, g> from the rotated pair.
    # With b -> 0 this reduces to omega_up^2 / (a + lam0) = omega_up^2 /
    # Delta_other, the bare partner light shift.
    if b == 0.0:
        correction = p.omega_up**2 / (a + lam0)
    else:
        c_minus2 = p.omega_up**2 * b**2 / (2.0 * lam * (lam - a))
        c_plus2 = p.omega_up**2 * (lam - a) / (2.0 * lam)
        correction = c_minus2 / (lam0 + lam) - c_plus2 / (lam - lam0)
    exact = same.copy()
    exact[0, 0] += correction
    return FiveLevelReduction(
        exact=exact,
        approx=same,
        hamiltonian=five_level_hamiltonian(p),
        a=float(a),
        b=float(b),
        lam=lam,
        lam0=float(lam0),
    )
