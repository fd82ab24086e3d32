"""Adiabatic write of the collective spin wave.

Integrates the single-excitation amplitudes of the communication atom plus
N ensemble atoms through the detuning sweep,

    i dC_0/dt = sum_j D~_j(t) C_j
    i dC_j/dt = D~_j(t) C_0 + (delta~_j(t) - i Gamma_s / 2) C_j,

with D~_j(t) = s(t) Omega_max D_j / Delta following the drive envelope s(t),
and delta~_j(t) = delta_sweep(t) + s(t)^2 light_shift - D_j^2 / Delta (the
laser-induced Stark terms follow the instantaneous intensity, the
exchange-induced shift does not).  The write efficiency eta_w is the total
spin-wave population at the end of the sweep.

A three-level variant keeps the intermediate manifold (state dimension
2N + 1) to validate the adiabatic elimination.  Note that the truncated
single-excitation model couples |u, G> to the bright intermediate mode with
strength Omega sqrt(N), so it is faithful to the physical system only when
Omega sqrt(N) << Delta, and the level |u, G> carries the collective light
shift N Omega^2 / Delta rather than the physical single-atom one; validation
runs must match that shift on the two-level side (see tests).
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from .cloud import AtomCloud, CloudGeometry, TweezerSpec, sample
from .coupling import CouplingSet, RydbergChannel, build_couplings
from .errors import StiffnessError
from .retrieval import SpinWaveProfile
from .seeding import derive_seed
from .units import mhz_2pi


@dataclass(frozen=True)
class PulseSchedule:
    """Drive envelope and linear detuning sweep for one write window.

    omega_shape 'sin2_ramp_hold' ramps sin^2 from zero over t_ramp, holds,
    and ramps off over the final t_ramp_down; 'constant' holds s = 1
    throughout (pure Landau-Zener).  delta_start/delta_end are the swept
    external two-photon detuning (rad/us), linear in time.
    """

    t_total: float = 1.0
    t_ramp: float = 0.2
    t_ramp_down: float = 0.22
    omega_shape: str = "sin2_ramp_hold"
    delta_start: float = mhz_2pi(24.0)
    delta_end: float = mhz_2pi(-12.0)

    def __post_init__(self):
        if self.t_total <= 0:
            raise ValueError("t_total must be positive")
        if self.omega_shape not in ("sin2_ramp_hold", "constant"):
            raise ValueError(f"unknown omega_shape {self.omega_shape!r}")
        if self.omega_shape == "sin2_ramp_hold":
            if not 0 < self.t_ramp <= self.t_total / 2:
                raise ValueError("need 0 < t_ramp <= t_total / 2")
            if not 0 < self.t_ramp_down <= self.t_total / 2:
                raise ValueError("need 0 < t_ramp_down <= t_total / 2")

    @property
    def alpha(self) -> float:
        """Sweep rate (delta_end - delta_start) / t_total, rad/us^2."""
        return (self.delta_end - self.delta_start) / self.t_total

    def envelope(self, t: float) -> float:
        """Drive envelope s(t) in [0, 1]; s(0) = 0 for the ramped shape."""
        if self.omega_shape == "constant":
            return 1.0
        if t < self.t_ramp:
            return float(np.sin(0.5 * np.pi * t / self.t_ramp) ** 2)
        if t > self.t_total - self.t_ramp_down:
            return float(
                np.sin(0.5 * np.pi * (self.t_total - t) / self.t_ramp_down) ** 2
            )
        return 1.0

    def delta_sweep(self, t: float) -> float:
        return self.delta_start + self.alpha * t


@dataclass(frozen=True)
class WriteResult:
    """Population trajectories and final amplitudes of one write sweep."""

    times: np.ndarray
    p0: np.ndarray            # |C_0|^2
    p1: np.ndarray            # sum_j |C_j|^2
    norm_loss: np.ndarray     # decayed population, integrated Gamma_s p1
    final_amplitudes: np.ndarray
    final_c0: complex
    eta_w: float
    p_intermediate: np.ndarray | None = None  # three-level runs only


def _integrate(rhs, y0, schedule, tol, n_output, max_rhs_evals):
    # An evaluation budget guards against effectively-stiff inputs (for
    # example an atom sampled so close to the tweezer that its Stark shift
    # forces sub-femtosecond steps); scipy's own step-underflow check is
    # kept as well.
    calls = [0]

    def guarded(t, y):
        calls[0] += 1
        if calls[0] > max_rhs_evals:
            raise StiffnessError(float(t), f"exceeded {max_rhs_evals} RHS evaluations")
        return rhs(t, y)

    t_eval = np.linspace(0.0, schedule.t_total, n_output)
    sol = solve_ivp(
        guarded,
        (0.0, schedule.t_total),
        y0,
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-2,
        t_eval=t_eval,
        dense_output=False,
    )
    if not sol.success:
        t_fail = float(sol.t[-1]) if sol.t.size else 0.0
        raise StiffnessError(t_fail, sol.message)
    return sol


def simulate_write(
    couplings: CouplingSet,
    schedule: PulseSchedule,
    gamma_s: float | None = None,
    tol: float = 1e-8,
    n_output: int = 500,
    method: str = "direct",
    initial: np.ndarray | None = None,
    max_rhs_evals: int = 5_000_000,
) -> WriteResult:
    """Integrate the effective (N+1)-amplitude write dynamics.

    gamma_s defaults to the channel's spontaneous decay rate.  method
    'direct' integrates the damped equations with the non-Hermitian
    -i Gamma_s / 2 term; 'transformed' substitutes C~_j = exp(Gamma_s t/2) C_j
    and integrates the equivalent undamped-diagonal system (equal results to
    integrator tolerance).  The decayed population is accumulated as an
    auxiliary variable so that p0 + p1 + norm_loss = 1 is a genuine
    integrator check.
    """
    if gamma_s is None:
        gamma_s = couplings.channel.gamma_s
    if method not in ("direct", "transformed"):
        raise ValueError(f"unknown method {method!r}")
    d_tilde = np.asarray(couplings.d_tilde_j, dtype=float)
    static = np.asarray(couplings.delta_tilde_j, dtype=float) - couplings.light_shift
    light = couplings.light_shift
    n = d_tilde.size

    y0 = np.zeros(n + 2, dtype=complex)
    if initial is None:
        y0[0] = 1.0
    else:
        y0[: n + 1] = initial

    if method == "direct":

        def rhs(t, y):
            s = schedule.envelope(t)
            c0, cj = y[0], y[1 : n + 1]
            dt_j = s * d_tilde
            det_j = schedule.delta_sweep(t) + s * s * light + static
            dc0 = -1j * np.dot(dt_j, cj)
            dcj = -1j * (dt_j * c0 + (det_j - 0.5j * gamma_s) * cj)
            dloss = gamma_s * np.sum(np.abs(cj) ** 2)
            return np.concatenate(([dc0], dcj, [dloss]))

        sol = _integrate(rhs, y0, schedule, tol, n_output, max_rhs_evals)
        c0_t, cj_t = sol.y[0], sol.y[1 : n + 1]
    else:
        # exact change of variables; the diagonal decay moves into the
        # coupling term as exp(-+ Gamma_s t / 2) factors
        def rhs(t, y):
            s = schedule.envelope(t)
            c0, cjt = y[0], y[1 : n + 1]
            dt_j = s * d_tilde
            det_j = schedule.delta_sweep(t) + s * s * light + static
            grow = np.exp(0.5 * gamma_s * t)
            dc0 = -1j * np.dot(dt_j, cjt) / grow
            dcjt = -1j * (dt_j * grow * c0 + det_j * cjt)
            dloss = gamma_s * np.sum(np.abs(cjt / grow) ** 2)
            return np.concatenate(([dc0], dcjt, [dloss]))

        sol = _integrate(rhs, y0, schedule, tol, n_output, max_rhs_evals)
        c0_t = sol.y[0]
        cj_t = sol.y[1 : n + 1] * np.exp(-0.5 * gamma_s * sol.t)

    p0 = np.abs(c0_t) ** 2
    p1 = np.sum(np.abs(cj_t) ** 2, axis=0)
    norm_loss = sol.y[n + 1].real
    return WriteResult(
        times=sol.t,
        p0=p0,
        p1=p1,
        norm_loss=norm_loss,
        final_amplitudes=cj_t[:, -1].copy(),
        final_c0=complex(c0_t[-1]),
        eta_w=float(p1[-1]),
    )


def simulate_write_three_level(
    couplings: CouplingSet,
    schedule: PulseSchedule,
    gamma_s: float | None = None,
    tol: float = 1e-8,
    n_output: int = 500,
    max_rhs_evals: int = 5_000_000,
) -> WriteResult:
    """Integrate the pre-elimination dynamics with the intermediate
    manifold retained (2N + 1 amplitudes).

    The bare two-photon detuning is the schedule sweep plus the partner
    channel's algebraic light shift; the same-channel Omega^2/Delta and
    D_j^2/Delta shifts emerge dynamically from the retained manifold.
    """
    if gamma_s is None:
        gamma_s = couplings.channel.gamma_s
    ch = couplings.channel
    d_j = np.asarray(couplings.d_j, dtype=float)
    n = d_j.size
    partner_shift = couplings.light_shift - ch.omega_max**2 / ch.delta_single

    def rhs(t, y):
        s = schedule.envelope(t)
        omega = s * ch.omega_max
        c0, b_j, c_j = y[0], y[1 : n + 1], y[n + 1 : 2 * n + 1]
        delta_bare = schedule.delta_sweep(t) + s * s * partner_shift
        dc0 = -1j * omega * np.sum(b_j)
        dbj = -1j * (omega * c0 + ch.delta_single * b_j + d_j * c_j)
        dcj = -1j * (d_j * b_j + (delta_bare - 0.5j * gamma_s) * c_j)
        dloss = gamma_s * np.sum(np.abs(c_j) ** 2)
        return np.concatenate(([dc0], dbj, dcj, [dloss]))

    y0 = np.zeros(2 * n + 2, dtype=complex)
    y0[0] = 1.0
    sol = _integrate(rhs, y0, schedule, tol, n_output, max_rhs_evals)
    p0 = np.abs(sol.y[0]) ** 2
    p_int = np.sum(np.abs(sol.y[1 : n + 1]) ** 2, axis=0)
    p1 = np.sum(np.abs(sol.y[n + 1 : 2 * n + 1]) ** 2, axis=0)
    return WriteResult(
        times=sol.t,
        p0=p0,
        p1=p1,
        norm_loss=sol.y[2 * n + 1].real,
        final_amplitudes=sol.y[n + 1 : 2 * n + 1, -1].copy(),
        final_c0=complex(sol.y[0, -1]),
        eta_w=float(p1[-1]),
        p_intermediate=p_int,
    )


@dataclass(frozen=True)
class WriteEnsemble:
    """Write efficiency aggregated over cloud realizations."""

    etas: np.ndarray
    eta_mean: float
    eta_stderr: float
    n_realizations: int
    master_seed: int
    first_result: WriteResult
    first_cloud: AtomCloud


def simulate_write_ensemble(
    geometry: CloudGeometry,
    tweezer: TweezerSpec,
    channel: RydbergChannel,
    schedule: PulseSchedule,
    n_realizations: int,
    master_seed: int,
    delta2_base: float = 0.0,
    gamma_s: float | None = None,
    tol: float = 1e-8,
) -> WriteEnsemble:
    """eta_w averaged over independently sampled clouds.

    Realization r draws its cloud from the child seed (master_seed,
    'write-cloud', r), so results are independent of evaluation order.
    """
    if n_realizations < 1:
        raise ValueError("n_realizations must be >= 1")
    etas = np.empty(n_realizations)
    first_result, first_cloud = None, None
    for r in range(n_realizations):
        cloud = sample(geometry, derive_seed(master_seed, "write-cloud", r))
        couplings = build_couplings(cloud, tweezer, channel, delta2_base)
        result = simulate_write(couplings, schedule, gamma_s=gamma_s, tol=tol)
        etas[r] = result.eta_w
        if r == 0:
            first_result, first_cloud = result, cloud
    stderr = float(np.std(etas, ddof=1) / np.sqrt(n_realizations)) if n_realizations > 1 else 0.0
    return WriteEnsemble(
        etas=etas,
        eta_mean=float(np.mean(etas)),
        eta_stderr=stderr,
        n_realizations=n_realizations,
        master_seed=int(master_seed),
        first_result=first_result,
        first_cloud=first_cloud,
    )


def spin_wave_profile(result: WriteResult, cloud: AtomCloud, n_bins: int) -> SpinWaveProfile:
    """Coarse-grain the final spin-wave amplitudes onto the column
    coordinate z~ in [0, 1].

    z~ is the normalized cumulative column density up to z (the probability
    integral transform of the z marginal), so equal-width bins in z~ hold
    equal atom populations in expectation.  The bin amplitude is the
    phase-coherent mean of the atomic amplitudes, scaled so a uniform spin
    wave gives the flat profile S~ = 1, then normalized to unit L2.
    """
    from scipy.special import ndtr

    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    geom = cloud.geometry
    z = cloud.positions[:, 2] - geom.center[2]
    z_col = ndtr(2.0 * z / geom.sigma_z)
    idx = np.minimum((z_col * n_bins).astype(int), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    if np.any(counts == 0):
        raise ValueError(
            f"n_bins={n_bins} exceeds the occupied bins of this cloud "
            f"({np.count_nonzero(counts)} occupied)"
        )
    sums = np.zeros(n_bins, dtype=complex)
    np.add.at(sums, idx, result.final_amplitudes)
    amp = np.sqrt(geom.n_atoms) * sums / counts
    width = 1.0 / n_bins
    norm = np.sqrt(np.sum(np.abs(amp) ** 2) * width)
    grid = (np.arange(n_bins) + 0.5) * width
    return SpinWaveProfile(grid=grid, amplitude=amp / norm)
