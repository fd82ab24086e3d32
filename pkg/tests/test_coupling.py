import math

import numpy as np
import pytest

from qantenna.cloud import CloudGeometry, TweezerSpec, sample
from qantenna.coupling import (
    CouplingSet,
    FiveLevelParams,
    RydbergChannel,
    TwoLevelEff,
    build_couplings,
    collective_strength_quadrature,
    eigensystem,
    five_level_hamiltonian,
    five_level_reduce,
    landau_zener_probability,
    pair_coupling,
)
from qantenna.errors import HierarchyError, QuadratureError, SingularityError
from qantenna.units import mhz_2pi

UP = RydbergChannel(label="up", c3=17.44, omega_max=mhz_2pi(14.7), delta_single=mhz_2pi(147.0))
DOWN = RydbergChannel(label="down", c3=21.08, omega_max=mhz_2pi(12.5), delta_single=mhz_2pi(125.0))


class TestPairCoupling:
    def test_worked_center_values(self):
        d_up = pair_coupling(17.44, (0, 0, 0), (7.1, 0, 0))
        assert d_up == pytest.approx(mhz_2pi(3.88), rel=1e-2)
        d_dn = pair_coupling(21.08, (0, 0, 0), (7.1, 0, 0))
        assert d_dn == pytest.approx(mhz_2pi(4.69), rel=1e-2)

    def test_angular_factor(self):
        r = 5.0
        perp = pair_coupling(17.44, (r, 0, 0), (0, 0, 0))       # theta = 90 deg
        axial = pair_coupling(17.44, (0, 0, r), (0, 0, 0))      # theta = 0
        assert axial == pytest.approx(-2.0 * perp, rel=1e-12)
        # magic angle cos^2 = 1/3
        ct = 1.0 / math.sqrt(3.0)
        st = math.sqrt(1.0 - ct**2)
        magic = pair_coupling(17.44, (r * st, 0, r * ct), (0, 0, 0))
        assert abs(magic) < 1e-12 * abs(perp)

    def test_singularity_floor(self):
        with pytest.raises(SingularityError):
            pair_coupling(17.44, (0.01, 0, 0), (0, 0, 0))

    def test_sphere_average_vanishes(self):
        rng = np.random.default_rng(99)
        n = 200_000
        v = rng.standard_normal((n, 3))
        v /= np.linalg.norm(v, axis=1)[:, None]
        vals = 1.0 - 3.0 * v[:, 2] ** 2
        # Var(1 - 3 cos^2) = 4/5 on the sphere
        assert abs(np.mean(vals)) < 4.0 * math.sqrt(0.8 / n)


class TestBuildCouplings:
    def test_single_atom_at_center(self):
        geom = CloudGeometry(n_atoms=1, sigma_perp=4.0, sigma_z=30.0)
        cloud_pos = np.array([[0.0, 0.0, 0.0]])
        from qantenna.cloud import AtomCloud

        cloud = AtomCloud(geometry=geom, positions=cloud_pos, seed=0)
        channel = RydbergChannel(
            label="up", c3=17.44, omega_max=mhz_2pi(14.7), delta_single=mhz_2pi(147.0)
        )
        cs = build_couplings(cloud, TweezerSpec(), channel)
        d_center = pair_coupling(17.44, (0, 0, 0), (7.1, 0, 0))
        assert cs.d_tilde_j[0] == pytest.approx(d_center / 10.0, rel=1e-12)
        assert cs.d_bar == pytest.approx(abs(cs.d_tilde_j[0]), rel=1e-14)

    def test_dbar_identity_and_detunings(self, paper_geometry, paper_tweezer):
        cloud = sample(paper_geometry, seed=21)
        partner = DOWN.omega_max**2 / DOWN.delta_single
        cs = build_couplings(cloud, paper_tweezer, UP, delta2_base=partner)
        assert cs.d_bar**2 == pytest.approx(np.sum(cs.d_tilde_j**2), rel=1e-13)
        assert cs.n_atoms == paper_geometry.n_atoms
        expected_light = UP.omega_max**2 / UP.delta_single + partner
        assert cs.light_shift == pytest.approx(expected_light, rel=1e-14)
        assert np.allclose(
            cs.delta_tilde_j, cs.light_shift - cs.d_j**2 / UP.delta_single, rtol=1e-13
        )
        assert np.allclose(cs.phases, cloud.positions @ np.asarray(UP.k0))

    def test_empty_cloud_rejected(self, paper_tweezer):
        geom = CloudGeometry(n_atoms=0, sigma_perp=4.0, sigma_z=30.0)
        with pytest.raises(ValueError, match="empty"):
            build_couplings(sample(geom, seed=1), paper_tweezer, UP)

    def test_singularity_reports_atom_index(self, paper_geometry):
        from qantenna.cloud import AtomCloud

        geom = CloudGeometry(n_atoms=2, sigma_perp=4.0, sigma_z=30.0)
        positions = np.array([[0.0, 0.0, 0.0], [7.09, 0.0, 0.0]])
        cloud = AtomCloud(geometry=geom, positions=positions, seed=0)
        with pytest.raises(SingularityError) as err:
            build_couplings(cloud, TweezerSpec(position=(7.1, 0.0, 0.0)), UP)
        assert err.value.atom_index == 1

    def test_merging_four_clouds_quadruples_dbar_squared(self):
        # far tweezer keeps per-atom terms bounded, so sample means converge
        geom1 = CloudGeometry(n_atoms=25, sigma_perp=4.0, sigma_z=30.0)
        geom4 = CloudGeometry(n_atoms=100, sigma_perp=4.0, sigma_z=30.0)
        tweezer = TweezerSpec(position=(12.0, 0.0, 0.0))
        m1 = [
            build_couplings(sample(geom1, seed=1000 + k), tweezer, UP).d_bar ** 2
            for k in range(400)
        ]
        m4 = [
            build_couplings(sample(geom4, seed=5000 + k), tweezer, UP).d_bar ** 2
            for k in range(400)
        ]
        se = math.hypot(np.std(m4, ddof=1) / 20.0, 4.0 * np.std(m1, ddof=1) / 20.0)
        assert abs(np.mean(m4) - 4.0 * np.mean(m1)) < 3.0 * se

    def test_coupling_set_consistency_enforced(self):
        with pytest.raises(ValueError, match="d_bar"):
            CouplingSet(
                channel=UP,
                d_j=np.array([1.0]),
                d_tilde_j=np.array([0.1]),
                delta_tilde_j=np.array([0.0]),
                light_shift=0.0,
                d_bar=5.0,
                phases=np.array([0.0]),
            )


class TestCollectiveStrengthQuadrature:
    def test_scaled_geometry_constant(self, paper_geometry):
        # tweezer at x = sigma_perp * 5 / (2 sqrt 2), aspect ratio 7.5
        tw = TweezerSpec(position=(4.0 * 5.0 / (2.0 * math.sqrt(2.0)), 0.0, 0.0))
        q = collective_strength_quadrature(paper_geometry, tw, UP)
        assert q.i_constant == pytest.approx(0.136, rel=0.05)

    def test_zero_drive_gives_zero(self, paper_geometry, paper_tweezer):
        off = RydbergChannel(label="up", c3=17.44, omega_max=0.0, delta_single=mhz_2pi(147.0))
        q = collective_strength_quadrature(paper_geometry, paper_tweezer, off)
        assert q.d_bar == 0.0
        assert q.i_constant > 0.0

    def test_monte_carlo_truncated_sum_agrees(self, paper_geometry, paper_tweezer):
        # brute-force sampling oracle with the same x-truncation as the
        # integral (atoms within one transverse waist of the cloud center)
        q = collective_strength_quadrature(paper_geometry, paper_tweezer, UP)
        sums = []
        for k in range(100):
            cloud = sample(paper_geometry, seed=3000 + k)
            keep = np.abs(cloud.positions[:, 0] - paper_geometry.center[0]) <= paper_geometry.sigma_perp
            d = np.array(
                [
                    pair_coupling(UP.c3, p, paper_tweezer.position)
                    for p in cloud.positions[keep]
                ]
            )
            sums.append(np.sum((UP.omega_max * d / UP.delta_single) ** 2))
        se = np.std(sums, ddof=1) / 10.0
        assert abs(np.mean(sums) - q.d_bar**2) < 3.0 * se

    def test_nonconvergence_raises(self, paper_geometry, paper_tweezer):
        with pytest.raises(QuadratureError):
            collective_strength_quadrature(
                paper_geometry, paper_tweezer, UP, rel_tol=1e-14, base_nodes=4
            )


class TestEigensystem:
    def test_symmetric_crossing(self):
        es = eigensystem(TwoLevelEff(d_bar=mhz_2pi(5.0), delta_tilde=0.0))
        assert es.e_plus == pytest.approx(mhz_2pi(5.0), rel=1e-14)
        assert es.e_minus == pytest.approx(-mhz_2pi(5.0), rel=1e-14)
        assert abs(es.v_plus[0]) == pytest.approx(abs(es.v_plus[1]), rel=1e-12)

    def test_bare_states_at_zero_gap(self):
        dt = mhz_2pi(3.0)
        es = eigensystem(TwoLevelEff(d_bar=0.0, delta_tilde=dt))
        assert es.e_plus == pytest.approx(0.0, abs=1e-14)
        assert es.e_minus == pytest.approx(-dt, rel=1e-14)
        assert abs(es.v_plus[0]) == pytest.approx(1.0, rel=1e-14)

    def test_against_dense_eigensolver(self):
        cases = [(mhz_2pi(5.0), mhz_2pi(10.0))]
        rng = np.random.default_rng(17)
        cases += [(abs(rng.normal()) * 30, rng.normal() * 30) for _ in range(50)]
        for dbar, dt in cases:
            model = TwoLevelEff(d_bar=dbar, delta_tilde=dt)
            es = eigensystem(model)
            evals, evecs = np.linalg.eigh(model.matrix())
            assert es.e_minus == pytest.approx(evals[0], rel=1e-12, abs=1e-12)
            assert es.e_plus == pytest.approx(evals[1], rel=1e-12, abs=1e-12)
            # eigenvector directions up to sign
            for v, ref in ((es.v_plus, evecs[:, 1]), (es.v_minus, evecs[:, 0])):
                assert min(np.linalg.norm(v - ref), np.linalg.norm(v + ref)) < 1e-12

    def test_orthonormality_and_trace(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            model = TwoLevelEff(d_bar=abs(rng.normal()) * 20, delta_tilde=rng.normal() * 20)
            es = eigensystem(model)
            assert abs(np.dot(es.v_plus, es.v_minus)) < 1e-12
            assert np.linalg.norm(es.v_plus) == pytest.approx(1.0, abs=1e-12)
            assert np.linalg.norm(es.v_minus) == pytest.approx(1.0, abs=1e-12)
            assert es.e_plus + es.e_minus == pytest.approx(-model.delta_tilde, abs=1e-10)


class TestLandauZener:
    def test_no_gap_fully_diabatic(self):
        assert landau_zener_probability(0.0, 10.0) == 1.0

    def test_limits(self):
        assert landau_zener_probability(1.0, 1e12) == pytest.approx(1.0, abs=1e-9)
        assert landau_zener_probability(1.0, 1e-12) == 0.0

    def test_reference_sweep_exponent(self):
        # gap 2pi x 5 MHz, sweep 2pi x 20 MHz over 1 us
        dbar, alpha = mhz_2pi(5.0), mhz_2pi(20.0) / 1.0
        expo = 2.0 * math.pi * dbar**2 / alpha
        assert expo == pytest.approx(49.35, abs=0.01)
        p = landau_zener_probability(dbar, alpha)
        assert p == pytest.approx(math.exp(-expo), rel=1e-12)
        assert p < 1e-20

    def test_monotonicity(self):
        probs_gap = [landau_zener_probability(g, 100.0) for g in (0.0, 1.0, 2.0, 4.0)]
        assert all(a > b for a, b in zip(probs_gap, probs_gap[1:]))
        probs_rate = [landau_zener_probability(2.0, a) for a in (10.0, 30.0, 100.0, 300.0)]
        assert all(a < b for a, b in zip(probs_rate, probs_rate[1:]))

    def test_domain_error(self):
        with pytest.raises(ValueError):
            landau_zener_probability(1.0, 0.0)
        with pytest.raises(ValueError):
            landau_zener_probability(1.0, -5.0)


PAPER_FIVE = FiveLevelParams(
    delta_dn=mhz_2pi(125.0),
    delta_up=mhz_2pi(147.0),
    omega_dn=mhz_2pi(12.5),
    omega_up=mhz_2pi(14.7),
    d=mhz_2pi(4.69),
    d_prime=mhz_2pi(2.0),
    delta2=mhz_2pi(1.0),
    delta2_prime=mhz_2pi(282.0),
)


class TestFiveLevelReduce:
    def test_decoupled_partner_reduces_to_single_channel(self):
        p = FiveLevelParams(
            delta_dn=mhz_2pi(125.0),
            delta_up=mhz_2pi(147.0),
            omega_dn=mhz_2pi(12.5),
            omega_up=0.0,
            d=mhz_2pi(4.69),
            d_prime=0.0,
            delta2=mhz_2pi(1.0),
            delta2_prime=mhz_2pi(282.0),
        )
        red = five_level_reduce(p)
        expected = np.array(
            [
                [p.omega_dn**2 / p.delta_dn, p.omega_dn * p.d / p.delta_dn],
                [p.omega_dn * p.d / p.delta_dn, -p.delta2 + p.d**2 / p.delta_dn],
            ]
        )
        assert np.allclose(red.exact, expected, rtol=1e-14)
        assert np.allclose(red.approx, expected, rtol=1e-14)

    def test_zero_dprime_keeps_partner_light_shift(self):
        p = FiveLevelParams(
            delta_dn=mhz_2pi(125.0),
            delta_up=mhz_2pi(147.0),
            omega_dn=mhz_2pi(12.5),
            omega_up=mhz_2pi(14.7),
            d=mhz_2pi(4.69),
            d_prime=0.0,
            delta2=mhz_2pi(1.0),
            delta2_prime=mhz_2pi(282.0),
        )
        red = five_level_reduce(p)
        assert red.exact[0, 0] - red.approx[0, 0] == pytest.approx(
            p.omega_up**2 / p.delta_up, rel=1e-12
        )

    def test_lambda_equals_abs_b_when_a_zero(self):
        p = FiveLevelParams(
            delta_dn=mhz_2pi(125.0),
            delta_up=mhz_2pi(200.0),
            omega_dn=mhz_2pi(2.0),
            omega_up=mhz_2pi(2.0),
            d=mhz_2pi(1.0),
            d_prime=mhz_2pi(3.0),
            delta2=0.0,
            delta2_prime=mhz_2pi(200.0),  # a = 0
        )
        red = five_level_reduce(p)
        assert red.a == pytest.approx(0.0, abs=1e-12)
        assert red.lam == pytest.approx(abs(red.b), rel=1e-14)

    def test_paper_scale_cross_coupling_correction_small(self):
        red = five_level_reduce(PAPER_FIVE)
        # the D'-induced deviation from the bare partner light shift is tiny
        # compared to the same-channel diagonal
        partner_shift = PAPER_FIVE.omega_up**2 / PAPER_FIVE.delta_up
        deviation = abs(red.exact[0, 0] - red.approx[0, 0] - partner_shift)
        assert deviation <= 0.02 * abs(PAPER_FIVE.omega_dn**2 / PAPER_FIVE.delta_dn)

    def test_exact_branch_matches_dense_eigensolve(self):
        red = five_level_reduce(PAPER_FIVE)
        h5 = five_level_hamiltonian(PAPER_FIVE)
        assert np.allclose(h5, red.hamiltonian)
        evals, evecs = np.linalg.eigh(h5)
        # the two eigenvectors living on the slow subspace (indices 3, 4)
        slow_weight = np.sum(np.abs(evecs[3:, :]) ** 2, axis=0)
        slow_idx = np.argsort(slow_weight)[-2:]
        slow_evals = np.sort(evals[slow_idx])
        reduced_evals = np.sort(np.linalg.eigvalsh(red.exact))
        couplings = [
            PAPER_FIVE.omega_dn,
            PAPER_FIVE.omega_up,
            PAPER_FIVE.d,
            PAPER_FIVE.d_prime,
        ]
        gap = min(
            abs(PAPER_FIVE.delta_dn),
            abs(red.lam0 + red.lam),
            abs(red.lam0 - red.lam),
        )
        bound = max(abs(c) for c in couplings) ** 2 / gap
        assert np.all(np.abs(slow_evals - reduced_evals) < bound)

    def test_hierarchy_violation_raises(self):
        bad = FiveLevelParams(
            delta_dn=mhz_2pi(10.0),
            delta_up=mhz_2pi(147.0),
            omega_dn=mhz_2pi(12.5),
            omega_up=mhz_2pi(14.7),
            d=mhz_2pi(4.69),
            d_prime=mhz_2pi(2.0),
            delta2=mhz_2pi(1.0),
            delta2_prime=mhz_2pi(282.0),
        )
        with pytest.raises(HierarchyError):
            five_level_reduce(bad)


class TestChannelValidation:
    def test_elimination_validity_enforced(self):
        with pytest.raises(ValueError):
            RydbergChannel(label="up", c3=17.44, omega_max=mhz_2pi(200.0), delta_single=mhz_2pi(147.0))
        with pytest.raises(ValueError):
            RydbergChannel(label="up", c3=17.44, omega_max=1.0, delta_single=0.0)
        with pytest.raises(ValueError):
            RydbergChannel(label="sideways", c3=17.44, omega_max=1.0, delta_single=100.0)
