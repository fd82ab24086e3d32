import numpy as np
import pytest

from qantenna.cloud import CloudGeometry, TweezerSpec
from qantenna.config import default_config
from qantenna.units import mhz_2pi
from qantenna.write import simulate_write_ensemble

PAPER_SEED = 42


@pytest.fixture(scope="session")
def paper_config():
    return default_config()


@pytest.fixture(scope="session")
def paper_geometry():
    return CloudGeometry(n_atoms=500, sigma_perp=4.0, sigma_z=30.0)


@pytest.fixture(scope="session")
def paper_tweezer():
    return TweezerSpec(position=(7.1, 0.0, 0.0), exclusion_radius=1.0)


def partner_shift(cfg, label):
    other = cfg.channels["down" if label == "up" else "up"]
    return other.omega_max**2 / other.delta_single


@pytest.fixture(scope="session")
def write_ensembles_100(paper_config):
    """eta_w over 100 cloud realizations per channel at the default working
    point; shared by the write-efficiency and chained-efficiency criteria."""
    cfg = paper_config
    out = {}
    for label in ("up", "down"):
        out[label] = simulate_write_ensemble(
            cfg.ensemble,
            cfg.tweezer,
            cfg.channels[label],
            cfg.pulses,
            n_realizations=100,
            master_seed=PAPER_SEED,
            delta2_base=partner_shift(cfg, label),
        )
    return out


def gl_box_integral(fn, bounds, n):
    """Tensor Gauss-Legendre integral of fn(points) over a 3D box; test-side
    oracle, independent of the package quadratures."""
    axes = []
    weights = []
    for (a, b) in bounds:
        g, w = np.polynomial.legendre.leggauss(n)
        axes.append(0.5 * (b - a) * g + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    vals = fn(pts).reshape(X.shape)
    return np.einsum("i,j,k,ijk->", weights[0], weights[1], weights[2], vals)
