"""qantenna: seeded simulator of an ensemble-mediated atom-photon
entanglement link.

Stages: Gaussian-cloud statistics, dipole-dipole couplings and the
collective avoided crossing, the adiabatic spin-wave write, EIT retrieval
efficiency, and the heralded two-node Bell link with its rate budget.
"""

__version__ = "0.1.0"

from .cloud import (
    AtomCloud,
    CloudGeometry,
    TweezerSpec,
    blockade_radius,
    density_at,
    escape_probability,
    optical_depth,
    sample,
)
from .config import ExperimentConfig, default_config, load_config, loads_config
from .coupling import (
    CouplingSet,
    FiveLevelParams,
    RydbergChannel,
    TwoLevelEff,
    build_couplings,
    collective_strength_quadrature,
    eigensystem,
    five_level_reduce,
    landau_zener_probability,
    pair_coupling,
)
from .link import (
    AtomPhotonState,
    BellOutcome,
    LinkBudget,
    RateModel,
    attempt_success_probability,
    bell_measure,
    entanglement_rate,
    herald_probability,
    ideal_interface_state,
    simulate_attempts,
    two_node_pipeline,
)
from .retrieval import (
    RetrievalParams,
    SpinWaveProfile,
    mixing_angle,
    photonic_fraction,
    retrieval_efficiency,
    retrieval_kernel,
    total_interface_efficiency,
)
from .write import (
    PulseSchedule,
    WriteResult,
    simulate_write,
    simulate_write_ensemble,
    simulate_write_three_level,
    spin_wave_profile,
)
