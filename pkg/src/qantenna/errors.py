"""Exception types raised by the simulation modules."""


class QAntennaError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(QAntennaError):
    """Invalid, unknown, or unconvertible configuration content."""


class SingularityError(QAntennaError):
    """An ensemble atom sits inside the 1/r^3 regularization floor."""

    def __init__(self, separation: float, atom_index: int | None = None):
        self.separation = separation
        self.atom_index = atom_index
        where = f" (atom index {atom_index})" if atom_index is not None else ""
        super().__init__(
            f"atom-tweezer separation {separation:.4g} um is below the "
            f"0.05 um regularization floor{where}; the sampled configuration "
            "is unphysical"
        )


class HierarchyError(QAntennaError):
    """Adiabatic-elimination energy hierarchy is violated."""


class QuadratureError(QAntennaError):
    """Deterministic quadrature failed to converge to the requested tolerance."""


class StiffnessError(QAntennaError):
    """The ODE integrator underflowed its step size."""

    def __init__(self, t_fail: float, detail: str = ""):
        self.t_fail = t_fail
        msg = f"integrator step-size underflow at t = {t_fail:.6g} us"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class StageError(QAntennaError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
