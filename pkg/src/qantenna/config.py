"""Configuration: strict JSON schema, paper-default values, unit conversion.

External config files quote frequencies with explicit convention suffixes
(`_2pi_mhz`, `_2pi_khz`); values are converted to internal angular units
exactly once on load.  Unknown keys are rejected.  An empty file (or no
file) yields the fully-defaulted working point of the reference experiment:
N = 500 atoms, waists 4 x 30 um, tweezer at 7.1 um, drive 2pi x 14.7 /
12.5 MHz at detunings 2pi x 147 / 125 MHz.
"""

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .cloud import CloudGeometry, TweezerSpec
from .coupling import RydbergChannel
from .errors import ConfigError
from .units import K0_MAGNITUDE, khz_2pi, mhz_2pi
from .write import PulseSchedule
from .link import RateModel

DEFAULT_RAW: dict = {
    "ensemble": {
        "n_atoms": 500,
        "sigma_perp_um": 4.0,
        "sigma_z_um": 30.0,
        "center": [0.0, 0.0, 0.0],
    },
    "tweezer": {"x_um": 7.1, "y_um": 0.0, "z_um": 0.0, "exclusion_um": 1.0},
    "channels": {
        "up": {
            "c3": 17.44,
            "omega_max_2pi_mhz": 14.7,
            "delta_2pi_mhz": 147.0,
            "k0_dir": [0.0, 0.0, 1.0],
            "gamma_s_2pi_khz": 5.0,
        },
        "down": {
            "c3": 21.08,
            "omega_max_2pi_mhz": 12.5,
            "delta_2pi_mhz": 125.0,
            "k0_dir": [0.05, 0.0, 1.0],
            "gamma_s_2pi_khz": 5.0,
        },
    },
    "pulses": {
        "t_total_us": 1.0,
        "t_ramp_us": 0.2,
        "t_ramp_down_us": 0.22,
        "delta_start_2pi_mhz": 24.0,
        "delta_end_2pi_mhz": -12.0,
        "shape": "sin2_ramp_hold",
    },
    "retrieval": {
        "od_override": None,
        "cross_section_um2": 0.29,
        "delta_norm": 0.0,
        "gamma_e_2pi_mhz": 6.9,
        "gamma_s_2pi_mhz": 0.0,
        "gamma_sg_2pi_mhz": 0.0,
        "omega_c_2pi_mhz": 10.0,
        "profile": "flat",
        "profile_bins": 20,
    },
    "link": {"eta_t": 0.7, "eta_d": 0.9},
    "rate": {
        "tau_w_us": 1.0,
        "tau_r_us": 1.0,
        "tau_p_us": 1.0,
        "prep_every": 20,
        "prep_us": 1.0,
        "cool_every": 2000,
        "cool_us": 1000.0,
        "paper_compat": True,
    },
    "blockade": {"c6_ghz_um6": 360.7, "omega_eff_2pi_mhz": 1.0},
    "mc": {"n_realizations": 100, "master_seed": 42},
}

# key -> value kind, used for strict validation
_SCHEMA: dict = {
    "ensemble": {
        "n_atoms": "count",
        "sigma_perp_um": "pos_float",
        "sigma_z_um": "pos_float",
        "center": "vec3",
    },
    "tweezer": {
        "x_um": "float",
        "y_um": "float",
        "z_um": "float",
        "exclusion_um": "pos_float",
    },
    "channels.up": {
        "c3": "pos_float",
        "omega_max_2pi_mhz": "pos_float",
        "delta_2pi_mhz": "nonzero_float",
        "k0_dir": "vec3",
        "gamma_s_2pi_khz": "nonneg_float",
    },
    "pulses": {
        "t_total_us": "pos_float",
        "t_ramp_us": "pos_float",
        "t_ramp_down_us": "pos_float",
        "delta_start_2pi_mhz": "float",
        "delta_end_2pi_mhz": "float",
        "shape": "enum:sin2_ramp_hold,constant",
    },
    "retrieval": {
        "od_override": "opt_nonneg_float",
        "cross_section_um2": "nonneg_float",
        "delta_norm": "float",
        "gamma_e_2pi_mhz": "pos_float",
        "gamma_s_2pi_mhz": "nonneg_float",
        "gamma_sg_2pi_mhz": "nonneg_float",
        "omega_c_2pi_mhz": "nonneg_float",
        "profile": "enum:flat,from_write",
        "profile_bins": "count_pos",
    },
    "link": {"eta_t": "unit_interval", "eta_d": "unit_interval"},
    "rate": {
        "tau_w_us": "nonneg_float",
        "tau_r_us": "nonneg_float",
        "tau_p_us": "nonneg_float",
        "prep_every": "count_pos",
        "prep_us": "nonneg_float",
        "cool_every": "count_pos",
        "cool_us": "nonneg_float",
        "paper_compat": "bool",
    },
    "blockade": {"c6_ghz_um6": "pos_float", "omega_eff_2pi_mhz": "pos_float"},
    "mc": {"n_realizations": "count_pos", "master_seed": "int"},
}
_SCHEMA["channels.down"] = _SCHEMA["channels.up"]


@dataclass(frozen=True)
class RetrievalSettings:
    od_override: float | None
    cross_section: float
    delta_norm: float
    gamma_e: float
    gamma_s: float
    gamma_sg: float
    omega_c: float
    profile: str
    n_bins: int

    @property
    def z_s(self) -> float:
        """Spin-decay parameter gamma / |Omega_c|^2 with
        gamma = (gamma_s + gamma_sg) / gamma_e; zero when there is no
        spin decay."""
        total = self.gamma_s + self.gamma_sg
        if total == 0.0:
            return 0.0
        if self.omega_c == 0.0:
            raise ConfigError("omega_c must be nonzero when spin decay is present")
        return total / self.gamma_e / self.omega_c**2


@dataclass(frozen=True)
class LinkSettings:
    eta_transmission: float
    eta_detection: float


@dataclass(frozen=True)
class BlockadeSettings:
    c6: float        # GHz um^6, tabulated
    omega_eff: float  # rad/us


@dataclass(frozen=True)
class MonteCarloSettings:
    n_realizations: int
    master_seed: int


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    ensemble: CloudGeometry
    tweezer: TweezerSpec
    channels: dict
    pulses: PulseSchedule
    retrieval: RetrievalSettings
    link: LinkSettings
    rate_model: RateModel
    rate_paper_compat: bool
    blockade: BlockadeSettings
    mc: MonteCarloSettings
    raw: dict = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        return self.raw == other.raw

    def __hash__(self):
        return hash(json.dumps(self.raw, sort_keys=True))


def _check_value(path: str, kind: str, value):
    def fail(expected):
        raise ConfigError(f"{path}: expected {expected}, got {value!r}")

    is_num = isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == "count":
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            fail("a nonnegative integer")
    elif kind == "count_pos":
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            fail("a positive integer")
    elif kind == "int":
        if not isinstance(value, int) or isinstance(value, bool):
            fail("an integer")
    elif kind == "float":
        if not is_num:
            fail("a number")
    elif kind == "pos_float":
        if not is_num or value <= 0:
            fail("a positive number")
    elif kind == "nonneg_float":
        if not is_num or value < 0:
            fail("a nonnegative number")
    elif kind == "nonzero_float":
        if not is_num or value == 0:
            fail("a nonzero number")
    elif kind == "unit_interval":
        if not is_num or not 0 <= value <= 1:
            fail("a number in [0, 1]")
    elif kind == "opt_nonneg_float":
        if value is not None and (not is_num or value < 0):
            fail("null or a nonnegative number")
    elif kind == "vec3":
        ok = (
            isinstance(value, (list, tuple))
            and len(value) == 3
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
        )
        if not ok:
            fail("a 3-vector of numbers")
    elif kind == "bool":
        if not isinstance(value, bool):
            fail("a boolean")
    elif kind.startswith("enum:"):
        allowed = kind[5:].split(",")
        if value not in allowed:
            fail(f"one of {allowed}")
    else:  # pragma: no cover - schema self-consistency
        raise AssertionError(f"unknown schema kind {kind}")


def _validate_section(path: str, schema: dict, data: dict):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    for key in data:
        if key not in schema:
            raise ConfigError(
                f"{path}.{key}: unknown key (allowed: {sorted(schema)})"
            )
    for key, value in data.items():
        _check_value(f"{path}.{key}", schema[key], value)


def _merge_and_validate(user: dict) -> dict:
    raw = copy.deepcopy(DEFAULT_RAW)
    if not isinstance(user, dict):
        raise ConfigError("top level must be a JSON object")
    for section in user:
        if section not in DEFAULT_RAW:
            raise ConfigError(
                f"unknown config section {section!r} (allowed: {sorted(DEFAULT_RAW)})"
            )
    for section, content in user.items():
        if section == "channels":
            if not isinstance(content, dict):
                raise ConfigError("channels: expected an object")
            for label in content:
                if label not in ("up", "down"):
                    raise ConfigError(f"channels.{label}: unknown channel label")
                _validate_section(
                    f"channels.{label}", _SCHEMA[f"channels.{label}"], content[label]
                )
                raw["channels"][label].update(content[label])
        else:
            _validate_section(section, _SCHEMA[section], content)
            raw[section].update(content)
    # re-validate the merged result so defaults + overrides stay consistent
    for section, schema in _SCHEMA.items():
        parts = section.split(".")
        node = raw
        for p in parts:
            node = node[p]
        _validate_section(section, schema, node)
    return raw


def _unit_k0(direction) -> tuple:
    v = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ConfigError("k0_dir must be a nonzero vector")
    return tuple(K0_MAGNITUDE * v / norm)


def _build(raw: dict) -> ExperimentConfig:
    ens = raw["ensemble"]
    try:
        geometry = CloudGeometry(
            n_atoms=ens["n_atoms"],
            sigma_perp=float(ens["sigma_perp_um"]),
            sigma_z=float(ens["sigma_z_um"]),
            center=tuple(float(v) for v in ens["center"]),
        )
        tw = raw["tweezer"]
        tweezer = TweezerSpec(
            position=(float(tw["x_um"]), float(tw["y_um"]), float(tw["z_um"])),
            exclusion_radius=float(tw["exclusion_um"]),
        )
        channels = {}
        for label in ("up", "down"):
            ch = raw["channels"][label]
            channels[label] = RydbergChannel(
                label=label,
                c3=float(ch["c3"]),
                omega_max=mhz_2pi(ch["omega_max_2pi_mhz"]),
                delta_single=mhz_2pi(ch["delta_2pi_mhz"]),
                k0=_unit_k0(ch["k0_dir"]),
                gamma_s=khz_2pi(ch["gamma_s_2pi_khz"]),
            )
        pl = raw["pulses"]
        pulses = PulseSchedule(
            t_total=float(pl["t_total_us"]),
            t_ramp=float(pl["t_ramp_us"]),
            t_ramp_down=float(pl["t_ramp_down_us"]),
            omega_shape=pl["shape"],
            delta_start=mhz_2pi(pl["delta_start_2pi_mhz"]),
            delta_end=mhz_2pi(pl["delta_end_2pi_mhz"]),
        )
        rt = raw["retrieval"]
        retrieval = RetrievalSettings(
            od_override=None if rt["od_override"] is None else float(rt["od_override"]),
            cross_section=float(rt["cross_section_um2"]),
            delta_norm=float(rt["delta_norm"]),
            gamma_e=mhz_2pi(rt["gamma_e_2pi_mhz"]),
            gamma_s=mhz_2pi(rt["gamma_s_2pi_mhz"]),
            gamma_sg=mhz_2pi(rt["gamma_sg_2pi_mhz"]),
            omega_c=mhz_2pi(rt["omega_c_2pi_mhz"]),
            profile=rt["profile"],
            n_bins=rt["profile_bins"],
        )
        lk = raw["link"]
        link = LinkSettings(
            eta_transmission=float(lk["eta_t"]), eta_detection=float(lk["eta_d"])
        )
        ra = raw["rate"]
        rate_model = RateModel(
            tau_write=float(ra["tau_w_us"]),
            tau_retrieve=float(ra["tau_r_us"]),
            tau_other=float(ra["tau_p_us"]),
            prep_every=ra["prep_every"],
            prep_duration=float(ra["prep_us"]),
            cool_every=ra["cool_every"],
            cool_duration=float(ra["cool_us"]),
        )
        bl = raw["blockade"]
        blockade = BlockadeSettings(
            c6=float(bl["c6_ghz_um6"]), omega_eff=mhz_2pi(bl["omega_eff_2pi_mhz"])
        )
        mc = MonteCarloSettings(
            n_realizations=raw["mc"]["n_realizations"],
            master_seed=raw["mc"]["master_seed"],
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(
        ensemble=geometry,
        tweezer=tweezer,
        channels=channels,
        pulses=pulses,
        retrieval=retrieval,
        link=link,
        rate_model=rate_model,
        rate_paper_compat=bool(ra["paper_compat"]),
        blockade=blockade,
        mc=mc,
        raw=raw,
    )


def loads_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON config string; empty text means defaults."""
    if not text.strip():
        user = {}
    else:
        try:
            user = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    return _build(_merge_and_validate(user))


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return loads_config(text)


def default_config() -> ExperimentConfig:
    return _build(_merge_and_validate({}))


def serialize(config: ExperimentConfig) -> str:
    """The external (suffixed-unit) JSON form; load round-trips exactly."""
    return json.dumps(config.raw, indent=2, sort_keys=True)


def internal_dict(config: ExperimentConfig) -> dict:
    """Post-conversion config echo in internal units (rad/us, um, us)."""
    ch = {
        label: {
            "c3": c.c3,
            "omega_max": c.omega_max,
            "delta_single": c.delta_single,
            "k0": list(c.k0),
            "gamma_s": c.gamma_s,
        }
        for label, c in config.channels.items()
    }
    return {
        "ensemble": {
            "n_atoms": config.ensemble.n_atoms,
            "sigma_perp": config.ensemble.sigma_perp,
            "sigma_z": config.ensemble.sigma_z,
            "center": list(config.ensemble.center),
        },
        "tweezer": {
            "position": list(config.tweezer.position),
            "exclusion_radius": config.tweezer.exclusion_radius,
        },
        "channels": ch,
        "pulses": {
            "t_total": config.pulses.t_total,
            "t_ramp": config.pulses.t_ramp,
            "t_ramp_down": config.pulses.t_ramp_down,
            "shape": config.pulses.omega_shape,
            "delta_start": config.pulses.delta_start,
            "delta_end": config.pulses.delta_end,
            "alpha": config.pulses.alpha,
        },
        "retrieval": {
            "od_override": config.retrieval.od_override,
            "cross_section": config.retrieval.cross_section,
            "delta_norm": config.retrieval.delta_norm,
            "gamma_e": config.retrieval.gamma_e,
            "gamma_s": config.retrieval.gamma_s,
            "gamma_sg": config.retrieval.gamma_sg,
            "omega_c": config.retrieval.omega_c,
            "profile": config.retrieval.profile,
            "profile_bins": config.retrieval.n_bins,
        },
        "link": {
            "eta_transmission": config.link.eta_transmission,
            "eta_detection": config.link.eta_detection,
        },
        "rate": {
            "tau_write": config.rate_model.tau_write,
            "tau_retrieve": config.rate_model.tau_retrieve,
            "tau_other": config.rate_model.tau_other,
            "prep_every": config.rate_model.prep_every,
            "prep_duration": config.rate_model.prep_duration,
            "cool_every": config.rate_model.cool_every,
            "cool_duration": config.rate_model.cool_duration,
            "paper_compat": config.rate_paper_compat,
        },
        "blockade": {"c6": config.blockade.c6, "omega_eff": config.blockade.omega_eff},
        "mc": {
            "n_realizations": config.mc.n_realizations,
            "master_seed": config.mc.master_seed,
        },
    }
