"""Command-line interface: seeded runs of each stage plus the full pipeline.

    qantenna <subcommand> [--config PATH] [--seed N] [--out DIR]
                          [--realizations K] [--paper-compat]

Subcommands: cloud, couplings, write, retrieve, link, rate, pipeline.
Each run writes `report.json` (and stage CSVs) into --out.  With a fixed
config and seed the numeric content of every artifact is byte-identical
across runs; only the provenance timestamp differs.
"""

import argparse
import copy
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import cloud as cloud_mod
from . import retrieval as retrieval_mod
from .config import default_config, internal_dict, load_config
from .coupling import build_couplings, collective_strength_quadrature, pair_coupling
from .errors import ConfigError, QAntennaError
from .link import (
    LinkBudget,
    attempt_success_probability,
    entanglement_rate,
    simulate_attempts,
    two_node_pipeline,
)
from .seeding import derive_seed
from .write import simulate_write_ensemble

SUBCOMMANDS = ("cloud", "couplings", "write", "retrieve", "link", "rate", "pipeline")


def _write_csv(path: Path, header: list[str], rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _load(args) -> tuple:
    cfg = load_config(args.config) if args.config else default_config()
    if args.realizations is not None or args.paper_compat:
        raw = copy.deepcopy(cfg.raw)
        if args.realizations is not None:
            raw["mc"]["n_realizations"] = args.realizations
        if args.paper_compat:
            raw["rate"]["paper_compat"] = True
        from .config import _build  # rebuilt with CLI overrides applied

        cfg = _build(raw)
    seed = cfg.mc.master_seed if args.seed is None else args.seed
    return cfg, seed


def _cmd_cloud(cfg, seed, args, out: Path) -> dict:
    geom, tweezer = cfg.ensemble, cfg.tweezer
    results = {
        "peak_density": geom.peak_density,
        "od": cloud_mod.optical_depth(geom, cfg.retrieval.cross_section),
        "p_int": cloud_mod.escape_probability(geom, tweezer),
        "r_blockade": cloud_mod.blockade_radius(cfg.blockade.c6, cfg.blockade.omega_eff),
    }
    realization = cloud_mod.sample(geom, derive_seed(seed, "cloud", 0))
    _write_csv(
        out / "positions.csv",
        ["index", "x", "y", "z"],
        ((i, p[0], p[1], p[2]) for i, p in enumerate(realization.positions)),
    )
    return results

def _cmd_couplings(cfg, seed, args, out: Path) -> dict:
    geom, tweezer = cfg.ensemble, cfg.tweezer
    realization = cloud_mod.sample(geom, derive_seed(seed, "cloud", 0))
    results = {}
    for label, channel in cfg.channels.items():
        partner = cfg.channels["down" if label == "up" else "up"]
        cs = build_couplings(
            realization, tweezer, channel,
            delta2_base=partner.omega_max**2 / partner.delta_single,
        )
        quad = collective_strength_quadrature(geom, tweezer, channel)
        d_center = pair_coupling(channel.c3, geom.center, tweezer.position)
        results[label] = {
            "d_bar": cs.d_bar,
            "d_bar_quadrature": quad.d_bar,
            "d_center": d_center,
            "i_constant": quad.i_constant,
        }
        _write_csv(
            out / f"couplings_{label}.csv",
            ["index", "d_j", "d_tilde_j", "delta_tilde_j", "phase"],
            (
                (i, cs.d_j[i], cs.d_tilde_j[i], cs.delta_tilde_j[i], cs.phases[i])
                for i in range(cs.n_atoms)
            ),
        )
    return results


def _run_write_ensembles(cfg, seed):
    ensembles = {}
    for label, channel in cfg.channels.items():
        partner = cfg.channels["down" if label == "up" else "up"]
        ensembles[label] = simulate_write_ensemble(
            cfg.ensemble,
            cfg.tweezer,
            channel,
            cfg.pulses,
            cfg.mc.n_realizations,
            seed,
            delta2_base=partner.omega_max**2 / partner.delta_single,
        )
    return ensembles


def _cmd_write(cfg, seed, args, out: Path) -> dict:
    results = {}
    for label, ens in _run_write_ensembles(cfg, seed).items():
        res = ens.first_result
        remaining = res.p0 + res.p1
        _write_csv(
            out / f"write_{label}.csv",
            ["t", "p0", "p1", "norm"],
            zip(res.times, res.p0, res.p1, remaining),
        )
        results[label] = {
            "eta_w_mean": ens.eta_mean,
            "eta_w_stderr": ens.eta_stderr,
            "n_realizations": ens.n_realizations,
            "seed": seed,
        }
    return results


def _cmd_retrieve(cfg, seed, args, out: Path) -> dict:
    od = (
        cfg.retrieval.od_override
        if cfg.retrieval.od_override is not None
        else cloud_mod.optical_depth(cfg.ensemble, cfg.retrieval.cross_section)
    )
    params = retrieval_mod.RetrievalParams(
        od=od,
        delta_norm=cfg.retrieval.delta_norm,
        z_s=cfg.retrieval.z_s,
        omega_c=cfg.retrieval.omega_c,
        gamma_e=cfg.retrieval.gamma_e,
    )
    eta_r = retrieval_mod.retrieval_efficiency(params)
    zg = np.linspace(0.0, 1.0, 21)
    rows = []
    for z in zg:
        kv = retrieval_mod.retrieval_kernel(params, z, zg)
        kv = np.atleast_1d(kv)
        for zp, k in zip(zg, kv):
            rows.append((z, zp, np.real(k), np.imag(k)))
    _write_csv(out / "kernel.csv", ["z", "z_prime", "k_real", "k_imag"], rows)
    return {
        "od": od,
        "eta_r": eta_r,
        "eta_total": retrieval_mod.total_interface_efficiency(args.eta_w, eta_r),
        "emission_direction": retrieval_mod.EMISSION_DIRECTION_CONVENTION,
    }


def _cmd_link(cfg, seed, args, out: Path) -> dict:
    budget = LinkBudget(
        eta_interface=args.eta,
        eta_transmission=cfg.link.eta_transmission,
        eta_detection=cfg.link.eta_detection,
    )
    results = {
        "eta": budget.eta_interface,
        "eta_t": budget.eta_transmission,
        "eta_d": budget.eta_detection,
        "p_e": attempt_success_probability(budget),
    }
    if args.attempts:
        tally = simulate_attempts(budget, args.attempts, derive_seed(seed, "link", 0))
        results["mc"] = {
            "n_attempts": tally.n_attempts,
            "n_herald": tally.n_herald,
            "n_psi_plus": tally.n_psi_plus,
            "n_psi_minus": tally.n_psi_minus,
            "success_fraction": tally.success_fraction,
        }
    return results


def _cmd_rate(cfg, seed, args, out: Path) -> dict:
    budget = LinkBudget(
        eta_interface=args.eta,
        eta_transmission=cfg.link.eta_transmission,
        eta_detection=cfg.link.eta_detection,
    )
    p_e = attempt_success_probability(budget)
    rate = entanglement_rate(cfg.rate_model, p_e, paper_compat=cfg.rate_paper_compat)
    return {
        "p_e": p_e,
        "tau_cycle_us": rate.tau_cycle_us,
        "ideal_rate_hz": rate.ideal_rate_hz,
        "prep_factor": rate.prep_factor,
        "cool_factor": rate.cool_factor,
        "practical_rate_hz": rate.practical_rate_hz,
        "paper_compat": rate.paper_compat,
    }


def _cmd_pipeline(cfg, seed, args, out: Path) -> dict:
    return two_node_pipeline(cfg, seed=seed)


_HANDLERS = {
    "cloud": _cmd_cloud,
    "couplings": _cmd_couplings,
    "write": _cmd_write,
    "retrieve": _cmd_retrieve,
    "link": _cmd_link,
    "rate": _cmd_rate,
    "pipeline": _cmd_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qantenna",
        description="Ensemble-mediated atom-photon entanglement link simulator.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (defaults when omitted)")
    common.add_argument("--seed", type=int, default=None, help="master seed override")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument(
        "--realizations", type=int, default=None, help="Monte Carlo realization count"
    )
    common.add_argument(
        "--paper-compat",
        action="store_true",
        help="use the publication-compatible duty-cycle arithmetic",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "retrieve":
            p.add_argument(
                "--eta-w",
                type=float,
                default=1.0,
                dest="eta_w",
                help="write efficiency folded into eta_total",
            )
        if name in ("link", "rate"):
            p.add_argument(
                "--eta",
                type=float,
                default=0.548,
                help="interface efficiency eta_w*eta_r per node",
            )
        if name == "link":
            p.add_argument(
                "--attempts", type=int, default=0, help="Monte Carlo attempt count"
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, seed = _load(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        results = _HANDLERS[args.command](cfg, seed, args, out)
        report = {
            "command": args.command,
            "config": internal_dict(cfg),
            "results": results,
            "provenance": {
                "seed": seed,
                "version": __version__,
                "timestamp": datetime.now(timezone.utc).isoformat(),
            },
        }
        report_path = out / "report.json"
        with open(report_path, "w", encoding="utf-8", newline="") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"{args.command}: report written to {report_path}")
        for key, value in results.items():
            print(f"  {key}: {_summ(value)}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except QAntennaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _summ(value):
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}={_summ(v)}" for k, v in value.items()) + "}"
    return value


if __name__ == "__main__":
    raise SystemExit(main())
