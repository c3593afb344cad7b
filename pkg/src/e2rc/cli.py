"""Command-line front end: ``e2rc <command> [--config FILE] [--set key=value ...]``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, config
from .exit_engine import (StructuredComponent, curve_mae, monte_carlo_exit_points,
                          structured_exit_curve, write_curve)
from .fixtures import (JOINT_RATES, START_DEGREES, e2rc_component, ira_component,
                       protograph_1, starting_protograph)
from .infotheory import ChannelParam, DegreeDistribution
from .lifting import count_short_cycles, lift, write_alist
from .optimizer import (JointDesignSpec, SemiStructuredSpec, e2rc_structure, joint_optimize,
                        threshold_row, write_lambda)
from .proto_builder import build_family, rank_starting_protographs
from .proto_de import family_threshold_report, write_threshold_report
from .protograph import Protograph, read_protograph
from .sim import measured_threshold, rate_masks, simulate
from .structure import puncture_mask, sr_classify

log = logging.getLogger("e2rc")

FIXTURES = {"protograph-1": protograph_1, "start": starting_protograph}

_DESIGN = {
    "m": ("int", 32),
    "check_degrees": ("ints", [8]),
    "d_v_max": ("int", 20),
    "g_min": ("float", 0.0),
    "g_max": ("float", 1.0),
    "g_step": ("float", 0.01),
    "rate_tol": ("float", 0.005),
    "grid": ("int", 10000),
}

SCHEMAS = {
    "exit-curve": {
        "structure": ("str", "e2rc"),          # e2rc | ira | file
        "m": ("int", 128),
        "check_degree": ("int", 8),
        "chained": ("bool", False),
        "protograph": ("opt", None),
        "left_sockets": ("ints", []),
        "noise_variance": ("float", 0.95775),
        "points": ("int", 10000),
        "mc_samples": ("int", 0),
        "mc_points": ("int", 21),
    },
    "design": {"rate": ("str", "1/2"), **_DESIGN},
    "design-joint": {"rates": ("strs", list(JOINT_RATES)), **_DESIGN},
    "predict": {
        "protograph": ("opt", None),
        "lambda": ("opt", None),
        "m": ("int", 32),
        "check_degrees": ("ints", [8]),
        "rates": ("strs", []),
        "grid": ("int", 10000),
        "max_iters": ("int", 10000),
    },
    "proto-search": {
        "m0": ("int", 1),
        "n0": ("int", 9),
        "d_v_max": ("int", 20),
        "min_deg": ("int", 3),
        "top": ("int", 10),
    },
    "proto-family": {
        "start": ("opt", None),
        "start_degrees": ("ints", list(START_DEGREES)),
        "stages": ("int", 3),
        "pattern_budget": ("int", 0),
    },
    "lift": {
        "protograph": ("str", "fixture:protograph-1"),
        "q": ("int", 256),
        "strict": ("bool", True),
        "retries": ("int", 20),
    },
    "simulate": {
        "protograph": ("str", "fixture:protograph-1"),
        "q": ("int", 256),
        "strict": ("bool", True),
        "rates": ("strs", ["8/16", "8/12", "8/9"]),
        "ebn0": ("floats", [1.0, 1.5, 2.0]),
        "min_frame_errors": ("int", 100),
        "max_frames": ("int", 10_000_000),
        "max_iters": ("int", 100),
        "batch": ("int", 64),
        "target_ber": ("float", 1e-4),
        "stop_at_clean": ("bool", False),
    },
    "sr-classify": {"protograph": ("str", "fixture:protograph-1")},
}


def load_protograph(ref: str) -> Protograph:
    if ref.startswith("fixture:"):
        name = ref.split(":", 1)[1]
        if name not in FIXTURES:
            raise ValueError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
        return FIXTURES[name]()
    path = Path(ref)
    if not path.is_file():
        raise FileNotFoundError(f"protograph file not found: {ref}")
    return read_protograph(path)


def _rate_tag(r) -> str:
    f = Fraction(r)
    return f"{f.numerator}_{f.denominator}"


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# commands -------------------------------------------------------------------

def cmd_exit_curve(cfg, out: Path, seed: int, threads: int) -> None:
    kind = cfg["structure"]
    if kind == "e2rc":
        comp = e2rc_component(cfg["m"], cfg["check_degree"], cfg["chained"])
    elif kind == "ira":
        comp = ira_component(cfg["m"], cfg["check_degree"])
    elif kind == "file":
        if not cfg["protograph"]:
            raise config.ConfigError("structure=file needs protograph=PATH")
        g = load_protograph(cfg["protograph"])
        sockets = cfg["left_sockets"] or [cfg["check_degree"] - int(s) for s in g.base.sum(axis=1)]
        comp = StructuredComponent(g, sockets)
    else:
        raise config.ConfigError(f"structure must be e2rc, ira or file, not {kind!r}")
    comp = comp.at(ChannelParam(cfg["noise_variance"]))
    t0 = time.time()
    curve = structured_exit_curve(comp, cfg["points"])
    log.info("fast curve: %d points in %.1f s", len(curve), time.time() - t0)
    write_curve(curve, out / "exit_curve.csv")
    if cfg["mc_samples"] > 0:
        ia = np.linspace(0.0, 1.0, cfg["mc_points"], endpoint=False)
        ie = monte_carlo_exit_points(comp, ia, cfg["mc_samples"], seed)
        _write_rows(out / "mc_compare.csv", ["i_a", "i_e_mc", "i_e_fast"],
                    [[f"{a:.17g}", f"{b:.17g}", f"{c:.17g}"]
                     for a, b, c in zip(ia, ie, curve(ia))])
        mae = curve_mae(curve, ia, ie)
        (out / "mae.txt").write_text(f"mae={mae:.6g}\n")
        print(f"mae={mae:.6g}")


def _structure(cfg):
    return e2rc_structure(cfg["m"], cfg["check_degrees"])


def _design(cfg, rates, out: Path) -> None:
    structure = _structure(cfg)
    jspec = JointDesignSpec(tuple(rates), cfg["g_min"], cfg["g_max"], cfg["g_step"],
                            cfg["rate_tol"])
    res = joint_optimize(jspec, structure, cfg["d_v_max"], cfg["grid"])
    write_lambda(res.lam, out / "lambda.csv")
    spec = SemiStructuredSpec(cfg["m"], res.lam, tuple(structure.check_degrees), cfg["d_v_max"])
    rows = [threshold_row(spec, r, grid=cfg["grid"]) for r in jspec.rates]
    write_threshold_report(rows, out / "thresholds.csv")
    lines = [f"accepted_g_db={res.gap:.4f}", f"design_rate={res.rate:.6f}",
             f"lambda={res.lam}", "rate gap_db"]
    lines += [f"{r} {row.gap_db:.4f}" for r, row in zip(jspec.rates, rows)]
    (out / "design_summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))


def cmd_design(cfg, out: Path, seed: int, threads: int) -> None:
    _design(cfg, [cfg["rate"]], out)


def cmd_design_joint(cfg, out: Path, seed: int, threads: int) -> None:
    _design(cfg, cfg["rates"], out)


def cmd_predict(cfg, out: Path, seed: int, threads: int) -> None:
    if bool(cfg["protograph"]) == bool(cfg["lambda"]):
        raise config.ConfigError("give exactly one of protograph= or lambda=")
    if cfg["protograph"]:
        g = load_protograph(cfg["protograph"]).unpunctured()
        if cfg["rates"]:
            masks = rate_masks(g, cfg["rates"])
        else:
            masks = [puncture_mask(g, p) for p in range(len(g.parity_vars) + 1)]
        rows = family_threshold_report([(g, mk) for mk in masks], cfg["max_iters"])
    else:
        if not cfg["rates"]:
            raise config.ConfigError("lambda mode needs rates=")
        lam = DegreeDistribution.parse(cfg["lambda"])
        spec = SemiStructuredSpec(cfg["m"], lam, tuple(cfg["check_degrees"]), lam.max_degree)
        rows = [threshold_row(spec, r, grid=cfg["grid"]) for r in cfg["rates"]]
    write_threshold_report(rows, out / "thresholds.csv")
    for r in rows:
        print(f"rate={r.rate:.6f} ebn0_db={r.ebn0_db:.4f} gap_db={r.gap_db:.4f}")


def cmd_proto_search(cfg, out: Path, seed: int, threads: int) -> None:
    ranked = rank_starting_protographs(cfg["m0"], cfg["n0"], cfg["d_v_max"], cfg["min_deg"],
                                       top=cfg["top"])
    if not ranked:
        raise RuntimeError("no starting protograph decodes")
    _write_rows(out / "ranking.csv", ["rank", "threshold_db", "degrees"],
                [[k + 1, f"{t:.4f}", " ".join(str(int(d)) for d in g.base.sum(axis=0))]
                 for k, (t, g) in enumerate(ranked)])
    (out / "start.proto").write_text(ranked[0][1].to_text())
    print(f"best threshold {ranked[0][0]:.4f} dB")


def cmd_proto_family(cfg, out: Path, seed: int, threads: int) -> None:
    if cfg["start"]:
        start = load_protograph(cfg["start"])
    else:
        degs = cfg["start_degrees"]
        start = Protograph(np.array([degs]), ("s",) * len(degs))
    fam = build_family(start, cfg["stages"], cfg["pattern_budget"] or None)
    fam.write(out / "family")
    (out / "stage_log.txt").write_text((out / "family" / "stage_log.txt").read_text())
    rows = family_threshold_report([(fam.mother, mk) for mk in fam.masks()])
    write_threshold_report(rows, out / "thresholds.csv")
    print(f"family of {len(rows)} rates, mother {fam.mother.num_checks}x{fam.mother.num_vars}")


def _lifted(cfg, seed):
    g = load_protograph(cfg["protograph"]).unpunctured()
    return lift(g, cfg["q"], seed=seed, retries=cfg.get("retries", 20), strict=cfg["strict"])


def cmd_lift(cfg, out: Path, seed: int, threads: int) -> None:
    code = _lifted(cfg, seed)
    write_alist(code.h, out / "code.alist")
    (out / "shifts.txt").write_text(code.shift_table())
    print(f"n={code.n} m={code.m} four_cycles={count_short_cycles(code.h)}")


def cmd_simulate(cfg, out: Path, seed: int, threads: int) -> None:
    code = _lifted(cfg, seed)
    masks = rate_masks(code.proto, cfg["rates"])
    results = simulate(code, masks, cfg["ebn0"], cfg["min_frame_errors"], cfg["max_frames"],
                       seed=seed, threads=threads, batch=cfg["batch"],
                       max_iters=cfg["max_iters"], stop_at_clean=cfg["stop_at_clean"])
    rows = []
    for r, res in zip(cfg["rates"], results):
        res.write_csv(out / f"sim_rate_{_rate_tag(r)}.csv")
        th = measured_threshold(res, cfg["target_ber"])
        rows.append([r, f"{res.rate:.10g}", f"{th:.4f}"])
        print(f"rate {r}: measured threshold {th:.4f} dB")
    _write_rows(out / "measured_thresholds.csv", ["rate_label", "rate", "ebn0_db"], rows)


def cmd_sr_classify(cfg, out: Path, seed: int, threads: int) -> None:
    g = load_protograph(cfg["protograph"])
    prof = sr_classify(g)
    lines = ["var level"] + [f"{v} {k}" for v, k in prof.level.items()]
    lines += ["# census " + " ".join(f"{k}-SR:{n}" for k, n in prof.census().items())]
    (out / "sr.txt").write_text("\n".join(lines) + "\n")
    print(lines[-1][2:])


COMMANDS = {
    "exit-curve": cmd_exit_curve,
    "design": cmd_design,
    "design-joint": cmd_design_joint,
    "predict": cmd_predict,
    "proto-search": cmd_proto_search,
    "proto-family": cmd_proto_family,
    "lift": cmd_lift,
    "simulate": cmd_simulate,
    "sr-classify": cmd_sr_classify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="e2rc", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} job")
        sp.add_argument("--config", help="key=value config file")
        sp.add_argument("-s", "--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def write_manifest(out: Path, command: str, args, cfg: dict) -> None:
    head = {"command": command, "version": __version__, "seed": args.seed,
            "threads": args.threads, "config_file": args.config or ""}
    text = "# run manifest\n" + config.dump(head) + "# resolved config\n" + config.dump(cfg)
    (out / "manifest.txt").write_text(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config.load(SCHEMAS[args.command], args.config, args.set)
        if args.threads < 1:
            raise config.ConfigError("--threads must be >= 1")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_manifest(out, args.command, args, cfg)
        COMMANDS[args.command](cfg, out, args.seed, args.threads)
    except (config.ConfigError, OSError, ValueError, RuntimeError) as exc:
        print(f"e2rc {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
