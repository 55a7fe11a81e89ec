"""Command line interface: ``reflector-ot <command> [options]``.

Commands
--------
oracle-emit  exact reflector values on the meshes of a given ``h``
mesh         cap and disk mesh CSVs
solve        the iterative scheme; exit 0 when done, 2 on an unbounded
             level, 3 when the constraint cap is hit
sweep        ``solve`` over a grid of ``C`` and ``a``; one CSV row per level
validate     per-sample errors of stored solutions against the exact pair
"""

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import files
from .analysis import decay_fit, errors_from_arrays
from .analytic import rho_exact, z_exact
from .config import RunConfig, load_config, make_dataset, serialize_config
from .errors import ConfigError, InsufficientData, ReflectorError
from .geometry import rho_tilde, z_tilde
from .refine import build_meshes, run

EXIT_OK, EXIT_ERROR, EXIT_UNBOUNDED, EXIT_CAP = 0, 1, 2, 3

log = logging.getLogger("reflector_ot")


def _common(p):
    p.add_argument("--config", type=Path, help="YAML run configuration")
    p.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    p.add_argument("--levels", type=int, help="number of refinement levels")
    p.add_argument("--c", type=float, dest="C", help="threshold constant C")
    p.add_argument("--a", type=float, dest="a", help="threshold exponent a")
    p.add_argument("--epsilon-mode", choices=["formula", "critical"])
    p.add_argument("--max-constraints", type=int)
    p.add_argument("--dump-lp", action="store_true", help="write each level's LP in LP format")
    p.add_argument("--no-timing", action="store_true",
                   help="report wall_time_s as 0 so reports are byte-reproducible")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="reflector-ot", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("oracle-emit", help="write exact reflector values on meshes")
    _common(p)
    p.add_argument("--h", type=float, help="reference edge length (default: oracle.h)")
    p = sub.add_parser("mesh", help="write cap and disk meshes")
    _common(p)
    p.add_argument("--h", type=float, help="reference edge length (default: refinement.h0)")
    p = sub.add_parser("solve", help="run the refinement scheme")
    _common(p)
    p = sub.add_parser("sweep", help="run a grid of C and a values")
    _common(p)
    p.add_argument("--c-grid", type=float, nargs="+", help="C values (default: sweep.C)")
    p.add_argument("--a-grid", type=float, nargs="+", help="a values (default: sweep.a)")
    p = sub.add_parser("validate", help="compare stored solutions with the exact pair")
    _common(p)
    p.add_argument("solution_dir", type=Path, nargs="?", help="directory written by solve")
    p = sub.add_parser("show-config", help="print the effective configuration")
    _common(p)
    return parser


def effective_config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    ref = cfg.refinement
    changes = {}
    if args.levels is not None:
        if ref.h_sequence is not None:
            changes["h_sequence"] = ref.h_sequence[: args.levels]
        changes["n_levels"] = args.levels
    for key in ("C", "a", "epsilon_mode", "max_constraints"):
        if getattr(args, key) is not None:
            changes[key] = getattr(args, key)
    if changes:
        try:
            cfg.refinement = dataclasses.replace(ref, **changes)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if args.out is not None:
        cfg.output_dir = str(args.out)
    return cfg


def _dataset(cfg, args):
    base = args.config.parent if args.config else Path(".")
    return make_dataset(cfg.dataset, base)


def _solution_arrays(cfg, cap, disk, pair):
    rho = rho_exact(pair, cap.lifted)
    zs = z_exact(pair, disk.samples)
    r = np.log(rho_tilde(cfg, rho, cap.lifted))
    z = np.log(z_tilde(cfg, zs, disk.samples))
    return r, z, rho, zs


def cmd_oracle_emit(cfg, args):
    ds = _dataset(cfg, args)
    if ds.pair is None:
        raise ConfigError("oracle-emit needs a dataset with an exact solution")
    h = args.h if args.h is not None else cfg.oracle.h
    cap, disk = build_meshes(ds, h, cfg.refinement.anchor_direction)
    r, z, rho, zs = _solution_arrays(ds.config, cap, disk, ds.pair)
    out = Path(cfg.output_dir)
    files.write_solution(out, 1, cap, disk, r, z, rho, zs)
    print(f"wrote {len(cap)} cap and {len(disk)} disk samples to {out}")
    return EXIT_OK


def cmd_mesh(cfg, args):
    ds = _dataset(cfg, args)
    h = args.h if args.h is not None else cfg.refinement.levels()[0]
    cap, disk = build_meshes(ds, h, cfg.refinement.anchor_direction)
    out = Path(cfg.output_dir)
    files.write_mesh_csv(cap, out / "cap_mesh.csv")
    files.write_mesh_csv(disk, out / "disk_mesh.csv")
    print(f"cap: {len(cap)} samples, disk: {len(disk)} samples, written to {out}")
    return EXIT_OK


def _solve_into(cfg, ds, out, dump_lp, no_timing):
    out.mkdir(parents=True, exist_ok=True)
    lp_dir = None
    if dump_lp:
        lp_dir = out / "lp"
        lp_dir.mkdir(exist_ok=True)
    result = run(cfg.refinement, ds, dump_lp_dir=lp_dir)
    records = []
    for rep in result.reports:
        d = rep.to_dict()
        if no_timing:
            d["wall_time_s"] = 0.0
        records.append(d)
    files.write_jsonl(out / "reports.jsonl", records)
    for sol in result.solutions:
        files.write_discrete_solution(out, sol)
    summary = {"status": result.status, "levels_completed": len(result.solutions)}
    if result.unbounded is not None:
        u = result.unbounded
        summary["unbounded"] = {
            "level": u.level, "epsilon": u.epsilon, "reason": u.reason,
            "uncovered_inputs": u.uncovered_inputs.tolist(),
            "uncovered_outputs": u.uncovered_outputs.tolist(),
        }
    files.write_json(out / "summary.json", summary)
    return result, records


def cmd_solve(cfg, args):
    ds = _dataset(cfg, args)
    out = Path(cfg.output_dir)
    (out).mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(serialize_config(cfg))
    result, records = _solve_into(cfg, ds, out, args.dump_lp, args.no_timing)
    for d in records:
        print(files.dumps(d))
    if result.status == "unbounded":
        print(f"unbounded at level {result.unbounded.level}", file=sys.stderr)
        return EXIT_UNBOUNDED
    if result.status == "constraint_cap":
        print("constraint cap exceeded", file=sys.stderr)
        return EXIT_CAP
    return EXIT_OK


SWEEP_HEADER = ["C", "a", "level", "h", "M", "N", "status", "max_err_r1", "max_err_r2",
                "constraints", "pct_full"]


def cmd_sweep(cfg, args):
    ds = _dataset(cfg, args)
    c_grid = args.c_grid or cfg.sweep.C
    a_grid = args.a_grid or cfg.sweep.a
    out = Path(cfg.output_dir)
    rows = []
    for a in a_grid:
        for C in c_grid:
            cell = dataclasses.replace(cfg.refinement, C=C, a=a)
            try:
                result = run(cell, ds)
            except ReflectorError as exc:
                log.warning("cell C=%g a=%g failed: %s", C, a, exc)
                rows.append([C, a, "", "", "", "", f"error: {exc}", None, None, None, None])
                continue
            for rep in result.reports:
                rows.append([C, a, rep.level, rep.h, rep.M, rep.N, rep.status, rep.max_err_r1,
                             rep.max_err_r2, rep.constraints, rep.pct_full])
    files._write_rows(out / "sweep.csv", SWEEP_HEADER, rows)
    with open(out / "sweep.csv") as fh:
        sys.stdout.write(fh.read())
    return EXIT_OK


def cmd_validate(cfg, args):
    ds = _dataset(cfg, args)
    if ds.pair is None:
        raise ConfigError("validate needs a dataset with an exact solution")
    src = args.solution_dir or Path(cfg.output_dir)
    levels = files.solution_levels(src)
    if not levels:
        print(f"no solution files in {src}", file=sys.stderr)
        return EXIT_ERROR
    out = Path(cfg.output_dir) if args.out else src
    summaries, e1, n_tot = [], [], []
    for k in levels:
        s = files.read_solution(src, k)
        cap = _Stored(s.lifted[:, :2], s.cap_weights, s.lifted)
        disk = _Stored(s.points, s.disk_weights, None)
        rep = errors_from_arrays(s.rho, s.zsurf, cap, disk, ds.pair)
        files.write_error_csv(out / f"errors_level{k}_r1.csv", s.lifted, rep.err_r1)
        files.write_error_csv(out / f"errors_level{k}_r2.csv", s.points, rep.err_r2)
        summaries.append({"level": k, "M": len(s.rho), "N": len(s.zsurf), **rep.summary()})
        e1.append(rep.max_err_r1)
        n_tot.append(s.n_tot)
    result = {"levels": summaries}
    try:
        result["alpha_r1"] = decay_fit(e1, n_tot)
    except InsufficientData:
        result["alpha_r1"] = None
    files.write_json(out / "validation.json", result)
    print(files.dumps(result))
    return EXIT_OK


class _Stored:
    """Just enough of a mesh for the error metrics."""

    def __init__(self, samples, weights, lifted):
        self.samples, self.weights, self.lifted = samples, weights, lifted


def cmd_show_config(cfg, args):
    sys.stdout.write(serialize_config(cfg))
    return EXIT_OK


COMMANDS = {
    "oracle-emit": cmd_oracle_emit,
    "mesh": cmd_mesh,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "show-config": cmd_show_config,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = effective_config(args)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
