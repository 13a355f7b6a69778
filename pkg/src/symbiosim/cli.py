"""Command-line front end: ``symbiosim <subcommand> [flags]``.

Every subcommand writes CSV files named ``<subcommand>-<hash>.csv`` into the
output directory and appends one JSON record to ``manifest.jsonl`` there.  The
hash covers the subcommand, the resolved parameters and the seed, so equal
inputs give equal file names and contents.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .core import LatticeConfiguration, ModelParams, Variant

log = logging.getLogger("symbiosim")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
SEED_ENV = "SYMBIOSIM_SEED"


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------- value parsing


def float_list(text: str) -> list[float]:
    """``"0.3,0.4"`` or a range ``"start:stop:step"`` (stop included)."""
    text = str(text).strip()
    if ":" in text:
        a, b, h = (float(v) for v in text.split(":"))
        if h <= 0 or b < a:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        n = int(round((b - a) / h))
        return [round(a + k * h, 12) for k in range(n + 1)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from e


def int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from e


def flag(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


# --------------------------------------------------------------------------- parser

# (flag, dest, type, default, required, help)
_COMMON_MC = [("--trials", "trials", int, None, True, "Monte Carlo trials"),
              ("--seed", "seed", int, None, False, f"base seed (or ${SEED_ENV})"),
              ("--parallelism", "parallelism", int, 1, False, "worker processes")]

SUBCOMMANDS = {
    "survival": [("--lambda", "lam", float_list, None, True, "birth rates (list or a:b:h)"),
                 ("--mu", "mu", float_list, None, True, "mu values"),
                 ("--tmax", "tmax", float, None, True, "horizon"),
                 ("--d", "d", int, 1, False, "dimension"),
                 ("--side", "side", int, None, False, "box side (default from horizon)"),
                 ("--variant", "variant", str, "SCP", False, "SCP, SCPD or SingleTypeContact"),
                 ("--epsilon", "epsilon", float, None, False, "stirring scale for SCPD"),
                 ("--threshold", "threshold", int, None, False, "also require this many AB"),
                 ("--log-events", "log_events", flag, False, False,
                  "write the event log of trial 0 at each grid point")] + _COMMON_MC,
    "bisect": [("--mu", "mu", float, None, True, "mu"),
               ("--tmax", "tmax", float, None, True, "horizon"),
               ("--tol", "tol", float, 0.05, False, "bracket width"),
               ("--lo", "lo", float, 0.0, False, "lower bracket"),
               ("--hi", "hi", float, 6.0, False, "upper bracket"),
               ("--target", "target", float, 0.05, False, "survival target"),
               ("--d", "d", int, 1, False, "dimension"),
               ("--side", "side", int, None, False, "box side")] + _COMMON_MC,
    "meanfield": [("--mu", "mu", float_list, None, True, "mu values"),
                  ("--lambda-grid", "lambda_grid", float_list, None, True, "birth-rate grid")],
    "sbvm": [("--lambda", "lam", float_list, None, True, "birth rates"),
             ("--mu", "mu", float_list, None, True, "mu values"),
             ("--tend", "tend", float, 0.0, False, "Monte Carlo run length (0: closed form only)"),
             ("--zero-crossing", "zero_crossing", flag, False, False,
              "bisect the simulated speed sign change per mu"),
             ("--seed", "seed", int, None, False, f"base seed (or ${SEED_ENV})")],
    "bounds": [("--mu", "mu", float_list, "0.0001,0.000625,0.01,0.05,0.1,0.5,1", False, "mu grid"),
               ("--lambda-c1", "lambda_c1", float, None, False, "single-type critical value for both dimensions"),
               ("--block-lambda", "block_lambda", float, 0.5, False, "block MC birth rate"),
               ("--block-mu", "block_mu", float, 1e-4, False, "block MC mu"),
               ("--block-c", "block_c", float, 9.0, False, "block time constant"),
               ("--block-trials", "block_trials", int, 0, False, "block MC trials (0: skip)"),
               ("--perc-p", "perc_p", float_list, "", False, "percolation p values"),
               ("--perc-rows", "perc_rows", int, 200, False, "percolation rows"),
               ("--perc-width", "perc_width", int, 400, False, "percolation width"),
               ("--perc-trials", "perc_trials", int, 200, False, "percolation trials"),
               ("--seed", "seed", int, None, False, f"base seed (or ${SEED_ENV})"),
               ("--parallelism", "parallelism", int, 1, False, "worker processes")],
    "pde": [("--lambda", "lam", float_list, None, True, "birth rates (> 1)"),
            ("--mu", "mu", float, 0.5, False, "mu"),
            ("--dx", "dx", float, 0.1, False, "grid spacing"),
            ("--t0", "t0", float, 50.0, False, "fit window start"),
            ("--t1", "t1", float, 100.0, False, "fit window end")],
    "decay": [("--lambda", "lam", float_list, None, True, "birth rates (subcritical)"),
              ("--tgrid", "tgrid", float_list, "0:6:0.25", False, "sample times"),
              ("--d", "d", int, 1, False, "dimension")] + _COMMON_MC,
    "slab": [("--log", "log", str, None, True, "event log written by survival --log-events"),
             ("--lo", "lo", int_list, None, True, "lower box corner"),
             ("--hi", "hi", int_list, None, True, "upper box corner"),
             ("--t0", "t0", float, None, True, "start time"),
             ("--t1", "t1", float, None, True, "end time"),
             ("--species", "species", str, "AB", False, "A, B or AB")],
}
MC_SUBCOMMANDS = {"survival", "bisect", "decay"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="symbiosim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, specs in SUBCOMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key=value file; flags override it")
        sp.add_argument("--out", default="runs", help="output directory")
        for fl, dest, typ, _default, _req, hlp in specs:
            sp.add_argument(fl, dest=dest, type=typ, default=None, help=hlp)
    pl = sub.add_parser("plot")
    pl.add_argument("csv")
    pl.add_argument("--x")
    pl.add_argument("--y")
    pl.add_argument("--group")
    pl.add_argument("--format", choices=("gnuplot", "svg"), default="gnuplot")
    pl.add_argument("--output", help="write here instead of stdout")
    return p


def resolve(command: str, ns: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags; validate keys and required values."""
    specs = {dest: (typ, default, req, fl) for fl, dest, typ, default, req, _ in SUBCOMMANDS[command]}
    alias = {fl.lstrip("-").replace("-", "_"): dest for fl, dest, *_ in SUBCOMMANDS[command]}
    file_vals = {alias.get(k, k): v for k, v in (read_config(ns.config) if ns.config else {}).items()}
    unknown = sorted(k for k in file_vals if k not in specs and k not in ("out",))
    if unknown:
        raise UsageError(f"unknown config key(s) for {command}: {', '.join(unknown)}")
    out = {}
    for dest, (typ, default, _req, _fl) in specs.items():
        v = getattr(ns, dest)
        if v is None and dest in file_vals:
            try:
                v = typ(file_vals[dest])
            except (ValueError, argparse.ArgumentTypeError) as e:
                raise UsageError(f"config key {dest}: {e}") from e
        if v is None and default is not None:
            v = typ(default) if isinstance(default, str) else default
        out[dest] = v
    if "seed" in out and out["seed"] is None and os.environ.get(SEED_ENV):
        out["seed"] = int(os.environ[SEED_ENV])
    missing = [fl for dest, (_t, _d, req, fl) in specs.items() if req and out[dest] is None]
    needs_seed = command in MC_SUBCOMMANDS or (command == "sbvm" and (out.get("tend") or 0) > 0) or \
        (command == "bounds" and (out.get("block_trials") or out.get("perc_p")))
    if needs_seed and out.get("seed") is None:
        missing.append(f"--seed (or ${SEED_ENV})")
    if missing:
        raise UsageError(f"missing required parameter(s): {', '.join(missing)}")
    out["out"] = ns.out if ns.out != "runs" or "out" not in file_vals else file_vals["out"]
    return out


# --------------------------------------------------------------------------- outputs


class RunContext:
    def __init__(self, command: str, params: dict):
        self.command = command
        self.params = {k: v for k, v in params.items() if k != "out"}
        self.outdir = Path(params["out"])
        self.outdir.mkdir(parents=True, exist_ok=True)
        canon = json.dumps({"command": command, "params": self.params, "version": __version__},
                           sort_keys=True, default=str)
        self.hash = hashlib.sha256(canon.encode()).hexdigest()[:12]
        self.outputs: list[str] = []
        self.start = time.time()

    def path(self, suffix: str = "", ext: str = "csv") -> Path:
        tag = f"-{suffix}" if suffix else ""
        return self.outdir / f"{self.command}{tag}-{self.hash}.{ext}"

    def write_csv(self, columns, rows, suffix: str = "") -> Path:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        p = self.path(suffix)
        p.write_text(buf.getvalue())
        self.outputs.append(str(p))
        return p

    def register(self, p: Path) -> None:
        self.outputs.append(str(p))

    def finish(self) -> dict:
        rec = {"version": __version__, "subcommand": self.command, "params": self.params,
               "seed": self.params.get("seed"), "hash": self.hash, "start": self.start,
               "end": time.time(), "outputs": self.outputs}
        with open(self.outdir / "manifest.jsonl", "a") as fh:
            fh.write(json.dumps(rec, default=str) + "\n")
        return rec


# --------------------------------------------------------------------------- subcommands


def cmd_survival(ctx: RunContext, p: dict) -> None:
    from .engine import SurvivalStats, default_side, estimate_survival, simulate, write_event_log
    from .rng import GraphicalRandomSource

    rows = []
    for mu in p["mu"]:
        for lam in p["lam"]:
            side = p["side"] or default_side(p["tmax"], lam, p["d"])
            variant = Variant(p["variant"])
            params = ModelParams(lam=lam, mu=mu, variant=variant, epsilon=p["epsilon"], dim=p["d"],
                                 side=side)
            st = estimate_survival(params, p["tmax"], p["trials"], p["seed"], p["parallelism"],
                                   p["threshold"])
            rows.append(st.row())
            if p["log_events"]:
                from .core import SiteState

                state = SiteState.A if variant is Variant.SINGLE else SiteState.AB
                tr = simulate(params, LatticeConfiguration.single(params, state),
                              GraphicalRandomSource(p["seed"]), p["tmax"])
                lp = ctx.path(f"events-l{lam!r}-m{mu!r}", "jsonl")
                write_event_log(lp, tr)
                ctx.register(lp)
    ctx.write_csv(SurvivalStats.CSV_COLUMNS, rows)


def cmd_bisect(ctx: RunContext, p: dict) -> None:
    from .engine import SurvivalStats, bisect_lambda_c

    res = bisect_lambda_c(p["mu"], p["tmax"], p["trials"], p["tol"], p["seed"], lo=p["lo"],
                          hi=p["hi"], target=p["target"], dim=p["d"], side=p["side"],
                          parallelism=p["parallelism"])
    ctx.write_csv(SurvivalStats.CSV_COLUMNS, [s.row() for s in res.curve], "curve")
    ctx.write_csv(("mu", "d", "lo", "hi", "width", "target", "t_max", "trials", "seed"),
                  [{"mu": repr(p["mu"]), "d": p["d"], "lo": repr(res.lo), "hi": repr(res.hi),
                    "width": repr(res.width), "target": repr(p["target"]),
                    "t_max": repr(p["tmax"]), "trials": p["trials"], "seed": p["seed"]}])
    print(f"lambda_c proxy in [{res.lo:.4f}, {res.hi:.4f}] (finite box and horizon)")


def cmd_meanfield(ctx: RunContext, p: dict) -> None:
    from .meanfield import MF_CSV_COLUMNS, figure1_data, locate_jump, mf_csv_row

    rows = figure1_data(p["mu"], p["lambda_grid"])
    ctx.write_csv(MF_CSV_COLUMNS, [mf_csv_row(r) for r in rows])
    jumps = [locate_jump(mu, p["lambda_grid"]) for mu in p["mu"]]
    ctx.write_csv(("mu", "onset_lambda", "jump", "discontinuous"),
                  [{"mu": repr(j.mu), "onset_lambda": repr(float(j.lam)), "jump": repr(float(j.size)),
                    "discontinuous": int(j.discontinuous)} for j in jumps], "onsets")


def cmd_sbvm(ctx: RunContext, p: dict) -> None:
    from .rng import GraphicalRandomSource
    from .sbvm import (SBVM_CSV_COLUMNS, max_front_critical, mc_zero_crossing, sbvm_critical,
                       sbvm_row, simulate_front)

    src = GraphicalRandomSource(p["seed"]) if p["seed"] is not None else None
    rows = []
    for mu in p["mu"]:
        for lam in p["lam"]:
            run = simulate_front(lam, mu, p["tend"], src) if p["tend"] > 0 else None
            rows.append(sbvm_row(lam, mu, run))
    ctx.write_csv(SBVM_CSV_COLUMNS, rows)
    if p["zero_crossing"]:
        if p["tend"] <= 0:
            raise UsageError("--zero-crossing needs --tend > 0")
        zc = []
        for mu in p["mu"]:
            lo, hi = mc_zero_crossing(mu, p["tend"], src)
            zc.append({"mu": repr(mu), "formula": repr(sbvm_critical(mu)),
                       "max_front": repr(max_front_critical(mu)), "mc_lo": repr(lo), "mc_hi": repr(hi)})
        ctx.write_csv(("mu", "formula", "max_front", "mc_lo", "mc_hi"), zc, "zero")


def cmd_bounds(ctx: RunContext, p: dict) -> None:
    from . import bounds
    from .rng import GraphicalRandomSource

    lc = p["lambda_c1"] if p["lambda_c1"] is not None else bounds.LAMBDA_C1_BY_DIM
    ctx.write_csv(bounds.REPORT_COLUMNS, bounds.bounds_report(p["mu"], (1, 2), lc))
    bb = bounds.block_budget(9, bounds.B0_PRINTED)
    ctx.write_csv(("c", "b", "failure_bound", "satisfied"),
                  [{"c": repr(bb.c), "b": repr(bb.b), "failure_bound": repr(bb.failure_bound),
                    "satisfied": int(bb.satisfied)}], "budget")
    if p["block_trials"]:
        est, (lo, hi), k = bounds.block_event_mc(p["block_lambda"], p["block_mu"], p["block_c"],
                                                 p["block_trials"], p["seed"], p["parallelism"])
        ctx.write_csv(("lambda", "mu", "c", "trials", "successes", "estimate", "ci_lo", "ci_hi"),
                      [{"lambda": repr(p["block_lambda"]), "mu": repr(p["block_mu"]),
                        "c": repr(p["block_c"]), "trials": p["block_trials"], "successes": k,
                        "estimate": repr(est), "ci_lo": repr(lo), "ci_hi": repr(hi)}], "block")
    if p["perc_p"]:
        src = GraphicalRandomSource(p["seed"])
        rows = []
        for prob in p["perc_p"]:
            c = bounds.oriented_percolation(prob, p["perc_rows"], p["perc_width"], p["perc_trials"], src)
            rows += [{"p": repr(prob), "row": n, "survival": repr(float(s))}
                     for n, s in enumerate(c.survival)]
        ctx.write_csv(("p", "row", "survival"), rows, "percolation")


def cmd_pde(ctx: RunContext, p: dict) -> None:
    from .pde import SPEED_COLUMNS, front_speed, speed_row

    ctx.write_csv(SPEED_COLUMNS, [speed_row(front_speed(lam, p["mu"], dx=p["dx"],
                                                        t_window=(p["t0"], p["t1"])))
                                  for lam in p["lam"]])


def cmd_decay(ctx: RunContext, p: dict) -> None:
    from .engine import kappa_fit

    rows = []
    for lam in p["lam"]:
        f = kappa_fit(lam, p["tgrid"], p["trials"], p["seed"], dim=p["d"],
                      parallelism=p["parallelism"])
        rows.append({"lambda": repr(lam), "kappa": repr(f.kappa), "slope": repr(f.slope),
                     "log_c": repr(f.log_c), "residual_rms": repr(f.residual_rms),
                     "trials": p["trials"], "seed": p["seed"]})
    ctx.write_csv(("lambda", "kappa", "slope", "log_c", "residual_rms", "trials", "seed"), rows)


def cmd_slab(ctx: RunContext, p: dict) -> None:
    from .engine import read_event_log
    from .slab import SpaceTimeRegion, slab_count

    tr = read_event_log(p["log"])
    region = SpaceTimeRegion(tuple(p["lo"]), tuple(p["hi"]), p["t0"], p["t1"])
    n = slab_count(tr, region, p["species"])
    ctx.write_csv(("log", "lo", "hi", "t0", "t1", "species", "count"),
                  [{"log": p["log"], "lo": ",".join(map(str, p["lo"])), "hi": ",".join(map(str, p["hi"])),
                    "t0": repr(p["t0"]), "t1": repr(p["t1"]), "species": p["species"], "count": n}])


COMMANDS = {"survival": cmd_survival, "bisect": cmd_bisect, "meanfield": cmd_meanfield,
            "sbvm": cmd_sbvm, "bounds": cmd_bounds, "pde": cmd_pde, "decay": cmd_decay,
            "slab": cmd_slab}


def _numeric_errors():
    from .engine import DiagnosticError
    from .meanfield import StepSizeError
    from .pde import RangeViolation, WindowError
    from .sbvm import NonSummableError

    return (DiagnosticError, StepSizeError, RangeViolation, WindowError, NonSummableError,
            FloatingPointError)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if ns.command == "plot":
        from .plotting import ColumnError, emit_plot_data

        try:
            text = emit_plot_data(ns.csv, ns.x, ns.y, ns.group, ns.format)
        except (ColumnError, FileNotFoundError) as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
        if ns.output:
            Path(ns.output).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    try:
        params = resolve(ns.command, ns)
        ctx = RunContext(ns.command, params)
        COMMANDS[ns.command](ctx, params)
        rec = ctx.finish()
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except _numeric_errors() as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, FileNotFoundError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    for o in rec["outputs"]:
        print(o)
    return EXIT_OK


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
