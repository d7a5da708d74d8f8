"""Command-line interface: ``fliprot <subcommand> ...``.

Scientific outcomes (periodic or capped) always exit 0; usage errors exit 2
and I/O or table errors exit 1.  Every figure is rendered from the CSV (and
JSONL) written first, so ``plot`` can regenerate it later.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import stats
from .admissibility import (
    ClassTable,
    InvalidTable,
    admissible_probability,
    canonicalize,
    faces_in_box,
    is_admissible_region,
    orbits,
    right_count,
)
from .engine import simulate
from .lattice import decode_keys
from .medium import LEFT, RIGHT, Medium, MediumSpec, Snapshot
from .structures import REFLECTOR_CONFIRMED, analyze
from .svg import series_svg, trajectory_svg

NEEDS_P = ("iid", "family", "admissible")
MODELS = ("iid", "family", "admissible", "all-left", "all-right", "explicit")


class CliError(Exception):
    """Operational failure; reported on stderr with exit status 1."""


class _Usage(Exception):
    pass


def default_cap() -> int:
    return int(os.environ.get("FLIPROT_STEP_CAP", 100_000_000))


# -- argument parsing -------------------------------------------------------------

def _probability(text: str) -> float:
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= p <= 1.0:
        raise argparse.ArgumentTypeError(f"p must lie in [0, 1], got {p}")
    return p


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _grid(text: str) -> list[float]:
    vals = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        p = _probability(part)
        if not 0.0 < p < 1.0:
            raise argparse.ArgumentTypeError(f"grid values must lie in (0, 1), got {p}")
        vals.append(p)
    return vals


def _medium_flags(ap: argparse.ArgumentParser, explicit: bool = True) -> None:
    g = ap.add_argument_group("medium")
    g.add_argument("--model", choices=MODELS if explicit else MODELS[:-1], default="iid")
    g.add_argument("--p", type=_probability, help="right-rotator probability")
    g.add_argument("--seed", type=int, default=0, help="medium (or master) seed")
    g.add_argument("--color-class", type=int, default=0, choices=(0, 1, 2),
                   help="shaded face colour for the admissible model")
    if explicit:
        g.add_argument("--medium-file", help="snapshot file for --model explicit")


def _table_flags(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--table", help="class table file (default: built-in)")
    ap.add_argument("--table-name", default="adjacent", choices=("adjacent", "meta"),
                    help="built-in table used when --table is absent")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fliprot", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="one trajectory")
    _medium_flags(r)
    r.add_argument("--steps", type=_positive, default=None, help="step cap")
    r.add_argument("--events", help="write structure events (JSON lines)")
    r.add_argument("--trajectory", help="write positions as CSV t,a,b,sub,x,y")
    r.add_argument("--csv", help="write displacement series t,disp_sq")
    r.add_argument("--svg", help="write trajectory picture")

    e = sub.add_parser("ensemble", help="periods (and optionally MSD) over realizations")
    _medium_flags(e, explicit=False)
    e.add_argument("--realizations", type=_positive, default=200)
    e.add_argument("--steps", type=_positive, default=None, help="step cap per run")
    e.add_argument("--threads", type=_positive, default=None)
    e.add_argument("--structures", action="store_true",
                   help="also count reflectors and annihilations (slow)")
    e.add_argument("--csv", help="per-run periods CSV")
    e.add_argument("--horizon", type=_positive, help="compute MSD up to this time")
    e.add_argument("--record-every", type=_positive, default=10)
    e.add_argument("--msd-csv", help="MSD CSV (needs --horizon)")
    e.add_argument("--svg", help="MSD chart (needs --horizon)")

    s = sub.add_parser("sweep", help="average period over a grid of p")
    s.add_argument("--model", choices=("iid", "family", "admissible"), default="iid")
    s.add_argument("--grid", type=_grid, required=True, help="comma-separated p values")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--color-class", type=int, default=0, choices=(0, 1, 2))
    s.add_argument("--realizations", type=_positive, default=200)
    s.add_argument("--steps", type=_positive, default=None)
    s.add_argument("--threads", type=_positive, default=None)
    s.add_argument("--csv", help="t_av CSV")
    s.add_argument("--svg", help="chart of mean and median period against p")

    c = sub.add_parser("classify-hex", help="the 13 hexagon classes")
    _table_flags(c)
    c.add_argument("--enumerate", action="store_true", help="list all 64 configurations")

    a = sub.add_parser("check-admissible", help="classify the faces around the origin")
    _medium_flags(a)
    _table_flags(a)
    a.add_argument("--radius", type=_positive, default=10, help="faces with |i|,|j| <= radius")

    pl = sub.add_parser("plot", help="SVG from a CSV written earlier")
    pl.add_argument("--trajectory", help="trajectory CSV from `run`")
    pl.add_argument("--events", help="events JSONL from `run`")
    pl.add_argument("--csv", help="any series CSV (first column is x)")
    pl.add_argument("--columns", help="comma-separated y columns")
    pl.add_argument("--log", action="store_true", help="log10 both axes")
    pl.add_argument("--svg", required=True)
    return ap


def _check_p(ap: argparse.ArgumentParser, args) -> None:
    if args.model in NEEDS_P and args.p is None:
        ap.error(f"--p is required for --model {args.model}")
    if args.model not in NEEDS_P and args.p is not None:
        ap.error(f"--p is not accepted for --model {args.model}")
    if getattr(args, "medium_file", None) and args.model != "explicit":
        ap.error("--medium-file only applies to --model explicit")
    if args.model == "explicit" and not getattr(args, "medium_file", None):
        ap.error("--model explicit needs --medium-file")


def medium_spec(args) -> MediumSpec:
    if args.model == "iid":
        return MediumSpec.iid(args.p, args.seed)
    if args.model == "family":
        return MediumSpec.example5(args.p, args.seed)
    if args.model == "admissible":
        return MediumSpec.admissible(args.p, args.seed, args.color_class)
    if args.model == "all-left":
        return MediumSpec.homogeneous(LEFT)
    if args.model == "all-right":
        return MediumSpec.homogeneous(RIGHT)
    snap = Snapshot.loads(_read(args.medium_file))
    return MediumSpec.explicit(snap.table, seed=args.seed)


def _table(args) -> ClassTable:
    if args.table:
        try:
            return ClassTable.loads(_read(args.table), name=Path(args.table).stem)
        except InvalidTable as exc:
            raise CliError(f"{args.table}: {exc}") from None
    return ClassTable.builtin(args.table_name)


# -- file helpers -----------------------------------------------------------------

def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}") from None


def trajectory_csv(keys: np.ndarray) -> str:
    a, b, sub = decode_keys(np.asarray(keys, dtype=np.int64))
    x = 1.5 * (a + b) + sub
    y = (np.sqrt(3.0) / 2.0) * (a - b)
    buf = io.StringIO()
    buf.write("t,a,b,sub,x,y\n")
    for t in range(keys.size):
        buf.write(f"{t},{a[t]},{b[t]},{'AB'[sub[t]]},{x[t]:.6f},{y[t]:.6f}\n")
    return buf.getvalue()


def displacement_csv(keys: np.ndarray) -> str:
    a, b, sub = decode_keys(np.asarray(keys, dtype=np.int64))
    s = 3 * (a + b) + 2 * sub
    d = a - b
    sq4 = s * s + 3 * d * d
    buf = io.StringIO()
    buf.write("t,disp_sq\n")
    for t in range(keys.size):
        buf.write(f"{t},{int(sq4[t]) / 4!r}\n")
    return buf.getvalue()


# -- subcommands ------------------------------------------------------------------------

def cmd_run(args) -> int:
    spec = medium_spec(args)
    cap = args.steps or default_cap()
    need_log = bool(args.events or args.trajectory or args.csv or args.svg)
    res = simulate(spec, cap, log=need_log)
    if res.periodic:
        print(f"periodic period={res.period}")
    else:
        print("cap-reached")
    print(f"steps={res.steps} origin_returns={len(res.origin_returns)} "
          f"distinct_sites={res.distinct_sites}")
    events_text = None
    if args.events or args.svg:
        an = analyze(res.log)
        an.finish(res.kind, res.period)
        buf = io.StringIO()
        an.write_jsonl(buf)
        events_text = buf.getvalue()
        print(f"reflectors={an.count(REFLECTOR_CONFIRMED)} max_live={an.max_live}")
        if args.events:
            _write(args.events, events_text)
    traj_text = None
    if args.trajectory or args.svg:
        traj_text = trajectory_csv(res.log)
        if args.trajectory:
            _write(args.trajectory, traj_text)
    if args.csv:
        _write(args.csv, displacement_csv(res.log))
    if args.svg:
        _write(args.svg, trajectory_svg(traj_text, events_text))
    return 0


def _ensemble_spec(args, p) -> stats.EnsembleSpec:
    return stats.EnsembleSpec(
        model=args.model, p=p, realizations=args.realizations,
        step_cap=args.steps or min(default_cap(), 10_000_000), master_seed=args.seed,
        msd_horizon=getattr(args, "horizon", None) or 3000,
        record_every=getattr(args, "record_every", 10), color_class=args.color_class,
    )


def cmd_ensemble(args) -> int:
    spec = _ensemble_spec(args, args.p)
    runs = stats.run_ensemble(spec, args.threads, structures=args.structures)
    try:
        s = stats.period_summary(runs, spec.step_cap)
        print(f"meanPeriod={s['meanPeriod']!r} medianPeriod={s['medianPeriod']!r} "
              f"cappedFraction={s['cappedFraction']!r} n_periodic={s['n_periodic']}")
    except stats.AllRunsCapped as exc:
        print(f"all-capped: {exc}")
    if args.csv:
        buf = io.StringIO()
        stats.write_periods_csv(buf, runs, args.p)
        _write(args.csv, buf.getvalue())
    if args.horizon:
        series = stats.msd_series(spec, args.threads)
        buf = io.StringIO()
        stats.write_msd_csv(buf, series)
        text = buf.getvalue()
        print(f"msd t={series.times[-1]} mean_sq_disp={series.values[-1]!r}")
        if args.msd_csv:
            _write(args.msd_csv, text)
        if args.svg:
            _write(args.svg, series_svg(text))
    return 0


def cmd_sweep(args) -> int:
    spec = _ensemble_spec(args, args.grid[0])
    rows = stats.sweep(spec, args.grid, args.threads)
    buf = io.StringIO()
    stats.write_tav_csv(buf, rows)
    text = buf.getvalue()
    sys.stdout.write(text)
    if args.csv:
        _write(args.csv, text)
    if args.svg:
        _write(args.svg, series_svg(text, "p", ["mean_period", "median_period"]))
    return 0


def cmd_classify(args) -> int:
    table = _table(args)
    print(f"# table {table.name}")
    print("class   size rights admissible")
    n_adm = 0
    for rep, members in orbits().items():
        ok = rep in table.admissible
        n_adm += ok
        print(f"{rep} {len(members):4d} {right_count(rep):6d} "
              f"{'admissible' if ok else 'nonadmissible'}")
    n_cfg = sum(len(m) for r, m in orbits().items() if r in table.admissible)
    print(f"classes={len(orbits())} admissible_classes={n_adm} "
          f"admissible_configs={n_cfg}/64 P(1/2)={admissible_probability(0.5, table)!r}")
    if args.enumerate:
        for rep, members in orbits().items():
            for m in members:
                print(f"{m} -> {canonicalize(m)}")
        print(f"total={sum(len(m) for m in orbits().values())}")
    return 0


def cmd_check(args) -> int:
    table = _table(args)
    medium = Medium(medium_spec(args))
    res = is_admissible_region(medium, faces_in_box(args.radius), table)
    if res:
        print(f"admissible faces={(2 * args.radius + 1) ** 2}")
    else:
        f = res.offending
        print(f"non-admissible face=F({f.i},{f.j}) config={res.config}")
    return 0


def cmd_plot(args) -> int:
    if bool(args.trajectory) == bool(args.csv):
        raise _Usage("plot needs exactly one of --trajectory or --csv")
    try:
        if args.trajectory:
            events = _read(args.events) if args.events else None
            svg = trajectory_svg(_read(args.trajectory), events)
        else:
            cols = [c for c in args.columns.split(",") if c] if args.columns else None
            svg = series_svg(_read(args.csv), y_columns=cols, log=args.log)
    except (ValueError, KeyError, csv.Error) as exc:
        raise CliError(f"cannot plot: {exc}") from None
    _write(args.svg, svg)
    return 0


COMMANDS = {
    "run": cmd_run,
    "ensemble": cmd_ensemble,
    "sweep": cmd_sweep,
    "classify-hex": cmd_classify,
    "check-admissible": cmd_check,
    "plot": cmd_plot,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command in ("run", "ensemble", "check-admissible"):
        _check_p(ap, args)
    if args.command == "sweep" and not args.grid:
        ap.error("--grid is empty")
    if args.command == "ensemble" and (args.msd_csv or args.svg) and not args.horizon:
        ap.error("--msd-csv and --svg need --horizon")
    try:
        return COMMANDS[args.command](args)
    except _Usage as exc:
        ap.error(str(exc))
    except CliError as exc:
        print(f"fliprot: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        # malformed input files (snapshots) surface here
        print(f"fliprot: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
