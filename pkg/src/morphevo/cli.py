"""Command-line entry point: ``morphevo <subcommand> ...``.

Exit status is 0 on success, 2 for configuration or usage errors and 3 when
a run fails at runtime.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import experiment
from .config import ConfigError, ExperimentConfig, load_config
from .report import SummaryError, compare, group_rows, read_summary_csv, report_csv, report_text
from .schedule import MorphologyGrid
from .stats import ADJUSTMENTS
from .storage import FormatError, fitness_grid_rows, read_grid_csv, write_grid_csv, write_svg

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="INI experiment config")
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--runs", type=int, help="override the number of runs")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")


def _lattice(text: str) -> MorphologyGrid:
    try:
        ox, oy, sx, sy, nx, ny = text.split(",")
        return MorphologyGrid((float(ox), float(oy)), (float(sx), float(sy)), (int(nx), int(ny)))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected ox,oy,sx,sy,nx,ny with positive values ({exc})") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="morphevo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="evolve generalist archives")
    _common(p)

    p = sub.add_parser("schedule-compare", help="compare the four training schedules")
    _common(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--adjust", choices=ADJUSTMENTS, default="none")

    p = sub.add_parser("sweep", help="evaluate an archive over a morphology lattice")
    p.add_argument("archive", help="archive.json written by evolve")
    p.add_argument("--lattice", type=_lattice, default=None,
                   help="ox,oy,sx,sy,nx,ny (default: the 18x18 lattice from 0.1)")
    p.add_argument("--n-eval", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="DIR", default=".")
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("stats", help="Kruskal-Wallis and Dunn comparison of run summaries")
    p.add_argument("summaries", nargs="+", help="run-summary CSV files")
    p.add_argument("--by", default="size", help="column that defines the groups")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--adjust", choices=ADJUSTMENTS, default="none")
    p.add_argument("--out", metavar="DIR", default=None)
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("render", help="re-render a fitness-grid CSV as an SVG heatmap")
    p.add_argument("csv")
    p.add_argument("--svg", default=None, help="output path (default: alongside the CSV)")
    p.add_argument("--title", default=None, help="default: the CSV file stem")
    p.add_argument("--quiet", action="store_true")
    return parser


def _config(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config: a config file is required")
    try:
        cfg = load_config(args.config)
    except FileNotFoundError:
        raise ConfigError(f"--config: no such file {args.config}") from None
    over = {}
    if args.seed is not None:
        over["base_seed"] = args.seed
    if args.runs is not None:
        if args.runs < 1:
            raise ConfigError("--runs: must be positive")
        over["runs"] = args.runs
    if args.out is not None:
        over["out"] = args.out
    if args.jobs is not None:
        if args.jobs < 1:
            raise ConfigError("--jobs: must be positive")
        over["jobs"] = args.jobs
    return replace(cfg, **over)


def _say(args):
    if args.quiet:
        return None
    return lambda msg: print(msg, file=sys.stderr)


def cmd_evolve(args) -> int:
    cfg = _config(args)
    experiment.evolve(cfg, _say(args))
    return EXIT_OK


def cmd_schedule_compare(args) -> int:
    cfg = _config(args)
    res = experiment.schedule_compare(cfg, _say(args), args.alpha, args.adjust)
    if not args.quiet:
        print(report_text(res["reports"], args.alpha), end="")
    return EXIT_OK


def cmd_sweep(args) -> int:
    grid = args.lattice or MorphologyGrid((0.1, 0.1), (0.1, 0.1), (18, 18))
    if args.n_eval < 1:
        raise ConfigError("--n-eval: must be positive")
    fg = experiment.sweep_archive(args.archive, grid, args.n_eval, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.archive).stem
    write_grid_csv(fg, out / f"{stem}_sweep.csv")
    write_svg(fitness_grid_rows(fg), out / f"{stem}_sweep.svg", f"{stem}_sweep")
    if not args.quiet:
        print(out / f"{stem}_sweep.csv")
    return EXIT_OK


def cmd_stats(args) -> int:
    rows = []
    for path in args.summaries:
        rows.extend(read_summary_csv(path))
    if rows and args.by not in rows[0]:
        raise ConfigError(f"--by: unknown column {args.by!r}")
    groups = group_rows(rows, args.by)
    if len(groups) < 2:
        raise ConfigError(f"stats needs at least two groups by {args.by!r}, found {len(groups)}")
    reports = compare(groups, args.alpha, args.adjust)
    text = report_text(reports, args.alpha)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "stats.csv").write_text(report_csv(reports))
        (out / "stats.txt").write_text(text)
    if not args.quiet:
        print(text, end="")
    return EXIT_OK


def cmd_render(args) -> int:
    rows = read_grid_csv(args.csv)
    if not rows:
        raise FormatError(f"{args.csv}: no data rows")
    svg = args.svg or str(Path(args.csv).with_suffix(".svg"))
    write_svg(rows, svg, Path(args.csv).stem if args.title is None else args.title)
    if not args.quiet:
        print(svg)
    return EXIT_OK


COMMANDS = {
    "evolve": cmd_evolve,
    "schedule-compare": cmd_schedule_compare,
    "sweep": cmd_sweep,
    "stats": cmd_stats,
    "render": cmd_render,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, SummaryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to one exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
