"""Seeded multi-run experiments: evolve, evaluate, checkpoint and compare.

Each run ``r`` lives in ``<out>/run_<r>/`` and owns its files, so runs can go
to a process pool without sharing anything mutable. Seeds come from
``derive_seed(base_seed, purpose, r)`` with purposes ``run``, ``schedule`` and
``eval``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

from .config import ConfigError, ExperimentConfig
from .envs import Environment, make_env
from .generalist import GeneralistRun, RunBudget
from .metrics import FitnessGrid, TestSets, build_test_sets, summarize_grid, sweep
from .net import Topology
from .report import compare, group_rows, report_csv, report_text, write_summary_csv
from .schedule import MorphologyGrid, Schedule, make_grid
from .seeding import derive_seed
from .storage import (CHECKPOINT_VERSION, TraceWriter, archive_document, fitness_grid_rows,
                      load_archive, read_json, write_grid_csv, write_json, write_svg)

CHECKPOINT_FORMAT = "morphevo-checkpoint"
SCHEDULE_VARIANTS = (("incremental", 1), ("random", 1), ("random_walk", 1), ("random_walk", 5))


def build_env(cfg: ExperimentConfig) -> Environment:
    try:
        return make_env(cfg.env, **cfg.env_params)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"env: {exc}") from None


def build_topology(cfg: ExperimentConfig, env: Environment) -> Topology:
    return Topology(env.spec.observation_dim, cfg.hidden, env.spec.action_dim)


def training_grid(cfg: ExperimentConfig, env: Environment) -> MorphologyGrid:
    return make_grid((cfg.origin_x, cfg.origin_y), (cfg.step_x, cfg.step_y), cfg.size,
                     env.spec.default_morphology)


def global_grid(cfg: ExperimentConfig) -> MorphologyGrid:
    return MorphologyGrid((cfg.global_origin_x, cfg.global_origin_y),
                          (cfg.global_step_x, cfg.global_step_y), (cfg.global_nx, cfg.global_ny))


def test_sets(cfg: ExperimentConfig, env: Environment) -> TestSets:
    try:
        return build_test_sets(training_grid(cfg, env), global_grid(cfg),
                               env.spec.default_morphology, cfg.local_distance)
    except ValueError as exc:
        raise ConfigError(f"metrics: {exc}") from None


def budget(cfg: ExperimentConfig, env: Environment) -> RunBudget:
    target = cfg.satisfaction_target
    if target is None:
        target = env.spec.satisfaction_target
    return RunBudget(cfg.max_generations, cfg.stagnation_window, target, cfg.threshold_multiplier)


def run_dir(cfg: ExperimentConfig, r: int) -> Path:
    return Path(cfg.out) / f"run_{r:03d}"


def new_run(cfg: ExperimentConfig, r: int, trace_sink=None) -> GeneralistRun:
    env = build_env(cfg)
    grid = training_grid(cfg, env)
    sched = Schedule(cfg.schedule, grid, derive_seed(cfg.base_seed, "schedule", r), cfg.walk_step)
    return GeneralistRun(env, build_topology(cfg, env), grid, sched, budget(cfg, env),
                         cfg.sigma0, derive_seed(cfg.base_seed, "run", r), cfg.init_range,
                         trace_sink)


def _checkpoint_doc(cfg: ExperimentConfig, r: int, run: GeneralistRun) -> dict:
    return {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION,
            "config_hash": cfg.hash(), "run": r, "state": run.state_dict()}


def _resume(cfg: ExperimentConfig, r: int, path: Path, trace_path: Path) -> GeneralistRun:
    doc = read_json(path)
    if doc.get("format") != CHECKPOINT_FORMAT or doc.get("version") != CHECKPOINT_VERSION:
        raise RuntimeError(f"{path}: unsupported checkpoint")
    if doc.get("config_hash") != cfg.hash() or doc.get("run") != r:
        raise RuntimeError(f"{path}: checkpoint belongs to a different configuration; "
                           "use a fresh output directory")
    state = doc["state"]
    sink = TraceWriter(trace_path, state["trace"])
    return GeneralistRun.from_state(build_env(cfg), state, sink)


def evolve_run(cfg: ExperimentConfig, r: int) -> tuple[GeneralistRun, dict]:
    """Evolve run ``r`` to completion (resuming from a checkpoint if present).

    Writes ``archive.json`` and ``trace.jsonl``; the checkpoint is removed
    once the archive is safely on disk.
    """
    d = run_dir(cfg, r)
    d.mkdir(parents=True, exist_ok=True)
    ckpt, trace_path = d / "checkpoint.json", d / "trace.jsonl"
    if ckpt.exists():
        run = _resume(cfg, r, ckpt, trace_path)
    else:
        run = new_run(cfg, r, TraceWriter(trace_path))
    run.run(lambda rr: write_json(ckpt, _checkpoint_doc(cfg, r, rr)), cfg.checkpoint_every)
    meta = {
        "index": r, "base_seed": cfg.base_seed, "seed": run.run_seed,
        "schedule": cfg.schedule, "walk_step": cfg.walk_step, "size": cfg.size,
        "sigma0": cfg.sigma0, "generations": run.generations,
        "branch_generations": [e.generations_used for e in run.archive.entries],
        "budget": asdict(run.budget),
    }
    doc = archive_document(run.archive, cfg.env, cfg.env_params, run.env, cfg.hash(), meta)
    write_json(d / "archive.json", doc)
    if ckpt.exists():
        ckpt.unlink()
    return run, doc


def evaluate_archive(cfg: ExperimentConfig, r: int, archive, env: Environment) -> tuple[FitnessGrid, dict]:
    sets = test_sets(cfg, env)
    fg = sweep(env, archive, sets.global_grid, cfg.n_eval, derive_seed(cfg.base_seed, "eval", r))
    return fg, summarize_grid(fg, sets, env.spec.sufficiency_threshold)


def run_one(cfg: ExperimentConfig, r: int) -> dict:
    """Evolve and evaluate one run; returns its run-summary row."""
    run, doc = evolve_run(cfg, r)
    fg, metrics = evaluate_archive(cfg, r, run.archive, run.env)
    d = run_dir(cfg, r)
    write_grid_csv(fg, d / "global.csv")
    write_svg(fitness_grid_rows(fg), d / "global.svg", "global")
    return {
        "run": r, "seed": run.run_seed, "size": cfg.size, "schedule": cfg.schedule,
        "walk_step": cfg.walk_step, "entries": len(run.archive.entries),
        "generations": run.generations, **metrics,
    }


def _run_one_star(args):
    return run_one(*args)


def evolve(cfg: ExperimentConfig, log=None) -> list[dict]:
    """All ``cfg.runs`` runs, in a worker pool when ``cfg.jobs > 1``."""
    # fail fast on bad geometry before spawning anything
    test_sets(cfg, build_env(cfg))
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, r) for r in range(cfg.runs)]
    rows = []
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, cfg.runs)) as ex:
            for row in ex.map(_run_one_star, jobs):
                rows.append(row)
                if log:
                    log(_row_line(row))
    else:
        for job in jobs:
            row = run_one(*job)
            rows.append(row)
            if log:
                log(_row_line(row))
    write_summary_csv(rows, Path(cfg.out) / "summary.csv")
    return rows


def _row_line(row: dict) -> str:
    return (f"run {row['run']:3d}: entries={row['entries']} gens={row['generations']} "
            f"default={row['default_fitness']:.1f} local={row['local_mean']:.1f} "
            f"global={row['global_mean']:.1f} sufficient={row['sufficiency']}")


def variant_label(kind: str, walk_step: int) -> str:
    return f"random_walk_{walk_step}" if kind == "random_walk" else kind


def schedule_compare(cfg: ExperimentConfig, log=None, alpha: float = 0.05,
                     method: str = "none") -> dict:
    """Run the four schedules with identical seeds and grids, then compare them."""
    root = Path(cfg.out)
    env = build_env(cfg)
    grids = []
    rows: list[dict] = []
    for kind, ws in SCHEDULE_VARIANTS:
        label = variant_label(kind, ws)
        sub = replace(cfg, schedule=kind, walk_step=ws, out=str(root / label))
        grids.append(training_grid(sub, env))
        if log:
            log(f"-- {label}")
        rows.extend(evolve(sub, log))
    if any(g != grids[0] for g in grids):
        raise RuntimeError("schedule variants disagree on the training grid")
    groups = group_rows(rows, "schedule")
    reports = compare(groups, alpha, method)
    write_summary_csv(rows, root / "summary.csv")
    (root / "stats.csv").write_text(report_csv(reports))
    (root / "stats.txt").write_text(report_text(reports, alpha))
    return {"rows": rows, "groups": groups, "reports": reports}


def sweep_archive(path, grid: MorphologyGrid, n_eval: int = 3, seed: int = 0) -> FitnessGrid:
    """Sweep a saved archive over ``grid``; the lattice must be valid for its environment."""
    archive, env, _ = load_archive(path)
    try:
        return sweep(env, archive, grid, n_eval, seed)
    except ValueError as exc:
        raise ValueError(f"lattice does not fit the archive's environment: {exc}") from None
