import json
import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats as sps

from morphevo import experiment
from morphevo.cli import main
from morphevo.config import ConfigError, ExperimentConfig, parse_config
from morphevo.metrics import sweep
from morphevo.report import read_summary_csv, write_summary_csv
from morphevo.storage import FormatError, heatmap_svg, load_archive, read_grid_csv, read_trace

TINY = """\
[experiment]
env = switch
runs = 2
checkpoint_every = 10
[net]
hidden = 4
[training]
size = 16
[generalist]
max_generations = 40
[metrics]
n_eval = 1
global_nx = 8
global_ny = 8
"""


@pytest.fixture
def tiny(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY)
    return path


# -- config ------------------------------------------------------------------

def test_three_line_config_gets_stock_defaults():
    cfg = parse_config("[experiment]\nenv = cartpole\nruns = 30\n")
    assert (cfg.size, cfg.hidden, cfg.sigma0, cfg.max_generations) == (64, 20, 0.1, 5000)
    assert (cfg.schedule, cfg.threshold_multiplier, cfg.init_range) == ("incremental", 1.0, 1e-5)
    assert (cfg.global_nx, cfg.global_ny, cfg.local_distance) == (18, 18, 6)
    env = experiment.build_env(cfg)
    assert experiment.budget(cfg, env).satisfaction_target == -800


@pytest.mark.parametrize("text,key", [
    ("[experiment]\nruns = 3\n", "experiment.env"),
    ("[experiment]\nenv = cartpole\n[xnes]\nsigma0 = fast\n", "xnes.sigma0"),
    ("[experiment]\nenv = cartpole\n[xnes]\nsigma0 = -1\n", "xnes.sigma0"),
    ("[experiment]\nenv = cartpole\n[training]\nsize = 10\n", "training.size"),
    ("[experiment]\nenv = cartpole\n[training]\nbogus = 1\n", "training.bogus"),
    ("[experiment]\nenv = cartpole\n[mystery]\na = 1\n", "[mystery]"),
    ("[experiment]\nenv = cartpole\n[env]\ngravity = 3\n", "env.gravity"),
    ("[experiment]\nenv = pogo\n", "experiment.env"),
    ("[experiment]\nenv = cartpole\n[schedule]\nschedule = spiral\n", "schedule.schedule"),
])
def test_config_errors_name_the_key(text, key):
    with pytest.raises(ConfigError, match=key.replace("[", r"\[").replace("]", r"\]")):
        parse_config(text)


def test_env_section_and_infinite_multiplier():
    cfg = parse_config("[experiment]\nenv = switch\n[env]\nx_split = 0.45\n"
                       "[generalist]\nthreshold_multiplier = inf\n")
    assert cfg.env_params == {"x_split": 0.45} and math.isinf(cfg.threshold_multiplier)
    assert experiment.build_env(cfg).x_split == 0.45


def test_hash_ignores_paths_and_workers():
    a = parse_config(TINY)
    assert a.hash() == replace(a, out="elsewhere", jobs=4, runs=9).hash()
    assert a.hash() != replace(a, base_seed=1).hash()


# -- evolve, checkpoint, archive ---------------------------------------------------

def test_evolve_writes_versioned_artifacts(tiny, tmp_path):
    out = tmp_path / "o"
    assert main(["evolve", "--config", str(tiny), "--out", str(out), "--quiet"]) == 0
    doc = json.loads((out / "run_000" / "archive.json").read_text())
    cfg = parse_config(TINY)
    assert doc["version"] == 1 and doc["config_hash"] == cfg.hash()
    assert doc["env"]["name"] == "switch" and doc["topology"] == [1, 4, 1]
    rows = read_summary_csv(out / "summary.csv")
    assert [r["run"] for r in rows] == [0, 1]
    trace = read_trace(out / "run_000" / "trace.jsonl")
    assert len(trace) == doc["run"]["generations"] and trace[0]["v"] == 1
    assert len(read_grid_csv(out / "run_000" / "global.csv")) == 64
    assert (out / "summary.csv").read_bytes().count(b"\r") == 0


def test_same_base_seed_same_archives(tiny, tmp_path):
    for d in ("a", "b"):
        main(["evolve", "--config", str(tiny), "--out", str(tmp_path / d), "--quiet"])
    for r in ("run_000", "run_001"):
        a = (tmp_path / "a" / r / "archive.json").read_bytes()
        assert a == (tmp_path / "b" / r / "archive.json").read_bytes()
    main(["evolve", "--config", str(tiny), "--out", str(tmp_path / "c"), "--seed", "5", "--quiet"])
    assert (tmp_path / "c" / "run_000" / "archive.json").read_bytes() != \
        (tmp_path / "a" / "run_000" / "archive.json").read_bytes()


def test_worker_pool_matches_serial(tiny, tmp_path):
    main(["evolve", "--config", str(tiny), "--out", str(tmp_path / "s"), "--quiet"])
    main(["evolve", "--config", str(tiny), "--out", str(tmp_path / "p"), "--jobs", "2", "--quiet"])
    assert (tmp_path / "s" / "summary.csv").read_bytes() == (tmp_path / "p" / "summary.csv").read_bytes()


def test_interrupted_run_resumes_bitwise(tiny, tmp_path, monkeypatch):
    cfg = replace(parse_config(TINY), out=str(tmp_path / "ref"), runs=1)
    experiment.evolve(cfg)
    from morphevo import generalist
    orig, calls = generalist.GeneralistRun.step, {"n": 0}

    def flaky(self):
        calls["n"] += 1
        if calls["n"] == 25:
            raise KeyboardInterrupt
        return orig(self)

    monkeypatch.setattr(generalist.GeneralistRun, "step", flaky)
    cut = replace(cfg, out=str(tmp_path / "cut"))
    with pytest.raises(KeyboardInterrupt):
        experiment.evolve(cut)
    assert (tmp_path / "cut" / "run_000" / "checkpoint.json").exists()
    monkeypatch.setattr(generalist.GeneralistRun, "step", orig)
    experiment.evolve(cut)
    for name in ("archive.json", "trace.jsonl", "global.csv"):
        assert (tmp_path / "cut" / "run_000" / name).read_bytes() == \
            (tmp_path / "ref" / "run_000" / name).read_bytes()
    assert not (tmp_path / "cut" / "run_000" / "checkpoint.json").exists()


def test_foreign_checkpoint_refused(tiny, tmp_path):
    cfg = replace(parse_config(TINY), out=str(tmp_path / "x"), runs=1)
    d = tmp_path / "x" / "run_000"
    d.mkdir(parents=True)
    (d / "checkpoint.json").write_text(json.dumps(
        {"format": "morphevo-checkpoint", "version": 1, "config_hash": "0", "run": 0}))
    with pytest.raises(RuntimeError, match="different configuration"):
        experiment.evolve(cfg)
    assert main(["evolve", "--config", str(tiny), "--out", str(tmp_path / "x"),
                 "--runs", "1", "--quiet"]) == 3


def test_archive_roundtrip_and_version_check(tiny, tmp_path):
    cfg = replace(parse_config(TINY), out=str(tmp_path / "o"), runs=1)
    run, doc = experiment.evolve_run(cfg, 0)
    archive, env, _ = load_archive(tmp_path / "o" / "run_000" / "archive.json")
    for a, b in zip(archive.entries, run.archive.entries):
        assert np.array_equal(a.params, b.params) and a.cluster == b.cluster
    grid = experiment.global_grid(cfg)
    assert np.array_equal(sweep(env, archive, grid, 2, 7).rewards,
                          sweep(run.env, run.archive, grid, 2, 7).rewards)
    with pytest.raises(FormatError):
        load_archive({**doc, "version": 2})


# -- sweep and render ----------------------------------------------------------

def test_sweep_and_render_cli(tiny, tmp_path):
    main(["evolve", "--config", str(tiny), "--out", str(tmp_path / "o"), "--runs", "1", "--quiet"])
    arch = tmp_path / "o" / "run_000" / "archive.json"
    args = ["sweep", str(arch), "--out", str(tmp_path / "s"), "--n-eval", "2", "--quiet"]
    assert main(args) == 0
    first = (tmp_path / "s" / "archive_sweep.csv").read_bytes()
    assert main(args) == 0
    assert (tmp_path / "s" / "archive_sweep.csv").read_bytes() == first
    assert len(first.decode().splitlines()) == 325 and first.startswith(
        b"x_param,y_param,mean_reward,n_eval\n")
    svg = tmp_path / "s" / "archive_sweep.svg"
    assert main(["render", str(tmp_path / "s" / "archive_sweep.csv"), "--svg",
                 str(tmp_path / "r.svg"), "--quiet"]) == 0
    assert (tmp_path / "r.svg").read_bytes() == svg.read_bytes()


def test_sweep_rejects_lattice_outside_env(tiny, tmp_path):
    main(["evolve", "--config", str(tiny), "--out", str(tmp_path / "o"), "--runs", "1", "--quiet"])
    arch = str(tmp_path / "o" / "run_000" / "archive.json")
    # the switch environment has no sign at x = 0.35
    assert main(["sweep", arch, "--lattice", "0.15,0.1,0.2,0.1,3,2", "--quiet",
                 "--out", str(tmp_path)]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["sweep", arch, "--lattice", "0.1,0.1,0.1"])
    assert exc.value.code == 2


def test_heatmap_annotates_extremes():
    svg = heatmap_svg([(0.1, 0.1, -5.0, 1), (0.2, 0.1, 7.5, 1)], "t")
    assert "min -5" in svg and "max 7.5" in svg
    assert "#440154" in svg and "#fde725" in svg


# -- stats -----------------------------------------------------------------------

def _rows(size, values):
    return [{"run": k, "seed": k, "size": size, "schedule": "incremental", "walk_step": 1,
             "entries": 1, "generations": 10, "default_fitness": v, "local_mean": v + 1,
             "global_mean": v / 2, "sufficiency": 3, "sufficiency_fraction": 3 / 324}
            for k, v in enumerate(values)]


def test_stats_report_matches_oracle(tmp_path, capsys):
    a, b, c = [-10.0, -12.0, -9.5], [-20.0, -22.0, -19.0, -25.0], [-5.0, -4.0, -6.5]
    for name, size, vals in (("a", 1, a), ("b", 16, b), ("c", 64, c)):
        write_summary_csv(_rows(size, vals), tmp_path / f"{name}.csv")
    files = [str(tmp_path / f"{n}.csv") for n in "abc"]
    assert main(["stats", *files, "--out", str(tmp_path / "st")]) == 0
    text = capsys.readouterr().out
    o = sps.kruskal(a, b, c)
    assert f"H={o.statistic:.4f}" in text and "== global_mean ==" in text
    csv_text = (tmp_path / "st" / "stats.csv").read_text()
    line = [ln for ln in csv_text.splitlines() if ln.startswith("global_mean,kruskal")][0]
    assert float(line.split(",")[6]) == pytest.approx(o.statistic, rel=1e-9)
    assert "[16]--" in text  # significance bar for the clearly separated pair


def test_stats_refuses_single_group(tmp_path, capsys):
    write_summary_csv(_rows(64, [1.0, 2.0, 3.0]), tmp_path / "one.csv")
    assert main(["stats", str(tmp_path / "one.csv")]) == 2
    assert "at least two groups" in capsys.readouterr().err


def test_stats_malformed_csv_reports_row(tmp_path, capsys):
    write_summary_csv(_rows(1, [1.0, 2.0]) + _rows(4, [3.0, 4.0]), tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    lines[3] = lines[3].replace(",4,", ",four,", 1)
    (tmp_path / "s.csv").write_text("\n".join(lines) + "\n")
    assert main(["stats", str(tmp_path / "s.csv")]) == 2
    assert "s.csv:4" in capsys.readouterr().err


def test_stats_unequal_groups(tmp_path):
    write_summary_csv(_rows(1, [1.0, 2.0]) + _rows(4, [3.0, 4.0, 5.0, 9.0]), tmp_path / "s.csv")
    assert main(["stats", str(tmp_path / "s.csv"), "--quiet"]) == 0


def test_missing_config_file_is_a_config_error(tmp_path):
    assert main(["evolve", "--config", str(tmp_path / "nope.ini"), "--quiet"]) == 2
    assert main(["evolve", "--quiet"]) == 2


# -- schedule comparison ----------------------------------------------------------

def test_schedule_compare_four_groups(tiny, tmp_path):
    cfg = replace(parse_config(TINY), out=str(tmp_path / "cmp"))
    res = experiment.schedule_compare(cfg)
    assert sorted(res["groups"]) == ["incremental", "random", "random_walk_1", "random_walk_5"]
    assert all(len(v) == 2 for v in res["groups"].values())
    seeds = {label: [r["seed"] for r in rows] for label, rows in res["groups"].items()}
    assert len({tuple(s) for s in seeds.values()}) == 1  # matched seeds
    assert (tmp_path / "cmp" / "stats.txt").exists()
    assert len(read_summary_csv(tmp_path / "cmp" / "summary.csv")) == 8


def test_experiment_config_dict_roundtrip():
    cfg = parse_config(TINY)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
