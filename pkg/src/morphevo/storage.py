"""On-disk formats: archive documents, traces, fitness-grid CSV and SVG heatmaps.

Archives and checkpoints are JSON; floats are written with ``repr`` precision
so parameter vectors survive a save/load cycle exactly. CSV files use commas,
a header row and LF line endings.
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

import numpy as np

from .envs import Environment, make_env
from .generalist import ArchiveEntry, GeneralistArchive
from .metrics import FitnessGrid
from .net import Topology
from .schedule import MorphologyGrid

ARCHIVE_FORMAT = "morphevo-archive"
ARCHIVE_VERSION = 1
CHECKPOINT_VERSION = 1
GRID_COLUMNS = ("x_param", "y_param", "mean_reward", "n_eval")


class FormatError(ValueError):
    pass


def write_json(path, obj):
    """Write atomically so an interrupted save never leaves a torn file."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# -- archives --------------------------------------------------------------

def archive_document(archive: GeneralistArchive, env_name: str, env_params: dict,
                     env: Environment, config_hash: str, run_meta: dict) -> dict:
    return {
        "format": ARCHIVE_FORMAT,
        "version": ARCHIVE_VERSION,
        "config_hash": config_hash,
        "env": {"name": env_name, "params": dict(env_params), "spec": env.spec.to_dict()},
        "topology": list(archive.topology.as_tuple()),
        "grid": archive.grid.to_dict(),
        "entries": [
            {"cluster": list(e.cluster), "mean_fitness": e.mean_fitness,
             "generations_used": e.generations_used, "params": e.params.tolist()}
            for e in archive.entries
        ],
        "uncovered": list(archive.uncovered),
        "run": run_meta,
    }


def load_archive(doc_or_path) -> tuple[GeneralistArchive, Environment, dict]:
    doc = doc_or_path if isinstance(doc_or_path, dict) else read_json(doc_or_path)
    if doc.get("format") != ARCHIVE_FORMAT:
        raise FormatError("not an archive document")
    if doc.get("version") != ARCHIVE_VERSION:
        raise FormatError(f"unsupported archive version {doc.get('version')!r}")
    topology = Topology(*doc["topology"])
    archive = GeneralistArchive(
        MorphologyGrid.from_dict(doc["grid"]), topology,
        [ArchiveEntry(np.array(e["params"], dtype=np.float64), list(e["cluster"]),
                      float(e["mean_fitness"]), int(e["generations_used"]))
         for e in doc["entries"]],
        list(doc["uncovered"]))
    env = make_env(doc["env"]["name"], **doc["env"]["params"])
    return archive, env, doc


# -- traces ---------------------------------------------------------------------

class TraceWriter:
    """Line-delimited JSON, one record per generation."""

    def __init__(self, path, existing=()):
        self.path = Path(path)
        with open(self.path, "w", newline="\n") as fh:
            for rec in existing:
                fh.write(json.dumps(rec) + "\n")

    def __call__(self, record: dict):
        with open(self.path, "a", newline="\n") as fh:
            fh.write(json.dumps(record) + "\n")


def read_trace(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


# -- fitness grids ----------------------------------------------------------------

def grid_to_csv(fg: FitnessGrid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GRID_COLUMNS)
    for cell in fg.grid.cells:
        w.writerow([repr(cell.x), repr(cell.y), repr(float(fg.rewards[cell.index])), fg.n_eval])
    return buf.getvalue()


def write_grid_csv(fg: FitnessGrid, path):
    with open(path, "w", newline="") as fh:
        fh.write(grid_to_csv(fg))


def read_grid_csv(path) -> list[tuple[float, float, float, int]]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != GRID_COLUMNS:
            raise FormatError(f"{path}: expected header {','.join(GRID_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                x, y, r, n = row
                rows.append((float(x), float(y), float(r), int(n)))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: malformed row {row!r}") from None
    return rows


# viridis end points and midpoint; linear interpolation between them
_RAMP = ((68, 1, 84), (33, 145, 140), (253, 231, 37))


def _color(t: float) -> str:
    t = min(1.0, max(0.0, t))
    if t <= 0.5:
        a, b, u = _RAMP[0], _RAMP[1], t / 0.5
    else:
        a, b, u = _RAMP[1], _RAMP[2], (t - 0.5) / 0.5
    rgb = [round(a[k] + (b[k] - a[k]) * u) for k in range(3)]
    return "#%02x%02x%02x" % tuple(rgb)


def heatmap_svg(rows, title: str = "", cell: int = 24) -> str:
    """Self-contained SVG heatmap of ``(x, y, value, n)`` rows.

    Colors run linearly from the minimum (dark) to the maximum (bright)
    value; both extremes are printed under the plot. x grows to the right,
    y grows upward.
    """
    xs = sorted({r[0] for r in rows})
    ys = sorted({r[1] for r in rows})
    vals = [r[2] for r in rows]
    lo, hi = min(vals), max(vals)
    span = hi - lo
    margin = 48
    width = margin + cell * len(xs) + 16
    height = 28 + cell * len(ys) + margin
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{margin}" y="18" font-family="sans-serif" font-size="12">{title}</text>',
    ]
    xi = {x: k for k, x in enumerate(xs)}
    yi = {y: k for k, y in enumerate(ys)}
    for x, y, v, _ in rows:
        t = 0.5 if span == 0 else (v - lo) / span
        px = margin + cell * xi[x]
        py = 28 + cell * (len(ys) - 1 - yi[y])
        out.append(f'<rect x="{px}" y="{py}" width="{cell}" height="{cell}" '
                   f'fill="{_color(t)}"><title>({x:.4g}, {y:.4g}): {v:.6g}</title></rect>')
    base = 28 + cell * len(ys)
    out.append(f'<text x="{margin}" y="{base + 16}" font-family="sans-serif" font-size="11">'
               f'x: {xs[0]:.4g} .. {xs[-1]:.4g}   y: {ys[0]:.4g} .. {ys[-1]:.4g}</text>')
    out.append(f'<text x="{margin}" y="{base + 32}" font-family="sans-serif" font-size="11">'
               f'min {lo:.6g} (dark)   max {hi:.6g} (bright)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(rows, path, title: str = ""):
    with open(path, "w", newline="\n") as fh:
        fh.write(heatmap_svg(rows, title))


def fitness_grid_rows(fg: FitnessGrid):
    return [(c.x, c.y, float(fg.rewards[c.index]), fg.n_eval) for c in fg.grid.cells]
