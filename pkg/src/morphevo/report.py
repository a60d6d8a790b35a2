"""Run-summary tables and the statistical comparison report built from them."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass

from .stats import DunnPair, KruskalResult, dunn_posthoc, group_medians, kruskal_wallis

SUMMARY_COLUMNS = ("run", "seed", "size", "schedule", "walk_step", "entries", "generations",
                   "default_fitness", "local_mean", "global_mean", "sufficiency",
                   "sufficiency_fraction")
METRICS = ("default_fitness", "local_mean", "global_mean")
_INT_COLUMNS = {"run", "seed", "size", "walk_step", "entries", "generations", "sufficiency"}
_STR_COLUMNS = {"schedule"}


class SummaryError(ValueError):
    pass


def write_summary_csv(rows: list[dict], path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in rows:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c]
                        for c in SUMMARY_COLUMNS])


def read_summary_csv(path) -> list[dict]:
    """Parse a run-summary file; errors name the offending line."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SummaryError(f"{path}: empty file")
        missing = [c for c in SUMMARY_COLUMNS if c not in header]
        if missing:
            raise SummaryError(f"{path}:1: missing columns {', '.join(missing)}")
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != len(header):
                raise SummaryError(f"{path}:{lineno}: expected {len(header)} fields, got {len(raw)}")
            rec = dict(zip(header, raw))
            row = {}
            for c in SUMMARY_COLUMNS:
                try:
                    if c in _STR_COLUMNS:
                        row[c] = rec[c]
                    elif c in _INT_COLUMNS:
                        row[c] = int(rec[c])
                    else:
                        row[c] = float(rec[c])
                except ValueError:
                    raise SummaryError(f"{path}:{lineno}: bad value {rec[c]!r} in column {c}") from None
            rows.append(row)
    return rows


def group_label(row: dict, by: str) -> str:
    if by == "schedule":
        if row["schedule"] == "random_walk":
            return f"random_walk_{row['walk_step']}"
        return row["schedule"]
    return str(row[by])


def group_rows(rows: list[dict], by: str = "size") -> dict[str, list[dict]]:
    groups: dict[str, list[dict]] = defaultdict(list)
    for row in rows:
        groups[group_label(row, by)].append(row)
    return dict(groups)


@dataclass
class MetricReport:
    metric: str
    medians: dict[str, float]
    counts: dict[str, int]
    kruskal: KruskalResult
    dunn: list[DunnPair]


def compare(groups: dict[str, list[dict]], alpha: float = 0.05, method: str = "none",
            metrics=METRICS) -> list[MetricReport]:
    if len(groups) < 2:
        raise SummaryError(f"need at least two groups to compare, got {len(groups)}")
    out = []
    for metric in metrics:
        samples = {label: [r[metric] for r in rs] for label, rs in groups.items()}
        out.append(MetricReport(metric, group_medians(samples),
                                {k: len(v) for k, v in samples.items()},
                                kruskal_wallis(samples), dunn_posthoc(samples, alpha, method)))
    return out


def _stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return "ns"


def report_csv(reports: list[MetricReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("metric", "kind", "a", "b", "n", "value", "statistic", "p_raw", "p_adjusted",
                "significant"))
    for r in reports:
        for label, med in r.medians.items():
            w.writerow((r.metric, "median", label, "", r.counts[label], repr(med), "", "", "", ""))
        k = r.kruskal
        w.writerow((r.metric, "kruskal", "", "", sum(r.counts.values()), "", repr(k.H),
                    repr(k.p), "", ""))
        for d in r.dunn:
            w.writerow((r.metric, "dunn", d.a, d.b, "", "", repr(d.z), repr(d.p_raw),
                        repr(d.p_adjusted), int(d.significant)))
    return buf.getvalue()


def report_text(reports: list[MetricReport], alpha: float = 0.05) -> str:
    """Human-readable table; significant pairs get a bracket with stars."""
    lines = []
    for r in reports:
        labels = list(r.medians)
        width = max(len(s) for s in labels) + 2
        lines.append(f"== {r.metric} ==")
        for label in labels:
            lines.append(f"  {label:<{width}} n={r.counts[label]:<3d} median={r.medians[label]:.4f}")
        k = r.kruskal
        lines.append(f"  Kruskal-Wallis H={k.H:.4f} df={k.df} p={k.p:.4g}")
        lines.append("  Dunn pairs:")
        for d in r.dunn:
            bar = f"[{d.a}]--{_stars(d.p_adjusted)}--[{d.b}]" if d.significant else ""
            lines.append(f"    {d.a} vs {d.b}: z={d.z:+.4f} p={d.p_raw:.4g} "
                         f"p_adj={d.p_adjusted:.4g} {bar}".rstrip())
        lines.append("")
    lines.append(f"alpha = {alpha}")
    return "\n".join(lines) + "\n"
