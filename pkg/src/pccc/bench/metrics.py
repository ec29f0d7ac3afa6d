"""Angular-error summary statistics as reported in colour-constancy tables."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError

COLUMNS = ("Mean", "Med.", "Tri.", "B25%", "W25%")


@dataclass(frozen=True)
class MetricsSummary:
    mean: float
    median: float
    trimean: float
    best25: float
    worst25: float
    n: int
    failures: int = 0

    def row(self) -> tuple:
        return (self.mean, self.median, self.trimean, self.best25, self.worst25)


def summarize(errors, failures: int = 0) -> MetricsSummary:
    """Mean, median, trimean and best/worst quarter means of angular errors.

    Quartiles use linear interpolation between order statistics (type 7);
    the best/worst 25% are means over the ceil(n/4) smallest/largest errors.
    """
    e = np.sort(np.asarray(errors, dtype=np.float64).reshape(-1))
    n = len(e)
    if n == 0:
        raise ValidationError("cannot summarize zero errors")
    q1, q2, q3 = np.percentile(e, [25, 50, 75])
    k = math.ceil(n / 4)
    return MetricsSummary(
        mean=float(e.mean()),
        median=float(q2),
        trimean=float((q1 + 2 * q2 + q3) / 4),
        best25=float(e[:k].mean()),
        worst25=float(e[-k:].mean()),
        n=n,
        failures=failures,
    )


def format_table(rows: dict) -> str:
    """Aligned text table: one line per method name -> MetricsSummary."""
    name_w = max([len("Method")] + [len(name) for name in rows])
    lines = [f"{'Method':<{name_w}}  " + "  ".join(f"{c:>6}" for c in COLUMNS) + f"  {'n':>5}  {'fail':>4}"]
    for name, s in rows.items():
        lines.append(f"{name:<{name_w}}  " + "  ".join(f"{v:6.2f}" for v in s.row()) + f"  {s.n:5d}  {s.failures:4d}")
    return "\n".join(lines)


def write_summary_csv(path, rows: dict) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["method", "mean", "median", "trimean", "best25", "worst25", "n", "failures"])
        for name, s in rows.items():
            w.writerow([name, *(repr(v) for v in s.row()), s.n, s.failures])


@dataclass
class EvaluationResult:
    summary: MetricsSummary
    rows: list = field(default_factory=list)  # (id, error_deg or None, method)
    failed: list = field(default_factory=list)  # (id, message)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["id", "error_deg", "method"])
            for sid, err, method in self.rows:
                w.writerow([sid, "" if err is None else repr(err), method])
