"""EXIT charts built from attack-2 round traces.

A round's intrinsic information is I(A;Y) before the round and its extrinsic
information is I(A;Y) after it.  Records pooled over many attacks are binned
on the intrinsic axis and the extrinsic values averaged per bin.  The second
EXIT curve is the mirror image of the first, so an open tunnel between the
two curves is the same thing as the binned curve staying above the diagonal.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .attack_iter import RoundTrace
from .infomath import empirical_mi

OPEN_GAP = "open_gap"
CROSSOVER = "crossover"
INSUFFICIENT = "insufficient_data"


@dataclass(frozen=True)
class ExitRecord:
    intrinsic: float
    extrinsic: float
    trial: int
    round: int


def trace_to_records(trace: RoundTrace, a: np.ndarray | None = None, trial: int = 0) -> list[ExitRecord]:
    """One record per executed round.

    When ``a`` is given and the trace kept its sequences, the mutual
    information is recomputed from them; otherwise the trace's stored values
    are used.
    """
    if a is not None and len(trace.sequences) == len(trace.mi):
        mi = [empirical_mi(a, seq) for seq in trace.sequences]
    else:
        mi = list(trace.mi)
    return [
        ExitRecord(mi[l - 1], mi[l], trial, l) for l in range(1, trace.rounds + 1)
    ]


@dataclass
class ExitChart:
    d: int
    centers: np.ndarray
    mean_extrinsic: np.ndarray  # nan where the bin is empty
    counts: np.ndarray
    max_start: float | None = None  # largest pre-attack MI among the records
    verdict: str = INSUFFICIENT
    crossover_bin: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def nonempty(self) -> np.ndarray:
        return self.counts > 0

    @property
    def gaps(self) -> np.ndarray:
        """Per-bin vertical distance between the curve and the diagonal."""
        return self.mean_extrinsic - self.centers

    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bin_center", "mean_extrinsic", "count"])
        for c, m, n in zip(self.centers, self.mean_extrinsic, self.counts):
            writer.writerow([repr(float(c)), "" if n == 0 else repr(float(m)), int(n)])
        return buf.getvalue()


def bin_index(x: float, d: int) -> int:
    return min(max(int(np.floor(x * d)), 0), d - 1)


def bin_records(records: Sequence[ExitRecord], d: int, min_nonempty: int = 2) -> ExitChart:
    if d < 1:
        raise ValueError("need at least one bin")
    sums = np.zeros(d)
    counts = np.zeros(d, dtype=np.int64)
    # sort so the floating-point accumulation is independent of input order
    for r in sorted(records, key=lambda r: (r.intrinsic, r.extrinsic, r.trial, r.round)):
        b = bin_index(r.intrinsic, d)
        sums[b] += r.extrinsic
        counts[b] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    starts = [r.intrinsic for r in records if r.round == 1]
    chart = ExitChart(
        d=d,
        centers=(np.arange(d) + 0.5) / d,
        mean_extrinsic=means,
        counts=counts,
        max_start=max(starts) if starts else None,
    )
    chart.verdict, chart.crossover_bin = gap_report(chart, min_nonempty)
    return chart


def gap_report(chart: ExitChart, min_nonempty: int = 2) -> tuple[str, int | None]:
    """Classify the chart as an open tunnel, a crossover, or too sparse.

    Bins lying wholly above the largest pre-attack information are skipped:
    no trajectory starts there, so they cannot block convergence.
    """
    nonempty = np.nonzero(chart.counts > 0)[0]
    if len(nonempty) < min_nonempty:
        return INSUFFICIENT, None
    limit = chart.max_start if chart.max_start is not None else 1.0
    scanned = [b for b in nonempty if b / chart.d <= limit]
    for b in scanned:
        if chart.mean_extrinsic[b] <= chart.centers[b]:
            return CROSSOVER, int(b)
    return OPEN_GAP, None


def pooled_records(traces: Iterable[RoundTrace]) -> list[ExitRecord]:
    out: list[ExitRecord] = []
    for i, tr in enumerate(traces):
        out.extend(trace_to_records(tr, trial=i))
    return out
