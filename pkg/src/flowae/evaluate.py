"""Threshold sweeps, score histograms, and their CSV artifacts.

Scored records carry a class label (benign or an attack category). A sweep
evaluates one attack class against benign traffic: records of any other
class are dropped first, then every candidate MSE cutoff gets a
TPR/TNR/harmonic-F1 row. Candidate cutoffs are the midpoints between
consecutive distinct scores plus one sentinel below the minimum and one
above the maximum, so the sweep covers every achievable confusion matrix
exactly once.
"""

import csv
import math
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DataError

BENIGN = "benign"


class ScoreEntry(NamedTuple):
    index: int
    label: str
    mse: float


class SweepRow(NamedTuple):
    cutoff: float
    tpr: float
    tnr: float
    f1: float


class ScoreSet:
    """Per-record anomaly scores with class labels."""

    def __init__(self, entries):
        self.entries = tuple(
            ScoreEntry(int(i), str(lab), float(m)) for i, lab, m in entries
        )
        for e in self.entries:
            if not math.isfinite(e.mse) or e.mse < 0:
                raise DataError(f"score for record {e.index} is {e.mse!r}")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def classes(self):
        """Distinct labels, benign first, the rest sorted."""
        seen = {e.label for e in self.entries}
        rest = sorted(seen - {BENIGN})
        return ([BENIGN] if BENIGN in seen else []) + rest

    def scores_for(self, label):
        return np.array([e.mse for e in self.entries if e.label == label])


def harmonic_f1(tpr, tnr):
    """Harmonic mean of the two rates; 0 when both are 0."""
    if tpr + tnr == 0:
        return 0.0
    return 2.0 * tpr * tnr / (tpr + tnr)


def candidate_cutoffs(values):
    """Sentinels below/above plus midpoints of consecutive distinct scores."""
    distinct = np.unique(np.asarray(values, dtype=float))
    mids = (distinct[:-1] + distinct[1:]) / 2.0
    return np.concatenate(([distinct[0] - 1.0], mids, [distinct[-1] + 1.0]))


def sweep_thresholds(scores, positive_class, benign_label=BENIGN):
    """TPR/TNR/F1 at every candidate cutoff for one attack class vs benign.

    A record is flagged malicious when mse > cutoff (strict). Records of
    classes other than `positive_class` and benign are excluded before
    sweeping.
    """
    pos = scores.scores_for(positive_class)
    ben = scores.scores_for(benign_label)
    if len(pos) == 0 or len(ben) == 0:
        counts = {lab: len(scores.scores_for(lab)) for lab in scores.classes()}
        raise DataError(
            f"sweep needs both {benign_label!r} and {positive_class!r} records, "
            f"have {counts}"
        )
    pos_sorted = np.sort(pos)
    ben_sorted = np.sort(ben)
    rows = []
    for cutoff in candidate_cutoffs(np.concatenate((pos, ben))):
        # mse <= cutoff is unflagged; searchsorted gives that count directly
        flagged_pos = len(pos) - np.searchsorted(pos_sorted, cutoff, side="right")
        unflagged_ben = np.searchsorted(ben_sorted, cutoff, side="right")
        tpr = flagged_pos / len(pos)
        tnr = unflagged_ben / len(ben)
        rows.append(SweepRow(float(cutoff), tpr, tnr, harmonic_f1(tpr, tnr)))
    return ThresholdSweep(rows)


class ThresholdSweep:
    """Rows of (cutoff, tpr, tnr, f1) with cutoffs strictly ascending."""

    def __init__(self, rows):
        # plain floats: numpy scalars repr as np.float64(...) and would
        # wreck the CSV round trip
        self.rows = tuple(SweepRow(*(float(v) for v in r)) for r in rows)
        if not self.rows:
            raise DataError("empty threshold sweep")
        for a, b in zip(self.rows, self.rows[1:]):
            if not a.cutoff < b.cutoff:
                raise DataError("sweep cutoffs must be strictly ascending")
        for r in self.rows:
            for rate in (r.tpr, r.tnr, r.f1):
                if not 0.0 <= rate <= 1.0:
                    raise DataError(f"rate out of [0,1] in sweep row {r}")

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def optimal(self):
        """Max-F1 row; ties go to the smallest cutoff."""
        best = self.rows[0]
        for r in self.rows[1:]:
            if r.f1 > best.f1:
                best = r
        return best


def histogram(scores, n_buckets):
    """Equal-width per-class counts over the pooled score range.

    Returns (edges, counts) where edges has n_buckets + 1 entries and
    counts maps each class label to its per-bucket totals.
    """
    if n_buckets < 1:
        raise ConfigError("n_buckets must be >= 1")
    if len(scores) == 0:
        raise DataError("cannot histogram an empty score set")
    pooled = np.array([e.mse for e in scores.entries])
    lo, hi = float(pooled.min()), float(pooled.max())
    edges = np.linspace(lo, hi, n_buckets + 1)
    width = hi - lo
    counts = {}
    for label in scores.classes():
        vals = scores.scores_for(label)
        if width == 0.0:
            per = np.zeros(n_buckets, dtype=int)
            per[0] = len(vals)
        else:
            idx = ((vals - lo) / width * n_buckets).astype(int)
            per = np.bincount(np.minimum(idx, n_buckets - 1), minlength=n_buckets)
        counts[label] = per.tolist()
    return edges.tolist(), counts


def write_scores(path, scores):
    """CSV with header index,label,mse; floats at full precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "label", "mse"])
        for e in scores.entries:
            writer.writerow([e.index, e.label, repr(e.mse)])


def read_scores(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["index", "label", "mse"]:
            raise DataError(f"unexpected score CSV header {header!r} in {path}")
        return ScoreSet((int(i), lab, float(m)) for i, lab, m in reader)


def write_sweep(path, sweep):
    """CSV with header cutoff,tpr,tnr,f1, one row per candidate cutoff."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cutoff", "tpr", "tnr", "f1"])
        for r in sweep:
            writer.writerow([repr(r.cutoff), repr(r.tpr), repr(r.tnr), repr(r.f1)])


def read_sweep(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["cutoff", "tpr", "tnr", "f1"]:
            raise DataError(f"unexpected sweep CSV header {header!r} in {path}")
        return ThresholdSweep(
            SweepRow(*(float(cell) for cell in row)) for row in reader
        )


def write_histogram(path, edges, counts):
    """CSV with bucket bounds then one count column per class."""
    classes = list(counts)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bucket_lo", "bucket_hi"] + classes)
        for i in range(len(edges) - 1):
            row = [repr(float(edges[i])), repr(float(edges[i + 1]))]
            writer.writerow(row + [counts[c][i] for c in classes])
