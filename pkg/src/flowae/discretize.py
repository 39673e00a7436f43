"""Quantile discretization of numeric flow fields.

Numeric fields (duration, byte and packet counts) are mapped to decile-style
bin ids fitted on training data only, so they can be embedded exactly like
categorical values. Cut points use the nearest-rank empirical quantile, which
means every cut point is an observed value and degenerate (duplicate) cuts are
allowed for heavily tied fields.
"""

from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .ioutil import read_json, write_json


@dataclass(frozen=True)
class QuantileBinner:
    """Fitted per-field binner: ``n_bins - 1`` non-decreasing cut points."""

    field: str
    n_bins: int
    cut_points: tuple

    def __post_init__(self):
        if self.n_bins < 2:
            raise DataError(f"n_bins must be >= 2, got {self.n_bins}")
        if len(self.cut_points) != self.n_bins - 1:
            raise DataError(
                f"expected {self.n_bins - 1} cut points, got {len(self.cut_points)}"
            )
        if any(a > b for a, b in zip(self.cut_points, self.cut_points[1:])):
            raise DataError("cut points must be non-decreasing")


def fit_quantiles(values, n_bins, field="value"):
    """Fit a QuantileBinner on observed values.

    Cut point k is the nearest-rank (k+1)/n_bins quantile of the sample:
    sorted_values[ceil(q * N) - 1]. Duplicate cut points are permitted; the
    bins they pinch off simply stay empty.
    """
    vals = np.sort(np.asarray(list(values), dtype=float))
    if vals.size == 0:
        raise DataError(f"cannot fit quantile bins for {field!r}: no values")
    if n_bins < 2:
        raise DataError(f"n_bins must be >= 2, got {n_bins}")
    if not np.all(np.isfinite(vals)):
        raise DataError(f"non-finite value while fitting bins for {field!r}")
    # ceil(k/n_bins * N) - 1 in integer arithmetic; float q*N can land a
    # ULP off around exact ranks and pick the wrong neighbor
    n = vals.size
    ranks = [-(-k * n // n_bins) - 1 for k in range(1, n_bins)]
    cuts = vals[ranks]
    return QuantileBinner(field=field, n_bins=int(n_bins), cut_points=tuple(float(c) for c in cuts))


def assign_bin(binner, value):
    """Map a value to its bin id in [0, n_bins - 1].

    Returns the smallest k with value <= cut_points[k] (equivalently the
    count of cut points strictly below the value), clamped to the top bin
    when the value exceeds every cut point. Total over all finite reals.
    """
    if value != value:  # NaN
        raise DataError(f"NaN value for field {binner.field!r}")
    k = bisect_left(binner.cut_points, value)
    return min(k, binner.n_bins - 1)


def save_binners(path, binners):
    """Persist fitted binners, one JSON array entry per field."""
    write_json(path, [
        {"field": b.field, "n_bins": b.n_bins, "cut_points": list(b.cut_points)}
        for b in binners
    ])


def load_binners(path):
    return [
        QuantileBinner(field=d["field"], n_bins=int(d["n_bins"]),
                       cut_points=tuple(float(c) for c in d["cut_points"]))
        for d in read_json(path)
    ]
