"""Per-slice standardization: column statistics and vector scaling.

Each second-of-day slice gets its own mean/std per variable, estimated
across training days.  A variable whose sample std at a slice falls
below ``EPS_STD`` is "inactive" there (think nighttime channels sitting
on a constant): it standardizes to exactly 0 and is excluded from that
slice's PCA dimension count.  Its stored std is 1.0 so the transform
stays total and invertible bookkeeping stays trivial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DegenerateSliceError, DimensionMismatchError

# Below this sample std a variable is a constant for all practical
# purposes: sensor quantization noise alone sits orders of magnitude
# higher.
EPS_STD = 1e-9


@dataclass(frozen=True, slots=True)
class SliceStats:
    """Standardization statistics of one time slice."""

    k: int
    mean: tuple[float, ...]
    std: tuple[float, ...]
    active: tuple[bool, ...]

    @property
    def n_vars(self) -> int:
        return len(self.mean)

    @property
    def n_active(self) -> int:
        return sum(self.active)


def slice_stats(xk, k: int = 0, eps: float = EPS_STD) -> SliceStats:
    """Column stats of an I x J slice matrix (I >= 2, entries finite).

    Mean and sample std (I-1 denominator) per column; a column with
    std < eps is marked inactive with std stored as 1.0.  Raises
    DegenerateSliceError when no column is active.
    """
    x = np.ascontiguousarray(xk, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("slice matrix must be 2-D with at least 2 rows")
    mean, std, active, n_active = _backend.column_stats(x, eps)
    if n_active == 0:
        raise DegenerateSliceError(k)
    return SliceStats(
        k=k,
        mean=tuple(mean),
        std=tuple(std),
        active=tuple(bool(a) for a in active),
    )


def standardize(x, stats: SliceStats) -> np.ndarray:
    """Map a raw J-vector to standardized form under ``stats``.

    Active j: (x[j] - mean[j]) / std[j].  Inactive j: exactly 0.0, no
    matter how far the raw value sits from the stored constant (the
    monitor reports such deviations through a separate flag).
    """
    vals = [float(v) for v in x]
    if len(vals) != stats.n_vars:
        raise DimensionMismatchError(
            "expected %d values, got %d" % (stats.n_vars, len(vals))
        )
    out = np.empty(stats.n_vars, dtype=np.float64)
    for j in range(stats.n_vars):
        if stats.active[j]:
            out[j] = (vals[j] - stats.mean[j]) / stats.std[j]
        else:
            out[j] = 0.0
    return out
