"""Scoring of new observations against a trained model.

Each observation is standardized with its slice's stats, projected onto
the retained loadings, and summarized as Hotelling's T-squared; a point
is a fault when T-squared strictly exceeds the control limit.  Inactive
variables cannot move T-squared (they standardize to 0), so their raw
deviations are reported through a separate per-variable flag instead of
being silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import _backend
from .errors import DegreesOfFreedomError, DimensionMismatchError
from .statfun import FParams, f_quantile

if TYPE_CHECKING:
    from .train import SliceModel, TpcaModel

# An inactive variable is flagged when its raw value sits at least this
# many whole-day standard deviations away from the stored constant.
INACTIVE_DEV_SIGMAS = 3.0


@dataclass(frozen=True, slots=True)
class Observation:
    """One raw reading: slice index plus J finite values."""

    k: int
    x: tuple[float, ...]


@dataclass(frozen=True, slots=True)
class MonitorPoint:
    """One scored observation."""

    k: int
    scores: tuple[float, ...]
    t2: float
    ucl: float
    fault: bool
    inactive_deviation: tuple[bool, ...]


def ucl_formula(n_days: int, rank: int, confidence: float) -> float:
    """Upper control limit for T-squared.

    (I-1)(I+1)R / (I(I-R)) times the F(R, I-R) quantile at the given
    confidence, where I is the training day count and R the retained
    rank.  Requires I > R >= 1.
    """
    if rank < 1 or n_days <= rank:
        raise DegreesOfFreedomError(
            "control limit needs day count > rank >= 1, got days=%r rank=%r"
            % (n_days, rank)
        )
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must be in (0, 1), got %r" % confidence)
    prefactor = (n_days - 1) * (n_days + 1) * rank / (n_days * (n_days - rank))
    return prefactor * f_quantile(confidence, FParams(rank, n_days - rank))


def project(xhat, slice_model: "SliceModel") -> tuple[float, ...]:
    """Scores of a standardized vector under one slice's loadings."""
    xh = [float(v) for v in xhat]
    loadings = slice_model.loadings.tolist()
    if len(xh) != len(loadings):
        raise DimensionMismatchError(
            "expected %d standardized values, got %d" % (len(loadings), len(xh))
        )
    rank = slice_model.rank
    out = []
    for r in range(rank):
        acc = 0.0
        for j in range(len(xh)):
            acc += xh[j] * loadings[j][r]
        out.append(acc)
    return tuple(out)


def hotelling_t2(scores, eigenvalues) -> float:
    """T-squared: sum of squared scores over their training variances."""
    sc = [float(v) for v in scores]
    lam = [float(v) for v in eigenvalues]
    if len(sc) != len(lam):
        raise DimensionMismatchError(
            "scores and eigenvalues disagree in length (%d vs %d)"
            % (len(sc), len(lam))
        )
    t2 = 0.0
    for r in range(len(sc)):
        t2 += sc[r] * sc[r] / lam[r]
    return t2


def monitor_series(model: "TpcaModel", observations) -> list[MonitorPoint]:
    """Score a batch of observations; order is preserved.

    Equivalent to independent ``monitor_point`` calls, but the
    standardize/project/T-squared loop runs once through the kernel
    backend for the whole batch.
    """
    obs = list(observations)
    if not obs:
        return []
    n_vars = model.n_vars
    k_slices = model.k_slices
    n = len(obs)
    ks = np.empty(n, dtype=np.int64)
    xs = np.empty((n, n_vars), dtype=np.float64)
    for i, ob in enumerate(obs):
        if not 0 <= ob.k < k_slices:
            raise ValueError(
                "observation slice index %r outside [0, %d)" % (ob.k, k_slices)
            )
        vals = [float(v) for v in ob.x]
        if len(vals) != n_vars:
            raise DimensionMismatchError(
                "observation at k=%d has %d values, model expects %d"
                % (ob.k, len(vals), n_vars)
            )
        ks[i] = ob.k
        xs[i] = vals
    if not np.isfinite(xs).all():
        bad = np.argwhere(~np.isfinite(xs))[0]
        raise ValueError(
            "observation at k=%d has a non-finite value for %r"
            % (obs[int(bad[0])].k, model.variable_names[int(bad[1])])
        )
    scores = np.zeros((n, model.rank), dtype=np.float64)
    t2 = np.zeros(n, dtype=np.float64)
    _backend.score_points(
        model.means,
        model.stds,
        model.active,
        model.loadings,
        model.eigenvalues,
        ks,
        xs,
        scores,
        t2,
    )
    act = model.active[ks].astype(bool)
    if act.all():
        flags = np.zeros((n, n_vars), dtype=bool)
    else:
        gstd = np.asarray(model.global_std)
        devs = np.abs(xs - model.means[ks])
        flags = (~act) & (devs >= INACTIVE_DEV_SIGMAS * gstd) & (devs > 0.0)
    ucl = model.ucl
    return [
        MonitorPoint(
            k=int(ks[i]),
            scores=tuple(float(v) for v in scores[i]),
            t2=float(t2[i]),
            ucl=ucl,
            fault=bool(t2[i] > ucl),
            inactive_deviation=tuple(bool(v) for v in flags[i]),
        )
        for i in range(n)
    ]


def monitor_point(model: "TpcaModel", obs: Observation) -> MonitorPoint:
    """Score a single observation."""
    return monitor_series(model, [obs])[0]
