"""Fault diagnosis: contribution decomposition and event aggregation.

T-squared decomposes exactly over variables as
C_j = sum_r (t_r / lambda_r) * p_jr * xhat_j, because the scores are
themselves sums over variables.  The variable with the largest signed
contribution is the diagnosed root cause; strongly negative
contributors rank last since they actively pull T-squared down.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import DimensionMismatchError

if TYPE_CHECKING:
    from .monitor import MonitorPoint, Observation
    from .train import TpcaModel


@dataclass(frozen=True, slots=True)
class Diagnosis:
    """Per-variable decomposition of one observation's T-squared."""

    k: int
    t2: float
    ucl: float
    contributions: tuple[float, ...]
    variable_scores: tuple[tuple[float, ...], ...]
    ranking: tuple[int, ...]
    root_cause: int


@dataclass(frozen=True, slots=True)
class FaultEvent:
    """A maximal run of out-of-control seconds with a voted root cause."""

    start_k: int
    end_k: int
    peak_t2: float
    peak_k: int
    root_cause: int
    root_cause_share: float


def contributions(model: "TpcaModel", obs: "Observation") -> Diagnosis:
    """Decompose an observation's T-squared into per-variable terms.

    Defined for any observation, faulted or not; the contributions of
    an in-control point are simply all small.
    """
    n_vars = model.n_vars
    if not 0 <= obs.k < model.k_slices:
        raise ValueError(
            "observation slice index %r outside [0, %d)" % (obs.k, model.k_slices)
        )
    vals = [float(v) for v in obs.x]
    if len(vals) != n_vars:
        raise DimensionMismatchError(
            "observation has %d values, model expects %d" % (len(vals), n_vars)
        )
    if not all(np.isfinite(vals)):
        raise ValueError("observation at k=%d has a non-finite value" % obs.k)
    k = obs.k
    mean = model.means[k].tolist()
    std = model.stds[k].tolist()
    act = model.active[k].tolist()
    load = model.loadings[k].tolist()
    lam = model.eigenvalues[k].tolist()
    rank = model.rank

    xh = [0.0] * n_vars
    for j in range(n_vars):
        if act[j]:
            xh[j] = (vals[j] - mean[j]) / std[j]
    scores = []
    t2 = 0.0
    for r in range(rank):
        acc = 0.0
        for j in range(n_vars):
            acc += xh[j] * load[j][r]
        scores.append(acc)
        t2 += acc * acc / lam[r]
    contrib = []
    var_scores = []
    for j in range(n_vars):
        acc = 0.0
        for r in range(rank):
            acc += scores[r] / lam[r] * load[j][r] * xh[j]
        contrib.append(acc)
        var_scores.append(tuple(xh[j] * load[j][r] for r in range(rank)))
    ranking = tuple(sorted(range(n_vars), key=lambda j: (-contrib[j], j)))
    return Diagnosis(
        k=k,
        t2=t2,
        ucl=model.ucl,
        contributions=tuple(contrib),
        variable_scores=tuple(var_scores),
        ranking=ranking,
        root_cause=ranking[0],
    )


def detect_events(
    points, diagnoses, gap_tolerance: int = 0
) -> list[FaultEvent]:
    """Group fault points into maximal events.

    Two faulted seconds belong to the same event when they are at most
    ``gap_tolerance + 1`` seconds apart.  Each event reports its peak
    and the majority root cause over its faulted seconds (ties fall to
    the lowest variable index); the share is that cause's vote
    fraction.
    """
    if gap_tolerance < 0:
        raise ValueError("gap_tolerance must be non-negative")
    points = list(points)
    diagnoses = list(diagnoses)
    if len(points) != len(diagnoses):
        raise ValueError(
            "points and diagnoses differ in length (%d vs %d)"
            % (len(points), len(diagnoses))
        )
    for p, d in zip(points, diagnoses):
        if p.k != d.k:
            raise ValueError(
                "points and diagnoses disagree at k=%d vs k=%d" % (p.k, d.k)
            )
    faults = [(p, d) for p, d in zip(points, diagnoses) if p.fault]
    events: list[FaultEvent] = []
    run: list[tuple] = []
    for p, d in faults:
        if run and p.k > run[-1][0].k + gap_tolerance + 1:
            events.append(_close_run(run))
            run = []
        run.append((p, d))
    if run:
        events.append(_close_run(run))
    return events


def _close_run(run) -> FaultEvent:
    peak_p = run[0][0]
    for p, _ in run:
        if p.t2 > peak_p.t2:
            peak_p = p
    votes: dict[int, int] = {}
    for _, d in run:
        votes[d.root_cause] = votes.get(d.root_cause, 0) + 1
    # most votes wins; equal counts fall to the lowest variable index
    root = min(votes, key=lambda j: (-votes[j], j))
    return FaultEvent(
        start_k=run[0][0].k,
        end_k=run[-1][0].k,
        peak_t2=peak_p.t2,
        peak_k=peak_p.k,
        root_cause=root,
        root_cause_share=votes[root] / len(run),
    )
