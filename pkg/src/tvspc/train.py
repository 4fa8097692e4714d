"""Per-slice PCA training, global rank selection, and model assembly.

One PCA is fit per second-of-day slice (up to 86,400 of them), but a
single retained rank R and a single control limit apply to the whole
model: R is the smallest rank whose cumulative explained variance
clears the threshold on the *worst* slice, so every slice is at least
that well represented.

The heavy loop lives in the kernel backend and is parallelized over
contiguous slice ranges; set ``TVSPC_THREADS`` to cap the worker count
(0 or unset picks the CPU count).  Results are independent of the
worker count because workers write disjoint output rows.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import (
    DegenerateSliceError,
    EigenConvergenceError,
    ThresholdError,
    TrainingError,
)
from .linalg import EIGVAL_CLAMP, JACOBI_MAX_SWEEPS, JACOBI_TOL
from .monitor import ucl_formula
from .preprocess import EPS_STD, SliceStats

DEFAULT_CONFIDENCE = 0.95
DEFAULT_THRESHOLD = 0.75


@dataclass(frozen=True, slots=True)
class SliceModel:
    """Trained PCA of one time slice.

    ``loadings`` is J x R with zero rows at inactive variables and
    orthonormal columns over the active ones; ``explained`` holds the
    cumulative explained-variance fractions for ranks 1..n_active (the
    last entry is exactly 1.0).
    """

    k: int
    stats: SliceStats
    loadings: np.ndarray
    eigenvalues: tuple[float, ...]
    explained: tuple[float, ...]

    @property
    def rank(self) -> int:
        return len(self.eigenvalues)


def _thread_count() -> int:
    raw = os.environ.get("TVSPC_THREADS", "").strip()
    if raw in ("", "0"):
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(
            "TVSPC_THREADS must be a non-negative integer, got %r" % raw
        ) from None
    if n < 0:
        raise ValueError("TVSPC_THREADS must be a non-negative integer")
    return max(1, n)


def _cumulative_explained(eigs: list[float]) -> list[float]:
    """Cumulative explained-variance fractions from eigenvalues.

    Normalized by the full running total, so the final entry is exactly
    1.0 regardless of roundoff in the eigenvalue sum.
    """
    cum = []
    acc = 0.0
    for lam in eigs:
        acc += lam
        cum.append(acc)
    if acc <= 0.0:
        raise TrainingError("slice has no positive variance to explain")
    return [c / acc for c in cum]


class TpcaModel:
    """Per-slice PCA models plus the global rank and control limit.

    Stored as dense arrays over all K slices (means, stds, activity,
    loadings, eigenvalues, explained) for fast batch scoring and compact
    serialization; ``slices[k]`` materializes a per-slice view on
    demand.  Instances are immutable: the arrays are marked read-only.
    """

    def __init__(
        self,
        *,
        rank: int,
        n_days: int,
        confidence: float,
        threshold: float,
        eps: float,
        ucl: float,
        variable_names: tuple[str, ...],
        means: np.ndarray,
        stds: np.ndarray,
        active: np.ndarray,
        nactive: np.ndarray,
        loadings: np.ndarray,
        eigenvalues: np.ndarray,
        explained: np.ndarray,
    ) -> None:
        k_slices, n_vars = means.shape
        if stds.shape != (k_slices, n_vars) or active.shape != (k_slices, n_vars):
            raise ValueError("per-slice stat arrays disagree in shape")
        if explained.shape != (k_slices, n_vars):
            raise ValueError("explained array disagrees in shape")
        if loadings.shape != (k_slices, n_vars, rank):
            raise ValueError("loadings must be (K, J, R)")
        if eigenvalues.shape != (k_slices, rank):
            raise ValueError("eigenvalues must be (K, R)")
        if nactive.shape != (k_slices,):
            raise ValueError("nactive must be (K,)")
        if len(variable_names) != n_vars:
            raise ValueError("variable_names length must equal J")
        min_active = int(nactive.min()) if k_slices else 0
        if not 1 <= rank <= min_active:
            raise ValueError(
                "rank %d outside [1, min active count %d]" % (rank, min_active)
            )
        if rank >= n_days:
            raise ValueError("rank must be smaller than the training day count")
        self.rank = rank
        self.n_days = n_days
        self.confidence = confidence
        self.threshold = threshold
        self.eps = eps
        self.ucl = ucl
        self.variable_names = tuple(variable_names)
        self.means = means
        self.stds = stds
        self.active = active
        self.nactive = nactive
        self.loadings = loadings
        self.eigenvalues = eigenvalues
        self.explained = explained
        for arr in (means, stds, active, nactive, loadings, eigenvalues, explained):
            arr.flags.writeable = False
        self._global_std: tuple[float, ...] | None = None

    @property
    def k_slices(self) -> int:
        return self.means.shape[0]

    @property
    def n_vars(self) -> int:
        return self.means.shape[1]

    @property
    def slices(self) -> "_SliceView":
        return _SliceView(self)

    def slice(self, k: int) -> SliceModel:
        return self.slices[k]

    @property
    def global_std(self) -> tuple[float, ...]:
        """Whole-day std per variable, reconstructed from slice stats.

        Pools within-slice variance (active slices only; inactive ones
        are true constants to working precision) with the between-slice
        spread of the means.  Used for the inactive-deviation flags.
        """
        if self._global_std is None:
            i_days = self.n_days
            act = self.active.astype(bool)
            within = ((i_days - 1) * self.stds * self.stds) * act
            gmean = self.means.mean(axis=0)
            between = i_days * (self.means - gmean) ** 2
            tss = within.sum(axis=0) + between.sum(axis=0)
            gvar = tss / (i_days * self.k_slices - 1)
            self._global_std = tuple(float(v) for v in np.sqrt(gvar))
        return self._global_std

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TpcaModel):
            return NotImplemented
        scalars = (
            self.rank == other.rank
            and self.n_days == other.n_days
            and self.confidence == other.confidence
            and self.threshold == other.threshold
            and self.eps == other.eps
            and self.ucl == other.ucl
            and self.variable_names == other.variable_names
        )
        if not scalars:
            return False
        pairs = (
            (self.means, other.means),
            (self.stds, other.stds),
            (self.active, other.active),
            (self.nactive, other.nactive),
            (self.loadings, other.loadings),
            (self.eigenvalues, other.eigenvalues),
            (self.explained, other.explained),
        )
        # bit-exact comparison, deliberately stricter than np.array_equal
        return all(
            a.shape == b.shape and a.tobytes() == b.tobytes() for a, b in pairs
        )

    def __repr__(self) -> str:
        return (
            "TpcaModel(rank=%d, n_days=%d, n_vars=%d, k_slices=%d, "
            "confidence=%g, ucl=%.6g)"
            % (
                self.rank,
                self.n_days,
                self.n_vars,
                self.k_slices,
                self.confidence,
                self.ucl,
            )
        )


class _SliceView:
    """Lazy sequence of SliceModels over a TpcaModel's dense arrays."""

    def __init__(self, model: TpcaModel) -> None:
        self._model = model

    def __len__(self) -> int:
        return self._model.k_slices

    def __getitem__(self, k: int) -> SliceModel:
        m = self._model
        if not 0 <= k < m.k_slices:
            raise IndexError("slice index %d out of range" % k)
        na = int(m.nactive[k])
        stats = SliceStats(
            k=k,
            mean=tuple(float(v) for v in m.means[k]),
            std=tuple(float(v) for v in m.stds[k]),
            active=tuple(bool(v) for v in m.active[k]),
        )
        return SliceModel(
            k=k,
            stats=stats,
            loadings=m.loadings[k].copy(),
            eigenvalues=tuple(float(v) for v in m.eigenvalues[k]),
            explained=tuple(float(v) for v in m.explained[k, :na]),
        )


def _alloc_outputs(k_slices: int, n_vars: int):
    return (
        np.zeros((k_slices, n_vars), dtype=np.float64),
        np.zeros((k_slices, n_vars), dtype=np.float64),
        np.zeros((k_slices, n_vars), dtype=np.uint8),
        np.zeros(k_slices, dtype=np.int32),
        np.zeros((k_slices, n_vars), dtype=np.float64),
        np.zeros((k_slices, n_vars, n_vars), dtype=np.float64),
        np.zeros(k_slices, dtype=np.int32),
    )


def _run_kernel(x: np.ndarray, outs, eps: float, threads: int):
    """Run the training kernel over all slices, chunked across threads."""
    k_slices = x.shape[1]
    workers = max(1, min(threads, k_slices))

    def run(k0: int, k1: int):
        return _backend.train_slices(
            x, k0, k1, eps, JACOBI_TOL, JACOBI_MAX_SWEEPS, EIGVAL_CLAMP, *outs
        )

    if workers == 1:
        results = [run(0, k_slices)]
    else:
        bounds = [k_slices * w // workers for w in range(workers + 1)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(run, bounds[w], bounds[w + 1]) for w in range(workers)
            ]
            results = [f.result() for f in futures]
    failures = [(k, code) for code, k in results if code != 0]
    if failures:
        k, code = min(failures)
        if code == 1:
            raise DegenerateSliceError(k)
        raise EigenConvergenceError(k)


def train_slice(xk, rank: int, k: int = 0, eps: float = EPS_STD) -> SliceModel:
    """Fit one slice's PCA and truncate to ``rank`` components.

    ``rank`` must not exceed the slice's active-variable count and must
    stay below the row (day) count.
    """
    x = np.ascontiguousarray(xk, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("slice matrix must be 2-D with at least 2 rows")
    i_days, n_vars = x.shape
    if rank < 1:
        raise ValueError("rank must be at least 1")
    if rank >= i_days:
        raise ValueError(
            "rank %d requires more than %d training days" % (rank, i_days)
        )
    outs = _alloc_outputs(1, n_vars)
    code, _ = _backend.train_slices(
        x[:, None, :], 0, 1, eps, JACOBI_TOL, JACOBI_MAX_SWEEPS, EIGVAL_CLAMP, *outs
    )
    if code == 1:
        raise DegenerateSliceError(k)
    if code == 2:
        raise EigenConvergenceError(k)
    means, stds, active, nactive, eigvals, vecs, _ = outs
    na = int(nactive[0])
    if rank > na:
        raise ValueError(
            "rank %d exceeds the %d active variables at slice %d" % (rank, na, k)
        )
    lams = [float(v) for v in eigvals[0, :na]]
    if lams[rank - 1] <= 0.0:
        raise TrainingError(
            "retained component %d has zero variance at slice %d" % (rank, k)
        )
    stats = SliceStats(
        k=k,
        mean=tuple(float(v) for v in means[0]),
        std=tuple(float(v) for v in stds[0]),
        active=tuple(bool(v) for v in active[0]),
    )
    return SliceModel(
        k=k,
        stats=stats,
        loadings=vecs[0, :, :rank].copy(),
        eigenvalues=tuple(lams[:rank]),
        explained=tuple(_cumulative_explained(lams)),
    )


def select_global_r(per_slice_explained, threshold: float) -> int:
    """Smallest rank whose explained variance clears ``threshold`` on
    every slice.

    Each entry of ``per_slice_explained`` is one slice's cumulative
    explained fractions for ranks 1..n_active.  Candidate ranks stop at
    the smallest active count (a slice cannot lend more components than
    it has), so a threshold nobody can reach raises ThresholdError
    naming the worst slices.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1), got %r" % threshold)
    lists = [list(e) for e in per_slice_explained]
    if not lists:
        raise ValueError("need at least one slice")
    if any(len(e) == 0 for e in lists):
        raise ValueError("every slice needs at least one component")
    max_rank = min(len(e) for e in lists)
    for r in range(1, max_rank + 1):
        if min(e[r - 1] for e in lists) >= threshold:
            return r
    ceilings = sorted(
        ((e[max_rank - 1], k) for k, e in enumerate(lists)),
    )[:5]
    raise ThresholdError(
        threshold, max_rank, [(k, val) for val, k in ceilings]
    )


def train(
    tensor,
    confidence: float = DEFAULT_CONFIDENCE,
    threshold: float = DEFAULT_THRESHOLD,
    eps: float = EPS_STD,
) -> TpcaModel:
    """Train the full per-slice model from a complete training tensor."""
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must be in (0, 1), got %r" % confidence)
    i_days = tensor.n_days
    k_slices = tensor.k_slices
    n_vars = tensor.n_vars
    if i_days < 3:
        raise TrainingError(
            "need at least 3 training days (got %d): the control limit "
            "requires day count to exceed the retained rank" % i_days
        )
    x = np.ascontiguousarray(tensor.x, dtype=np.float64)
    outs = _alloc_outputs(k_slices, n_vars)
    _run_kernel(x, outs, eps, _thread_count())
    means, stds, active, nactive, eigvals, vecs, _ = outs

    explained_dense = np.ones((k_slices, n_vars), dtype=np.float64)
    explained_lists: list[list[float]] = []
    for k in range(k_slices):
        na = int(nactive[k])
        cum = _cumulative_explained([float(v) for v in eigvals[k, :na]])
        explained_dense[k, :na] = cum
        explained_lists.append(cum)

    rank = select_global_r(explained_lists, threshold)
    if rank >= i_days:
        raise TrainingError(
            "threshold %g needs rank %d, but only %d training days are "
            "available; add days or lower the threshold" % (threshold, rank, i_days)
        )
    retained = eigvals[:, :rank]
    if not (retained > 0.0).all():
        bad = int(np.argwhere(~(retained > 0.0))[0][0])
        raise TrainingError(
            "retained component with zero variance at slice %d" % bad
        )
    ucl = ucl_formula(i_days, rank, confidence)
    return TpcaModel(
        rank=rank,
        n_days=i_days,
        confidence=confidence,
        threshold=threshold,
        eps=eps,
        ucl=ucl,
        variable_names=tuple(tensor.variable_names),
        means=means,
        stds=stds,
        active=active,
        nactive=nactive,
        loadings=np.ascontiguousarray(vecs[:, :, :rank]),
        eigenvalues=np.ascontiguousarray(retained),
        explained=explained_dense,
    )
