"""Acceptance gate: the numbered criteria this package promises to meet.

Each criterion prints exactly one [PASS]/[FAIL] line to the real stdout
(bypassing pytest's capture), then asserts.  Tolerances and budgets are
part of the contract and are checked, not just reported.

Run order follows the criterion numbers; the heavyweight ones (the
100-seed detection gate, the full-day model) sit at the end.
"""

import sys
import time
from datetime import date, timedelta

import numpy as np
import pytest

from tvspc import (
    FParams,
    Observation,
    TpcaModel,
    TrainingTensor,
    FaultSpec,
    contributions,
    correlation_matrix,
    default_scenario,
    f_quantile,
    generate_day,
    generate_noc,
    inject_fault,
    load_model,
    load_slice,
    monitor_series,
    noc_std,
    save_model,
    slice_stats,
    standardize,
    symmetric_eigen,
    train,
    train_slice,
    ucl_formula,
)


@pytest.fixture
def report(capfd):
    """One visible [PASS]/[FAIL] line per criterion, capture or not."""

    def _report(num: int, name: str, ok: bool, detail: str = "") -> None:
        tail = (": " + detail) if detail else ""
        word = "PASS" if ok else "FAIL"
        with capfd.disabled():
            sys.stdout.write("\n[%s] criterion %d %s%s\n" % (word, num, name, tail))
            sys.stdout.flush()

    return _report


# ------------------------------------------------------------ criterion 1

def test_criterion_1_control_limit_value(report):
    got = ucl_formula(12, 1, 0.95)
    ok = 5.22 <= got <= 5.27
    report(1, "control limit UCL(12, 1, 0.95)", ok, "got %.6f" % got)
    assert ok


# ------------------------------------------------------------ criterion 2

F_QUANTILE_ORACLE = [
    # (p, d1, d2, value frozen from a 40-digit evaluation)
    (0.95, 1, 11, 4.84433567494),
    (0.95, 2, 18, 3.55455714566),
    (0.95, 2, 10, 4.10282101513),
    (0.95, 7, 5, 4.87587169583),
    (0.99, 1, 11, 9.64603411197),
    (0.99, 3, 9, 6.99191722223),
    (0.9, 4, 8, 2.80642570614),
    (0.95, 5, 7, 3.97152315061),
    (0.975, 2, 10, 5.45639552591),
    (0.9, 1, 30, 2.88069451716),
    (0.95, 6, 6, 4.28386571382),
    (0.99, 5, 20, 4.10268463058),
]


def test_criterion_2_f_quantile_accuracy(report):
    t0 = time.perf_counter()
    anchor = f_quantile(0.95, FParams(1, 11))
    anchor_ok = abs(anchor - 4.844) <= 0.002
    worst = 0.0
    for p, d1, d2, want in F_QUANTILE_ORACLE:
        got = f_quantile(p, FParams(d1, d2))
        worst = max(worst, abs(got - want) / want)
    elapsed = time.perf_counter() - t0
    ok = anchor_ok and worst <= 1e-3 and elapsed < 1.0
    report(
        2,
        "F quantile oracle (%d points)" % len(F_QUANTILE_ORACLE),
        ok,
        "max rel err %.2e, %.3fs" % (worst, elapsed),
    )
    assert anchor_ok
    assert worst <= 1e-3
    assert elapsed < 1.0


# ------------------------------------------------------------ criterion 3

def test_criterion_3_pca_invariants_1000_slices(report):
    rng = np.random.default_rng(20210601)
    t0 = time.perf_counter()
    n_slices, i, j = 1000, 12, 7
    worst = dict.fromkeys(
        ("trace", "ortho", "recon", "score_var", "residual"), 0.0
    )
    for _ in range(n_slices):
        xk = rng.standard_normal((i, j)) * rng.uniform(0.2, 5.0, j) + rng.uniform(
            -10.0, 10.0, j
        )
        st = slice_stats(xk)
        xhat = np.array([standardize(row, st) for row in xk])
        s = correlation_matrix(xhat)
        res = symmetric_eigen(s)
        lam = np.array(res.eigenvalues)
        v = res.vectors

        worst["trace"] = max(worst["trace"], abs(lam.sum() - np.trace(s)))
        worst["ortho"] = max(
            worst["ortho"], np.abs(v.T @ v - np.eye(j)).max()
        )
        worst["recon"] = max(
            worst["recon"], np.abs(v @ np.diag(lam) @ v.T - s).max()
        )
        scores = xhat @ v
        worst["score_var"] = max(
            worst["score_var"],
            np.abs(scores.var(axis=0, ddof=1) - lam).max(),
        )
        r = int(rng.integers(1, j))
        recon = scores[:, :r] @ v[:, :r].T
        energy = float(((xhat - recon) ** 2).sum()) / (i - 1)
        tail = float(lam[r:].sum())
        worst["residual"] = max(
            worst["residual"], abs(energy - tail) / max(tail, 1e-300)
        )
    elapsed = time.perf_counter() - t0
    ok = (
        worst["trace"] < 1e-10
        and worst["ortho"] < 1e-10
        and worst["recon"] < 1e-8
        and worst["score_var"] < 1e-8
        and worst["residual"] < 1e-6
        and elapsed < 10.0
    )
    report(
        3,
        "PCA invariants on %d random slices" % n_slices,
        ok,
        "trace %.1e, ortho %.1e, recon %.1e, scorevar %.1e, residual %.1e, %.2fs"
        % (
            worst["trace"],
            worst["ortho"],
            worst["recon"],
            worst["score_var"],
            worst["residual"],
            elapsed,
        ),
    )
    assert worst["trace"] < 1e-10
    assert worst["ortho"] < 1e-10
    assert worst["recon"] < 1e-8
    assert worst["score_var"] < 1e-8
    assert worst["residual"] < 1e-6
    assert elapsed < 10.0


# ------------------------------------------------------------ criterion 4

def test_criterion_4_training_t2_statistics(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(41)
    i, k_slices, j = 12, 16, 7
    x = rng.standard_normal((i, k_slices, j)) * rng.uniform(
        0.5, 2.0, (k_slices, j)
    ) + rng.uniform(-4.0, 4.0, (k_slices, j))

    # identity: over the training days the mean T-squared per slice is
    # exactly R(I-1)/I for every truncation rank
    worst = 0.0
    for rank in range(1, 7):
        want = rank * (i - 1) / i
        for k in range(k_slices):
            sm = train_slice(x[:, k, :], rank, k=k)
            xhat = np.array([standardize(row, sm.stats) for row in x[:, k, :]])
            scores = xhat @ sm.loadings
            t2 = (scores**2 / np.array(sm.eigenvalues)).sum(axis=1)
            worst = max(worst, abs(float(t2.mean()) - want))

    # and with the control limit at 0.95 the bulk of training points
    # sit below it
    tensor = generate_noc(default_scenario(i_days=12, seed=441), 360)
    model = train(tensor)
    below = total = 0
    for d in range(12):
        obs = [
            Observation(k=k, x=tuple(tensor.x[d, k, :]))
            for k in range(tensor.k_slices)
        ]
        for p in monitor_series(model, obs):
            below += 0 if p.fault else 1
            total += 1
    frac = below / total
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and frac >= 0.90 and elapsed < 10.0
    report(
        4,
        "training T2 statistics",
        ok,
        "max |mean T2 - R(I-1)/I| %.1e, %.1f%% below UCL, %.2fs"
        % (worst, 100.0 * frac, elapsed),
    )
    assert worst < 1e-8
    assert frac >= 0.90
    assert elapsed < 10.0


# ------------------------------------------------------------ criterion 5

def test_criterion_5_contribution_completeness(model, report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(51)
    n = 10000
    worst_sum = 0.0
    for _ in range(n):
        k = int(rng.integers(0, model.k_slices))
        x = model.means[k] + rng.normal(0.0, 2.5, model.n_vars) * model.stds[k]
        diag = contributions(model, Observation(k=k, x=tuple(x)))
        err = abs(sum(diag.contributions) - diag.t2)
        worst_sum = max(worst_sum, err / max(abs(diag.t2), 1e-300))

    # single-variable deviations at full rank: the lone deviating
    # variable carries the whole statistic
    xr = rng.standard_normal((12, 8, 7)) * 1.5 + 0.5
    full = train(
        TrainingTensor(
            x=xr,
            day_ids=tuple(date(2021, 1, 1) + timedelta(days=d) for d in range(12)),
            variable_names=tuple("v%d" % t for t in range(7)),
        ),
        threshold=1.0 - 1e-12,
    )
    assert full.rank == 7
    worst_off = worst_self = 0.0
    for _ in range(200):
        k = int(rng.integers(0, full.k_slices))
        jj = int(rng.integers(0, 7))
        x = full.means[k].copy()
        x[jj] += rng.uniform(1.0, 6.0) * full.stds[k][jj]
        diag = contributions(full, Observation(k=k, x=tuple(x)))
        off = max(
            abs(diag.contributions[t]) for t in range(7) if t != jj
        )
        worst_off = max(worst_off, off)
        worst_self = max(
            worst_self, abs(diag.contributions[jj] - diag.t2) / max(diag.t2, 1e-300)
        )
    elapsed = time.perf_counter() - t0
    ok = (
        worst_sum <= 1e-8
        and worst_off <= 1e-10
        and worst_self <= 1e-10
        and elapsed < 5.0
    )
    report(
        5,
        "contribution completeness (%d observations)" % n,
        ok,
        "sum rel err %.1e, off-var %.1e, self rel err %.1e, %.2fs"
        % (worst_sum, worst_off, worst_self, elapsed),
    )
    assert worst_sum <= 1e-8
    assert worst_off <= 1e-10
    assert worst_self <= 1e-10
    assert elapsed < 5.0


# ------------------------------------------------------------ criterion 6

def test_criterion_6_detection_rates_100_seeds(report):
    t0 = time.perf_counter()
    k_slices = 3600
    window = range(1200, 1800)
    fault = FaultSpec(
        kind="spike", variable=0, start_k=1200, duration=600, magnitude=8.0
    )
    det_hit = det_total = 0
    far_hit = far_total = 0
    cause_hit = cause_total = 0
    for s in range(100):
        spec = default_scenario(i_days=12, seed=20230000 + s)
        model = train(generate_noc(spec, k_slices))
        sd0 = noc_std(spec, k_slices)[:, 0]

        clean = generate_day(spec, k_slices, 12)
        obs = [
            Observation(k=k, x=tuple(row)) for k, row in enumerate(clean.matrix)
        ]
        far_hit += sum(1 for p in monitor_series(model, obs) if p.fault)
        far_total += k_slices

        bad = inject_fault(generate_day(spec, k_slices, 13), fault, sd0)
        obs = [
            Observation(k=k, x=tuple(bad.matrix[k])) for k in window
        ]
        pts = monitor_series(model, obs)
        det_total += len(window)
        for p, o in zip(pts, obs):
            if p.fault:
                det_hit += 1
                cause_total += 1
                if contributions(model, o).root_cause == 0:
                    cause_hit += 1
    detection = det_hit / det_total
    far = far_hit / far_total
    cause = cause_hit / max(cause_total, 1)
    elapsed = time.perf_counter() - t0
    ok = detection >= 0.95 and far <= 0.08 and cause >= 0.95 and elapsed < 120.0
    report(
        6,
        "fault scenario over 100 seeds",
        ok,
        "detection %.4f, false alarms %.4f, root cause %.4f, %.1fs"
        % (detection, far, cause, elapsed),
    )
    assert detection >= 0.95
    assert far <= 0.08
    assert cause >= 0.95
    assert elapsed < 120.0


# ------------------------------------------------------------ criterion 7

def equicorrelation_slice(rng, n_rows, n_vars, first_explained):
    """12 x J data whose sample correlation is exactly equicorrelated.

    The equicorrelation matrix (1-rho) I + rho J has leading eigenvalue
    1 + (J-1) rho, so rho pins the first component's explained fraction
    exactly.  Rows are built as sqrt(I-1) Q C^{1/2} with Q orthonormal
    and orthogonal to the all-ones vector, which makes the sample
    column means exactly 0 and the sample covariance exactly C.
    """
    rho = (first_explained * n_vars - 1.0) / (n_vars - 1.0)
    c = np.full((n_vars, n_vars), rho)
    np.fill_diagonal(c, 1.0)
    w, v = np.linalg.eigh(c)
    root = v @ np.diag(np.sqrt(np.maximum(w, 0.0))) @ v.T
    m = rng.standard_normal((n_rows, n_vars))
    m -= m.mean(axis=0, keepdims=True)
    q, _ = np.linalg.qr(m)
    return np.sqrt(n_rows - 1.0) * q @ root


def test_criterion_7_rank_selection_thresholds(report):
    rng = np.random.default_rng(71)
    firsts = (0.7727, 0.80, 0.85)
    x = np.stack(
        [equicorrelation_slice(rng, 12, 7, f) for f in firsts], axis=1
    )
    tensor = TrainingTensor(
        x=x,
        day_ids=tuple(date(2021, 3, 1) + timedelta(days=d) for d in range(12)),
        variable_names=tuple("v%d" % t for t in range(7)),
    )
    low = train(tensor, threshold=0.75)
    high = train(tensor, threshold=0.80)
    min_first = float(low.explained[:, 0].min())
    ok = (
        abs(min_first - 0.7727) < 1e-9
        and low.rank == 1
        and high.rank >= 2
    )
    report(
        7,
        "rank selection at the threshold",
        ok,
        "min first-component %.6f, R(0.75)=%d, R(0.80)=%d"
        % (min_first, low.rank, high.rank),
    )
    assert abs(min_first - 0.7727) < 1e-9
    assert low.rank == 1
    assert high.rank >= 2


# ------------------------------------------------------------ criterion 8

def build_full_day_model(rng, k_slices=86400, n_vars=7):
    load = rng.standard_normal((k_slices, n_vars, 1))
    load /= np.linalg.norm(load, axis=1, keepdims=True)
    explained = np.sort(rng.uniform(0.76, 1.0, (k_slices, n_vars)), axis=1)
    explained[:, -1] = 1.0
    return TpcaModel(
        rank=1,
        n_days=12,
        confidence=0.95,
        threshold=0.75,
        eps=1e-9,
        ucl=ucl_formula(12, 1, 0.95),
        variable_names=tuple("chan_%d" % t for t in range(n_vars)),
        means=rng.normal(0.0, 50.0, (k_slices, n_vars)),
        stds=rng.uniform(0.1, 9.0, (k_slices, n_vars)),
        active=np.ones((k_slices, n_vars), dtype=np.uint8),
        nactive=np.full(k_slices, n_vars, dtype=np.int32),
        loadings=load,
        eigenvalues=rng.uniform(1.0, 6.0, (k_slices, 1)),
        explained=explained,
    )


def test_criterion_8_persistence_round_trip(tmp_path, report):
    t0 = time.perf_counter()
    model = build_full_day_model(np.random.default_rng(81))
    path = tmp_path / "day.tvspc"
    with open(path, "wb") as fh:
        n_bytes = save_model(model, fh)
    with open(path, "rb") as fh:
        loaded = load_model(fh)
    exact = loaded == model

    seek_ok = True
    for k in (0, 1, 43199, 86399):
        with open(path, "rb") as fh:
            got = load_slice(fh, k)
        want = loaded.slices[k]
        seek_ok = seek_ok and (
            got.k == want.k
            and got.stats == want.stats
            and got.eigenvalues == want.eigenvalues
            and got.explained == want.explained
            and got.loadings.tobytes() == want.loadings.tobytes()
        )
    elapsed = time.perf_counter() - t0
    ok = exact and seek_ok and elapsed < 5.0
    report(
        8,
        "86400-slice model round trip",
        ok,
        "%d bytes, bit-exact %s, seek-load %s, %.2fs"
        % (n_bytes, exact, seek_ok, elapsed),
    )
    assert exact
    assert seek_ok
    assert elapsed < 5.0


# ------------------------------------------------------------ criterion 9

def test_criterion_9_full_day_performance(report):
    k_slices = 86400
    tensor = generate_noc(default_scenario(i_days=12, seed=91), k_slices)
    t0 = time.perf_counter()
    model = train(tensor)
    train_s = time.perf_counter() - t0

    day = generate_day(default_scenario(i_days=12, seed=91), k_slices, 12)
    obs = [Observation(k=k, x=tuple(row)) for k, row in enumerate(day.matrix)]
    t0 = time.perf_counter()
    pts = monitor_series(model, obs)
    monitor_s = time.perf_counter() - t0
    ok = train_s < 60.0 and monitor_s < 5.0 and len(pts) == k_slices
    report(
        9,
        "full-day performance",
        ok,
        "train %.1fs (budget 60), monitor %.2fs (budget 5), rank %d"
        % (train_s, monitor_s, model.rank),
    )
    assert len(pts) == k_slices
    assert train_s < 60.0
    assert monitor_s < 5.0
