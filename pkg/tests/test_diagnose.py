"""Contribution decomposition and fault-event grouping."""

import numpy as np
import pytest

from tvspc import (
    DimensionMismatchError,
    MonitorPoint,
    Observation,
    contributions,
    detect_events,
    monitor_point,
    monitor_series,
    train,
)


def test_contributions_sum_to_t2(model, noc_tensor):
    rng = np.random.default_rng(50)
    for _ in range(100):
        k = int(rng.integers(0, model.k_slices))
        x = noc_tensor.x[int(rng.integers(0, 12)), k, :] + rng.normal(
            0.0, 3.0, model.n_vars
        )
        obs = Observation(k=k, x=tuple(x))
        diag = contributions(model, obs)
        pt = monitor_point(model, obs)
        assert diag.k == k
        assert diag.ucl == model.ucl
        assert abs(diag.t2 - pt.t2) < 1e-10 * max(1.0, pt.t2)
        total = sum(diag.contributions)
        assert abs(total - diag.t2) <= 1e-8 * max(1.0, abs(diag.t2))


def test_single_variable_deviation_is_faithful(model):
    # only variable j deviates: every other contribution is exactly its
    # standardized zero, and variable j carries the whole T-squared
    rng = np.random.default_rng(51)
    for _ in range(30):
        k = int(rng.integers(0, model.k_slices))
        j = int(rng.integers(0, model.n_vars))
        x = model.means[k].copy()
        x[j] += rng.uniform(2.0, 8.0) * model.stds[k][j]
        diag = contributions(model, Observation(k=k, x=tuple(x)))
        others = [diag.contributions[i] for i in range(model.n_vars) if i != j]
        assert max(abs(c) for c in others) <= 1e-10
        assert abs(diag.contributions[j] - diag.t2) <= 1e-10 * max(1.0, diag.t2)
        assert diag.root_cause == j
        assert diag.ranking[0] == j


def test_variable_scores_decompose_scores(model):
    rng = np.random.default_rng(52)
    k = 17
    x = model.means[k] + rng.normal(0.0, 2.0, model.n_vars) * model.stds[k]
    diag = contributions(model, Observation(k=k, x=tuple(x)))
    pt = monitor_point(model, Observation(k=k, x=tuple(x)))
    vs = np.array(diag.variable_scores)  # (J, R)
    assert vs.shape == (model.n_vars, model.rank)
    assert np.abs(vs.sum(axis=0) - np.array(pt.scores)).max() < 1e-10


def test_ranking_orders_by_contribution_ties_by_index():
    # hand-built diagnosis path: a model whose slice is the identity
    # correlation gives contribution xh_j^2 per variable
    rng = np.random.default_rng(53)
    i = 400

    from tvspc import TrainingTensor
    from datetime import date, timedelta

    xs = rng.standard_normal((i, 3, 4))
    tensor = TrainingTensor(
        x=xs,
        day_ids=tuple(date(2021, 1, 1) + timedelta(days=d) for d in range(i)),
        variable_names=("a", "b", "c", "d"),
    )
    model = train(tensor, threshold=0.99)
    k = 1
    xv = model.means[k] + np.array([2.0, -2.0, 0.0, 0.0]) * model.stds[k]
    diag = contributions(model, Observation(k=k, x=tuple(xv)))
    ranked = list(diag.ranking)
    assert ranked[0] in (0, 1)
    contrib = diag.contributions
    assert all(
        contrib[ranked[t]] >= contrib[ranked[t + 1]] for t in range(3)
    )
    # exact tie falls to the lower variable index
    tie = contributions(model, Observation(k=k, x=tuple(model.means[k])))
    assert tie.t2 == 0.0
    assert tie.ranking == (0, 1, 2, 3)
    assert tie.root_cause == 0


def test_contributions_validation(model):
    j = model.n_vars
    with pytest.raises(ValueError):
        contributions(model, Observation(k=model.k_slices, x=(0.0,) * j))
    with pytest.raises(DimensionMismatchError):
        contributions(model, Observation(k=0, x=(0.0,) * (j + 1)))
    bad = [0.0] * j
    bad[0] = float("inf")
    with pytest.raises(ValueError):
        contributions(model, Observation(k=0, x=tuple(bad)))


def fake_point(k, t2, ucl=10.0):
    return MonitorPoint(
        k=k, scores=(0.0,), t2=t2, ucl=ucl, fault=t2 > ucl,
        inactive_deviation=(False,),
    )


def fake_diag(k, t2, cause):
    contrib = [0.0, 0.0, 0.0]
    contrib[cause] = t2
    return type(
        "D", (), {"k": k, "t2": t2, "root_cause": cause, "contributions": contrib}
    )()


def test_detect_events_gap_tolerance():
    ks = [2, 3, 5, 7, 20]
    pts = [fake_point(k, 50.0) for k in ks] + [fake_point(30, 1.0)]
    diags = [fake_diag(k, 50.0, 0) for k in ks] + [fake_diag(30, 1.0, 0)]

    strict = detect_events(pts, diags, gap_tolerance=0)
    assert [(e.start_k, e.end_k) for e in strict] == [
        (2, 3), (5, 5), (7, 7), (20, 20),
    ]
    loose = detect_events(pts, diags, gap_tolerance=1)
    assert [(e.start_k, e.end_k) for e in loose] == [(2, 7), (20, 20)]
    huge = detect_events(pts, diags, gap_tolerance=100)
    assert [(e.start_k, e.end_k) for e in huge] == [(2, 20)]


def test_detect_events_peak_and_vote():
    ks = [4, 5, 6, 7]
    t2s = [20.0, 90.0, 30.0, 25.0]
    causes = [1, 2, 1, 1]
    pts = [fake_point(k, t) for k, t in zip(ks, t2s)]
    diags = [fake_diag(k, t, c) for k, t, c in zip(ks, t2s, causes)]
    (event,) = detect_events(pts, diags)
    assert event.peak_k == 5
    assert event.peak_t2 == 90.0
    assert event.root_cause == 1  # majority, not the peak's cause
    assert event.root_cause_share == 0.75


def test_detect_events_vote_tie_takes_lower_index():
    ks = [1, 2]
    pts = [fake_point(k, 50.0) for k in ks]
    diags = [fake_diag(1, 50.0, 2), fake_diag(2, 50.0, 0)]
    (event,) = detect_events(pts, diags)
    assert event.root_cause == 0
    assert event.root_cause_share == 0.5


def test_detect_events_no_faults():
    pts = [fake_point(k, 1.0) for k in range(5)]
    diags = [fake_diag(k, 1.0, 0) for k in range(5)]
    assert detect_events(pts, diags) == []
    assert detect_events([], []) == []


def test_detect_events_validation():
    pts = [fake_point(1, 50.0)]
    diags = [fake_diag(2, 50.0, 0)]
    with pytest.raises(ValueError):
        detect_events(pts, diags)  # k mismatch
    with pytest.raises(ValueError):
        detect_events(pts, [])  # length mismatch
    with pytest.raises(ValueError):
        detect_events(pts, [fake_diag(1, 50.0, 0)], gap_tolerance=-1)


def test_detect_events_on_real_series(model, noc_tensor):
    # push two separated windows of one variable far out of control
    x = noc_tensor.x[0].copy()
    x[10:14, 0] += 60.0
    x[40:42, 0] += 60.0
    obs = [Observation(k=k, x=tuple(row)) for k, row in enumerate(x)]
    pts = monitor_series(model, obs)
    diags = [contributions(model, o) for o in obs]
    events = detect_events(pts, diags)
    spans = [(e.start_k, e.end_k) for e in events]
    assert (10, 13) in spans
    assert (40, 41) in spans
    for e in events:
        if (e.start_k, e.end_k) in ((10, 13), (40, 41)):
            assert e.root_cause == 0
            assert e.root_cause_share == 1.0
