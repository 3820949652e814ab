import numpy as np
import pytest
from hypothesis import given, strategies as st

from modmetric import fixtures
from modmetric.compactness import (
    NetCover,
    SequenceTrace,
    cauchy_equivalence,
    cauchy_subsequence,
    compactness_verdict,
    epsilon_net,
    is_v_cauchy,
)
from modmetric.core import PointSpace, from_saturating_metric, scaled_power
from modmetric.gauges import DistanceMatrix, gauge_matrix
from modmetric.report import PreconditionError

from strategies import point_spaces


def _harmonic(K):
    return PointSpace.from_points(np.array([1.0 / k for k in range(1, K + 1)]))


def _alternating():
    return PointSpace.from_points(np.array([0.0, 1.0]))


# V-Cauchy

def test_constant_is_v_cauchy():
    w = scaled_power(_alternating(), 1)
    assert is_v_cauchy([1] * 10, w, 20).passed


def test_harmonic_is_v_cauchy():
    w = scaled_power(_harmonic(80), 1)
    assert is_v_cauchy(list(range(80)), w, 3, horizon=40).passed


def test_alternating_fails_at_first_level():
    w = scaled_power(_alternating(), 1)
    rep = is_v_cauchy([0, 1] * 6, w, 4)
    assert rep.failed and rep.witness["n"] == 1


# Cauchy equivalence

def test_equivalence_examples():
    w = scaled_power(_harmonic(80), 1)
    rep = cauchy_equivalence(list(range(80)), w, 3, horizon=40)
    assert rep.passed and set(rep.evidence["classification"].values()) == {True}
    assert cauchy_equivalence([5] * 8, w, 8).evidence["classification"] == {
        "v_cauchy": True, "d0_cauchy": True, "dstar_cauchy": True}
    alt = cauchy_equivalence([0, 1] * 6, scaled_power(_alternating(), 1), 4)
    assert alt.passed and set(alt.evidence["classification"].values()) == {False}


def test_equivalence_needs_convexity():
    w = from_saturating_metric(_alternating(), lambda t: t)
    with pytest.raises(PreconditionError):
        cauchy_equivalence([0, 1], w, 2)


@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([1.0, 2.0, 3.0]))
def test_equivalence_random_traces(seed, p):
    space = fixtures.random_metric(6, seed, min_separation=0.05)
    w = scaled_power(space, p)
    rng = np.random.default_rng(seed)
    trace = rng.integers(6, size=int(rng.integers(4, 16))).tolist()
    if rng.random() < 0.5:
        trace += [trace[-1]] * len(trace)
    assert cauchy_equivalence(trace, w, 64).passed


# nets

def test_net_examples():
    d = np.ones((5, 5)) - np.eye(5)
    assert len(epsilon_net(d, 2.0)) == 1
    assert len(epsilon_net(d, 0.5)) == 5
    assert len(epsilon_net(np.zeros((1, 1)), 1e-6)) == 1
    with pytest.raises(ValueError):
        epsilon_net(d, 0.0)


@given(point_spaces(max_n=8), st.floats(0.01, 2.0), st.floats(0.01, 2.0))
def test_net_cover_and_monotone(space, e1, e2):
    d = space.distance
    e1, e2 = sorted((e1, e2))
    for eps in (e1, e2):
        net = epsilon_net(d, eps)
        assert all(d[p, c] < eps for p, c in net.assignment.items())
        assert set(net.assignment) == set(range(space.n))
    assert len(epsilon_net(d, e1)) >= len(epsilon_net(d, e2))


def test_net_json_roundtrip():
    net = epsilon_net(np.ones((3, 3)) - np.eye(3), 0.5)
    back = NetCover.from_dict(__import__("json").loads(net.to_json()))
    assert back == net


# subsequences

def test_subsequence_of_cauchy_trace_keeps_tail():
    d = np.zeros((1, 1))
    sub = cauchy_subsequence([0] * 10, d, [0.5, 0.25])
    assert sub.indices == list(range(10)) and not sub.partial


def test_subsequence_picks_one_cluster():
    # clusters {0, 1} and {2, 3} far apart
    space = PointSpace.from_points(np.array([0.0, 0.01, 5.0, 5.01]))
    trace = [0, 2, 1, 3, 0, 2, 1, 3, 0, 2]
    sub = cauchy_subsequence(trace, space.distance, [1.0, 0.5])
    pts = {trace[i] for i in sub.indices}
    assert pts <= {0, 1} or pts <= {2, 3}
    assert sub.indices == sorted(sub.indices)


def test_subsequence_pigeonhole():
    d = np.ones((3, 3)) - np.eye(3)
    trace = [0, 1, 2] * 5
    sub = cauchy_subsequence(trace, d, [0.9, 0.5])
    assert len({trace[i] for i in sub.indices}) == 1


@given(st.integers(0, 2 ** 31 - 1))
def test_subsequence_is_v_cauchy_for_clusters(seed):
    rng = np.random.default_rng(seed)
    centers = np.array([0.0, 10.0, 20.0])
    pts = np.concatenate([c + rng.uniform(0, 1e-4, 4) for c in centers])
    space = PointSpace.from_points(pts)
    trace = rng.integers(12, size=40).tolist()
    levels = [5.0, 1.0, 0.5]
    sub = cauchy_subsequence(trace, space.distance, levels)
    chosen = [trace[i] for i in sub.indices]
    w = scaled_power(space, 1)
    # all chosen points sit in one cluster, within the V_n for n <= 10
    assert max(space.distance[np.ix_(chosen, chosen)].ravel()) < 1e-3
    assert is_v_cauchy(chosen, w, 10, horizon=0).passed


# verdicts

@given(point_spaces(max_n=7))
def test_finite_space_is_compact_evidence(space):
    traces = [SequenceTrace([i] * 4, i) for i in range(space.n)]
    rep = compactness_verdict(space.distance, None, [0.5, 0.1], traces)
    assert rep.passed


def test_separated_family_is_non_precompact_evidence():
    for k in (8, 12, 16):
        d = np.ones((k, k)) - np.eye(k)
        rep = compactness_verdict(d, None, [0.5], [])
        assert rep.failed and rep.witness["net_size"] == k


def test_missing_limit_is_completeness_failure():
    # harmonic points without their limit 0
    space = PointSpace.from_points(np.array([1.0 / k for k in range(1, 41)]))
    tr = SequenceTrace(list(range(40)))
    rep = compactness_verdict(space.distance, None, [0.1], [tr], horizon=20)
    assert rep.failed and rep.witness["sup_distance"] > 0


def test_verdict_records_d0_nets():
    w = scaled_power(fixtures.random_metric(5, 3), 1)
    rep = compactness_verdict(gauge_matrix(w, "dstar"), w, [0.5], [])
    assert rep.evidence["d0_net_sizes"][0]["epsilon"] == 0.5
