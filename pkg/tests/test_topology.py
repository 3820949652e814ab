import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from modmetric import fixtures, topology
from modmetric.core import PointSpace, from_saturating_metric, scaled_power, step_modular
from modmetric.gauges import DistanceMatrix, gauge_matrix
from modmetric.topology import (
    MUTUAL,
    adequacy_defect,
    ball,
    chain_closure,
    composition_check,
    delta2_diagnostic,
    entourage,
    fuzzy_ball,
    fuzzy_from_metric,
    fuzzy_refinement,
    metrize_uniformity,
    refinement_compare,
)

from strategies import point_spaces


def _pair(d):
    return PointSpace.from_matrix([[0.0, d], [d, 0.0]])


def _brute_adequacy(d, anchors):
    n = len(d)
    worst = -math.inf
    for x1 in range(n):
        for x2 in range(n):
            rec = max(d[a][x2] - d[a][x1] for a in anchors)
            worst = max(worst, d[x1][x2] - rec)
    return worst


# balls and entourages

def test_ball_examples():
    w = scaled_power(_pair(2.0), 1)
    b = ball(w, 1.0, 1.0, 0)
    assert 1 not in b and 0 in b
    assert ball(w, 1.0, 1e300, 0).members == {0, 1}


@given(point_spaces(), st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 10))
def test_ball_monotone(space, m1, m2, l1, l2):
    w = scaled_power(space, 1)
    m1, m2 = sorted((m1, m2))
    l1, l2 = sorted((l1, l2))
    assert ball(w, l1, m1, 0).members <= ball(w, l1, m2, 0).members
    assert ball(w, l1, m1, 0).members <= ball(w, l2, m1, 0).members


def test_entourage_excludes_close_pair():
    w = scaled_power(_pair(0.05), 1)
    v = entourage(w, 10)
    assert (0, 1) not in v and (0, 0) in v and (1, 1) in v


@given(point_spaces(), st.sampled_from(["scaled1", "scaled2", "saturating", "step"]))
def test_composition_on_builders(space, kind):
    w = {"scaled1": lambda s: scaled_power(s, 1), "scaled2": lambda s: scaled_power(s, 2),
         "saturating": lambda s: from_saturating_metric(s, lambda t: t), "step": step_modular}[kind](space)
    for n in range(1, 9):
        assert composition_check(w, n).passed


def test_composition_witness_for_non_modular():
    from modmetric.core import from_function
    d = np.array([[0, 0.4, 1.5], [0.4, 0, 0.4], [1.5, 0.4, 0]])
    w = from_function(PointSpace(("a", "b", "c")), lambda lam, i, j: d[i, j])
    fails = [composition_check(w, n) for n in range(1, 17)]
    bad = [r for r in fails if r.failed]
    assert bad and {"x", "z", "y", "n"} <= set(bad[0].witness)


# metrization

def test_metrize_levels():
    # w(1/n) = n d < 1/n iff d < 1/n**2
    w = scaled_power(_pair(0.1), 1)
    m = metrize_uniformity(w, 8)
    assert m.meta["raw"][0, 1] == 1 / 8
    assert m.meta["raw"][0, 0] == 2.0 ** -8 and m.values[0, 0] == 0.0
    far = metrize_uniformity(scaled_power(_pair(2.0), 1), 8)
    assert far.values[0, 1] == 1.0


@given(point_spaces(), st.integers(1, 10))
def test_metrize_is_pseudometric(space, n_max):
    m = metrize_uniformity(scaled_power(space, 1), n_max)
    assert m.violations() == []


def test_chain_closure_triangle():
    raw = np.array([[0, 1, 0.1], [1, 0, 0.1], [0.1, 0.1, 0]])
    assert chain_closure(raw)[0, 1] == pytest.approx(0.2)


# refinement

@given(point_spaces())
def test_refinement_reflexive(space):
    m = gauge_matrix(scaled_power(space, 1), "d0")
    assert refinement_compare(m, m, [1.0, 0.5, 0.1]).direction == MUTUAL


@given(point_spaces(), st.floats(0.1, 10))
def test_refinement_scaling_invariant(space, c):
    w = scaled_power(space, 1)
    a = metrize_uniformity(w, 6)
    b = gauge_matrix(w, "d0")
    radii = [1.0, 0.5, 0.25]
    v1 = refinement_compare(a, b, radii).direction
    v2 = refinement_compare(a.scaled(c), b.scaled(c), [r * c for r in radii]).direction
    assert v1 == v2


def test_refinement_step_not_mutual():
    w = fixtures.step_fixture()
    v = refinement_compare(metrize_uniformity(w, 8), gauge_matrix(w, "d0"), [1.0, 0.5, 0.25, 0.125])
    assert v.direction in (topology.B_REFINES_A, topology.NEITHER)
    assert v.witnesses
    # V_8 = {d <= 1/8} holds the pair (0, 0.125) but the open d0 ball of radius 1/8 does not
    assert any(wit["point"] == 0 and 1 in wit["escaping"] for wit in v.witnesses)


def test_refinement_scaled_fixture_mutual():
    w = fixtures.scaled_fixture()
    v = refinement_compare(metrize_uniformity(w, 8), gauge_matrix(w, "d0"), [1.0, 0.5, 0.25, 0.125])
    assert v.direction == MUTUAL


def test_refinement_shape_mismatch():
    with pytest.raises(ValueError):
        refinement_compare(DistanceMatrix(np.zeros((2, 2))), DistanceMatrix(np.zeros((3, 3))), [1.0])


# delta2

def test_delta2_step_violation():
    w, seqs, lambdas = fixtures.delta2_step_fixture()
    rep = delta2_diagnostic(w, seqs, lambdas, horizon=10)
    assert rep.failed
    assert rep.witness["w_lambda"] == 0.0 and rep.witness["w_half_lambda"] == math.inf
    assert rep.witness["k"] >= 2


def test_delta2_scaled_no_violation():
    # d(x_k, x) = 1/k, then the sequence reaches x
    coords = [0.0] + [1.0 / k for k in range(1, 9)]
    w = scaled_power(PointSpace.from_points(np.array(coords)), 1)
    seq = list(range(1, 9)) + [0] * 8
    rep = delta2_diagnostic(w, [(seq, 0)], [1.0, 0.5], horizon=10)
    assert rep.passed and rep.message == "no violation found"
    assert rep.evidence["premises_checked"] == 2


def test_delta2_constant_sequence():
    w = fixtures.step_fixture()
    assert delta2_diagnostic(w, [([2] * 6, 2)], [1.0], horizon=3).passed


# fuzzy

def test_fuzzy_values():
    d = DistanceMatrix(np.array([[0.0, 3.0], [3.0, 0.0]]))
    m = fuzzy_from_metric(d, 1.0)
    assert m[0, 1] == 0.25 and m[0, 0] == 1.0


@given(point_spaces(), st.floats(0.1, 5), st.floats(0.05, 0.95))
def test_fuzzy_ball_identity(space, t, r):
    d = DistanceMatrix(space.distance)
    m = fuzzy_from_metric(d, t)
    for x in range(space.n):
        expect = {int(y) for y in np.flatnonzero(space.distance[x] < t * r / (1 - r))}
        assert fuzzy_ball(m, x, r) == expect


@given(point_spaces())
def test_fuzzy_refinement_mutual(space):
    v = fuzzy_refinement(DistanceMatrix(space.distance), [0.5, 1.0, 2.0], [0.1, 0.25, 0.5, 0.75])
    assert v.direction == MUTUAL


# adequacy

@given(point_spaces())
def test_adequacy_full_set_zero(space):
    assert adequacy_defect(space.distance, range(space.n)) == 0.0


def test_adequacy_two_points():
    d = [[0.0, 3.0], [3.0, 0.0]]
    got = adequacy_defect(np.array(d), [0])
    assert got == _brute_adequacy(d, [0]) == 6.0


def test_adequacy_equilateral():
    d = np.ones((3, 3)) - np.eye(3)
    worst, pair = adequacy_defect(d, [0], per_pair=True)
    assert worst == _brute_adequacy(d.tolist(), [0]) == 2.0
    assert pair[1, 2] == 1.0


@given(point_spaces(), st.data())
def test_adequacy_matches_brute_force(space, data):
    anchors = data.draw(st.lists(st.integers(0, space.n - 1), min_size=1, max_size=space.n, unique=True))
    got = adequacy_defect(space.distance, anchors)
    assert got == pytest.approx(_brute_adequacy(space.distance.tolist(), anchors), abs=1e-12)
    assert got >= -1e-12
