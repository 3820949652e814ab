"""Acceptance suite: fourteen end-to-end criteria at their stated tolerances.

Each test is one criterion. A pass/fail line per criterion is printed in the
terminal summary (see ``conftest.py``); running this file directly does the same.
"""

import itertools
import math
from pathlib import Path

import numpy as np
import pytest
from scipy.linalg import hadamard

from modmetric import cli, fixtures, topology
from modmetric.compactness import cauchy_equivalence, epsilon_net
from modmetric.core import (
    PointSpace,
    from_exponential_family,
    from_saturating_metric,
    from_scaled_metric,
    power_law,
    scaled_power,
    step_modular,
)
from modmetric.gauges import IDENTITY, SQUARE, DistanceMatrix, d0, d0_phi, d1_phi, dstar, gauge_matrix
from modmetric.orlicz import (
    DiscreteMeasureSpace,
    Partition,
    exp_squared,
    induced_modular,
    jensen_gap,
    kr_compactness,
    lp,
    variable_exponent,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SEED = 20240601


def _corpus():
    """50 random 8-point metric spaces, each with a scaled modular of exponent 1, 2 or 3."""
    out = []
    for k in range(50):
        space = fixtures.random_metric(8, SEED + k, dim=2)
        out.append(scaled_power(space, (1, 2, 3)[k % 3]))
    return out


def _oracle_net(d, eps):
    m = len(d)
    centers = [0]
    while True:
        gaps = [min(d[i][c] for c in centers) for i in range(m)]
        far = max(range(m), key=lambda i: (gaps[i], -i))
        if gaps[far] < eps:
            return centers
        centers.append(far)


def _lp_matrix(a, masses, p):
    return [[float((np.abs(u - v) ** p @ masses) ** (1 / p)) for v in a] for u in a]


def test_acceptance_01_closed_form_gauge():
    rng = np.random.default_rng(SEED)
    for p in (0, 1, 2, 3):
        ds = 100.0 - rng.uniform(0.0, 100.0, 200)  # in (0, 100]
        for d in ds:
            space = PointSpace.from_matrix([[0.0, d], [d, 0.0]])
            w = from_scaled_metric(space, power_law(p))
            assert abs(d0(w, 0, 1).value - d ** (1 / (p + 1))) <= 1e-8


def test_acceptance_02_sandwich():
    for w in _corpus():
        a = gauge_matrix(w, "d0").values
        s = gauge_matrix(w, "dstar").values
        lo, hi = np.minimum(s, np.sqrt(s)), np.maximum(s, np.sqrt(s))
        assert np.all(lo - 1e-8 <= a) and np.all(a <= hi + 1e-8)


def test_acceptance_03_phi_sandwich():
    for w in _corpus():
        for phi in (IDENTITY, SQUARE):
            for i, j in itertools.combinations(range(w.n), 2):
                a = d0_phi(w, phi, i, j).value
                b = d1_phi(w, phi, i, j, extra=[a]).value
                assert a <= b + 1e-8 and b <= 2 * a + 1e-8


def test_acceptance_04_lp_equivalence():
    rng = np.random.default_rng(SEED + 4)
    for p in (1.0, 2.0, 4.0):
        for _ in range(100):
            omega = DiscreteMeasureSpace(rng.uniform(0.05, 1.0, 8))
            u, v = rng.normal(size=(2, 8))
            w = induced_modular(lp(p), omega, [u, v])
            expect = float((np.abs(u - v) ** p @ omega.masses) ** (1 / p))
            assert abs(dstar(w, 0, 1).value - expect) <= 1e-8 * expect


def test_acceptance_05_delta2():
    w, seqs, lambdas = fixtures.delta2_step_fixture()
    rep = topology.delta2_diagnostic(w, seqs, lambdas, horizon=10)
    assert rep.failed and rep.witness
    scaled = fixtures.scaled_fixture(1.0)
    seqs = fixtures.delta2_scaled_sequences(scaled.space, 20, SEED, length=12)
    assert len(seqs) == 20
    rep = topology.delta2_diagnostic(scaled, seqs, [1.0, 0.5, 0.25], horizon=8)
    assert rep.passed and rep.message == "no violation found"


def test_acceptance_06_topology_refinement():
    radii = [1.0, 0.5, 0.25, 0.125]
    for k in range(20):
        w = scaled_power(fixtures.random_metric(6, SEED + 100 + k), 1)
        v = topology.refinement_compare(topology.metrize_uniformity(w, 8), gauge_matrix(w, "d0"), radii)
        assert v.direction == topology.MUTUAL
    step = fixtures.step_fixture()
    v = topology.refinement_compare(topology.metrize_uniformity(step, 8), gauge_matrix(step, "d0"), radii)
    assert v.direction != topology.MUTUAL and v.witnesses


def test_acceptance_07_cauchy_equivalence():
    rng = np.random.default_rng(SEED + 7)
    kinds = set()
    for k in range(100):
        space = fixtures.random_metric(6, SEED + 200 + k, min_separation=0.05)
        w = scaled_power(space, float(rng.choice([1.0, 2.0, 3.0])))
        trace = rng.integers(6, size=int(rng.integers(4, 16))).tolist()
        if k % 2:
            trace += [trace[-1]] * len(trace)
        rep = cauchy_equivalence(trace, w, 64)
        assert rep.passed, rep.witness
        kinds.add(rep.evidence["classification"]["v_cauchy"])
    assert kinds == {True, False}


def _builder_fixtures():
    out = []
    for k in range(4):
        space = fixtures.random_metric(6, SEED + 300 + k)
        out += [from_scaled_metric(space, power_law(p)) for p in (0, 1, 2, 3)]
        out += [from_saturating_metric(space, lambda t: t), from_saturating_metric(space, lambda t: t ** 2),
                step_modular(space)]
    rng = np.random.default_rng(SEED + 8)
    out.append(from_exponential_family(np.linspace(0, 3, 7), rng.normal(size=(5, 7))))
    omega = DiscreteMeasureSpace.uniform_grid(6)
    vecs = rng.normal(size=(5, 6))
    for phi in (lp(1), lp(2), exp_squared(), variable_exponent(np.linspace(1.5, 3, 6))):
        out.append(induced_modular(phi, omega, vecs))
    out += [fixtures.step_fixture(), fixtures.scaled_fixture(), fixtures.delta2_step_fixture()[0]]
    return out


def test_acceptance_08_entourage_composition():
    for w in _builder_fixtures():
        for n in range(1, 17):
            assert topology.composition_check(w, n).passed


def test_acceptance_09_kr_positive():
    sizes = []
    for n in (64, 128):
        a, omega = fixtures.lipschitz(n)
        assert a.shape[0] == 11
        rep = kr_compactness(a, lp(2), omega, [0.1])
        assert rep.passed, rep.witness
        lvl = rep.evidence["levels"][0]
        assert {"tightness", "emc", "averaging"} <= set(lvl["stages"])
        assert lvl["stages"]["averaging"]["jensen"]["worst_margin"] <= 1e-9
        size = lvl["net"]["size"]
        oracle = _oracle_net(_lp_matrix(a, omega.masses, 2), 0.1)
        assert size == len(oracle) and size <= 11
        sizes.append(size)
    assert sizes[0] == sizes[1]


def test_acceptance_10_kr_negative():
    a, omega = fixtures.rademacher(16, 64)
    assert np.array_equal(a, hadamard(64)[:16])
    w = induced_modular(lp(1), omega, a)
    for i, j in itertools.combinations(range(16), 2):
        assert abs(dstar(w, i, j).value - 1.0) <= 1e-9
    d = [[0.0 if i == j else dstar(w, i, j).value for j in range(16)] for i in range(16)]
    assert len(epsilon_net(np.array(d), 0.5)) == 16 == len(_oracle_net(d, 0.5))
    rep = kr_compactness(a, lp(1), omega, [0.5])
    assert rep.failed and rep.witness["stage"] == "net" and rep.witness["net_size"] == 16
    assert "non-compact" in rep.message


def test_acceptance_11_jensen():
    rng = np.random.default_rng(SEED + 11)
    for k in range(200):
        n = int(rng.integers(2, 17))
        omega = DiscreteMeasureSpace(rng.uniform(0.01, 1.0, n))
        phi = [lp(1), lp(2), lp(3.5), exp_squared(), variable_exponent(rng.uniform(1.1, 4.0, n))][k % 5]
        P = Partition.from_labels(rng.integers(0, int(rng.integers(1, n + 1)), n))
        u = rng.normal(size=n) * rng.uniform(0.1, 3.0)
        lhs, rhs = jensen_gap(u, P, phi, omega, float(rng.uniform(0.2, 5.0)))
        assert lhs <= rhs + 1e-9


def test_acceptance_12_fuzzy():
    ts, rs = [0.25, 0.5, 1.0, 2.0], [0.1, 0.25, 0.5, 0.75, 0.9]
    for k in range(20):
        space = fixtures.random_metric(6, SEED + 400 + k)
        d = DistanceMatrix(space.distance)
        for t in ts:
            m = topology.fuzzy_from_metric(d, t)
            for r in rs:
                for x in range(6):
                    expect = {int(y) for y in np.flatnonzero(space.distance[x] < t * r / (1 - r))}
                    assert topology.fuzzy_ball(m, x, r) == expect
        assert topology.fuzzy_refinement(d, ts, rs).direction == topology.MUTUAL


def test_acceptance_13_adequacy():
    spaces = [fixtures.random_metric(n, SEED + 500 + n) for n in range(1, 9)]
    spaces.append(fixtures.step_space())
    spaces += [f.space for f in _builder_fixtures() if f.space.base_distance is not None]
    for s in spaces:
        assert topology.adequacy_defect(s.distance, range(s.n)) <= 1e-12
    eq = np.ones((3, 3)) - np.eye(3)
    brute = max(eq[x1, x2] - max(eq[a, x2] - eq[a, x1] for a in [0]) for x1 in range(3) for x2 in range(3))
    assert topology.adequacy_defect(eq, [0]) == brute


def test_acceptance_14_determinism(tmp_path):
    configs = sorted(CONFIGS.glob("*.json"))
    covered = set()
    for cfg in configs:
        runs = []
        for k in range(2):
            out = tmp_path / cfg.stem / str(k)
            code = cli.main(["run", "--config", str(cfg), "--out", str(out), "--seed", "5", "--quiet"])
            assert code in (0, 2, 3)
            runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "metadata.json"})
        assert runs[0] == runs[1]
        covered.add(cli.json.loads((tmp_path / cfg.stem / "0" / "report.json").read_text())["experiment"])
    assert covered == set(cli.EXPERIMENTS)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
