"""Cauchy notions, epsilon-nets and desk-scale compactness evidence.

Sequences are finite traces. "Cauchy" always means Cauchy up to the given
level and horizon: the tail after some index ``N <= horizon`` must satisfy the
level's condition for every pair inside the trace.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import gauges, report, xreal
from .core.family import ModularFamily
from .core.spaces import TOL_METRIC
from .gauges import DistanceMatrix
from .report import DiagnosticReport


@dataclass
class SequenceTrace:
    points: List[int]
    claimed_limit: Optional[int] = None

    def __post_init__(self):
        self.points = [int(p) for p in self.points]
        if not self.points:
            raise ValueError("a trace needs at least one point")
        if min(self.points) < 0:
            raise ValueError("point indices must be nonnegative")

    def __len__(self) -> int:
        return len(self.points)

    def default_horizon(self) -> int:
        return max(len(self.points) // 2, 1)


def _trace(seq) -> SequenceTrace:
    return seq if isinstance(seq, SequenceTrace) else SequenceTrace(list(seq))


def _tail_index(pair_ok: np.ndarray, horizon: int):
    """Smallest N <= horizon with ``pair_ok[k, l]`` for all k, l >= N; else (None, witness pair)."""
    L = pair_ok.shape[0]
    for N in range(min(horizon, L - 1) + 1):
        if pair_ok[N:, N:].all():
            return N, None
    tail = pair_ok[horizon:, horizon:]
    k, l = np.argwhere(~tail)[0]
    return None, (int(k) + horizon, int(l) + horizon)


def _level_scan(values: np.ndarray, thresholds, horizon: int, strict: bool = True):
    """For each threshold, the tail index N where all tail pair values fall below it."""
    out = []
    for n, eps in thresholds:
        ok = values < eps if strict else values <= eps
        N, wit = _tail_index(ok, horizon)
        out.append((n, eps, N, wit))
        if N is None:
            break
    return out


def is_v_cauchy(seq, w: ModularFamily, n_max: int, horizon: Optional[int] = None) -> DiagnosticReport:
    """Check ``w(1/n, x_k, x_l) < 1/n`` on a tail starting at or before ``horizon``, for n = 1..n_max."""
    seq = _trace(seq)
    if len(seq) < 2:
        raise ValueError("trace must have at least two points")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    horizon = seq.default_horizon() if horizon is None else horizon
    idx = np.array(seq.points)
    name = "v_cauchy"
    tails = {}
    for n in range(1, n_max + 1):
        vals = w.matrix(1.0 / n)[np.ix_(idx, idx)]
        N, wit = _tail_index(vals < 1.0 / n, horizon)
        if N is None:
            k, l = wit
            return report.failed(name, {"n": n, "k": k, "l": l, "w": float(vals[k, l])},
                                 f"tail pairs leave V_{n}", tails=tails)
        tails[n] = N
    return report.passed(name, f"V-Cauchy up to n_max={n_max}", tails=tails, horizon=horizon)


class _PairGauge:
    """Lazily computed gauge values between points of one modular family."""

    def __init__(self, w: ModularFamily, gauge: str, **kw):
        self.w, self.fn, self.kw = w, gauges.GAUGES[gauge], kw
        self._cache: Dict[tuple, float] = {}

    def __call__(self, i: int, j: int) -> float:
        key = (min(i, j), max(i, j))
        if key not in self._cache:
            self._cache[key] = self.fn(self.w, key[0], key[1], **self.kw).value
        return self._cache[key]

    def block(self, idx) -> np.ndarray:
        return np.array([[self(i, j) for j in idx] for i in idx])


def _metric_cauchy(values: np.ndarray, n_max: int, horizon: int):
    for n in range(1, n_max + 1):
        N, wit = _tail_index(values < 1.0 / n, horizon)
        if N is None:
            return False, {"n": n, "k": wit[0], "l": wit[1], "value": float(values[wit])}
    return True, None


def cauchy_equivalence(seq, w: ModularFamily, n_max: int, tol: float = gauges.TOL,
                       horizon: Optional[int] = None) -> DiagnosticReport:
    """Classify a trace as V-, d0- and d*-Cauchy (levels ``1/n``, n <= n_max) and require agreement.

    For a convex family the three notions coincide; disagreement is reported
    with the per-notion evidence.
    """
    seq = _trace(seq)
    if not w.claims.convex:
        raise report.PreconditionError("cauchy_equivalence needs a family claiming convexity", {"tag": w.tag})
    horizon = seq.default_horizon() if horizon is None else horizon
    idx = list(seq.points)
    v = is_v_cauchy(seq, w, n_max, horizon)
    d0_ok, d0_wit = _metric_cauchy(_PairGauge(w, "d0", tol=tol).block(idx), n_max, horizon)
    ds_ok, ds_wit = _metric_cauchy(_PairGauge(w, "dstar", tol=tol).block(idx), n_max, horizon)
    verdicts = {"v_cauchy": v.passed, "d0_cauchy": d0_ok, "dstar_cauchy": ds_ok}
    evidence = {"classification": verdicts, "v_witness": v.witness, "d0_witness": d0_wit,
                "dstar_witness": ds_wit, "horizon": horizon, "n_max": n_max}
    if len(set(verdicts.values())) == 1:
        return report.passed("cauchy_equivalence", "all three notions agree", **evidence)
    return report.failed("cauchy_equivalence", {"disagreement": verdicts}, "Cauchy notions disagree", **evidence)


@dataclass
class NetCover:
    epsilon: float
    centers: List[int]
    assignment: Dict[int, int]

    def __len__(self) -> int:
        return len(self.centers)

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "centers": list(self.centers),
                "assignment": {str(k): v for k, v in sorted(self.assignment.items())}}

    def to_json(self) -> str:
        return json.dumps(xreal.encode(self.to_dict()), sort_keys=True)

    @classmethod
    def from_dict(cls, obj) -> "NetCover":
        return cls(float(obj["epsilon"]), [int(c) for c in obj["centers"]],
                   {int(k): int(v) for k, v in obj["assignment"].items()})


def _values(metric) -> np.ndarray:
    return metric.values if isinstance(metric, DistanceMatrix) else np.asarray(metric, dtype=float)


def epsilon_net(metric, epsilon: float, subset: Optional[Sequence[int]] = None) -> NetCover:
    """Greedy farthest-point epsilon-net: every point ends within ``< epsilon`` of its center.

    Starts from the first point and repeatedly adds the point farthest from
    the current centers (lowest index on ties). The greedy centers are
    pairwise at least ``epsilon`` apart, so their number is at most the
    covering number at radius ``epsilon / 2``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    d = _values(metric)
    pts = list(range(d.shape[0])) if subset is None else [int(p) for p in subset]
    if not pts:
        return NetCover(float(epsilon), [], {})
    sub = d[np.ix_(pts, pts)]
    centers = [0]
    nearest = sub[0].copy()
    while True:
        far = int(np.argmax(nearest))
        if not nearest[far] >= epsilon:
            break
        centers.append(far)
        nearest = np.minimum(nearest, sub[far])
    cmat = sub[:, centers]
    owner = np.argmin(cmat, axis=1)
    assignment = {pts[k]: pts[centers[int(owner[k])]] for k in range(len(pts))}
    return NetCover(float(epsilon), [pts[c] for c in centers], assignment)


@dataclass
class Subsequence:
    indices: List[int]
    levels_completed: int
    partial: bool
    kept_per_level: List[int] = field(default_factory=list)


def cauchy_subsequence(seq, metric, levels: Sequence[float]) -> Subsequence:
    """Diagonal extraction of an (approximately) Cauchy subsequence.

    At each level the retained positions are split by an ``eps/2``-net of the
    points they visit and the most populated ball is kept (lowest center on
    ties). The k-th output index is taken from the k-th retained set, so from
    level k on all outputs are pairwise closer than ``levels[k]``.
    """
    seq = _trace(seq)
    levels = [float(e) for e in levels]
    if any(b >= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly decreasing")
    d = _values(metric)
    retained = list(range(len(seq)))
    out: List[int] = []
    kept = []
    for k, eps in enumerate(levels):
        visited = sorted(set(seq.points[p] for p in retained))
        net = epsilon_net(d, eps / 2.0, visited)
        counts: Dict[int, List[int]] = {}
        for p in retained:
            counts.setdefault(net.assignment[seq.points[p]], []).append(p)
        best = max(sorted(counts), key=lambda c: len(counts[c]))
        retained = counts[best]
        kept.append(len(retained))
        later = [p for p in retained if not out or p > out[-1]]
        if not later:
            return Subsequence(out, k, True, kept)
        out.append(later[0])
    # extend with the tail of the last level
    out.extend(p for p in retained if p > out[-1])
    return Subsequence(out, len(levels), False, kept)


def _eventually_within(values: np.ndarray, eps: float, horizon: int) -> bool:
    N, _ = _tail_index(values < eps, horizon)
    return N is not None


def compactness_verdict(metric, w: Optional[ModularFamily], epsilons: Sequence[float], traces,
                        tol_metric: float = TOL_METRIC, horizon: Optional[int] = None,
                        min_separated: int = 8) -> DiagnosticReport:
    """Precompactness (net sizes) plus completeness (limits of Cauchy traces) as desk-scale evidence.

    A trace counts as Cauchy when its tail diameter drops below every epsilon
    by the horizon. Its limit is the point minimizing the sup distance over the
    tail; it must be within ``10 * tol_metric``. If every epsilon-net keeps all
    points apart and there are at least ``min_separated`` of them, the space is
    reported as a uniformly separated sample (non-precompact evidence).
    """
    if not epsilons:
        raise ValueError("need at least one epsilon")
    d = _values(metric)
    n = d.shape[0]
    net_table = []
    for eps in sorted(epsilons, reverse=True):
        net = epsilon_net(d, eps)
        net_table.append({"epsilon": float(eps), "net_size": len(net), "points": n})
    evidence = {"label": "desk-scale evidence", "net_sizes": net_table}
    if w is not None:
        v_table = []
        for eps in sorted(epsilons, reverse=True):
            v_table.append({"epsilon": float(eps),
                            "d0_net_size": len(epsilon_net(gauges.gauge_matrix(w, "d0"), eps))})
        evidence["d0_net_sizes"] = v_table
        evidence["convex"] = w.claims.convex
        diverge = [row["epsilon"] for row, vr in zip(net_table, v_table) if row["net_size"] != vr["d0_net_size"]]
        if diverge and not w.claims.convex:
            evidence["divergence_nonconvex"] = diverge
    limits = []
    for t, tr in enumerate(traces):
        tr = _trace(tr)
        hz = tr.default_horizon() if horizon is None else horizon
        idx = np.array(tr.points)
        block = d[np.ix_(idx, idx)]
        if not all(_eventually_within(block, eps, hz) for eps in epsilons):
            limits.append({"trace": t, "cauchy": False})
            continue
        tail = idx[hz:] if len(idx) > hz else idx[-1:]
        sup = d[tail].max(axis=0)
        cand = int(np.argmin(sup))
        entry = {"trace": t, "cauchy": True, "limit": cand, "sup_distance": float(sup[cand])}
        if tr.claimed_limit is not None and tr.claimed_limit < n:
            entry["claimed_limit_sup_distance"] = float(sup[tr.claimed_limit])
        limits.append(entry)
        if not sup[cand] <= 10 * tol_metric:
            evidence["limits"] = limits
            return report.failed("compactness", {"trace": t, "nearest_candidate": cand,
                                                 "sup_distance": float(sup[cand])},
                                 "a Cauchy trace has no limit in the space", **evidence)
    evidence["limits"] = limits
    finest = net_table[-1]
    if n >= min_separated and all(row["net_size"] == n for row in net_table):
        return report.failed("compactness", {"epsilon": finest["epsilon"], "net_size": n},
                             "uniformly separated sample: nets do not compress", **evidence)
    return report.passed("compactness", "compact evidence: finite nets, Cauchy traces converge", **evidence)
