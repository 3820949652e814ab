"""Balls, entourages and finite-resolution comparisons of the induced topologies.

Nothing here decides a topological statement outright: open sets quantify over
all scales, so comparisons are made on ball systems at finitely many radii and
a "mutual" verdict is evidence, not proof.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from . import report, xreal
from .core.family import ModularFamily
from .gauges import DistanceMatrix
from .report import DiagnosticReport

A_REFINES_B = "A_refines_B"
B_REFINES_A = "B_refines_A"
MUTUAL = "mutual"
NEITHER = "neither"


@dataclass(frozen=True)
class Ball:
    center: int
    scale: float
    radius: float
    members: FrozenSet[int]

    def __contains__(self, z) -> bool:
        return z in self.members


def ball(w: ModularFamily, lam: float, mu: float, x) -> Ball:
    """``{z : w(lam, x, z) < mu}``."""
    if not lam > 0 or not mu > 0:
        raise ValueError("scale and radius must be positive")
    i = w.space.index(x)
    row = w.matrix(lam)[i]
    members = frozenset(int(z) for z in np.flatnonzero(row < mu)) | {i}
    return Ball(i, float(lam), float(mu), members)


@dataclass(frozen=True)
class Entourage:
    """The relation ``{(x, y) : w(1/n, x, y) < 1/n}`` as a boolean adjacency matrix."""

    n: int
    adjacency: np.ndarray = field(compare=False, repr=False)

    @property
    def pairs(self) -> FrozenSet[Tuple[int, int]]:
        return frozenset((int(i), int(j)) for i, j in np.argwhere(self.adjacency))

    def __contains__(self, pair) -> bool:
        i, j = pair
        return bool(self.adjacency[i, j])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for row in self.adjacency:
            writer.writerow([int(v) for v in row])
        return buf.getvalue()


def entourage(w: ModularFamily, n: int) -> Entourage:
    if n < 1:
        raise ValueError("entourage index must be >= 1")
    adj = w.matrix(1.0 / n) < 1.0 / n
    np.fill_diagonal(adj, True)
    adj.setflags(write=False)
    return Entourage(n, adj)


def composition_check(w: ModularFamily, n: int) -> DiagnosticReport:
    """Exhaustive check of ``V_2n o V_2n <= V_n``. A failure means ``w`` is not a modular."""
    fine = entourage(w, 2 * n).adjacency.astype(int)
    coarse = entourage(w, n).adjacency
    composed = (fine @ fine) > 0
    bad = np.argwhere(composed & ~coarse)
    name = "entourage_composition"
    if len(bad):
        x, y = (int(v) for v in bad[0])
        z = int(np.flatnonzero(fine[x] & fine[:, y])[0])
        lab = w.space.labels
        return report.failed(name, {"n": n, "x": lab[x], "z": lab[z], "y": lab[y]},
                             f"(x, z), (z, y) in V_{2 * n} but (x, y) not in V_{n}")
    return report.passed(name, n=n, pairs_in_composite=int(composed.sum()))


def chain_closure(d: np.ndarray) -> np.ndarray:
    """Shortest-path closure with zero diagonal (Floyd-Warshall)."""
    out = np.array(d, dtype=float)
    np.fill_diagonal(out, 0.0)
    for k in range(out.shape[0]):
        out = np.minimum(out, out[:, k:k + 1] + out[k:k + 1, :])
    return out


def metrize_uniformity(w: ModularFamily, n_max: int, chain: bool = True) -> DistanceMatrix:
    """``min{2^-n : n <= n_max, (x, y) in V_n}``, 1 for pairs in no computed ``V_n``.

    The raw quantity is kept in ``meta["raw"]`` (its diagonal is the
    resolution ``2^-n_max``); the returned values are its chaining closure,
    which has zero diagonal and satisfies the triangle inequality.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n = w.n
    raw = np.ones((n, n))
    for k in range(n_max, 0, -1):
        adj = entourage(w, k).adjacency
        raw = np.where(adj, np.minimum(raw, 2.0 ** -k), raw)
    res = 2.0 ** -n_max
    np.fill_diagonal(raw, res)
    vals = chain_closure(raw) if chain else np.where(np.eye(n, dtype=bool), 0.0, raw)
    return DistanceMatrix(vals, "metrized_uniformity", res,
                          {"raw": raw, "n_max": n_max, "chained": chain, "diagonal_flag": res})


@dataclass
class RefinementVerdict:
    direction: str
    witnesses: List[dict]

    def to_dict(self) -> dict:
        return xreal.encode({"direction": self.direction, "witnesses": self.witnesses})


def _finest_ball(d: DistanceMatrix, x: int) -> np.ndarray:
    # smallest ball with radius above the resolution: {y : d(x, y) <= resolution}
    row = d.values[x]
    members = row <= d.resolution
    members[x] = True
    return members


def _refines(fine: DistanceMatrix, coarse: DistanceMatrix, radii) -> List[dict]:
    """Witnesses where no ``fine`` ball around x fits inside ``coarse``'s ball of a given radius.

    Balls of ``fine`` shrink as the radius decreases, so the best candidate is
    the smallest radius above ``fine.resolution``; it is enough to test that one.
    """
    out = []
    for x in range(fine.n):
        inner = _finest_ball(fine, x)
        for r in radii:
            outer = coarse.values[x] < r
            outer[x] = True
            escaping = np.flatnonzero(inner & ~outer)
            if len(escaping):
                out.append({"point": x, "radius": float(r), "escaping": [int(e) for e in escaping],
                            "finest_radius": float(fine.resolution)})
    return out


def refinement_compare(metric_a: DistanceMatrix, metric_b: DistanceMatrix, radii: Sequence[float]) -> RefinementVerdict:
    """Does every ball of one matrix, at the given radii, contain a ball of the other?

    ``A_refines_B`` means every ``B``-ball of radius in ``radii`` contains some
    ``A``-ball (the ``A`` topology is at least as fine). Candidate radii are
    all radii above each matrix's resolution.
    """
    if metric_a.values.shape != metric_b.values.shape:
        raise ValueError(f"matrices have different shapes {metric_a.values.shape} and {metric_b.values.shape}")
    radii = sorted(float(r) for r in radii)
    if not radii or radii[0] <= 0:
        raise ValueError("radii must be positive")
    a_fails = _refines(metric_a, metric_b, radii)
    b_fails = _refines(metric_b, metric_a, radii)
    for wit in a_fails:
        wit["failing"] = A_REFINES_B
    for wit in b_fails:
        wit["failing"] = B_REFINES_A
    if not a_fails and not b_fails:
        direction = MUTUAL
    elif not a_fails:
        direction = A_REFINES_B
    elif not b_fails:
        direction = B_REFINES_A
    else:
        direction = NEITHER
    witnesses = sorted(a_fails + b_fails, key=lambda t: (t["failing"], t["point"], t["radius"]))
    return RefinementVerdict(direction, witnesses)


def delta2_diagnostic(w: ModularFamily, sequences, lambdas: Sequence[float], horizon: int,
                      tol: float = 1e-9) -> DiagnosticReport:
    """Look for a sequence along which ``w(lam, x_k, x) -> 0`` but ``w(lam/2, x_k, x)`` does not.

    ``sequences`` is a list of ``(points, limit)`` pairs. "Tends to zero" is read
    as: from some index ``K <= horizon`` on, every value in the trace is at most
    ``tol``. Only violations are certified; otherwise the verdict is
    "no violation found".
    """
    if not lambdas:
        raise ValueError("empty lambda set")
    if horizon < 3:
        raise ValueError("horizon must be at least 3")
    name = "delta2"
    lab = w.space.labels
    checked = 0
    for s, (points, limit) in enumerate(sequences):
        idx = [w.space.index(p) for p in points]
        x = w.space.index(limit)
        for lam in lambdas:
            full = np.array([w(lam, k, x) for k in idx])
            half = np.array([w(lam / 2.0, k, x) for k in idx])
            k_premise = _tail_start(full, tol)
            if k_premise is None or k_premise > horizon:
                continue
            checked += 1
            k_conc = _tail_start(half, tol)
            if k_conc is None or k_conc > horizon:
                bad = np.flatnonzero(half > tol)
                k = int(bad[bad >= k_premise][0]) if len(bad[bad >= k_premise]) else int(bad[-1])
                return report.failed(
                    name,
                    {"sequence": s, "lambda": lam, "k": k, "point": lab[idx[k]], "limit": lab[x],
                     "w_lambda": full[k], "w_half_lambda": half[k], "last_bad_k": int(bad[-1])},
                    f"w({lam}, x_k, x) -> 0 but w({lam / 2}, x_k, x) stays above tol",
                )
    return report.passed(name, "no violation found", premises_checked=checked, sequences=len(sequences))


def _tail_start(values: np.ndarray, tol: float) -> Optional[int]:
    """Smallest K with ``values[k] <= tol`` for all k >= K, or None if the last value fails."""
    bad = np.flatnonzero(~(values <= tol))
    if len(bad) == 0:
        return 0
    if bad[-1] == len(values) - 1:
        return None
    return int(bad[-1]) + 1


def fuzzy_from_metric(d: DistanceMatrix, t: float) -> np.ndarray:
    """``M(x, y, t) = t / (t + d(x, y))``."""
    if not t > 0:
        raise ValueError("t must be positive")
    vals = d.values if isinstance(d, DistanceMatrix) else np.asarray(d, dtype=float)
    with np.errstate(invalid="ignore"):
        return np.where(np.isinf(vals), 0.0, t / (t + vals))


def fuzzy_ball(m: np.ndarray, x: int, r: float) -> FrozenSet[int]:
    """``{y : M(x, y, t) > 1 - r}`` for the fuzzy matrix ``m`` evaluated at some ``t``."""
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    return frozenset(int(y) for y in np.flatnonzero(m[x] > 1.0 - r))


def fuzzy_refinement(d: DistanceMatrix, ts: Sequence[float], rs: Sequence[float],
                     radii: Optional[Sequence[float]] = None) -> RefinementVerdict:
    """Compare fuzzy balls ``B(x, r, t)`` with metric balls of ``d``.

    Each fuzzy ball is first checked to coincide with the metric ball of radius
    ``t r / (1 - r)``; a mismatch is reported as a witness. Then each metric
    ball (radii default to those equivalent radii) must contain a fuzzy ball
    and each fuzzy ball a metric ball, searching over the sampled parameters.
    """
    if isinstance(d, np.ndarray):
        d = DistanceMatrix(d)
    samples = []
    for t in ts:
        m = fuzzy_from_metric(d, t)
        for r in rs:
            samples.append((float(t), float(r), m))
    if radii is None:
        radii = sorted({t * r / (1 - r) for t, r, _ in samples})
    witnesses = []
    fuzzy_balls = {}
    for x in range(d.n):
        for t, r, m in samples:
            fb = fuzzy_ball(m, x, r)
            fuzzy_balls[(x, t, r)] = fb
            mb = frozenset(int(y) for y in np.flatnonzero(d.values[x] < t * r / (1 - r)))
            if fb != mb:
                witnesses.append({"failing": "ball_identity", "point": x, "t": t, "r": r,
                                  "symmetric_difference": sorted(fb ^ mb)})
    metric_balls = {(x, s): frozenset(int(y) for y in np.flatnonzero(d.values[x] < s))
                    for x in range(d.n) for s in radii}
    fuzzy_fails, metric_fails = [], []
    for x in range(d.n):
        fb_x = [fuzzy_balls[(x, t, r)] for t, r, _ in samples]
        mb_x = [metric_balls[(x, s)] for s in radii]
        for s in radii:
            if not any(fb <= metric_balls[(x, s)] for fb in fb_x):
                fuzzy_fails.append({"failing": "fuzzy_refines_metric", "point": x, "radius": s})
        for t, r, _ in samples:
            if not any(mb <= fuzzy_balls[(x, t, r)] for mb in mb_x):
                metric_fails.append({"failing": "metric_refines_fuzzy", "point": x, "t": t, "r": r})
    if witnesses:
        direction = NEITHER
    elif not fuzzy_fails and not metric_fails:
        direction = MUTUAL
    elif not fuzzy_fails:
        direction = A_REFINES_B
    elif not metric_fails:
        direction = B_REFINES_A
    else:
        direction = NEITHER
    return RefinementVerdict(direction, witnesses + fuzzy_fails + metric_fails)


def adequacy_defect(d, subset: Sequence[int], per_pair: bool = False):
    """``max_{x1, x2} [d(x1, x2) - max_{a in A} (d(a, x2) - d(a, x1))]``.

    Nonnegative by the triangle inequality; zero means ``A`` recovers every
    distance. With ``per_pair`` the full matrix of pair defects is returned too.
    """
    vals = d.values if isinstance(d, DistanceMatrix) else np.asarray(d, dtype=float)
    subset = sorted(set(int(a) for a in subset))
    if not subset:
        raise ValueError("the anchor set must be nonempty")
    if not np.isfinite(vals).all():
        raise ValueError("adequacy needs finite distances")
    rows = vals[subset]  # rows[a, x] = d(a, x)
    # recovered[x1, x2] = max_a (d(a, x2) - d(a, x1))
    recovered = (rows[:, None, :] - rows[:, :, None]).max(axis=0)
    pair = vals - recovered
    worst = float(pair.max())
    if per_pair:
        return worst, pair
    return worst
