"""Kolmogorov-Riesz type compactness evidence for finite families in an Orlicz space."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .. import report
from ..compactness import epsilon_net
from ..core.spaces import LambdaGrid
from ..report import DiagnosticReport, PreconditionError
from .integrands import Integrand
from .measure import DiscreteMeasureSpace, Partition, dyadic_ladder
from .modular import OrliczModular, rho

TRANSLATION_CONVENTION = "zero extension outside the grid"
MIN_SEPARATED = 8


class BoundaryShiftWarning(UserWarning):
    """A translation moved every cell off the grid."""


class StageFailure(Exception):
    """A KR pipeline stage found no admissible scale. ``params`` records what was tried."""

    def __init__(self, stage: str, message: str, params: Optional[dict] = None):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.params = params or {}


def default_grid() -> np.ndarray:
    return np.asarray(LambdaGrid.per_decade(1e-6, 1e6).values)


def _family(A, omega: DiscreteMeasureSpace) -> np.ndarray:
    a = np.array(A, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != omega.n:
        raise ValueError(f"family must be m x {omega.n}")
    if not np.isfinite(a).all():
        raise ValueError("family entries must be finite")
    return a


def _grid(lambda_grid) -> np.ndarray:
    g = default_grid() if lambda_grid is None else np.asarray(list(lambda_grid), dtype=float)
    if g.size == 0 or np.any(g <= 0) or np.any(np.diff(g) <= 0):
        raise ValueError("lambda grid must be positive and strictly increasing")
    return g


def _first_scale(grid: np.ndarray, ok, monotone: bool) -> Optional[int]:
    """Index of the first grid scale where ``ok`` holds.

    ``monotone`` allows a binary search; it returns the same index as the
    linear scan when ``ok`` is monotone along the grid.
    """
    if not monotone:
        return next((k for k in range(grid.size) if ok(grid[k])), None)
    if not ok(grid[-1]):
        return None
    lo, hi = -1, grid.size - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(grid[mid]):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class TightnessResult:
    E: List[int]
    lambda_T: float
    discarded_mass: float
    sup_tail: float


def tightness_check(A, phi: Integrand, omega: DiscreteMeasureSpace, epsilon: float,
                    lambda_grid=None) -> TightnessResult:
    """Choose a large-mass set ``E`` and the first grid scale with small modular tails outside it.

    Cells are discarded in increasing order of ``max_u Phi(x, |u(x)|)`` while the
    discarded mass stays below ``epsilon``. Raises :class:`StageFailure` if no
    grid scale gives ``max_u rho(u 1_{E^c} / lam) <= epsilon``.
    """
    if not 0 < epsilon < omega.total_mass:
        raise ValueError("epsilon must lie in (0, total mass)")
    a = _family(A, omega)
    grid = _grid(lambda_grid)
    density = phi(np.abs(a)).max(axis=0)
    order = np.lexsort((np.arange(omega.n), density))
    drop: List[int] = []
    mass = 0.0
    for c in order:
        if mass + omega.masses[c] >= epsilon:
            break
        drop.append(int(c))
        mass += omega.masses[c]
    outside = np.zeros(omega.n, dtype=bool)
    outside[drop] = True
    tails = a * outside

    def sup_tail(lam):
        return float(np.max(rho(tails / lam, phi, omega)))

    k = _first_scale(grid, lambda lam: sup_tail(lam) <= epsilon, phi.convex_in_t)
    E = [int(c) for c in np.flatnonzero(~outside)]
    if k is None:
        raise StageFailure("tightness", "no grid scale makes the tail small",
                           {"epsilon": epsilon, "discarded": drop, "sup_tail_at_max_lambda": sup_tail(grid[-1])})
    return TightnessResult(E, float(grid[k]), mass, sup_tail(grid[k]))


def worst_set(u, phi: Integrand, omega: DiscreteMeasureSpace, delta: float, lam: float) -> List[int]:
    """Greedy ``B`` with ``mu(B) < delta`` maximizing ``rho(u 1_B / lam)``.

    Cells are taken by decreasing contribution density; cells that would break
    the budget are skipped. Exact for equal masses.
    """
    dens = phi(np.abs(np.asarray(u, dtype=float)) / lam)
    order = np.lexsort((np.arange(omega.n), -dens))
    B, mass = [], 0.0
    for c in order:
        if dens[c] <= 0:
            break
        if mass + omega.masses[c] < delta:
            B.append(int(c))
            mass += omega.masses[c]
    return B


@dataclass
class EMCResult:
    lambda_C: float
    sup_modular: float
    worst_member: int
    worst_B: List[int]
    worst_B_mass: float
    exact: bool


def emc_check(A, phi: Integrand, omega: DiscreteMeasureSpace, epsilon: float, delta: float,
              lambda_grid=None) -> EMCResult:
    """First grid ``lam`` with ``sup_u rho(u 1_B / lam) <= epsilon`` over small-mass sets ``B``.

    ``exact`` is False when the masses differ and the greedy worst set is only a heuristic.
    """
    if not 0 < delta < omega.total_mass:
        raise ValueError("delta must lie in (0, total mass)")
    a = _family(A, omega)
    grid = _grid(lambda_grid)

    def worst(lam):
        best = (-1.0, 0, [])
        for k, u in enumerate(a):
            B = worst_set(u, phi, omega, delta, lam)
            val = float(phi(np.abs(u) / lam)[B] @ omega.masses[B]) if B else 0.0
            if val > best[0]:
                best = (val, k, B)
        return best

    k = _first_scale(grid, lambda lam: worst(lam)[0] <= epsilon, phi.convex_in_t)
    if k is None:
        val, m, B = worst(grid[-1])
        raise StageFailure("emc", "no grid scale bounds the small-set modular",
                           {"epsilon": epsilon, "delta": delta, "member": m, "B": B, "value_at_max_lambda": val})
    val, m, B = worst(grid[k])
    return EMCResult(float(grid[k]), float(val), m, B, float(omega.masses[B].sum()), omega.equal_masses)


def averaging(u, P: Partition, omega: DiscreteMeasureSpace) -> np.ndarray:
    """Replace ``u`` on each block by its mass-weighted mean. Rows of a 2-D input are averaged separately."""
    u = np.asarray(u, dtype=float)
    if P.n != omega.n or u.shape[-1] != omega.n:
        raise ValueError("partition, function and measure space must have the same cells")
    lab = P.labels()
    bm = np.bincount(lab, weights=omega.masses, minlength=len(P))
    flat = u.reshape(-1, omega.n)
    out = np.empty_like(flat)
    for r, row in enumerate(flat):
        means = np.bincount(lab, weights=row * omega.masses, minlength=len(P)) / bm
        out[r] = means[lab]
    return out.reshape(u.shape)


def jensen_gap(u, P: Partition, phi: Integrand, omega: DiscreteMeasureSpace, lam: float) -> Tuple[float, float]:
    """``rho((u - Pu)/lam)`` and the double-average bound that convexity gives for it."""
    if not phi.convex_in_t:
        raise PreconditionError(f"{phi.name} is not tagged convex", {"integrand": phi.name})
    u = np.asarray(u, dtype=float)
    lhs = rho((u - averaging(u, P, omega)) / lam, phi, omega)
    rhs = 0.0
    for b in P.blocks:
        idx = np.asarray(b)
        m = omega.masses[idx]
        t = np.abs(u[idx][:, None] - u[idx][None, :]) / lam
        cells = np.repeat(idx[:, None], idx.size, axis=1)
        rhs += float(m @ phi(t, cells) @ m) / m.sum()
    return float(lhs), rhs


def translation_modulus(u, omega: DiscreteMeasureSpace, shift, lam: float, phi: Integrand) -> float:
    """``sum_x Phi(x, |u(x) - u(x+y)| / lam) mu(x)`` for a cell offset ``y``, zero-extended off the grid."""
    if not omega.is_grid:
        raise ValueError("translation needs a grid")
    shape = omega.shape
    y = (int(shift),) if np.ndim(shift) == 0 else tuple(int(s) for s in shift)
    if len(y) != len(shape):
        raise ValueError(f"shift needs {len(shape)} components")
    grid_u = np.asarray(u, dtype=float).reshape(shape)
    moved = np.zeros_like(grid_u)
    src, dst = [], []
    for s, n in zip(y, shape):
        if abs(s) >= n:
            warnings.warn(f"shift {y} leaves the grid; every cell sees the zero extension", BoundaryShiftWarning)
            src = None
            break
        src.append(slice(max(s, 0), n + min(s, 0)))
        dst.append(slice(max(-s, 0), n + min(-s, 0)))
    if src is not None:
        moved[tuple(dst)] = grid_u[tuple(src)]
    return rho((grid_u - moved).ravel() / lam, phi, omega)


def _subadditivity_defect(phi: Integrand, omega: DiscreteMeasureSpace, seed: int = 0, samples: int = 64) -> float:
    """Largest sampled ``rho((a+b)/(l1+l2)) - rho(a/l1) - rho(b/l2)``."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(samples):
        a, b = rng.normal(size=(2, omega.n))
        l1, l2 = rng.uniform(0.1, 2.0, size=2)
        gap = rho((a + b) / (l1 + l2), phi, omega) - rho(a / l1, phi, omega) - rho(b / l2, phi, omega)
        worst = max(worst, gap)
    return float(worst)


@dataclass
class _LevelRecord:
    epsilon: float
    stages: Dict[str, dict] = field(default_factory=dict)
    net: Optional[dict] = None
    rows: List[Tuple[int, int, float]] = field(default_factory=list)


def kr_compactness(A, phi: Integrand, omega: DiscreteMeasureSpace, epsilon_ladder: Sequence[float],
                   partitions: Optional[Sequence[Partition]] = None, lambda_grid=None, delta: Optional[float] = None,
                   tol: float = 1e-9, min_separated: int = MIN_SEPARATED) -> DiagnosticReport:
    """Run the tightness / equicontinuity / averaging / net pipeline at each ``epsilon``.

    Per level: tightness gives ``lambda_T``; small-set control (budget ``delta``,
    default ``epsilon * total_mass``) gives ``lambda_C``; the first partition
    whose averaging error ``sup rho((u - Pu)/lambda_C)`` is at most ``epsilon``
    is kept; a d*-net of ``P[A]`` is built; and every member is checked to lie
    within ``rho((u - v)/(Lambda + lambda')) <= (C2 + 1) epsilon`` of its
    center ``v``, where ``Lambda = lambda_T + lambda_C`` and ``lambda' = r / epsilon``
    for the net radius ``r``.

    A net with one center per member, on a family of at least ``min_separated``
    members, is reported as evidence against compactness; smaller separated
    families are inconclusive.
    """
    eps_ladder = [float(e) for e in epsilon_ladder]
    if not eps_ladder or any(b >= a for a, b in zip(eps_ladder, eps_ladder[1:])):
        raise ValueError("epsilon ladder must be nonempty and strictly decreasing")
    a = _family(A, omega)
    grid = _grid(lambda_grid)
    if partitions is None:
        partitions = dyadic_ladder(omega) if omega.is_grid else [Partition.singletons(omega.n)]
    partitions = list(partitions)
    for p, q in zip(partitions, partitions[1:]):
        if not q.refines(p):
            raise ValueError("partitions must refine one another in order")
    mod = OrliczModular(phi, omega)
    m = a.shape[0]
    common = {"integrand": phi.name, "members": m, "cells": omega.n, "translation": TRANSLATION_CONVENTION,
              "emc_worst_set_exact": omega.equal_masses}

    sup_u = None
    lam0 = None
    for lam in grid:
        sup_u = float(np.max(mod(a / lam)))
        if np.isfinite(sup_u):
            lam0 = float(lam)
            break
    if lam0 is None:
        return report.failed("kr_compactness", {"stage": "bounded"}, "family is not modular-bounded on the grid",
                             **common)
    common["bounded"] = {"lambda_0": lam0, "sup_rho": sup_u}
    defect = _subadditivity_defect(phi, omega)
    common["subadditivity_defect"] = defect
    levels = []
    verdict_fail = None
    separated = False
    for eps in eps_ladder:
        rec = _LevelRecord(eps)
        levels.append(rec)
        try:
            t = tightness_check(a, phi, omega, eps, grid)
            rec.stages["tightness"] = {"lambda_T": t.lambda_T, "E_size": len(t.E), "discarded_mass": t.discarded_mass,
                                       "sup_tail": t.sup_tail, "C1": t.sup_tail / eps}
            dl = eps * omega.total_mass if delta is None else float(delta)
            c = emc_check(a, phi, omega, eps, dl, grid)
            rec.stages["emc"] = {"lambda_C": c.lambda_C, "delta": dl, "sup_modular": c.sup_modular,
                                 "worst_member": c.worst_member, "worst_B": c.worst_B,
                                 "worst_B_mass": c.worst_B_mass, "exact": c.exact, "C3": c.sup_modular / eps}
        except StageFailure as exc:
            verdict_fail = {"stage": exc.stage, "epsilon": eps, **exc.params}
            break

        chosen = None
        for P in partitions:
            err = float(np.max(mod((a - averaging(a, P, omega)) / c.lambda_C)))
            if err <= eps:
                chosen = (P, err)
                break
        if chosen is None:
            verdict_fail = {"stage": "averaging", "epsilon": eps, "lambda_C": c.lambda_C,
                            "finest_blocks": len(partitions[-1])}
            break
        P, err = chosen
        pa = averaging(a, P, omega)
        stage = {"blocks": len(P), "sup_error": err}
        if phi.convex_in_t:
            gaps = [jensen_gap(u, P, phi, omega, c.lambda_C) for u in a]
            worst = max(range(m), key=lambda k: gaps[k][0] - gaps[k][1])
            stage["jensen"] = {"max_lhs": max(g[0] for g in gaps), "max_rhs": max(g[1] for g in gaps),
                               "worst_margin": gaps[worst][0] - gaps[worst][1]}
            if gaps[worst][0] > gaps[worst][1] + tol:
                verdict_fail = {"stage": "jensen", "epsilon": eps, "member": worst,
                                "lhs": gaps[worst][0], "rhs": gaps[worst][1]}
                rec.stages["averaging"] = stage
                break
        if omega.is_grid:
            one = tuple([1] + [0] * (len(omega.shape) - 1))
            stage["translation_one_cell"] = max(translation_modulus(u, omega, one, c.lambda_C, phi) for u in a)
        rec.stages["averaging"] = stage

        dP = mod.norm_matrix(pa, tol=tol * 1e-2).values
        net = epsilon_net(dP, eps)
        oracle = epsilon_net(mod.norm_matrix(a, tol=tol * 1e-2).values, eps)
        r = max((dP[k, net.assignment[k]] for k in range(m)), default=0.0)
        lam_net = r / eps
        Lam = t.lambda_T + c.lambda_C
        C2 = float(np.max(mod((a - pa) / Lam))) / eps
        budget = (C2 + 1.0) * eps + tol
        worst_k, worst_val = 0, -np.inf
        for k in range(m):
            v = net.assignment[k]
            val = mod((a[k] - pa[v]) / (Lam + lam_net)) if Lam + lam_net > 0 else 0.0
            rec.rows.append((k, v, float(dP[k, v])))
            if val > worst_val:
                worst_k, worst_val = k, float(val)
        rec.net = {"size": len(net), "centers": net.centers, "radius": float(r), "lambda_net": lam_net,
                   "oracle_size": len(oracle), "Lambda": Lam, "C2": C2, "budget": budget,
                   "worst_member": worst_k, "worst_value": worst_val}
        if worst_val > budget:
            verdict_fail = {"stage": "budget", "epsilon": eps, "member": worst_k, "value": worst_val,
                            "budget": budget, "subadditivity_defect": defect}
            break
        if len(net) == m and m > 1:
            separated = True
            if m >= min_separated:
                verdict_fail = {"stage": "net", "epsilon": eps, "net_size": len(net), "members": m,
                                "min_pairwise_dstar": float(np.min(dP[~np.eye(m, dtype=bool)]))}
                break

    evidence = dict(common, levels=[{"epsilon": lv.epsilon, "stages": lv.stages, "net": lv.net} for lv in levels],
                    net_table=[{"epsilon": lv.epsilon, "member": k, "center": v, "dstar": d}
                               for lv in levels for k, v, d in lv.rows])
    if verdict_fail is not None:
        msg = ("non-compact evidence: the net needs one center per member" if verdict_fail["stage"] == "net"
               else f"stage {verdict_fail['stage']} failed")
        return report.failed("kr_compactness", verdict_fail, msg, **evidence)
    if separated:
        return report.inconclusive("kr_compactness", "family is separated but too small to judge", **evidence)
    return report.passed("kr_compactness", "relatively compact evidence", **evidence)


def net_table_csv(rep: DiagnosticReport) -> str:
    """CSV rows ``epsilon,member,center,dstar`` from a :func:`kr_compactness` report."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "member", "center", "dstar"])
    for row in rep.evidence.get("net_table", []):
        w.writerow([repr(row["epsilon"]), row["member"], row["center"], repr(row["dstar"])])
    return buf.getvalue()
