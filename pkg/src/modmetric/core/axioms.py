"""Sampled verification of the modular axioms and the scale transforms built on them.

All checks quantify over a finite :class:`LambdaGrid`: a failure is an exact
counterexample, a pass only certifies the axioms at grid resolution.
"""

from __future__ import annotations

import math
import warnings
from typing import NamedTuple, Optional

import numpy as np

from .. import report, xreal
from ..report import DiagnosticReport, NonMonotoneError
from .family import ModularFamily
from .spaces import TOL_METRIC, LambdaGrid


class NonMonotoneWarning(UserWarning):
    pass


def _check_tol(tol):
    if not tol > 0:
        raise ValueError("tol must be positive")


def _check_grid(grid):
    if grid is None or len(grid) == 0:
        raise ValueError("empty lambda grid")


def _triangle_witness(lhs, left, right, tol):
    """First (x, z, y) with lhs[x, y] > left[x, z] + right[z, y] + tol, or None."""
    rhs = left[:, :, None] + right[None, :, :]  # indexed [x, z, y]
    with np.errstate(invalid="ignore"):
        bad = np.isfinite(lhs)[:, None, :] & (lhs[:, None, :] > rhs + tol)
        bad |= np.isinf(lhs)[:, None, :] & np.isfinite(rhs)
    hits = np.argwhere(bad)
    if len(hits) == 0:
        return None
    x, z, y = (int(v) for v in hits[0])
    return x, z, y, float(lhs[x, y]), float(rhs[x, z, y])


def check_modular_axioms(w: ModularFamily, grid: LambdaGrid, tol: float = TOL_METRIC) -> DiagnosticReport:
    """Diagonal zero, symmetry and ``w(l+m, x, y) <= w(l, x, z) + w(m, z, y) + tol`` on the grid."""
    _check_tol(tol)
    _check_grid(grid)
    name = "modular_axioms"
    labels = w.space.labels
    mats = {lam: w.matrix(lam) for lam in grid}
    for lam, m in mats.items():
        diag = np.flatnonzero(np.diag(m) != 0)
        if len(diag):
            i = int(diag[0])
            return report.failed(name, {"axiom": "diagonal", "lambda": lam, "x": labels[i], "value": m[i, i]},
                                 f"w({lam}, x, x) != 0")
        with np.errstate(invalid="ignore"):
            asym = np.argwhere(~((m == m.T) | (np.abs(m - m.T) <= tol)))
        if len(asym):
            i, j = (int(v) for v in asym[0])
            return report.failed(name, {"axiom": "symmetry", "lambda": lam, "x": labels[i], "y": labels[j],
                                        "w_xy": m[i, j], "w_yx": m[j, i]}, "w is not symmetric")
    checked = 0
    for lam in grid:
        for mu in grid:
            lhs = w.matrix(lam + mu)
            hit = _triangle_witness(lhs, mats[lam], mats[mu], tol)
            checked += 1
            if hit is not None:
                x, z, y, a, b = hit
                return report.failed(
                    name,
                    {"axiom": "triangle", "lambda": lam, "mu": mu, "x": labels[x], "z": labels[z],
                     "y": labels[y], "triple": [labels[x], labels[z], labels[y]], "lhs": a, "rhs": b},
                    f"w({lam + mu}, x, y) > w({lam}, x, z) + w({mu}, z, y)",
                )
    return report.passed(name, "axioms hold at grid resolution", scale_pairs=checked, points=w.n,
                         grid=list(grid))


def check_phi_convexity(w: ModularFamily, phi, grid: LambdaGrid, tol: float = TOL_METRIC) -> DiagnosticReport:
    """Sampled check of ``w(phi(l+m)) <= l/(l+m) w(phi(l), x, z) + m/(l+m) w(phi(m), z, y)``."""
    _check_tol(tol)
    _check_grid(grid)
    from ..gauges import Superadditive

    if not isinstance(phi, Superadditive):
        phi = Superadditive(phi)
    phi.validate([0.0, *grid])
    for lam in grid:
        if not phi(lam) > 0:
            raise report.PreconditionError("phi must be positive on the grid", {"lambda": lam})
    name = "phi_convexity"
    labels = w.space.labels
    mats = {lam: w.matrix(phi(lam)) for lam in grid}
    for lam in grid:
        for mu in grid:
            s = lam + mu
            lhs = w.matrix(phi(s))
            hit = _triangle_witness(lhs, xreal.xmul(lam / s, mats[lam]), xreal.xmul(mu / s, mats[mu]), tol)
            if hit is not None:
                x, z, y, a, b = hit
                return report.failed(
                    name,
                    {"lambda": lam, "mu": mu, "x": labels[x], "z": labels[z], "y": labels[y], "lhs": a, "rhs": b},
                    "phi-convexity inequality violated",
                )
    return report.passed(name, "phi-convexity holds at grid resolution", grid=list(grid), phi=phi.name)


class Membership(NamedTuple):
    member: bool
    witness: Optional[float]

    @property
    def conclusive(self) -> bool:
        # non-membership only means "no grid scale gave a finite value"
        return self.member


def modular_set_membership(w: ModularFamily, x, basepoint, grid: LambdaGrid) -> Membership:
    """Is ``w(lam, x, basepoint) < inf`` for some grid scale? Returns the smallest such scale."""
    i, b = w.space.index(x), w.space.index(basepoint)
    for lam in grid:
        if w(lam, i, b) < math.inf:
            return Membership(True, lam)
    return Membership(False, None)


def regularize(w: ModularFamily, side: str, lam: float, i, j, steps: int = 30, shrink: float = 0.5,
               tol: float = TOL_METRIC) -> float:
    """One-sided limit of ``w(., i, j)`` at ``lam``.

    Evaluates at ``lam * (1 +- shrink**k)`` for ``k = 1..steps`` and returns the
    last value. Emits :class:`NonMonotoneWarning` if the evaluations are not
    monotone in ``k``.
    """
    if side not in ("right", "left"):
        raise ValueError("side must be 'right' or 'left'")
    if steps < 2:
        raise ValueError("need at least two steps")
    if not 0 < shrink < 1:
        raise ValueError("shrink must lie in (0, 1)")
    if not lam > 0 or not lam * shrink ** steps > 0:
        raise ValueError("lam * shrink**steps underflows")
    i, j = w.space.index(i), w.space.index(j)
    sign = 1.0 if side == "right" else -1.0
    if side == "left" and lam * (1 - shrink) <= 0:
        raise ValueError("left regularization leaves the domain")
    vals = [w(lam * (1 + sign * shrink ** k), i, j) for k in range(1, steps + 1)]
    for k, (a, b) in enumerate(zip(vals, vals[1:]), start=1):
        # right side: scales decrease towards lam, so values must not decrease
        ok = xreal.le(a, b, tol) if side == "right" else xreal.le(b, a, tol)
        if not ok:
            warnings.warn(f"{side} regularization not monotone at step {k}: {a} -> {b}", NonMonotoneWarning,
                          stacklevel=2)
            break
    return vals[-1]


def _check_nonincreasing(w, i, j, values, tol):
    prev_lam, prev = None, None
    for lam in values:
        v = w(lam, i, j)
        if prev is not None and not xreal.le(v, prev, tol):
            raise NonMonotoneError(f"w increases between scales {prev_lam} and {lam}",
                                   {"lambda_low": prev_lam, "lambda_high": lam})
        prev_lam, prev = lam, v


def inverse_gauge(w: ModularFamily, side: str, mu: float, i, j, bracket: LambdaGrid, tol: float = 1e-10,
                  tol_monotone: float = TOL_METRIC):
    """Right inverse ``inf{lam : w(lam) <= mu}`` or left inverse ``sup{lam : w(lam) >= mu}``.

    Searched on ``[bracket.floor, bracket.cap]`` without expanding the cap.
    Returns a :class:`~modmetric.gauges.GaugeResult`; ``at_floor`` marks a
    value that may lie below the floor, ``at_cap`` an infinite one.
    """
    from ..gauges import GaugeResult, infimum_monotone

    if side not in ("right", "left"):
        raise ValueError("side must be 'right' or 'left'")
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    i, j = w.space.index(i), w.space.index(j)
    _check_nonincreasing(w, i, j, [bracket.floor, *bracket.values, bracket.cap], tol_monotone)
    if side == "right":
        return infimum_monotone(lambda lam: w(lam, i, j) <= mu, bracket.floor, bracket.cap, tol, expand=False)
    # {lam : w(lam) >= mu} is an initial segment; its sup is where w first drops below mu
    if w(bracket.floor, i, j) < mu:
        return GaugeResult(bracket.floor, 0.0, bracket.floor, 0, at_floor=True)
    r = infimum_monotone(lambda lam: w(lam, i, j) < mu, bracket.floor, bracket.cap, tol, expand=False)
    if r.at_cap:
        return r
    # the sup is the last scale where the predicate is still false
    return GaugeResult(r.bracket_low, r.bracket_low, r.bracket_high, r.iterations)
