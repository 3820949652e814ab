from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .. import gauges, report
from ..core.family import Claims, ModularFamily
from ..core.spaces import PointSpace
from ..report import DiagnosticReport
from .integrands import Integrand
from .measure import DiscreteMeasureSpace


def _check_dims(f: np.ndarray, omega: DiscreteMeasureSpace) -> None:
    if f.shape[-1] != omega.n:
        raise ValueError(f"function has {f.shape[-1]} cells, measure space has {omega.n}")


def rho(f, phi: Integrand, omega: DiscreteMeasureSpace):
    """``sum_i Phi(x_i, |f_i|) mu_i``; a 2-D input gives one value per row."""
    f = np.asarray(f, dtype=float)
    _check_dims(f, omega)
    vals = phi(np.abs(f))
    out = vals @ omega.masses
    return float(out) if np.ndim(out) == 0 else out


class OrliczModular:
    """The functional ``rho`` bound to an integrand and a measure space."""

    def __init__(self, phi: Integrand, omega: DiscreteMeasureSpace):
        self.phi = phi
        self.omega = omega

    def __call__(self, f):
        return rho(f, self.phi, self.omega)

    def norm(self, u, **kw) -> float:
        """Luxemburg gauge of ``u``."""
        return gauges.luxemburg(self, u, **kw).value

    def norm_matrix(self, family, **kw) -> gauges.DistanceMatrix:
        """Pairwise Luxemburg distances between the rows of ``family``."""
        a = np.asarray(family, dtype=float)
        m = a.shape[0]
        d = np.zeros((m, m))
        for i in range(m):
            for j in range(i + 1, m):
                d[i, j] = d[j, i] = self.norm(a[i] - a[j], **kw)
        return gauges.DistanceMatrix(d, f"luxemburg[{self.phi.name}]")


def induced_modular(phi: Integrand, omega: DiscreteMeasureSpace, vectors, labels=None) -> ModularFamily:
    """``w(lam, u, v) = rho((u - v) / lam)`` over a registered set of function vectors."""
    vecs = np.array(vectors, dtype=float)
    if vecs.ndim != 2:
        raise ValueError("vectors must be a 2-D array, one function per row")
    _check_dims(vecs, omega)
    n = vecs.shape[0]
    diffs = np.abs(vecs[:, None, :] - vecs[None, :, :])
    space = PointSpace(labels if labels is not None else [f"u{i}" for i in range(n)])
    claims = Claims(strict=False, convex=phi.convex_in_t, monotone=True,
                    delta2_expected=phi.delta2_at_infinity)

    def fn(lam, i, j):
        if i == j:
            return 0.0
        return float(phi(diffs[i, j] / lam) @ omega.masses)

    def matrix_fn(lam):
        return phi(diffs / lam) @ omega.masses

    fam = ModularFamily(space, fn, claims, "orlicz", matrix_fn)
    object.__setattr__(fam, "vectors", vecs)
    return fam


def _tail_ok(values: np.ndarray, bound: float, horizon: int) -> Optional[int]:
    """Smallest K <= horizon with ``values[k] < bound`` for every k >= K."""
    bad = np.flatnonzero(~(values < bound))
    K = 0 if len(bad) == 0 else int(bad[-1]) + 1
    return K if K <= horizon and K < len(values) else None


def modular_convergence_check(u_seq, u, phi: Integrand, omega: DiscreteMeasureSpace, tol: float = gauges.TOL,
                              horizon: Optional[int] = None, n_max: int = 8,
                              lambda_grid: Optional[Sequence[float]] = None) -> DiagnosticReport:
    """Finite-resolution comparison of the ways ``u_k -> u`` can be read.

    For levels ``eps = 1/n`` (n <= n_max), each condition must hold on a tail
    starting by ``horizon``:

    * entourage: ``rho(n (u_k - u)) < 1/n``;
    * modular: some grid scale ``lam <= eps`` has ``rho((u_k - u)/lam) < eps``;
    * gauge: ``d*(u_k, u) < eps``;
    * and, for integrands tagged Delta_2, ``d0(u_k, u) < eps``.

    The booleans must agree.
    """
    seq = np.asarray(u_seq, dtype=float)
    u = np.asarray(u, dtype=float)
    _check_dims(seq, omega)
    L = seq.shape[0]
    horizon = max(L // 2, 1) if horizon is None else horizon
    if horizon > L:
        raise ValueError("horizon exceeds the sequence length")
    diff = seq - u
    mod = OrliczModular(phi, omega)
    levels = [1.0 / n for n in range(1, n_max + 1)]
    grid = np.geomspace(1e-6, 1.0, 121) if lambda_grid is None else np.asarray(lambda_grid, dtype=float)

    def entourage_ok():
        for n in range(1, n_max + 1):
            if _tail_ok(mod(n * diff), 1.0 / n, horizon) is None:
                return False, {"n": n}
        return True, None

    def modular_ok():
        chosen = {}
        for eps in levels:
            cands = sorted(set(grid[grid <= eps]) | {eps})
            lam = next((l for l in cands if _tail_ok(mod(diff / l), eps, horizon) is not None), None)
            if lam is None:
                return False, {"epsilon": eps}, chosen
            chosen[eps] = lam
        return True, None, chosen

    dstar = np.array([gauges.luxemburg(mod, row, tol=tol).value for row in diff])

    def gauge_ok(values):
        for eps in levels:
            if _tail_ok(values, eps, horizon) is None:
                return False, {"epsilon": eps}
        return True, None

    e_ok, e_wit = entourage_ok()
    m_ok, m_wit, chosen = modular_ok()
    g_ok, g_wit = gauge_ok(dstar)
    verdicts = {"entourage": e_ok, "modular": m_ok, "dstar": g_ok}
    evidence = {"witnesses": {"entourage": e_wit, "modular": m_wit, "dstar": g_wit},
                "modular_scales": {str(k): v for k, v in chosen.items()}, "dstar_tail": dstar[horizon:].max(),
                "horizon": horizon, "n_max": n_max}
    if phi.delta2_at_infinity:
        fam = induced_modular(phi, omega, np.vstack([u[None, :], seq]))
        d0 = np.array([gauges.d0(fam, 0, k + 1, tol=tol).value for k in range(L)])
        verdicts["d0"], w0 = gauge_ok(d0)
        evidence["witnesses"]["d0"] = w0
    else:
        evidence["note"] = (f"{phi.name} fails Delta_2 at infinity; d0 is not compared. "
                            "This does not affect sequences whose differences tend to zero.")
    evidence["classification"] = verdicts
    if len(set(verdicts.values())) == 1:
        return report.passed("modular_convergence", "all conditions agree", **evidence)
    return report.failed("modular_convergence", {"disagreement": verdicts}, "convergence notions disagree",
                         **evidence)
