"""Orlicz and Musielak-Orlicz integrands ``Phi(x, t)``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class Integrand:
    """``Phi(x, t)``, vectorized: ``fn(t, cells)`` where ``cells`` gives the cell of each entry of ``t``.

    When ``cells`` is None the last axis of ``t`` runs over all cells.
    """

    fn: Callable[[np.ndarray, Optional[np.ndarray]], np.ndarray]
    name: str = "phi"
    convex_in_t: bool = False
    delta2_at_infinity: bool = False

    def __call__(self, t, cells=None) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore"):
            return self.fn(t, cells)

    def validate(self, n_cells: int, samples=None, tol: float = 1e-12) -> None:
        """Sampled check of ``Phi(x, 0) = 0``, monotonicity and (if tagged) midpoint convexity."""
        ts = np.linspace(0.0, 4.0, 41) if samples is None else np.sort(np.asarray(samples, dtype=float))
        grid = np.repeat(ts[:, None], n_cells, axis=1)
        vals = self(grid)
        if np.any(vals[0] != 0):
            raise ValueError(f"{self.name}: Phi(x, 0) must vanish")
        if np.any(np.diff(vals, axis=0) < -tol):
            raise ValueError(f"{self.name}: Phi(x, .) must be nondecreasing")
        if self.convex_in_t:
            mid = self(0.5 * (grid[1:] + grid[:-1]))
            avg = 0.5 * (vals[1:] + vals[:-1])
            finite = np.isfinite(avg)
            if np.any(mid[finite] > avg[finite] * (1 + 1e-12) + tol):
                raise ValueError(f"{self.name}: tagged convex but fails the midpoint test")


def lp(p: float) -> Integrand:
    """``Phi(t) = t**p``."""
    if p < 1:
        raise ValueError("p must be >= 1 for a convex integrand")
    p = float(p)
    return Integrand(lambda t, cells: t ** p, f"lp({p:g})", True, True)


def exp_squared() -> Integrand:
    """``Phi(t) = exp(t**2) - 1``; fails the Delta_2 condition at infinity."""
    return Integrand(lambda t, cells: np.expm1(t * t), "exp_squared", True, False)


def variable_exponent(p) -> Integrand:
    """``Phi(x, t) = t**p(x)`` with one exponent per cell, all in ``[p_-, p_+]`` with ``p_- > 1``."""
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0 or p.min() <= 1 or not np.isfinite(p).all():
        raise ValueError("variable exponents must be finite and > 1")

    def fn(t, cells):
        expo = p if cells is None else p[cells]
        return t ** expo

    return Integrand(fn, f"variable_exponent[{p.min():g},{p.max():g}]", True, True)


def build_integrand(spec: dict) -> Integrand:
    kind = spec.get("kind")
    if kind == "lp":
        return lp(spec.get("p", 2))
    if kind == "exp_squared":
        return exp_squared()
    if kind == "variable_exponent":
        return variable_exponent(spec["p"])
    raise ValueError(f"unknown integrand kind {kind!r}")
