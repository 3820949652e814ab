"""Modular families over finite point spaces and the standard ways to build them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .. import xreal
from .spaces import PointSpace

# scale samples used to validate the monotonicity claims of g and h
_PROBE = np.geomspace(1e-6, 1e6, 97)


@dataclass(frozen=True)
class Claims:
    """Structural properties a family declares about itself.

    ``delta2_expected`` is ``None`` when nothing is claimed either way.
    ``monotone`` means lambda -> w(lambda, x, y) is nonincreasing.
    """

    strict: bool = False
    convex: bool = False
    monotone: bool = False
    delta2_expected: Optional[bool] = None


@dataclass(frozen=True)
class ModularFamily:
    """A map ``(lam, i, j) -> [0, inf]`` over the points of ``space``.

    ``matrix_fn``, when given, evaluates the whole ``n x n`` matrix at one
    scale and must agree with ``fn``.
    """

    space: PointSpace
    fn: Callable[[float, int, int], float]
    claims: Claims = Claims()
    tag: str = "custom"
    matrix_fn: Optional[Callable[[float], np.ndarray]] = field(default=None, compare=False)

    def __call__(self, lam: float, i: int, j: int) -> float:
        if not lam > 0:
            raise ValueError(f"scale must be positive, got {lam!r}")
        return self.fn(float(lam), i, j)

    @property
    def n(self) -> int:
        return self.space.n

    def matrix(self, lam: float) -> np.ndarray:
        if not lam > 0:
            raise ValueError(f"scale must be positive, got {lam!r}")
        if self.matrix_fn is not None:
            return np.asarray(self.matrix_fn(float(lam)), dtype=float)
        n = self.n
        m = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i != j:
                    m[i, j] = self.fn(float(lam), i, j)
        return m

    def pair(self, i: int, j: int) -> Callable[[float], float]:
        """The one-variable function lam -> w(lam, i, j)."""
        return lambda lam: self(lam, i, j)


def from_function(space: PointSpace, fn, claims: Claims = Claims(), tag: str = "custom") -> ModularFamily:
    """Wrap an arbitrary evaluator. Nothing is validated here; use the axiom checks."""
    return ModularFamily(space, fn, claims, tag)


def _is_nonincreasing(f, probe=_PROBE) -> bool:
    vals = np.array([f(t) for t in probe], dtype=float)
    return bool(np.all(vals[1:] <= vals[:-1] * (1 + 1e-12) + 1e-300))


def scaled_power(space: PointSpace, p: float) -> ModularFamily:
    """``w(lam, x, y) = d(x, y) / lam**p``; convex for ``p >= 1``."""
    return from_scaled_metric(space, power_law(p), delta2_expected=True)


def power_law(p: float) -> Callable[[float], float]:
    """``g(lam) = lam**(-p)``."""
    if p < 0:
        raise ValueError("exponent must be nonnegative")
    return lambda lam: lam ** (-p)


def from_scaled_metric(space: PointSpace, g: Callable[[float], float], convex=None,
                       delta2_expected=None) -> ModularFamily:
    """``w(lam, x, y) = g(lam) * d(x, y)`` for nonincreasing ``g``.

    Convexity holds iff ``lam * g(lam)`` is nonincreasing; unless ``convex`` is
    given it is decided on a log-spaced probe of scales.
    """
    d = space.distance
    if not _is_nonincreasing(g):
        raise ValueError("g must be nonincreasing in the scale")
    if convex is None:
        convex = _is_nonincreasing(lambda t: t * g(t))
    claims = Claims(strict=not _is_zero(g), convex=bool(convex), monotone=True,
                    delta2_expected=delta2_expected)

    def fn(lam, i, j):
        return xreal.xmul(g(lam), d[i, j])

    def matrix_fn(lam):
        return xreal.xmul(g(lam), d)

    return ModularFamily(space, fn, claims, "scaled", matrix_fn)


def _is_zero(f) -> bool:
    return all(f(t) == 0 for t in _PROBE[::8])


def from_saturating_metric(space: PointSpace, h: Callable[[float], float]) -> ModularFamily:
    """``w(lam, x, y) = d / (h(lam) + d)`` for positive nondecreasing ``h``."""
    d = space.distance
    hv = np.array([h(t) for t in _PROBE])
    if (hv <= 0).any():
        raise ValueError("h must be positive")
    if (np.diff(hv) < 0).any():
        raise ValueError("h must be nondecreasing in the scale")

    def fn(lam, i, j):
        dij = d[i, j]
        if dij == 0:
            return 0.0
        if dij == math.inf:
            return 1.0
        return dij / (h(lam) + dij)

    def matrix_fn(lam):
        hl = h(lam)
        with np.errstate(invalid="ignore"):
            m = d / (hl + d)
        m[np.isinf(d)] = 1.0
        m[d == 0] = 0.0
        return m

    return ModularFamily(space, fn, Claims(strict=True, monotone=True), "saturating", matrix_fn)


def from_exponential_family(times: Sequence[float], trajectories, labels=None) -> ModularFamily:
    """``w(lam, x, y) = max_t exp(-lam t) |x(t) - y(t)|`` over a finite time set.

    ``trajectories`` has shape ``(points, len(times))`` for real-valued paths or
    ``(points, len(times), dim)`` for paths in Euclidean space.
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or len(t) == 0 or (t < 0).any():
        raise ValueError("times must be a nonempty list of nonnegative reals")
    x = np.asarray(trajectories, dtype=float)
    if x.ndim == 2:
        x = x[:, :, None]
    if x.ndim != 3 or x.shape[1] != len(t):
        raise ValueError("trajectories must be sampled on the given times")
    # gaps[i, j, k] = |x_i(t_k) - x_j(t_k)|
    gaps = np.sqrt(((x[:, None, :, :] - x[None, :, :, :]) ** 2).sum(axis=-1))
    n = x.shape[0]
    # the base distance of the space is the w -> 0 limit, i.e. the sup over T
    space = PointSpace(labels if labels is not None else [str(i) for i in range(n)], gaps.max(axis=-1))

    def matrix_fn(lam):
        return (np.exp(-lam * t)[None, None, :] * gaps).max(axis=-1)

    def fn(lam, i, j):
        return float((np.exp(-lam * t) * gaps[i, j]).max())

    return ModularFamily(space, fn, Claims(strict=True, monotone=True), "exponential", matrix_fn)


def step_modular(space: PointSpace) -> ModularFamily:
    """``w(lam, x, y) = 0`` if ``d(x, y) <= lam`` else ``inf``. Violates the Delta_2 condition."""
    d = space.distance

    def fn(lam, i, j):
        return 0.0 if d[i, j] <= lam else math.inf

    def matrix_fn(lam):
        return np.where(d <= lam, 0.0, math.inf)

    claims = Claims(strict=True, convex=True, monotone=True, delta2_expected=False)
    return ModularFamily(space, fn, claims, "step", matrix_fn)


def from_orlicz(integrand, measure, vectors, labels=None) -> ModularFamily:
    """``w(lam, u, v) = rho((u - v) / lam)``; see :func:`modmetric.orlicz.induced_modular`."""
    from ..orlicz.modular import induced_modular

    return induced_modular(integrand, measure, vectors, labels)


_G_FACTORIES = {
    "power": lambda params: power_law(float(params.get("p", 1.0))),
}
_H_FACTORIES = {
    "linear": lambda params: (lambda lam, c=float(params.get("c", 1.0)): c * lam),
    "power": lambda params: (lambda lam, q=float(params.get("q", 1.0)): lam ** q),
}


def build(spec: dict, space: Optional[PointSpace] = None) -> ModularFamily:
    """Build a family from a config object such as ``{"kind": "scaled", "p": 2}``."""
    kind = spec.get("kind")
    if kind == "scaled":
        gname = spec.get("g", "power")
        g = _G_FACTORIES[gname](spec)
        return from_scaled_metric(_need(space, kind), g, delta2_expected=True if gname == "power" else None)
    if kind == "saturating":
        h = _H_FACTORIES[spec.get("h", "linear")](spec)
        return from_saturating_metric(_need(space, kind), h)
    if kind == "step":
        return step_modular(_need(space, kind))
    if kind == "exponential":
        return from_exponential_family(spec["times"], spec["trajectories"], spec.get("labels"))
    if kind == "orlicz":
        from ..orlicz.integrands import build_integrand
        from ..orlicz.measure import DiscreteMeasureSpace

        measure = DiscreteMeasureSpace.from_dict(spec["measure"])
        return from_orlicz(build_integrand(spec["integrand"]), measure, spec["vectors"], spec.get("labels"))
    raise ValueError(f"unknown modular kind {kind!r}")


def _need(space, kind):
    if space is None:
        raise ValueError(f"modular kind {kind!r} needs a point space")
    return space
