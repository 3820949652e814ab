"""Monotone-infimum engine and the distances a modular induces.

Every gauge here is an infimum of scales at which some monotone predicate
switches from false to true, so they all run through :func:`infimum_monotone`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Optional

import numpy as np

from . import xreal
from .core.family import ModularFamily
from .core.spaces import TOL_METRIC, metric_violations
from .report import NonMonotoneError, PreconditionError

FLOOR = 1e-12
CAP = 1e12
TOL = 1e-10
MAX_DOUBLINGS = 60


@dataclass
class GaugeResult:
    value: float
    bracket_low: float
    bracket_high: float
    iterations: int = 0
    at_floor: bool = False
    at_cap: bool = False
    exact: bool = False

    def __float__(self) -> float:
        return float(self.value)

    @property
    def flags(self) -> Dict[str, bool]:
        return {"at_floor": self.at_floor, "at_cap": self.at_cap, "exact": self.exact}


def infimum_monotone(pred: Callable[[float], bool], floor: float = FLOOR, cap: float = CAP,
                     tol: float = TOL, expand: bool = True) -> GaugeResult:
    """``inf{lam in [floor, cap] : pred(lam)}`` for a predicate that flips once from false to true.

    The returned value is the upper end of the final bracket, so ``pred(value)``
    is always true. If ``pred(cap)`` is false the cap is doubled up to 60 times
    (when ``expand``) before giving up with ``+inf``.
    """
    if not 0 < floor < cap:
        raise ValueError("need 0 < floor < cap")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if pred(floor):
        return GaugeResult(floor, floor, floor, 0, at_floor=True)
    lo, hi = floor, cap
    doublings = 0
    while not pred(hi):
        if not expand or doublings >= MAX_DOUBLINGS:
            return GaugeResult(math.inf, hi, math.inf, doublings, at_cap=True)
        lo, hi = hi, 2.0 * hi
        doublings += 1

    # spot check at three interior points: once true, must stay true
    probes = np.geomspace(lo, hi, 5)[1:-1]
    seen_true = None
    for lam in probes:
        if pred(lam):
            seen_true = lam if seen_true is None else seen_true
        elif seen_true is not None:
            raise NonMonotoneError(
                f"predicate true at {seen_true!r} but false at larger scale {lam!r}",
                {"lambda_true": float(seen_true), "lambda_false": float(lam)},
            )

    it = 0
    while hi - lo > tol:
        # geometric steps while the bracket spans orders of magnitude
        mid = math.sqrt(lo * hi) if hi > 4.0 * lo else 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
        it += 1
    return GaugeResult(hi, lo, hi, it + doublings)


def _diagonal(w: ModularFamily, i: int, j: int, floor: float) -> Optional[GaugeResult]:
    if i == j or w(floor, i, j) == 0:
        return GaugeResult(0.0, 0.0, floor, 0, at_floor=True, exact=True)
    return None


def d0(w: ModularFamily, i: int, j: int, floor: float = FLOOR, cap: float = CAP, tol: float = TOL) -> GaugeResult:
    """``inf{lam : w(lam, i, j) <= lam}``."""
    zero = _diagonal(w, i, j, floor)
    if zero is not None:
        return zero
    return infimum_monotone(lambda lam: w(lam, i, j) <= lam, floor, cap, tol)


def dstar(w: ModularFamily, i: int, j: int, floor: float = FLOOR, cap: float = CAP, tol: float = TOL) -> GaugeResult:
    """``inf{lam : w(lam, i, j) <= 1}``."""
    zero = _diagonal(w, i, j, floor)
    if zero is not None:
        return zero
    return infimum_monotone(lambda lam: w(lam, i, j) <= 1.0, floor, cap, tol)


# d_w without qualification means d0
d_w = d0


class Superadditive:
    """A nondecreasing superadditive map ``phi`` on ``[0, inf)`` with ``phi(0) = 0``.

    ``inverse`` is the generalized inverse ``inf{t >= 0 : phi(t) >= s}``; when
    not supplied it is computed by bisection on ``phi``.
    """

    def __init__(self, fn: Callable[[float], float], inverse: Optional[Callable[[float], float]] = None,
                 name: str = "phi"):
        self.fn = fn
        self._inverse = inverse
        self.name = name

    def __call__(self, t: float) -> float:
        return self.fn(t)

    def inverse(self, s: float) -> float:
        if s == math.inf:
            return math.inf
        if s <= 0:
            return 0.0
        if self._inverse is not None:
            return self._inverse(s)
        return infimum_monotone(lambda t: self.fn(t) >= s, 1e-300, 1.0, 1e-15).value

    def validate(self, samples: Iterable[float], tol: float = 1e-12) -> None:
        """Check ``phi(0) = 0``, monotonicity and superadditivity on the samples."""
        s = sorted(float(x) for x in samples)
        if self.fn(0.0) != 0:
            raise PreconditionError(f"{self.name}(0) must be 0", {"phi(0)": self.fn(0.0)})
        vals = [self.fn(x) for x in s]
        for a, b, fa, fb in zip(s, s[1:], vals, vals[1:]):
            if fb < fa - tol:
                raise PreconditionError(f"{self.name} decreases between {a} and {b}", {"pair": [a, b]})
        for a in s:
            for b in s:
                if self.fn(a + b) < self.fn(a) + self.fn(b) - tol * max(1.0, self.fn(a + b)):
                    raise PreconditionError(f"{self.name} is not superadditive at ({a}, {b})", {"pair": [a, b]})


IDENTITY = Superadditive(lambda t: t, lambda s: s, "identity")
SQUARE = Superadditive(lambda t: t * t, math.sqrt, "square")


def d0_phi(w: ModularFamily, phi: Superadditive, i: int, j: int, floor: float = FLOOR, cap: float = CAP,
           tol: float = TOL) -> GaugeResult:
    """``inf{lam : w(lam, i, j) <= phi(lam)}``."""
    zero = _diagonal(w, i, j, floor)
    if zero is not None:
        return zero
    return infimum_monotone(lambda lam: w(lam, i, j) <= phi(lam), floor, cap, tol)


def _golden(f, a: float, b: float, tol: float, max_iter: int = 200):
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def d1_phi(w: ModularFamily, phi: Superadditive, i: int, j: int, grid=None, floor: float = FLOOR,
           cap: float = CAP, tol: float = TOL, extra: Iterable[float] = ()) -> GaugeResult:
    """``inf_lam (lam + phi^{-1}(w(lam, i, j)))``.

    Minimized over a grid (default: 48 points per decade on ``[floor, cap]``)
    plus ``extra`` candidate scales, then refined by golden-section search on
    the two grid cells around the best point. The refinement is local; the
    objective need not be unimodal for general ``w``.
    """
    zero = _diagonal(w, i, j, floor)
    if zero is not None:
        return zero

    def objective(lam):
        return lam + phi.inverse(w(lam, i, j))

    if grid is None:
        pts = np.geomspace(floor, cap, int(48 * math.log10(cap / floor)) + 1)
    else:
        pts = np.asarray(list(grid), dtype=float)
    pts = np.unique(np.concatenate([pts, np.asarray(list(extra), dtype=float)]))
    vals = np.array([objective(x) for x in pts])
    if np.all(np.isinf(vals)):
        return GaugeResult(math.inf, float(pts[0]), math.inf, len(pts), at_cap=True)
    k = int(np.argmin(vals))
    best_x, best_v = float(pts[k]), float(vals[k])
    a = float(pts[max(k - 1, 0)])
    b = float(pts[min(k + 1, len(pts) - 1)])
    if b > a:
        x, v = _golden(objective, a, b, 1e-13)
        if v < best_v:
            best_x, best_v = x, v
    return GaugeResult(best_v, best_v, best_v, len(pts), at_floor=bool(best_x <= pts[0]),
                       at_cap=bool(best_x >= pts[-1]))


def luxemburg(rho: Callable[[np.ndarray], float], u, floor: float = FLOOR, cap: float = CAP,
              tol: float = TOL) -> GaugeResult:
    """``inf{lam > 0 : rho(u / lam) <= 1}``."""
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        return GaugeResult(0.0, 0.0, floor, 0, at_floor=True, exact=True)
    return infimum_monotone(lambda lam: rho(u / lam) <= 1.0, floor, cap, tol)


@dataclass
class DistanceMatrix:
    """Square matrix of extended distances, tagged with the gauge that produced it.

    ``resolution`` is the smallest distance the generating procedure can
    resolve; balls of radius at or below it carry no information.
    """

    values: np.ndarray
    tag: str = ""
    resolution: float = 0.0
    meta: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError("distance matrix must be square")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, idx):
        return self.values[idx]

    def violations(self, tol: float = TOL_METRIC):
        return metric_violations(self.values, tol)

    def scaled(self, c: float) -> "DistanceMatrix":
        return DistanceMatrix(self.values * c, self.tag, self.resolution * c, dict(self.meta))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for row in self.values:
            writer.writerow([xreal.fmt(v) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, tag: str = "") -> "DistanceMatrix":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        return cls(np.array([[float(v) for v in r] for r in rows]), tag)

    def to_dict(self) -> dict:
        return xreal.encode({"tag": self.tag, "resolution": self.resolution,
                             "values": self.values, "meta": self.meta})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "DistanceMatrix":
        vals = np.array(xreal.decode(obj["values"]), dtype=float)
        return cls(vals, obj.get("tag", ""), float(obj.get("resolution", 0.0)), dict(obj.get("meta", {})))


GAUGES = {
    "d0": d0,
    "dstar": dstar,
    "d0_phi": d0_phi,
    "d1_phi": d1_phi,
}


def gauge_matrix(w: ModularFamily, gauge: str = "d0", phi: Optional[Superadditive] = None,
                 floor: float = FLOOR, cap: float = CAP, tol: float = TOL,
                 tol_metric: float = TOL_METRIC, **kwargs) -> DistanceMatrix:
    """All pairwise values of a gauge, with the pseudometric axioms checked.

    Triangle violations beyond ``tol_metric`` are recorded in ``meta`` rather
    than raised: they mean the engine tolerance is too coarse for the data.
    """
    if gauge not in GAUGES:
        raise ValueError(f"unknown gauge {gauge!r}")
    fn = GAUGES[gauge]
    args = (phi,) if gauge in ("d0_phi", "d1_phi") else ()
    if args and phi is None:
        raise ValueError(f"gauge {gauge} needs phi")
    n = w.n
    vals = np.zeros((n, n))
    flags = {}
    for i in range(n):
        for j in range(i + 1, n):
            try:
                r = fn(w, *args, i, j, floor=floor, cap=cap, tol=tol, **kwargs)
            except PreconditionError as exc:
                exc.witness.setdefault("pair", [i, j])
                raise type(exc)(f"pair ({i}, {j}): {exc}", exc.witness) from exc
            vals[i, j] = vals[j, i] = r.value
            if r.at_cap or (r.at_floor and not r.exact):
                flags[f"{i},{j}"] = r.flags
    violations = metric_violations(vals, tol_metric)
    return DistanceMatrix(vals, gauge, 0.0, {"flags": flags, "violations": violations})
