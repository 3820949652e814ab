from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

TOL_METRIC = 1e-9


def metric_violations(d: np.ndarray, tol: float = TOL_METRIC, limit: int = 10) -> List[dict]:
    """List (up to ``limit``) violations of the pseudometric axioms in a square matrix."""
    out: List[dict] = []
    n = d.shape[0]
    for i in range(n):
        if d[i, i] != 0:
            out.append({"axiom": "diagonal", "i": i, "value": float(d[i, i])})
    for i in range(n):
        for j in range(i + 1, n):
            a, b = d[i, j], d[j, i]
            if not (a == b or abs(a - b) <= tol):
                out.append({"axiom": "symmetry", "i": i, "j": j})
    with np.errstate(invalid="ignore"):
        # rhs[i, k, j] = d[i, k] + d[k, j]
        rhs = (d[:, :, None] + d[None, :, :]).min(axis=1)
    bad = np.argwhere(np.isfinite(d) & (d > rhs + tol))
    for i, j in bad[: max(0, limit - len(out))]:
        k = int(np.argmin(d[i, :] + d[:, j]))
        out.append({"axiom": "triangle", "i": int(i), "j": int(j), "via": k,
                    "lhs": float(d[i, j]), "rhs": float(rhs[i, j])})
    return out[:limit]


@dataclass(frozen=True)
class PointSpace:
    """A finite ground set, optionally with a base (pseudo)metric."""

    labels: tuple
    base_distance: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) == 0:
            raise ValueError("a point space needs at least one point")
        if self.base_distance is not None:
            d = np.array(self.base_distance, dtype=float)
            n = len(self.labels)
            if d.shape != (n, n):
                raise ValueError(f"distance matrix has shape {d.shape}, expected {(n, n)}")
            if np.isnan(d).any() or (d < 0).any():
                raise ValueError("distances must be nonnegative")
            bad = metric_violations(d)
            if bad:
                raise ValueError(f"base distance is not a pseudometric: {bad[0]}")
            d.setflags(write=False)
            object.__setattr__(self, "base_distance", d)

    @property
    def n(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return self.n

    @property
    def distance(self) -> np.ndarray:
        if self.base_distance is None:
            raise ValueError("this point space carries no base distance")
        return self.base_distance

    def index(self, point) -> int:
        """Index of a point given either its index or its label."""
        if isinstance(point, (int, np.integer)) and not isinstance(point, bool):
            if not 0 <= point < self.n:
                raise IndexError(f"point index {point} out of range for {self.n} points")
            return int(point)
        try:
            return self.labels.index(point)
        except ValueError:
            raise IndexError(f"unknown point {point!r}") from None

    def subspace(self, keep: Sequence[int]) -> "PointSpace":
        keep = [self.index(k) for k in keep]
        d = None if self.base_distance is None else self.base_distance[np.ix_(keep, keep)]
        return PointSpace([self.labels[k] for k in keep], d)

    @classmethod
    def from_matrix(cls, distance, labels=None) -> "PointSpace":
        d = np.asarray(distance, dtype=float)
        if labels is None:
            labels = [str(i) for i in range(d.shape[0])]
        return cls(labels, d)

    @classmethod
    def from_points(cls, coords, labels=None) -> "PointSpace":
        """Euclidean distances between the rows of ``coords`` (1-D input is a line)."""
        x = np.asarray(coords, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        d = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=-1))
        # exact symmetry; sqrt of the same sum is already symmetric but be explicit
        d = np.minimum(d, d.T)
        return cls.from_matrix(d, labels)


@dataclass(frozen=True)
class LambdaGrid:
    """Finite sample of the scale parameter, with search bounds for bisection."""

    values: tuple
    floor: float
    cap: float

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError("empty lambda grid")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("lambda grid must be strictly increasing")
        if not self.floor > 0:
            raise ValueError("grid floor must be positive")
        if self.floor > vals[0] or vals[-1] > self.cap:
            raise ValueError("grid values must lie within [floor, cap]")

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def logspace(cls, lo: float, hi: float, num: int, floor=None, cap=None) -> "LambdaGrid":
        vals = np.geomspace(lo, hi, num)
        return cls(tuple(vals), floor if floor is not None else float(vals[0]),
                   cap if cap is not None else float(vals[-1]))

    @classmethod
    def per_decade(cls, lo: float, hi: float, points_per_decade: int = 48) -> "LambdaGrid":
        num = int(round(np.log10(hi / lo) * points_per_decade)) + 1
        return cls.logspace(lo, hi, max(num, 2))

    @classmethod
    def from_values(cls, values, floor=None, cap=None) -> "LambdaGrid":
        vals = sorted(set(float(v) for v in values))
        if not vals:
            raise ValueError("empty lambda grid")
        return cls(tuple(vals), floor if floor is not None else vals[0],
                   cap if cap is not None else vals[-1])
