"""Deterministic fixtures and file loaders."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import hadamard

from . import xreal
from .core.family import ModularFamily, scaled_power, step_modular
from .core.spaces import PointSpace
from .orlicz.measure import DiscreteMeasureSpace

STEP_POINTS = (0.0, 0.125, 0.25, 0.5, 1.0)


def random_points(n: int, seed: int, dim: int = 2, min_separation: float = 0.0, max_tries: int = 10000) -> np.ndarray:
    """``n`` points in the unit cube, pairwise at least ``min_separation`` apart (rejection sampling)."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    pts: List[np.ndarray] = []
    for _ in range(max_tries):
        if len(pts) == n:
            break
        p = rng.random(dim)
        if all(np.linalg.norm(p - q) >= min_separation for q in pts):
            pts.append(p)
    if len(pts) < n:
        raise ValueError(f"could not place {n} points at separation {min_separation}")
    return np.array(pts)


def random_metric(n: int, seed: int, dim: int = 2, min_separation: float = 0.0) -> PointSpace:
    """Euclidean metric on random points; equal seeds give identical spaces."""
    return PointSpace.from_points(random_points(n, seed, dim, min_separation))


def step_space() -> PointSpace:
    return PointSpace.from_points(np.array(STEP_POINTS))


def step_fixture() -> ModularFamily:
    """Step modular on five points of a line; its entourages and d0 balls differ at finite resolution."""
    return step_modular(step_space())


def scaled_fixture(p: float = 1.0) -> ModularFamily:
    return scaled_power(step_space(), p)


def delta2_step_fixture(length: int = 20) -> Tuple[ModularFamily, list, List[float]]:
    """Points ``1 - 1/k`` converging at scale 1 but not at scale 1/2 to the origin."""
    coords = [0.0] + [1.0 - 1.0 / k for k in range(1, length + 1)]
    w = step_modular(PointSpace.from_points(np.array(coords)))
    return w, [(list(range(1, length + 1)), 0)], [1.0]


def delta2_scaled_sequences(space: PointSpace, count: int, seed: int, length: int = 12) -> list:
    """Sequences that wander and then settle on their limit, which is all convergence means in a finite space."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        limit = int(rng.integers(space.n))
        settle = int(rng.integers(1, length // 2))
        head = rng.integers(space.n, size=settle).tolist()
        out.append(([int(i) for i in head] + [limit] * (length - settle), limit))
    return out


def rademacher(m: int = 16, n: int = 64) -> Tuple[np.ndarray, DiscreteMeasureSpace]:
    """The first ``m`` rows of a Sylvester-Hadamard matrix of order ``n`` on ``n`` equal cells of a unit interval.

    Distinct rows differ on exactly half the cells, so their L1 distance is 1.
    """
    if n & (n - 1) or n < 2:
        raise ValueError("n must be a power of two")
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    return hadamard(n)[:m].astype(float), DiscreteMeasureSpace.uniform_grid(n)


def lipschitz(n: int = 64, values: Optional[Sequence[float]] = None) -> Tuple[np.ndarray, DiscreteMeasureSpace]:
    """``{c x}`` sampled at cell centers of ``n`` equal cells of ``[0, 1]``."""
    omega = DiscreteMeasureSpace.uniform_grid(n)
    cs = np.linspace(0.0, 1.0, 11) if values is None else np.asarray(values, dtype=float)
    return np.outer(cs, omega.positions[:, 0]), omega


# file formats


def load_space(path) -> PointSpace:
    """Point space from JSON with ``distance`` (and optional ``labels``) or ``points``."""
    obj = json.loads(Path(path).read_text())
    return space_from_dict(obj)


def space_from_dict(obj: dict) -> PointSpace:
    if "distance" in obj:
        return PointSpace.from_matrix(xreal.decode(obj["distance"]), obj.get("labels"))
    if "points" in obj:
        return PointSpace.from_points(obj["points"], obj.get("labels"))
    raise ValueError("space needs 'distance' or 'points'")


def space_to_dict(space: PointSpace) -> dict:
    return xreal.encode({"labels": list(space.labels), "distance": space.distance.tolist()})


def family_to_csv(a: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(a, dtype=float):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def family_from_csv(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    a = np.array([[float(v) for v in r] for r in rows])
    if a.ndim != 2:
        raise ValueError("ragged family CSV")
    return a


def load_family(csv_path, omega_path=None) -> Tuple[np.ndarray, DiscreteMeasureSpace]:
    """Family CSV (rows are functions) plus its measure-space sidecar, by default ``<csv>.omega.json``."""
    csv_path = Path(csv_path)
    sidecar = Path(omega_path) if omega_path is not None else csv_path.with_suffix(".omega.json")
    a = family_from_csv(csv_path.read_text())
    omega = DiscreteMeasureSpace.from_json(sidecar.read_text())
    if a.shape[1] != omega.n:
        raise ValueError(f"family has {a.shape[1]} cells, sidecar has {omega.n}")
    return a, omega


def save_family(csv_path, a: np.ndarray, omega: DiscreteMeasureSpace) -> Tuple[Path, Path]:
    csv_path = Path(csv_path)
    sidecar = csv_path.with_suffix(".omega.json")
    csv_path.write_text(family_to_csv(a))
    sidecar.write_text(json.dumps(omega.to_dict(), sort_keys=True) + "\n")
    return csv_path, sidecar
