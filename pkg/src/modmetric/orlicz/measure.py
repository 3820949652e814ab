from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class DiscreteMeasureSpace:
    """Finitely many cells with positive masses, optionally laid out on a regular grid.

    ``shape`` is the grid shape (cells are stored in C order) and ``mesh`` the
    cell side length. ``positions`` are cell centers.
    """

    masses: np.ndarray
    shape: Optional[Tuple[int, ...]] = None
    mesh: Optional[float] = None
    positions: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        m = np.array(self.masses, dtype=float).ravel()
        if m.size == 0:
            raise ValueError("a measure space needs at least one cell")
        if not (m > 0).all() or not np.isfinite(m).all():
            raise ValueError("cell masses must be positive and finite")
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)
        if self.shape is not None:
            shape = tuple(int(s) for s in self.shape)
            if int(np.prod(shape)) != m.size:
                raise ValueError(f"grid shape {shape} does not match {m.size} cells")
            object.__setattr__(self, "shape", shape)
        if self.positions is not None:
            pos = np.array(self.positions, dtype=float)
            if pos.ndim == 1:
                pos = pos[:, None]
            if pos.shape[0] != m.size:
                raise ValueError("one position per cell")
            object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return self.masses.size

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def equal_masses(self) -> bool:
        return bool(np.all(self.masses == self.masses[0]))

    @property
    def is_grid(self) -> bool:
        return self.shape is not None

    def integrate(self, values) -> np.ndarray:
        """Sum of ``values * mass`` over the last axis."""
        return np.asarray(values, dtype=float) @ self.masses

    @classmethod
    def uniform_grid(cls, shape, length: float = 1.0) -> "DiscreteMeasureSpace":
        """Regular grid of equal cells tiling ``[0, length]^dim``."""
        if isinstance(shape, (int, np.integer)):
            shape = (int(shape),)
        shape = tuple(int(s) for s in shape)
        if len({*shape}) != 1:
            raise ValueError("uniform grids use the same cell count along every axis")
        h = length / shape[0]
        axes = [(np.arange(s) + 0.5) * h for s in shape]
        pos = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        n = int(np.prod(shape))
        return cls(np.full(n, h ** len(shape)), shape, h, pos)

    def to_dict(self) -> dict:
        out = {"masses": self.masses.tolist()}
        if self.shape is not None:
            out["shape"] = list(self.shape)
        if self.mesh is not None:
            out["mesh"] = self.mesh
        if self.positions is not None:
            out["positions"] = self.positions.tolist()
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "DiscreteMeasureSpace":
        if "grid" in obj:
            return cls.uniform_grid(obj["grid"], obj.get("length", 1.0))
        return cls(np.asarray(obj["masses"], dtype=float), obj.get("shape"), obj.get("mesh"),
                   obj.get("positions"))

    @classmethod
    def from_json(cls, text: str) -> "DiscreteMeasureSpace":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Partition:
    """Disjoint blocks of cell indices covering every cell."""

    blocks: Tuple[Tuple[int, ...], ...]
    n: int

    def __post_init__(self):
        blocks = tuple(tuple(int(c) for c in b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        seen = np.zeros(self.n, dtype=int)
        for b in blocks:
            if not b:
                raise ValueError("empty block")
            seen[list(b)] += 1
        if (seen != 1).any():
            bad = int(np.flatnonzero(seen != 1)[0])
            raise ValueError(f"blocks must cover each cell exactly once (cell {bad})")

    def __len__(self) -> int:
        return len(self.blocks)

    def labels(self) -> np.ndarray:
        """Block index of each cell."""
        lab = np.empty(self.n, dtype=int)
        for k, b in enumerate(self.blocks):
            lab[list(b)] = k
        return lab

    def block_masses(self, omega: DiscreteMeasureSpace) -> np.ndarray:
        return np.array([omega.masses[list(b)].sum() for b in self.blocks])

    def refines(self, other: "Partition") -> bool:
        lab = other.labels()
        return all(len({lab[c] for c in b}) == 1 for b in self.blocks)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(tuple((i,) for i in range(n)), n)

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        labels = np.asarray(labels)
        blocks = [tuple(np.flatnonzero(labels == v)) for v in np.unique(labels)]
        return cls(tuple(blocks), labels.size)


def dyadic_partition(omega: DiscreteMeasureSpace, blocks_per_axis: int) -> Partition:
    """Split each grid axis into ``blocks_per_axis`` contiguous runs of cells."""
    if not omega.is_grid:
        raise ValueError("dyadic partitions need a grid")
    if blocks_per_axis < 1:
        raise ValueError("need at least one block per axis")
    coords = np.unravel_index(np.arange(omega.n), omega.shape)
    label = np.zeros(omega.n, dtype=int)
    for axis, c in enumerate(coords):
        k = min(blocks_per_axis, omega.shape[axis])
        label = label * k + (c * k) // omega.shape[axis]
    return Partition.from_labels(label)


def dyadic_ladder(omega: DiscreteMeasureSpace) -> List[Partition]:
    """Partitions with 1, 2, 4, ... blocks per axis, ending in singletons."""
    out = []
    k = 1
    side = max(omega.shape)
    while True:
        out.append(dyadic_partition(omega, min(k, side)))
        if k >= side:
            break
        k *= 2
    return out
