"""Queries on a solved value field: membership, planar slices, set volume."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, GridMismatchError
from .grid import AXES, ScalarField, trilinear


@dataclass(frozen=True, eq=False)
class BrsSlice:
    axis: int
    level: float
    coords: tuple[np.ndarray, np.ndarray]  # node coordinates of the two free axes
    values: np.ndarray  # shape (len(coords[0]), len(coords[1]))

    @property
    def mask(self) -> np.ndarray:
        return self.values <= 0.0

    @property
    def free_axes(self) -> tuple[int, int]:
        return tuple(a for a in range(3) if a != self.axis)


@dataclass(frozen=True)
class FieldComparison:
    dominance: float  # fraction of nodes with a <= b
    volume_a: float
    volume_b: float
    total_volume: float

    @property
    def volume_ratio(self) -> float:
        """``volume_b / volume_a`` (1.0 when both sets are empty)."""
        if self.volume_a == 0.0:
            return 1.0 if self.volume_b == 0.0 else float("inf")
        return self.volume_b / self.volume_a


def _axis_index(axis: Union[int, str]) -> int:
    if isinstance(axis, str):
        try:
            return AXES.index(axis)
        except ValueError:
            raise ValueError(f"unknown axis {axis!r}; expected one of {AXES}") from None
    if axis not in (0, 1, 2):
        raise ValueError(f"axis index must be 0, 1 or 2, got {axis}")
    return axis


def is_member(field: ScalarField, z: Sequence[float]) -> tuple[bool, float]:
    v = trilinear(field, z)
    return v <= 0.0, v


def extract_slice(field: ScalarField, axis: Union[int, str], level: float) -> BrsSlice:
    axis = _axis_index(axis)
    spec = field.spec
    lo, hi = spec.mins[axis], spec.maxs[axis]
    if not lo <= level <= hi:
        raise DomainError(f"{AXES[axis]}={level} outside [{lo}, {hi}]")
    h = spec.spacing[axis]
    n = spec.counts[axis]
    s = (level - lo) / h
    c = min(int(np.floor(s)), n - 2)
    t = s - c
    cube = field.cube  # [i, j, k]
    a = np.take(cube, c, axis=axis)
    b = np.take(cube, c + 1, axis=axis)
    vals = a if t == 0.0 else (1.0 - t) * a + t * b
    free = [ax for ax in range(3) if ax != axis]
    coords = (spec.axis_nodes(free[0]), spec.axis_nodes(free[1]))
    return BrsSlice(axis, float(level), coords, np.array(vals))


def node_weights(spec) -> np.ndarray:
    """Dual-cell volume of every node, in storage layout; sums to the box volume."""
    ws = []
    for ax in range(3):
        w = np.full(spec.counts[ax], spec.spacing[ax])
        w[0] = w[-1] = spec.spacing[ax] / 2
        ws.append(w)
    wx, wK, wE = ws
    return wE[:, None, None] * wK[None, :, None] * wx[None, None, :]


def brs_volume(field: ScalarField) -> tuple[float, float]:
    """Volume of ``{V <= 0}`` and the total grid-box volume."""
    w = node_weights(field.spec)
    inside = field.storage <= 0.0
    return float(np.sum(w[inside])), float(np.sum(w))


def compare_fields(a: ScalarField, b: ScalarField) -> FieldComparison:
    if a.spec != b.spec:
        raise GridMismatchError("compare_fields needs fields on the same grid")
    va, total = brs_volume(a)
    vb, _ = brs_volume(b)
    dom = float(np.mean(a.values <= b.values))
    return FieldComparison(dom, va, vb, total)
