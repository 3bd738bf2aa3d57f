"""Uniform node-centred 3D lattice over (x, K, E) and scalar fields on it.

Values are stored flat with the x index varying fastest, so the flat index of
node ``(i, j, k)`` is ``i + nx * (j + nK * k)``.  ``ScalarField.storage``
exposes the same buffer as a C-ordered ``(nE, nK, nx)`` array, which is the
layout the update kernels sweep over.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, GridIndexError, GridMismatchError

AXES = ("x", "K", "E")


@dataclass(frozen=True)
class GridSpec:
    mins: tuple[float, float, float]
    maxs: tuple[float, float, float]
    counts: tuple[int, int, int]

    def __post_init__(self):
        mins = tuple(float(v) for v in self.mins)
        maxs = tuple(float(v) for v in self.maxs)
        counts = tuple(int(n) for n in self.counts)
        if not (len(mins) == len(maxs) == len(counts) == 3):
            raise ValueError("GridSpec needs three axes")
        for ax, lo, hi, n in zip(AXES, mins, maxs, counts):
            if not hi > lo:
                raise ValueError(f"axis {ax}: max {hi} must exceed min {lo}")
            if n < 2:
                raise ValueError(f"axis {ax}: need at least 2 nodes, got {n}")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def uniform(cls, mins: Sequence[float], maxs: Sequence[float], n: int) -> "GridSpec":
        return cls(tuple(mins), tuple(maxs), (n, n, n))

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple((hi - lo) / (n - 1) for lo, hi, n in zip(self.mins, self.maxs, self.counts))

    @property
    def size(self) -> int:
        nx, nK, nE = self.counts
        return nx * nK * nE

    @property
    def storage_shape(self) -> tuple[int, int, int]:
        nx, nK, nE = self.counts
        return (nE, nK, nx)

    def axis_nodes(self, axis: int) -> np.ndarray:
        return self.mins[axis] + np.arange(self.counts[axis], dtype=np.float64) * self.spacing[axis]

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coordinate arrays ``(X, K, E)`` in storage layout ``(nE, nK, nx)``."""
        x = self.axis_nodes(0)[None, None, :]
        K = self.axis_nodes(1)[None, :, None]
        E = self.axis_nodes(2)[:, None, None]
        shape = self.storage_shape
        return (np.broadcast_to(x, shape), np.broadcast_to(K, shape), np.broadcast_to(E, shape))

    def flat_index(self, idx: Sequence[int]) -> int:
        i, j, k = _check_index(self, idx)
        nx, nK, _ = self.counts
        return i + nx * (j + nK * k)

    def contains(self, z: Sequence[float]) -> bool:
        return all(lo <= v <= hi for lo, v, hi in zip(self.mins, z, self.maxs))


@dataclass(frozen=True, eq=False)
class ScalarField:
    spec: GridSpec
    values: np.ndarray = field(repr=False)
    time_label: float = 0.0

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64).reshape(-1)
        if vals.size != self.spec.size:
            raise ValueError(f"field has {vals.size} values, grid has {self.spec.size} nodes")
        if vals is self.values or np.shares_memory(vals, self.values):
            vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "time_label", float(self.time_label))

    @classmethod
    def from_storage(cls, spec: GridSpec, arr: np.ndarray, time_label: float = 0.0,
                     copy: bool = False) -> "ScalarField":
        """Wrap an ``(nE, nK, nx)`` array.

        Without ``copy`` a contiguous float64 array is shared, so the caller must
        not write to it afterwards.
        """
        arr = np.asarray(arr, dtype=np.float64)
        if arr.shape != spec.storage_shape:
            raise ValueError(f"expected shape {spec.storage_shape}, got {arr.shape}")
        obj = object.__new__(cls)
        vals = np.array(arr, order="C", copy=True) if copy else np.ascontiguousarray(arr)
        vals = vals.reshape(-1)
        vals.flags.writeable = False
        object.__setattr__(obj, "spec", spec)
        object.__setattr__(obj, "values", vals)
        object.__setattr__(obj, "time_label", float(time_label))
        return obj

    @property
    def storage(self) -> np.ndarray:
        return self.values.reshape(self.spec.storage_shape)

    @property
    def cube(self) -> np.ndarray:
        """Read-only view indexed ``[i, j, k]`` along (x, K, E)."""
        return self.storage.transpose(2, 1, 0)

    def at(self, idx: Sequence[int]) -> float:
        return float(self.values[self.spec.flat_index(idx)])

    def with_time(self, time_label: float) -> "ScalarField":
        return ScalarField.from_storage(self.spec, self.storage, time_label, copy=True)


def _check_index(spec: GridSpec, idx: Sequence[int]) -> tuple[int, int, int]:
    if len(idx) != 3:
        raise GridIndexError(f"expected a 3-index, got {idx!r}")
    out = []
    for ax, v, n in zip(AXES, idx, spec.counts):
        v = int(v)
        if not 0 <= v < n:
            raise GridIndexError(f"index {v} out of range [0, {n}) on axis {ax}")
        out.append(v)
    return tuple(out)


def node_coordinates(spec: GridSpec, idx: Sequence[int]) -> np.ndarray:
    idx = _check_index(spec, idx)
    return np.array([lo + i * h for lo, i, h in zip(spec.mins, idx, spec.spacing)])


def nearest_node(spec: GridSpec, z: Sequence[float]) -> tuple[int, int, int]:
    if not spec.contains(z):
        raise DomainError(f"point {tuple(z)} outside grid box")
    return tuple(
        int(min(max(round((v - lo) / h), 0), n - 1))
        for v, lo, h, n in zip(z, spec.mins, spec.spacing, spec.counts)
    )


def one_sided_slopes(field: ScalarField, idx: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Backward and forward difference quotients at one node.

    A missing neighbour on the grid boundary is replaced by the linear
    extrapolation ``2 V[b] - V[interior]``, which makes both slopes equal there.
    """
    idx = _check_index(field.spec, idx)
    cube = field.cube
    minus = np.empty(3)
    plus = np.empty(3)
    for ax in range(3):
        n = field.spec.counts[ax]
        h = field.spec.spacing[ax]
        lo = list(idx)
        hi = list(idx)
        i = idx[ax]
        if i == 0:
            hi[ax] = 1
            s = (cube[tuple(hi)] - cube[idx]) / h
            minus[ax] = plus[ax] = s
        elif i == n - 1:
            lo[ax] = n - 2
            s = (cube[idx] - cube[tuple(lo)]) / h
            minus[ax] = plus[ax] = s
        else:
            lo[ax] = i - 1
            hi[ax] = i + 1
            minus[ax] = (cube[idx] - cube[tuple(lo)]) / h
            plus[ax] = (cube[tuple(hi)] - cube[idx]) / h
    return minus, plus


def _cell_locate(spec: GridSpec, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mins = np.asarray(spec.mins)
    maxs = np.asarray(spec.maxs)
    if np.any(pts < mins) or np.any(pts > maxs) or not np.all(np.isfinite(pts)):
        bad = pts[np.any((pts < mins) | (pts > maxs) | ~np.isfinite(pts), axis=1)][0]
        raise DomainError(f"point {tuple(bad)} outside grid box {spec.mins}..{spec.maxs}")
    h = np.asarray(spec.spacing)
    n = np.asarray(spec.counts)
    s = (pts - mins) / h
    cell = np.minimum(np.floor(s).astype(np.int64), n - 2)
    return cell, s - cell


def trilinear_many(field: ScalarField, pts: np.ndarray) -> np.ndarray:
    """Trilinear interpolation at an ``(m, 3)`` array of points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    cell, t = _cell_locate(field.spec, pts)
    nx, nK, _ = field.spec.counts
    v = field.values
    base = cell[:, 0] + nx * (cell[:, 1] + nK * cell[:, 2])
    tx, tK, tE = t[:, 0], t[:, 1], t[:, 2]
    out = np.zeros(len(pts))
    for dk in (0, 1):
        wE = tE if dk else 1.0 - tE
        for dj in (0, 1):
            wK = tK if dj else 1.0 - tK
            for di in (0, 1):
                wx = tx if di else 1.0 - tx
                out += wx * wK * wE * v[base + di + nx * (dj + nK * dk)]
    return out


def trilinear(field: ScalarField, z: Sequence[float]) -> float:
    return float(trilinear_many(field, np.asarray(z, dtype=np.float64)[None, :])[0])


def sup_norm_diff(a: ScalarField, b: ScalarField) -> float:
    """Max-abs difference over the nodes two fields share.

    Either field may be a nested coarsening of the other (same box, and each
    coarse axis spacing an integer multiple of the fine one).
    """
    if a.spec == b.spec:
        return float(np.max(np.abs(a.values - b.values)))
    if a.spec.size < b.spec.size:
        a, b = b, a
    fine, coarse = a.spec, b.spec
    if not (np.allclose(fine.mins, coarse.mins) and np.allclose(fine.maxs, coarse.maxs)):
        raise GridMismatchError(f"grid boxes differ: {fine} vs {coarse}")
    strides = []
    for ax, nf, nc in zip(AXES, fine.counts, coarse.counts):
        if (nf - 1) % (nc - 1):
            raise GridMismatchError(
                f"axis {ax}: {nc} nodes do not nest inside {nf} nodes"
            )
        strides.append((nf - 1) // (nc - 1))
    sx, sK, sE = strides
    sub = a.storage[::sE, ::sK, ::sx]
    return float(np.max(np.abs(sub - b.storage)))
