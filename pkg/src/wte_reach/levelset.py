"""Exact signed distances to axis-aligned boxes and the terminal value field."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import GridSpec, ScalarField


@dataclass(frozen=True)
class BoxSet:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("BoxSet needs 3-vectors")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"box lower corner {lo} exceeds upper corner {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, z: Sequence[float]) -> bool:
        return all(a <= v <= b for a, v, b in zip(self.lo, z, self.hi))

    def is_subset_of(self, other: "BoxSet") -> bool:
        return all(o <= a for o, a in zip(other.lo, self.lo)) and all(
            b <= o for o, b in zip(other.hi, self.hi)
        )

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))


def signed_distance_many(box: BoxSet, pts: np.ndarray) -> np.ndarray:
    """Signed distance for an ``(..., 3)`` array of points.

    Outside the box this is the Euclidean distance; inside it is the largest
    (least negative) face deficit, which for a box is exactly minus the distance
    to the boundary.
    """
    pts = np.asarray(pts, dtype=np.float64)
    lo = np.asarray(box.lo)
    hi = np.asarray(box.hi)
    face = np.maximum(lo - pts, pts - hi)
    outside = np.maximum(face, 0.0)
    m = np.max(face, axis=-1)
    # hypot keeps tiny exterior distances from underflowing to zero
    norm = np.hypot(np.hypot(outside[..., 0], outside[..., 1]), outside[..., 2])
    return np.where(m > 0.0, norm, m)


def signed_distance(box: BoxSet, z: Sequence[float]) -> float:
    return float(signed_distance_many(box, np.asarray(z, dtype=np.float64)))


def distance_field(spec: GridSpec, box: BoxSet, time_label: float = 0.0) -> ScalarField:
    X, K, E = spec.mesh()
    pts = np.stack([X, K, E], axis=-1)
    return ScalarField.from_storage(spec, signed_distance_many(box, pts), time_label)


def terminal_field(spec: GridSpec, target: BoxSet, domain: BoxSet, time_label: float = 0.0) -> ScalarField:
    """Node-wise ``max(g_target, g_domain)``: the value at the end of the horizon."""
    if not target.is_subset_of(domain):
        raise ValueError(f"target {target} is not contained in domain {domain}")
    gq = distance_field(spec, target).storage
    gd = distance_field(spec, domain).storage
    return ScalarField.from_storage(spec, np.maximum(gq, gd), time_label)
