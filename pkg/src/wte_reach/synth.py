"""Closed-loop trajectories under bang-bang feedback from the value gradient."""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DomainError, NumericalInstabilityError
from .grid import ScalarField, trilinear_many
from .hamiltonian import Costate, optimal_control
from .model import Adversarial, DisturbanceProfile, WteParams, dynamics_rhs, eval_profile
from .solver import SolveResult


class SnapshotSeries:
    """Value fields indexed by the time they represent, for nearest-time lookup."""

    def __init__(self, snapshots: Union[SolveResult, Sequence[tuple[float, ScalarField]]]):
        if isinstance(snapshots, SolveResult):
            snapshots = snapshots.snapshots
        items = sorted(((float(t), f) for t, f in snapshots), key=lambda item: item[0])
        if not items:
            raise ValueError("need at least one snapshot")
        self.times = [t for t, _ in items]
        self.fields = [f for _, f in items]
        self.spec = self.fields[0].spec

    def nearest(self, t: float) -> ScalarField:
        i = bisect.bisect_left(self.times, t)
        if i == 0:
            return self.fields[0]
        if i == len(self.times):
            return self.fields[-1]
        before, after = self.times[i - 1], self.times[i]
        # ties go to the later field
        return self.fields[i] if after - t <= t - before else self.fields[i - 1]


def _as_series(snapshots) -> SnapshotSeries:
    return snapshots if isinstance(snapshots, SnapshotSeries) else SnapshotSeries(snapshots)


def gradient_estimate(field: ScalarField, z: Sequence[float]) -> tuple[np.ndarray, float]:
    """Central differences of the interpolant at ``z +/- h e_l``, clamped to the box.

    Returns the gradient and the interpolated value at ``z``.
    """
    spec = field.spec
    z = np.asarray(z, dtype=np.float64)
    if not spec.contains(z):
        raise DomainError(f"state {tuple(z)} outside grid box")
    lo = np.asarray(spec.mins)
    hi = np.asarray(spec.maxs)
    h = np.asarray(spec.spacing)
    pts = np.repeat(z[None, :], 7, axis=0)
    for ax in range(3):
        pts[1 + 2 * ax, ax] = min(z[ax] + h[ax], hi[ax])
        pts[2 + 2 * ax, ax] = max(z[ax] - h[ax], lo[ax])
    vals = trilinear_many(field, pts)
    grad = np.empty(3)
    for ax in range(3):
        grad[ax] = (vals[1 + 2 * ax] - vals[2 + 2 * ax]) / (pts[1 + 2 * ax, ax] - pts[2 + 2 * ax, ax])
    return grad, float(vals[0])


def costate_at(snapshots, t: float, z: Sequence[float]) -> tuple[Costate, float]:
    field = _as_series(snapshots).nearest(t)
    grad, value = gradient_estimate(field, z)
    return Costate(*grad), value


def feedback(params: WteParams, snapshots, t: float, z: Sequence[float]) -> tuple[float, float]:
    p, _ = costate_at(snapshots, t, z)
    return optimal_control(params, z, p)


@dataclass(frozen=True)
class Sample:
    t: float
    z: tuple[float, float, float]
    u: tuple[float, float]
    eta: float
    value: float
    in_domain: bool
    in_target: bool


@dataclass(frozen=True)
class Trajectory:
    samples: tuple[Sample, ...]
    entry_time: Optional[float]
    feasible: bool

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def states(self) -> np.ndarray:
        return np.array([s.z for s in self.samples])

    @property
    def controls(self) -> np.ndarray:
        return np.array([s.u for s in self.samples])


def simulate(params: WteParams, snapshots, z0: Sequence[float], profile: DisturbanceProfile,
             dt_sim: Optional[float] = None, horizon: Optional[float] = None,
             stop_on_entry: bool = True) -> Trajectory:
    """Integrate the closed loop with RK4, controls held over each step.

    Field queries use the state clamped to the grid box; the domain and target
    flags use the true state.  Stops at the first sample inside the target
    unless ``stop_on_entry`` is false.
    """
    series = _as_series(snapshots)
    T = params.horizon if horizon is None else float(horizon)
    dt = T / 3000 if dt_sim is None else float(dt_sim)
    if dt <= 0:
        raise ValueError("dt_sim must be positive")
    n = max(1, int(round(T / dt))) if T > 0 else 0
    domain, target = params.domain_box, params.target_box
    spec = series.spec
    lo, hi = np.asarray(spec.mins), np.asarray(spec.maxs)
    z = np.asarray(z0, dtype=np.float64)
    if not domain.contains(z):
        raise DomainError(f"initial state {tuple(z)} outside the domain")
    adversarial = isinstance(profile, Adversarial)

    samples = []
    entry = None
    for s in range(n + 1):
        t = s * dt
        zq = np.clip(z, lo, hi)
        p, value = costate_at(series, t, zq)
        u = optimal_control(params, zq, p)
        eta = eval_profile(profile, min(t, T), params, p)
        in_target = target.contains(z)
        samples.append(Sample(t, tuple(float(v) for v in z), u, float(eta), value,
                              domain.contains(z), in_target))
        if in_target and entry is None:
            entry = t
            if stop_on_entry:
                break
        if s == n:
            break

        def rate(zs, ts):
            e = eta if adversarial else eval_profile(profile, min(ts, T))
            return dynamics_rhs(params, zs, u, e)

        k1 = rate(z, t)
        k2 = rate(z + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rate(z + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = rate(z + dt * k3, t + dt)
        z = z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(z)):
            raise NumericalInstabilityError(f"non-finite state after t={t:g}")

    feasible = entry is not None and all(sm.in_domain for sm in samples if sm.t <= entry)
    return Trajectory(tuple(samples), entry, feasible)
