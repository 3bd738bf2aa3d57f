"""Explicit monotone time march for the constrained reach-avoid value function.

The value ``V(t, z)`` is computed backward from ``V(T) = max(g_target, g_domain)``.
The dynamic-programming identity ``V(t) = V(t + dt) + dt * H(grad V)`` with the
min-max Hamiltonian ``H`` is discretised with a Local Lax-Friedrichs flux for
the reversed-time Hamiltonian ``-H`` and followed by the projection
``V >= g_domain`` that enforces the state constraint.
"""
from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, GridMismatchError, NumericalInstabilityError
from .grid import GridSpec, ScalarField
from .hamiltonian import hamiltonian, wave_speed_arrays, wave_speeds
from .levelset import distance_field, terminal_field
from .model import WteParams

ProgressHook = Callable[[int, int, float], None]


@dataclass(frozen=True)
class SolveConfig:
    horizon: float = 30.0
    cfl_safety: float = 0.9
    max_steps: int = 5_000_000
    # None picks a stride giving about ``auto_snapshots`` stored fields
    snapshot_stride: Optional[int] = None
    steady_tol: float = 0.0
    threads: Optional[int] = None
    backend: Optional[str] = None
    auto_snapshots: int = 120

    def __post_init__(self):
        if not 0 < self.cfl_safety <= 1:
            raise ConfigError(f"cfl_safety must be in (0, 1], got {self.cfl_safety}")
        if self.snapshot_stride is not None and self.snapshot_stride < 1:
            raise ConfigError("snapshot_stride must be >= 1")
        if self.steady_tol < 0:
            raise ConfigError("steady_tol must be >= 0")
        if self.horizon < 0:
            raise ConfigError("horizon must be >= 0")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1")


@dataclass(frozen=True, eq=False)
class SolveResult:
    final_field: ScalarField
    snapshots: tuple[tuple[float, ScalarField], ...]
    steps_taken: int
    dt_used: float
    horizon: float = 0.0
    runtime_s: float = field(default=0.0, compare=False)


def default_threads() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # not available on macOS
        return os.cpu_count() or 1


def _speed_fields(params: WteParams, spec: GridSpec):
    X, K, E = spec.mesh()
    return [np.ascontiguousarray(c, dtype=np.float64) for c in wave_speed_arrays(params, X, K, E)]


def _speed_rate(params: WteParams, spec: GridSpec) -> float:
    cx, cK, cE = _speed_fields(params, spec)
    hx, hK, hE = spec.spacing
    return float(np.max(cx / hx + cK / hK + cE / hE))


def cfl_timestep(params: WteParams, spec: GridSpec, cfl_safety: float = 0.9) -> float:
    """Largest stable explicit step, ``cfl_safety / max_z sum_l C_l(z) / h_l``."""
    rate = _speed_rate(params, spec)
    if rate == 0.0:
        raise ConfigError("all characteristic speeds vanish on the grid; no CFL step exists")
    return cfl_safety / rate


def llf_numerical_hamiltonian(params: WteParams, z: Sequence[float], psi_minus: Sequence[float],
                              psi_plus: Sequence[float], backward: bool = False) -> float:
    """Lax-Friedrichs flux ``H(z, mean slope) - 1/2 sum_l C_l (psi+_l - psi-_l)``.

    With ``backward=True`` the flux is built for ``-H``, the Hamiltonian that
    governs the march in reversed time.
    """
    pm = np.asarray(psi_minus, dtype=np.float64)
    pp = np.asarray(psi_plus, dtype=np.float64)
    C = wave_speeds(params, z)
    h = hamiltonian(params, z, (pp + pm) * 0.5)
    if backward:
        h = -h
    return h - 0.5 * float(np.sum(C * (pp - pm)))


def _run_kernel(params, V, gD, speeds, out, dt, threads, backend):
    spec = V.spec
    kern = kernels.llf_update if backend is None else kernels.get_kernel(backend)
    plane_change = np.zeros(spec.counts[2])
    bad = kern(V.storage, gD.storage, speeds[0], speeds[1], speeds[2], out,
               np.asarray(spec.mins, dtype=np.float64), np.asarray(spec.spacing, dtype=np.float64),
               params.coefficients(), float(dt), int(threads or default_threads()), plane_change)
    if bad:
        flat = int(np.flatnonzero(~np.isfinite(out.reshape(-1)))[0])
        nx, nK, _ = spec.counts
        idx = (flat % nx, (flat // nx) % nK, flat // (nx * nK))
        raise NumericalInstabilityError(
            f"non-finite value at node {idx} ({bad} node(s) affected) at t={V.time_label - dt:g}"
        )
    return float(plane_change.max())


def step(params: WteParams, field: ScalarField, g_D_field: ScalarField, dt: float,
         threads: Optional[int] = None, backend: Optional[str] = None) -> ScalarField:
    """Advance one step backward in time (Jacobi sweep, then ``max(., g_D)``)."""
    spec = field.spec
    if g_D_field.spec != spec:
        raise GridMismatchError("value field and obstacle field grids differ")
    rate = _speed_rate(params, spec)
    if rate > 0 and dt * rate > 1.0 + 1e-12:
        raise ConfigError(f"dt={dt:g} exceeds the CFL bound {1.0 / rate:g}")
    out = np.empty(spec.storage_shape)
    _run_kernel(params, field, g_D_field, _speed_fields(params, spec), out, dt, threads, backend)
    return ScalarField.from_storage(spec, out, field.time_label - dt)


def solve(params: WteParams, spec: GridSpec, config: SolveConfig = SolveConfig(),
          progress: Optional[ProgressHook] = None,
          monitor: Optional[Callable[[int, ScalarField], None]] = None) -> SolveResult:
    """March from the terminal field at ``t = T`` down to ``t = 0``.

    ``monitor(step, field)`` sees every intermediate field; the field wraps a
    reused buffer, so copy it if it must outlive the call.
    """
    t0 = time.perf_counter()
    T = float(config.horizon)
    gD = distance_field(spec, params.domain_box)
    V = terminal_field(spec, params.target_box, params.domain_box, time_label=T)
    speeds = _speed_fields(params, spec)
    hx, hK, hE = spec.spacing
    rate = float(np.max(speeds[0] / hx + speeds[1] / hK + speeds[2] / hE))

    if T == 0.0 or rate == 0.0:
        # frozen dynamics leave the terminal field fixed: H and the dissipation both vanish
        final = V.with_time(0.0)
        snaps = ((T, V), (0.0, final)) if T > 0 else ((0.0, final),)
        return SolveResult(final, snaps, 0, 0.0, T, time.perf_counter() - t0)

    n = max(1, math.ceil(T * rate / config.cfl_safety - 1e-9))
    if n > config.max_steps:
        raise ConfigError(f"horizon needs {n} CFL steps, above max_steps={config.max_steps}")
    dt = T / n
    stride = config.snapshot_stride or max(1, math.ceil(n / config.auto_snapshots))
    threads = config.threads or default_threads()

    v0 = V.values
    range0 = float(v0.max() - v0.min()) or 1.0
    limit = 10.0 * max(range0, float(np.max(np.abs(v0))))
    snapshots = [(T, V)]
    bufs = [np.empty(spec.storage_shape), np.empty(spec.storage_shape)]
    cur = V
    taken = 0
    for s in range(1, n + 1):
        out = bufs[s % 2]
        change = _run_kernel(params, cur, gD, speeds, out, dt, threads, config.backend)
        label = 0.0 if s == n else T - s * dt
        cur = ScalarField.from_storage(spec, out, label)
        taken = s
        steady = config.steady_tol > 0 and change < config.steady_tol
        if s % 16 == 0 or s == n or steady:
            amp = float(np.max(np.abs(out)))
            if amp > limit:
                raise NumericalInstabilityError(
                    f"sup-norm {amp:g} exceeds 10x the initial scale at step {s} (t={label:g})"
                )
        if progress is not None:
            progress(s, n, change)
        if monitor is not None:
            monitor(s, cur)
        if steady:
            cur = cur.with_time(0.0)
            snapshots.append((0.0, cur))
            break
        if s % stride == 0 or s == n:
            cur = cur.with_time(label)  # copy out of the ping-pong buffer
            snapshots.append((label, cur))
    return SolveResult(cur, tuple(snapshots), taken, dt, T, time.perf_counter() - t0)
