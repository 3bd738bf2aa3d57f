"""Vectorised numpy implementation of the backward LLF sweep.

Same contract and arithmetic order as the compiled ``_llf`` module; used when
the extension is unavailable or ``WTE_REACH_PURE=1`` is set.
"""
import numpy as np

from .hamiltonian import hamiltonian_arrays


class _Coef:
    __slots__ = ("beta", "gamma", "mu", "alpha", "alpha_K", "q_max", "I_max", "eta_min", "eta_max")

    def __init__(self, coef):
        for name, v in zip(self.__slots__, coef):
            setattr(self, name, float(v))


def _slopes(V, gD, axis, h):
    n = V.shape[axis]
    first = [slice(None)] * 3
    last = [slice(None)] * 3
    first[axis] = slice(0, 1)
    last[axis] = slice(n - 1, n)
    first, last = tuple(first), tuple(last)
    ih = 1.0 / h
    d = np.diff(V, axis=axis) * ih
    g_lo = np.maximum(V[first], gD[first] + h)
    g_hi = np.maximum(V[last], gD[last] + h)
    minus = np.concatenate([(V[first] - g_lo) * ih, d], axis=axis)
    plus = np.concatenate([d, (g_hi - V[last]) * ih], axis=axis)
    return minus, plus


def llf_update(V, gD, cx, cK, cE, out, mins, h, coef, dt, threads, plane_change):
    nE, nK, nx = V.shape
    x = (mins[0] + np.arange(nx, dtype=np.float64) * h[0])[None, None, :]
    K = (mins[1] + np.arange(nK, dtype=np.float64) * h[1])[None, :, None]
    E = (mins[2] + np.arange(nE, dtype=np.float64) * h[2])[:, None, None]
    dmx, dpx = _slopes(V, gD, 2, h[0])
    dmK, dpK = _slopes(V, gD, 1, h[1])
    dmE, dpE = _slopes(V, gD, 0, h[2])
    H = hamiltonian_arrays(_Coef(coef), x, K, E,
                           (dmx + dpx) * 0.5, (dmK + dpK) * 0.5, (dmE + dpE) * 0.5)
    diss = 0.5 * (cx * (dpx - dmx) + cK * (dpK - dmK) + cE * (dpE - dmE))
    cand = V + dt * (H + diss)
    finite = np.isfinite(cand)
    np.copyto(out, np.where(finite, np.maximum(cand, gD), np.nan))
    change = np.where(finite, np.abs(out - V), 0.0)
    plane_change[:] = change.reshape(nE, -1).max(axis=1)
    return int(np.count_nonzero(~finite))
