"""Min-max Hamiltonian of the control/inflow game and its extremal selectors.

The payoff ``<p, f(z, u, eta)>`` is affine in ``(q, I, eta)`` separately, so the
inner max over inflow and outer min over controls are attained at interval
end points and admit a closed form.
"""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .model import WteParams


class Costate(NamedTuple):
    p_x: float
    p_K: float
    p_E: float


def hamiltonian_arrays(params: WteParams, x, K, E, px, pK, pE):
    """Broadcasting form of :func:`hamiltonian`; arguments may be arrays."""
    p = params
    drift = -p.beta * x * px - p.gamma * K * pK - (p.alpha * E + p.alpha_K * K) * pE
    inflow = np.maximum(px * p.eta_min, px * p.eta_max)
    invest = np.minimum(0.0, pK * p.I_max)
    process = np.minimum(0.0, (p.mu * pE - px) * p.q_max * K * x)
    return drift + inflow + invest + process


def hamiltonian(params: WteParams, z: Sequence[float], p: Sequence[float]) -> float:
    x, K, E = z
    px, pK, pE = p
    return float(hamiltonian_arrays(params, x, K, E, px, pK, pE))


def optimal_control(params: WteParams, z: Sequence[float], p: Sequence[float]) -> tuple[float, float]:
    """Bang-bang minimiser ``(q*, I*)``; a zero switching value picks the max action."""
    px, pK, pE = p
    q = 0.0 if params.mu * pE - px > 0 else params.q_max
    I = 0.0 if pK > 0 else params.I_max
    return q, I


def worst_disturbance(params: WteParams, p: Sequence[float]) -> float:
    return params.eta_max if p[0] >= 0 else params.eta_min


def wave_speed_arrays(params: WteParams, x, K, E):
    """Per-axis bounds on ``|f_l|`` over all control/inflow vertices."""
    p = params
    qk = p.q_max * K
    cx = np.maximum.reduce([
        np.abs(p.eta_min - p.beta * x), np.abs(p.eta_max - p.beta * x),
        np.abs(p.eta_min - (p.beta + qk) * x), np.abs(p.eta_max - (p.beta + qk) * x),
    ])
    cK = np.maximum(np.abs(-p.gamma * K), np.abs(p.I_max - p.gamma * K))
    decay = p.alpha * E + p.alpha_K * K
    cE = np.maximum(np.abs(-decay), np.abs(p.mu * qk * x - decay))
    return cx, cK, cE


def wave_speeds(params: WteParams, z: Sequence[float]) -> np.ndarray:
    x, K, E = z
    return np.array([float(c) for c in wave_speed_arrays(params, x, K, E)])
