"""Waste-to-Energy dynamics, parameters and inflow profiles.

State ``z = (x, K, E)``: waste stock, processing capital, accumulated energy.
Control ``u = (q, I)``: processing fraction and investment rate.
Disturbance ``eta``: waste inflow rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Sequence, Union

import numpy as np

from .errors import ConfigError, ProfileUsageError
from .levelset import BoxSet

DEFAULT_DOMAIN = ((0.0, 0.0, 0.0), (50.0, 20.0, 100.0))


@dataclass(frozen=True)
class WteParams:
    beta: float = 0.2
    gamma: float = 0.2
    mu: float = 0.8
    alpha: float = 0.2
    alpha_K: float = 0.2
    q_max: float = 1.0
    I_max: float = 1.0
    eta_min: float = 22.5
    eta_max: float = 27.5
    domain_lo: tuple[float, float, float] = DEFAULT_DOMAIN[0]
    domain_hi: tuple[float, float, float] = DEFAULT_DOMAIN[1]
    Q: float = 5.0
    K_eff: float = 10.0
    E_min: float = 0.0
    horizon: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "domain_lo", tuple(float(v) for v in self.domain_lo))
        object.__setattr__(self, "domain_hi", tuple(float(v) for v in self.domain_hi))
        if not getattr(self, "_skip_validation", False):
            self.validate()

    @classmethod
    def unchecked(cls, **kw) -> "WteParams":
        """Build without validation (degenerate constants for tests and probes)."""
        obj = cls.__new__(cls)
        object.__setattr__(obj, "_skip_validation", True)
        obj.__init__(**kw)
        return obj

    def validate(self) -> None:
        if not 0 < self.eta_min <= self.eta_max:
            raise ConfigError(f"need 0 < eta_min <= eta_max, got [{self.eta_min}, {self.eta_max}]")
        if self.q_max <= 0 or self.I_max <= 0:
            raise ConfigError("q_max and I_max must be positive")
        if self.gamma <= 0 or self.mu <= 0 or self.alpha <= 0:
            raise ConfigError("gamma, mu and alpha must be positive")
        if self.beta < 0 or self.alpha_K < 0:
            raise ConfigError("beta and alpha_K must be non-negative")
        if self.horizon < 0:
            raise ConfigError("horizon must be non-negative")
        if len(self.domain_lo) != 3 or len(self.domain_hi) != 3:
            raise ConfigError("domain bounds need three components")
        if any(lo >= hi for lo, hi in zip(self.domain_lo, self.domain_hi)):
            raise ConfigError(f"empty domain box {self.domain_lo}..{self.domain_hi}")
        if self.Q <= 0 or self.K_eff <= 0:
            raise ConfigError("Q and K_eff must be positive")
        if not self.E_min < self.domain_hi[2]:
            raise ConfigError("E_min must lie below the domain's energy ceiling")
        tgt_lo = (self.domain_lo[0], self.domain_lo[1], self.E_min)
        tgt_hi = (self.Q, self.K_eff, self.domain_hi[2])
        if any(a < lo for a, lo in zip(tgt_lo, self.domain_lo)) or any(
            b > hi for b, hi in zip(tgt_hi, self.domain_hi)
        ):
            raise ConfigError(
                f"target box {tgt_lo}..{tgt_hi} is not inside the domain "
                f"{self.domain_lo}..{self.domain_hi}"
            )
        if any(a >= b for a, b in zip(tgt_lo, tgt_hi)):
            raise ConfigError(f"target box {tgt_lo}..{tgt_hi} has empty interior")

    @property
    def domain_box(self) -> BoxSet:
        return BoxSet(self.domain_lo, self.domain_hi)

    @property
    def target_box(self) -> BoxSet:
        return BoxSet(
            (self.domain_lo[0], self.domain_lo[1], self.E_min),
            (self.Q, self.K_eff, self.domain_hi[2]),
        )

    def coefficients(self) -> np.ndarray:
        """Packed constants in the order the update kernels expect."""
        return np.array(
            [self.beta, self.gamma, self.mu, self.alpha, self.alpha_K,
             self.q_max, self.I_max, self.eta_min, self.eta_max],
            dtype=np.float64,
        )

    def with_inflow(self, eta_min: float, eta_max: float) -> "WteParams":
        return replace(self, eta_min=float(eta_min), eta_max=float(eta_max))

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "WteParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
        kw = {k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items()}
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def reference_params(**overrides) -> WteParams:
    """Model constants of the reference parameter table (waste threshold 15)."""
    return WteParams(**{"Q": 15.0, **overrides})


def dynamics_rhs(params: WteParams, z: Sequence[float], u: Sequence[float], eta: float) -> np.ndarray:
    x, K, E = z
    q, I = u
    p = params
    return np.array([
        eta - (p.beta + q * K) * x,
        I - p.gamma * K,
        p.mu * q * K * x - p.alpha * E - p.alpha_K * K,
    ])


# --- inflow profiles -------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Stepwise:
    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if len(bp) != len(vals) + 1:
            raise ValueError("need one more breakpoint than values")
        if any(b >= c for b, c in zip(bp, bp[1:])):
            raise ValueError(f"breakpoints must be strictly increasing: {bp}")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def equal_intervals(cls, values: Sequence[float], horizon: float) -> "Stepwise":
        n = len(values)
        return cls(tuple(horizon * i / n for i in range(n + 1)), tuple(values))


@dataclass(frozen=True)
class PeriodicJumps:
    eta_omega: float
    rho_omega: float
    tau_omega: float
    jumps: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        jumps = tuple(sorted(tuple(float(v) for v in j) for j in self.jumps))
        for a, b, _ in jumps:
            if not a < b:
                raise ValueError(f"jump interval [{a}, {b}) is empty")
        for (_, end, _), (start, _, _) in zip(jumps, jumps[1:]):
            if start < end:
                raise ValueError("jump intervals overlap")
        if self.rho_omega <= 0:
            raise ValueError("period must be positive")
        object.__setattr__(self, "jumps", jumps)


@dataclass(frozen=True)
class Adversarial:
    """Worst-case inflow chosen from the current costate at simulation time."""


DisturbanceProfile = Union[Constant, Stepwise, PeriodicJumps, Adversarial]


def eval_profile(profile: DisturbanceProfile, t: float, params: WteParams | None = None,
                 costate: Sequence[float] | None = None) -> float:
    if isinstance(profile, Constant):
        return float(profile.value)
    if isinstance(profile, Stepwise):
        bp = profile.breakpoints
        if not bp[0] <= t <= bp[-1]:
            raise ValueError(f"t={t} outside profile support [{bp[0]}, {bp[-1]}]")
        # right-continuous; the final breakpoint belongs to the last interval
        i = int(np.searchsorted(bp, t, side="right")) - 1
        return profile.values[min(i, len(profile.values) - 1)]
    if isinstance(profile, PeriodicJumps):
        base = profile.eta_omega * math.sin(math.pi * t / profile.rho_omega) ** 2 + profile.tau_omega
        return base + sum(d for a, b, d in profile.jumps if a <= t < b)
    if isinstance(profile, Adversarial):
        if params is None or costate is None:
            raise ProfileUsageError("adversarial inflow needs params and a costate")
        from .hamiltonian import worst_disturbance

        return worst_disturbance(params, costate)
    raise TypeError(f"unknown profile type {type(profile).__name__}")


def profile_to_dict(profile: DisturbanceProfile) -> dict:
    if isinstance(profile, Constant):
        return {"kind": "constant", "value": profile.value}
    if isinstance(profile, Stepwise):
        return {"kind": "stepwise", "breakpoints": list(profile.breakpoints), "values": list(profile.values)}
    if isinstance(profile, PeriodicJumps):
        return {"kind": "periodic", "eta_omega": profile.eta_omega, "rho_omega": profile.rho_omega,
                "tau_omega": profile.tau_omega, "jumps": [list(j) for j in profile.jumps]}
    return {"kind": "adversarial"}


def profile_from_dict(d: dict) -> DisturbanceProfile:
    kind = d.get("kind")
    try:
        if kind == "constant":
            return Constant(float(d["value"]))
        if kind == "stepwise":
            return Stepwise(tuple(d["breakpoints"]), tuple(d["values"]))
        if kind == "periodic":
            return PeriodicJumps(d["eta_omega"], d["rho_omega"], d["tau_omega"],
                                 tuple(tuple(j) for j in d.get("jumps", ())))
        if kind == "adversarial":
            return Adversarial()
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad {kind} profile: {exc}") from exc
    raise ConfigError(f"unknown profile kind {kind!r}")


# --- scenario presets --------------------------------------------------------

STEPWISE_VALUES = (
    (27.5, 25.0, 22.5),
    (25.0, 27.5, 22.5),
    (22.5, 27.5, 25.0),
)
SCENARIO3_PROFILE = PeriodicJumps(20.0, 5.0, 15.0, ((10.0, 20.0, 5.0), (20.0, 30.0, -3.0)))
REFERENCE_STATES = ((40.0, 10.0, 0.0), (5.0, 12.0, 0.0), (35.0, 20.0, 0.0))


@dataclass(frozen=True)
class Scenario:
    number: int
    params: WteParams
    profiles: tuple[DisturbanceProfile, ...]
    initial_states: tuple[tuple[float, float, float], ...] = field(default=())


TARGET_PRESETS = {"wide": 15.0, "strict": 5.0}


def scenario(number: int, base: WteParams | None = None, target: str = "wide") -> Scenario:
    """Preset for one of the three inflow scenarios.

    Only the inflow bounds, target set and horizon are fixed by a preset; the
    remaining constants come from ``base``.  ``target`` picks the waste
    threshold: ``"wide"`` (x <= 15) or ``"strict"`` (x <= 5).
    """
    base = base or WteParams()
    if target not in TARGET_PRESETS:
        raise ConfigError(f"unknown target preset {target!r}; expected one of {sorted(TARGET_PRESETS)}")
    common = dict(Q=TARGET_PRESETS[target], K_eff=10.0, E_min=0.0, horizon=30.0)
    if number == 1:
        p = replace(base, eta_min=25.0, eta_max=25.0, **common)
        return Scenario(1, p, (Constant(25.0),), REFERENCE_STATES)
    if number == 2:
        p = replace(base, eta_min=22.5, eta_max=27.5, **common)
        profiles = tuple(Stepwise.equal_intervals(v, p.horizon) for v in STEPWISE_VALUES)
        return Scenario(2, p, profiles, ((40.0, 12.0, 0.0),))
    if number == 3:
        p = replace(base, eta_min=12.0, eta_max=40.0, **common)
        return Scenario(3, p, (SCENARIO3_PROFILE,), ((5.0, 12.0, 0.0),))
    raise ConfigError(f"unknown scenario {number}; expected 1, 2 or 3")
