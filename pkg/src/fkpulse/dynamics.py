"""Chain states on a periodic cell and the pulsating semiflow.

A state stores one cell of a (p, q)-type configuration: q positions plus
the winding pair, with u(k+q) = u(k) + p built into the accessor. The
semiflow integrates the overdamped equations of motion with fixed-step
RK4; steps are aligned with the pulse switches (dt divides tau), so the
discontinuous-in-time field is smooth within every integrated segment.
Positions live in the covering space — no mod-1 reduction — which keeps
displacements over time meaningful.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigurationError
from .potentials import ModelSpec, pulse_value

__all__ = [
    "DynamicsMode",
    "ChainState",
    "IntegratorConfig",
    "rhs",
    "evolve",
    "poincare_map",
    "order_preserved",
    "is_rotationally_ordered",
    "width_function",
    "spacings",
    "second_differences",
]

_TIME_SNAP = 1e-9


class DynamicsMode(enum.Enum):
    """Which term the pulse multiplies: the site force or the coupling."""

    PULSATING_POTENTIAL = "pulsating-potential"
    PULSATING_INTERACTION = "pulsating-interaction"

    @property
    def kernel_code(self) -> int:
        if self is DynamicsMode.PULSATING_POTENTIAL:
            return _kernels.MODE_PULSE_POTENTIAL
        return _kernels.MODE_PULSE_INTERACTION


@dataclass(frozen=True, eq=False)
class ChainState:
    """One periodic cell: positions u_0..u_{q-1}, winding (p, q), time.

    gcd(p, q) = 1 and q >= 1; the represented configuration has mean
    spacing exactly p/q. Immutable: evolution returns new states.
    """

    positions: np.ndarray
    p: int
    q: int
    time: float = 0.0

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float, copy=True)
        if self.q < 1:
            raise ValueError(f"q must be at least 1, got {self.q}")
        if pos.shape != (self.q,):
            raise ValueError(f"expected {self.q} positions, got shape {pos.shape}")
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"winding ({self.p}, {self.q}) not coprime")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @classmethod
    def straight_line(cls, p: int, q: int, offset: float = 0.0,
                      time: float = 0.0) -> "ChainState":
        """The equally spaced configuration u_k = (p/q) k + offset."""
        rho = p / q
        return cls(np.arange(q) * rho + offset, p, q, time)

    @property
    def rho(self) -> float:
        return self.p / self.q

    def site(self, k) -> np.ndarray:
        """Covering-space accessor u(k) = positions[k mod q] + p*floor(k/q)."""
        k = np.asarray(k)
        return self.positions[k % self.q] + self.p * (k // self.q)

    def shifted(self, delta: float) -> "ChainState":
        return ChainState(self.positions + delta, self.p, self.q, self.time)

    def at_time(self, time: float) -> "ChainState":
        return ChainState(self.positions, self.p, self.q, time)


def spacings(state: ChainState) -> np.ndarray:
    """The q nearest-neighbour gaps u(k+1) - u(k), winding-closed."""
    pos = state.positions
    return np.diff(pos, append=pos[0] + state.p)


def second_differences(state: ChainState) -> np.ndarray:
    """u(k+1) - 2 u(k) + u(k-1) for k = 0..q-1."""
    g = spacings(state)
    return g - np.roll(g, 1)


def width_function(state: ChainState) -> np.ndarray:
    """Heights above the highest straight line of slope rho below the cell.

    w_j = u(j) - rho*j - a0 with a0 = min_j (u(j) - rho*j); entries are
    nonnegative with minimum 0, and w_j - w_{j-1} equals the spacing
    deviation u(j) - u(j-1) - rho.
    """
    base = state.positions - state.rho * np.arange(state.q)
    return base - base.min()


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 plan.

    The effective step is min(dt_max, safety / (4*delta_plus +
    kappa*max|V''|)) shrunk so that tau is an integer number of steps;
    pulse switches then land exactly on step boundaries. max_steps guards
    against step plans too large to finish.
    """

    dt_max: float = 0.05
    scheme: str = "rk4"
    safety: float = 1.0
    max_steps: int = 200_000_000

    def __post_init__(self):
        if not (self.dt_max > 0.0):
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")
        if not (0.0 < self.safety <= 1.0):
            raise ValueError(f"safety must lie in (0, 1], got {self.safety}")
        if self.scheme != "rk4":
            raise ValueError(f"unsupported scheme {self.scheme!r}")

    def dt_target(self, model: ModelSpec, rho: float, mode: DynamicsMode) -> float:
        _, dp = model.curvature_range(rho)
        v2 = model.v.deriv2_bound()
        kappa = model.pulse.kappa
        if mode is DynamicsMode.PULSATING_POTENTIAL:
            stiff = 4.0 * dp + kappa * v2
        else:
            stiff = 4.0 * dp * max(kappa, 1.0) + v2
        return min(self.dt_max, self.safety / stiff)

    def steps_per_phase(self, model: ModelSpec, rho: float,
                        mode: DynamicsMode) -> int:
        return max(1, math.ceil(model.pulse.tau / self.dt_target(model, rho, mode)))


def _model_arrays(model: ModelSpec):
    amps = np.asarray(model.v.amps, dtype=float)
    m = np.arange(1, amps.size + 1, dtype=float)
    omegas = 2.0 * math.pi * m
    phases = np.asarray(model.v.phases, dtype=float)
    return amps, omegas, phases


def rhs(state: ChainState, t: float, model: ModelSpec,
        mode: DynamicsMode = DynamicsMode.PULSATING_POTENTIAL) -> np.ndarray:
    """Velocity field at time t: coupling force imbalance plus pulsed site force."""
    drive = pulse_value(model.pulse, t)
    g = spacings(state)
    f = model.w.deriv(g)
    spring = f - np.roll(f, 1)
    site = model.v.deriv(state.positions)
    if mode is DynamicsMode.PULSATING_POTENTIAL:
        return spring + drive * site
    return drive * spring + site


def evolve(state: ChainState, t_end: float, model: ModelSpec,
           mode: DynamicsMode = DynamicsMode.PULSATING_POTENTIAL,
           cfg: IntegratorConfig = IntegratorConfig()) -> ChainState:
    """Integrate the semiflow from state.time to t_end.

    The interval is split at pulse switch times; each segment is advanced
    by the jitted RK4 kernel with the segment's constant pulse value. Full
    phases use dt = tau/n exactly; partial leading/trailing segments use an
    equal or smaller step.
    """
    if t_end < state.time - _TIME_SNAP:
        raise ValueError(f"t_end={t_end} precedes state.time={state.time}")
    if t_end <= state.time:
        return state

    tau = model.pulse.tau
    kappa = model.pulse.kappa
    n_phase = cfg.steps_per_phase(model, state.rho, mode)
    dt_phase = tau / n_phase
    amps, omegas, phases = _model_arrays(model)
    c2, c4 = model.w.c2, model.w.c4
    code = mode.kernel_code

    u = state.positions.copy()
    t = state.time
    snap = _TIME_SNAP * tau
    total = 0
    while t < t_end - snap:
        k = math.floor((t + snap) / tau)
        seg_end = min((k + 1) * tau, t_end)
        length = seg_end - t
        if length > snap:
            if abs(length - tau) <= snap:
                nsteps, dt = n_phase, dt_phase
            else:
                nsteps = max(1, math.ceil(length / dt_phase - _TIME_SNAP))
                dt = length / nsteps
            total += nsteps
            if total > cfg.max_steps:
                raise ConfigurationError(
                    f"step plan exceeds max_steps={cfg.max_steps} "
                    f"(dt={dt:.3e} over {t_end - state.time:.3e} time units)")
            if dt <= 0.0:
                raise ConfigurationError("step size underflow")
            drive = kappa if k % 2 else 0.0
            _kernels.rk4_phase(u, state.p, state.q, nsteps, dt, drive, code,
                               c2, c4, amps, omegas, phases)
        t = seg_end
    return ChainState(u, state.p, state.q, t_end)


def poincare_map(state: ChainState, model: ModelSpec,
                 mode: DynamicsMode = DynamicsMode.PULSATING_POTENTIAL,
                 cfg: IntegratorConfig = IntegratorConfig()) -> ChainState:
    """One full pulse cycle: the time-2*tau flow map.

    Requires state.time to sit on a cycle boundary, so that consecutive
    applications tile time exactly.
    """
    period = 2.0 * model.pulse.tau
    n = round(state.time / period)
    if abs(state.time - n * period) > _TIME_SNAP * max(period, abs(state.time)):
        raise ValueError(
            f"state.time={state.time} is not a multiple of the pulse period {period}")
    return evolve(state.at_time(n * period), (n + 1) * period, model, mode, cfg)


def order_preserved(upper: ChainState, lower: ChainState, t: float,
                    model: ModelSpec,
                    mode: DynamicsMode = DynamicsMode.PULSATING_POTENTIAL,
                    cfg: IntegratorConfig = IntegratorConfig()) -> bool:
    """Evolve an ordered pair by duration t; True iff strictly ordered after.

    Comparison is exact (tolerance 0). Strictness is numerically
    meaningful only while the contracted gap stays above roundoff
    (~1e-13 relative); pick scenarios accordingly.
    """
    if (upper.p, upper.q) != (lower.p, lower.q):
        raise ValueError("states must share the winding pair")
    if abs(upper.time - lower.time) > _TIME_SNAP:
        raise ValueError("states must share the time")
    if not np.all(upper.positions >= lower.positions):
        raise ValueError("need upper >= lower componentwise")
    a = evolve(upper, upper.time + t, model, mode, cfg)
    b = evolve(lower, lower.time + t, model, mode, cfg)
    return bool(np.all(a.positions > b.positions))


def is_rotationally_ordered(state: ChainState, tol: float = 0.0) -> bool:
    """True iff the cell never crosses any space/charge translate of itself.

    For each shift n in 1..q the differences d_k = u(k) - u(k-n) are
    q-periodic; the configuration is comparable with every translate of
    its n-shift iff no integer lies strictly inside (min d, max d). q = n
    gives constant d = p, and negative shifts mirror positive ones.
    """
    ks = np.arange(state.q)
    for n in range(1, state.q + 1):
        d = state.site(ks) - state.site(ks - n)
        lo = float(d.min()) + tol
        hi = float(d.max()) - tol
        smallest_above = math.floor(lo) + 1.0
        if smallest_above < hi:
            return False
    return True
