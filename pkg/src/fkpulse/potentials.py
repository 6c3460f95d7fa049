"""Model ingredients of the pulsating chain.

A model is the triple (W, V, K): a strictly convex nearest-neighbour
interaction W, a 1-periodic site potential V given by a truncated Fourier
sine series, and a square-wave pulse K of half-period tau that switches the
site force on and off. The asymmetry extraction scans kappa*V' for the
longest sub-interval of the circle on which the drive beats the maximal
interaction stiffness by a positive margin beta; the excess of that
interval's length over 1/2 is the drive fraction alpha consumed by the
transport bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

__all__ = [
    "InteractionPotential",
    "SitePotential",
    "PulseSpec",
    "AsymmetryParams",
    "ModelSpec",
    "curvature_range",
    "pulse_value",
    "extract_asymmetry",
    "default_model",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class InteractionPotential:
    """Convex coupling W(x) = c2*x^2 + c4*x^4.

    c2 > 0 keeps W'' bounded away from zero on every bounded interval;
    c4 >= 0 adds an optional stiffening tail. Restricting to this family
    keeps the curvature extrema closed-form, so no numerical minimisation
    sits underneath the bound evaluators.
    """

    c2: float
    c4: float = 0.0

    def __post_init__(self):
        if not (self.c2 > 0.0):
            raise ValueError(f"c2 must be positive, got {self.c2}")
        if self.c4 < 0.0:
            raise ValueError(f"c4 must be nonnegative, got {self.c4}")

    @classmethod
    def quadratic(cls, c: float) -> "InteractionPotential":
        """W(x) = c*x^2."""
        return cls(c2=c)

    @classmethod
    def quadratic_quartic(cls, c2: float, c4: float) -> "InteractionPotential":
        """W(x) = c2*x^2 + c4*x^4."""
        return cls(c2=c2, c4=c4)

    @property
    def kind(self) -> str:
        return "quadratic" if self.c4 == 0.0 else "quadratic-plus-quartic"

    def value(self, x):
        x2 = np.square(x)
        return self.c2 * x2 + self.c4 * x2 * x2

    def deriv(self, x):
        return 2.0 * self.c2 * x + 4.0 * self.c4 * x * np.square(x)

    def deriv2(self, x):
        return 2.0 * self.c2 + 12.0 * self.c4 * np.square(x)


def curvature_range(w: InteractionPotential, rho: float) -> tuple[float, float]:
    """Min and max of W'' over the spacing window [rho-1, rho+1].

    W'' = 2*c2 + 12*c4*x^2 is even and increasing in |x|, so the extrema
    sit at x=0 (when the window straddles it) and at the endpoint of
    larger magnitude. Returned as (delta_minus, delta_plus).
    """
    lo, hi = rho - 1.0, rho + 1.0
    amax = max(abs(lo), abs(hi))
    amin = 0.0 if lo <= 0.0 <= hi else min(abs(lo), abs(hi))
    return float(w.deriv2(amin)), float(w.deriv2(amax))


@dataclass(frozen=True)
class SitePotential:
    """1-periodic site potential V(x) = sum_m a_m sin(2*pi*m*x + phi_m).

    Harmonic m runs from 1 to len(amps). Evaluation reduces x mod 1 first,
    which makes V(x+1) == V(x) exact in floating point and keeps the
    argument of sin small even when chain positions grow with transport.
    """

    amps: tuple[float, ...]
    phases: tuple[float, ...]

    def __post_init__(self):
        if len(self.amps) != len(self.phases):
            raise ValueError("amps and phases must have equal length")
        if len(self.amps) == 0:
            raise ValueError("need at least one harmonic")
        object.__setattr__(self, "amps", tuple(float(a) for a in self.amps))
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))

    def _reduced(self, x):
        return np.asarray(x, dtype=float) - np.floor(x)

    def value(self, x):
        xr = self._reduced(x)
        out = np.zeros_like(xr)
        for m, (a, phi) in enumerate(zip(self.amps, self.phases), start=1):
            out += a * np.sin(TWO_PI * m * xr + phi)
        return out if out.ndim else float(out)

    def deriv(self, x):
        xr = self._reduced(x)
        out = np.zeros_like(xr)
        for m, (a, phi) in enumerate(zip(self.amps, self.phases), start=1):
            out += a * TWO_PI * m * np.cos(TWO_PI * m * xr + phi)
        return out if out.ndim else float(out)

    def deriv2(self, x):
        xr = self._reduced(x)
        out = np.zeros_like(xr)
        for m, (a, phi) in enumerate(zip(self.amps, self.phases), start=1):
            out -= a * (TWO_PI * m) ** 2 * np.sin(TWO_PI * m * xr + phi)
        return out if out.ndim else float(out)

    def deriv2_bound(self) -> float:
        """Certified upper bound on max |V''|: sum_m |a_m| (2*pi*m)^2."""
        return float(sum(abs(a) * (TWO_PI * m) ** 2
                         for m, a in enumerate(self.amps, start=1)))


@dataclass(frozen=True)
class PulseSpec:
    """Square-wave pulse: K(t) = 0 on [2n*tau, (2n+1)*tau), kappa after.

    Right-continuous at the switch times, so K((2n+1)*tau) == kappa.
    """

    tau: float
    kappa: float
    waveform: str = "step"

    def __post_init__(self):
        if not (self.tau > 0.0):
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.kappa < 0.0:
            raise ValueError(f"kappa must be nonnegative, got {self.kappa}")
        if self.waveform != "step":
            raise ValueError(f"unsupported waveform {self.waveform!r}")


def pulse_value(pulse: PulseSpec, t: float) -> float:
    """Exact step evaluation of K(t); period 2*tau, right-continuous."""
    half = math.floor(t / pulse.tau)
    return pulse.kappa if half % 2 else 0.0


@dataclass(frozen=True)
class AsymmetryParams:
    """Drive margin extracted from kappa*V' >= delta_plus + beta on [a, b].

    alpha = (b - a) - 1/2 is the length excess over half the period and
    lies in (0, 1/2); beta is the certified positive margin on the grid.
    The interval is stored unwrapped (b may exceed 1 when it crosses the
    period seam). delta_minus/delta_plus are the interaction curvature
    extrema the margin was certified against.
    """

    alpha: float
    beta: float
    interval: tuple[float, float]
    delta_minus: float
    delta_plus: float

    def __post_init__(self):
        a, b = self.interval
        length = b - a
        if not (0.0 < self.alpha < 0.5):
            raise ValueError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        if not (self.beta > 0.0):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not (0.5 - self.alpha < length < 1.0):
            raise ValueError(f"interval length {length} incompatible with alpha {self.alpha}")
        if not (0.0 < self.delta_minus <= self.delta_plus):
            raise ValueError("need 0 < delta_minus <= delta_plus")


def _longest_circular_run(mask: np.ndarray) -> tuple[int, int]:
    """(start, count) of the longest run of True in a circular boolean array."""
    n = mask.size
    if not mask.any():
        return 0, 0
    if mask.all():
        return 0, n
    ext = np.concatenate([mask, mask])
    best_start, best_len = 0, 0
    run_start, run_len = -1, 0
    for i in range(2 * n):
        if ext[i]:
            if run_len == 0:
                run_start = i
            run_len += 1
            # runs beginning in the second copy were already seen
            if run_start < n and run_len > best_len:
                best_start, best_len = run_start, run_len
        else:
            run_len = 0
    return best_start, min(best_len, n)


def _bound_core(alpha: float, beta: float, tau: float, gamma: float) -> float:
    # tau-scaled right-hand side of the main speed bound; used only to rank
    # candidate (alpha, beta) pairs, so the saturation at gamma=1 matches
    # bounds.speed_lower_bound.
    g = min(gamma, 1.0)
    slack = max(0.5 - beta * tau - alpha - g, 0.0)
    return alpha - g + 0.5 * g * g - 0.5 * slack * slack


def extract_asymmetry(
    v: SitePotential,
    kappa: float,
    delta_plus: float,
    grid_n: int,
    *,
    delta_minus: Optional[float] = None,
    tau: Optional[float] = None,
    gamma: float = 0.0,
    beta_levels: int = 64,
) -> Optional[AsymmetryParams]:
    """Scan the circle for the best drive interval of kappa*V'.

    For a logarithmic ladder of trial margins the longest circular run of
    grid points with kappa*V'(x) >= delta_plus + margin is located; each
    run longer than half the period is a candidate (alpha, beta) with beta
    re-certified as the minimum excess over the run. Candidates are ranked
    by the main speed bound at the caller's (tau, gamma) — with tau=None
    the largest alpha wins (beta breaking ties). Returns None when no
    margin admits a run longer than 1/2: the potential fails the
    steepness/asymmetry condition at this kappa.

    The returned pair is certified only at grid resolution: the inequality
    is checked at every grid point of [a, b], not in between.
    """
    if grid_n < 1000:
        raise ValueError(f"grid_n must be at least 1000, got {grid_n}")
    if delta_minus is None:
        delta_minus = delta_plus

    x = np.arange(grid_n) / grid_n
    drive = kappa * v.deriv(x) - delta_plus
    top = float(drive.max())
    if top <= 0.0:
        return None

    best: Optional[AsymmetryParams] = None
    best_key: tuple = ()
    seen: set[tuple[int, int]] = set()
    for level in top * np.geomspace(1e-6, 1.0, beta_levels):
        mask = drive >= level
        start, count = _longest_circular_run(mask)
        if count < 2 or (start, count) in seen:
            continue
        seen.add((start, count))
        if count >= grid_n:
            continue
        length = (count - 1) / grid_n
        if length <= 0.5:
            continue
        idx = (start + np.arange(count)) % grid_n
        beta = float(drive[idx].min())
        if beta <= 0.0:
            continue
        alpha = length - 0.5
        a = start / grid_n
        cand = AsymmetryParams(alpha=alpha, beta=beta, interval=(a, a + length),
                               delta_minus=delta_minus, delta_plus=delta_plus)
        if tau is None:
            key = (alpha, beta)
        else:
            key = (_bound_core(alpha, beta, tau, gamma), beta)
        if best is None or key > best_key:
            best, best_key = cand, key
    return best


@dataclass(frozen=True)
class ModelSpec:
    """Complete model: interaction W, site potential V, pulse K."""

    w: InteractionPotential
    v: SitePotential
    pulse: PulseSpec

    def curvature_range(self, rho: float) -> tuple[float, float]:
        return curvature_range(self.w, rho)

    def asymmetry(self, rho: float, grid_n: int = 4096, *,
                  tau: Optional[float] = None,
                  gamma: float = 0.0) -> Optional[AsymmetryParams]:
        dm, dp = self.curvature_range(rho)
        return extract_asymmetry(self.v, self.pulse.kappa, dp, grid_n,
                                 delta_minus=dm, tau=tau, gamma=gamma)

    def with_tau(self, tau: float) -> "ModelSpec":
        return replace(self, pulse=replace(self.pulse, tau=tau))

    def with_kappa(self, kappa: float) -> "ModelSpec":
        return replace(self, pulse=replace(self.pulse, kappa=kappa))


def default_model(tau: float = 2.0, kappa: float = 10.0, gain: float = 1.0) -> ModelSpec:
    """Shipped reference model.

    W(x) = x^2 and a sawtooth-like ratchet V whose derivative is
    gain*(1 - F(x)) with F the order-4 Fejer kernel: a deep narrow well at
    x = 0 and a gentle uphill drive on roughly (0.13, 0.87), giving a
    positive run of V' of length ~0.74. At the default kappa the
    asymmetry extraction certifies alpha ~ 0.22.
    """
    amps = tuple(-gain * (1.0 - m / 5.0) / (math.pi * m) for m in (1, 2, 3, 4))
    phases = (0.0, 0.0, 0.0, 0.0)
    return ModelSpec(
        w=InteractionPotential.quadratic(1.0),
        v=SitePotential(amps=amps, phases=phases),
        pulse=PulseSpec(tau=tau, kappa=kappa),
    )
