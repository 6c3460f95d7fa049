"""Closed-form lower bounds on the transport speed.

All evaluators are pure arithmetic in the extracted constants: the drive
fraction alpha, the drive margin beta, the pulse half-period tau and the
equidistribution penalty. Negative values are returned as-is; callers
label them vacuous (the bound then carries no information about the
measured speed).

The penalty enters through the Wasserstein distance of the site
distribution to the uniform measure on the circle, which never exceeds
1/4; the evaluators therefore saturate the penalty at 1 (distance at 1/4).
Without the saturation the quadratic term would turn the expression
positive for strongly pinned spacings, where the true speed is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cfrac import levy_constant

__all__ = [
    "BoundInputs",
    "speed_lower_bound",
    "on_phase_floor",
    "typical_spacing_bound",
    "golden_mean_bound",
    "optimal_tau",
]


@dataclass(frozen=True)
class BoundInputs:
    """Constants consumed by the main speed bound.

    alpha, beta come from the asymmetry extraction; gamma is the
    equidistribution penalty of (rho, tau); coeff and epsilon are carried
    along for the derived evaluators (epsilon bounds the circle-Wasserstein
    distance used by on_phase_floor).
    """

    alpha: float
    beta: float
    tau: float
    gamma: float
    coeff: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.alpha < 0.5):
            raise ValueError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        if self.beta < 0.0 or self.gamma < 0.0 or self.epsilon < 0.0:
            raise ValueError("beta, gamma and epsilon must be nonnegative")
        if not (self.tau > 0.0):
            raise ValueError(f"tau must be positive, got {self.tau}")


def speed_lower_bound(b: BoundInputs) -> float:
    """Main per-time lower bound on the transport speed.

    (1/tau) * (alpha - g + g^2/2 - [(1/2 - beta*tau - alpha - g) v 0]^2 / 2)
    with g the penalty saturated at 1. May be negative (vacuous): for an
    integer spacing g saturates and the value is (alpha - 1/2)/tau < 0.
    """
    g = min(b.gamma, 1.0)
    slack = max(0.5 - b.beta * b.tau - b.alpha - g, 0.0)
    return (b.alpha - g + 0.5 * g * g - 0.5 * slack * slack) / b.tau


def on_phase_floor(alpha: float, beta: float, tau: float, epsilon: float) -> float:
    """Drive-phase displacement floor given d1(site distribution, uniform) <= epsilon.

    alpha - 2*sqrt(e) + 2*e - [(1/2 + alpha - beta*tau - 2*sqrt(e)) v 0]^2 / 2
    with e = min(epsilon, 1/4); distances beyond 1/4 are unattainable on
    the circle, and the substituted transport defect 2*sqrt(e) is only
    meaningful up to 1.
    """
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    e = min(epsilon, 0.25)
    defect = 2.0 * math.sqrt(e)
    slack = max(0.5 + alpha - beta * tau - defect, 0.0)
    return alpha - defect + 2.0 * e - 0.5 * slack * slack


def typical_spacing_bound(alpha: float, coeff: float, tau: float,
                          eps_margin: float = 0.0) -> float:
    """Almost-every-spacing asymptotic bound, explicit terms only.

    (1/tau) * (alpha - sqrt(3*coeff*(L + eps_margin + 1)) * tau^(-1/8))
    with L the Levy denominator-growth constant. The omitted remainder is
    o(tau^(-1/8)); report it as unknown, never as zero.
    """
    if not (tau > 0.0):
        raise ValueError(f"tau must be positive, got {tau}")
    lead = math.sqrt(3.0 * coeff * (levy_constant() + eps_margin + 1.0))
    return (alpha - lead * tau ** -0.125) / tau


def golden_mean_bound(coeff: float, alpha: float, beta: float, tau: float) -> float:
    """Closed-form bound for the golden-mean spacing.

    (1/tau) * (alpha - 3*sqrt(coeff)*tau^(-1/8)), valid only for
    tau > max((1/2 - alpha)/beta, coeff^2); raises outside that domain.
    Always at most the main bound evaluated with the exact Fibonacci
    penalty, of which it is a weakening.
    """
    threshold = max((0.5 - alpha) / beta, coeff * coeff)
    if not (tau > threshold):
        raise ValueError(
            f"tau={tau} outside validity domain (need tau > {threshold})")
    return (alpha - 3.0 * math.sqrt(coeff) * tau ** -0.125) / tau


def optimal_tau(coeff: float, alpha: float) -> float:
    """Heuristic work-maximising half-period coeff^4 / alpha^8.

    Order-of-magnitude estimate from differentiating the typical-spacing
    bound; not a certified optimum.
    """
    if not (alpha > 0.0):
        raise ValueError(f"alpha must be positive, got {alpha}")
    return coeff ** 4 / alpha ** 8
