"""Continued fractions and the number-theoretic transport penalty.

Convergents p_n/q_n of the mean spacing rho control how well the chain can
equidistribute on the circle within one pulse period; the penalty
sqrt(3) * min_n (coeff * q_n / sqrt(tau) + 1/q_n)^(1/2) is what the speed
bound subtracts from the drive fraction alpha. Expansions are exact for
int/Fraction inputs and for the built-in quadratic-irrational symbols;
float inputs are expanded by interval Euclidean division and stop at the
first partial quotient the float cannot determine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

__all__ = [
    "GOLDEN_MEAN",
    "SQRT2",
    "ConvergentSeq",
    "PenaltyParams",
    "continued_fraction",
    "convergents_up_to",
    "equidistribution_penalty",
    "penalty_coefficient",
    "levy_constant",
    "rational_approximant",
]

GOLDEN_MEAN = "golden-mean"
SQRT2 = "sqrt2"

RhoLike = Union[int, float, Fraction, str]


@dataclass(frozen=True)
class ConvergentSeq:
    """Partial quotients a_0; a_1, a_2, ... and convergents (p_n, q_n).

    Convergents are in lowest terms and satisfy the standard recurrences
    p_n = a_n p_{n-1} + p_{n-2}, q_n = a_n q_{n-1} + q_{n-2} exactly
    (Python integers). `exact` is False only for float input, where the
    expansion was truncated at the first ambiguous quotient.
    """

    rho: float
    terms: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]
    exact: bool

    def denominators(self) -> tuple[int, ...]:
        return tuple(q for _, q in self.convergents)


def _expand_quotients(quotient_iter, max_terms: int, q_cap: int):
    """Run the convergent recurrences over a stream of partial quotients."""
    terms: list[int] = []
    convs: list[tuple[int, int]] = []
    p_back2, q_back2 = 0, 1
    p_back1, q_back1 = 1, 0
    for a in quotient_iter:
        p_next = a * p_back1 + p_back2
        q_next = a * q_back1 + q_back2
        if terms and q_next > q_cap:
            break
        terms.append(a)
        convs.append((p_next, q_next))
        p_back2, q_back2 = p_back1, q_back1
        p_back1, q_back1 = p_next, q_next
        if len(terms) >= max_terms:
            break
    return tuple(terms), tuple(convs)


def _rational_quotients(frac: Fraction):
    num, den = frac.numerator, frac.denominator
    while True:
        a, rem = divmod(num, den)
        yield a
        if rem == 0:
            return
        num, den = den, rem


def _symbol_quotients(name: str):
    if name == GOLDEN_MEAN:
        while True:
            yield 1
    elif name == SQRT2:
        yield 1
        while True:
            yield 2
    else:
        raise ValueError(f"unknown symbolic spacing {name!r}")


def _float_quotients(value: float):
    # Exact interval arithmetic around the float: emit a quotient only while
    # every real in [value - 4ulp, value + 4ulp] shares it.
    err = Fraction(4 * math.ulp(abs(value) if value else 1.0))
    lo = Fraction(value) - err
    hi = Fraction(value) + err
    while True:
        a_lo = lo.numerator // lo.denominator
        a_hi = hi.numerator // hi.denominator
        if a_lo != a_hi:
            return
        yield a_lo
        lo -= a_lo
        hi -= a_hi
        if lo <= 0:
            return
        lo, hi = 1 / hi, 1 / lo


def continued_fraction(rho: RhoLike, max_terms: int = 64,
                       q_cap: int = 10 ** 9) -> ConvergentSeq:
    """Continued-fraction expansion of rho with exact convergents.

    rho may be an int or Fraction (terminating Euclidean expansion), one of
    the symbols GOLDEN_MEAN / SQRT2 (hard-coded periodic quotients), or a
    float (guarded expansion, `exact=False`). Expansion stops after
    max_terms quotients or once the next denominator would exceed q_cap;
    the leading convergent a_0/1 is always kept.
    """
    if max_terms < 1:
        raise ValueError(f"max_terms must be at least 1, got {max_terms}")

    if isinstance(rho, str):
        terms, convs = _expand_quotients(_symbol_quotients(rho), max_terms, q_cap)
        value = (1.0 + math.sqrt(5.0)) / 2.0 if rho == GOLDEN_MEAN else math.sqrt(2.0)
        return ConvergentSeq(value, terms, convs, exact=True)

    if isinstance(rho, float) and not rho.is_integer():
        terms, convs = _expand_quotients(_float_quotients(rho), max_terms, q_cap)
        return ConvergentSeq(rho, terms, convs, exact=False)

    frac = Fraction(rho)
    terms, convs = _expand_quotients(_rational_quotients(frac), max_terms, q_cap)
    return ConvergentSeq(float(frac), terms, convs, exact=True)


def convergents_up_to(seq: ConvergentSeq, q_max: int) -> tuple[tuple[int, int], ...]:
    """Convergents with denominator at most q_max (at least the first one)."""
    kept = tuple((p, q) for p, q in seq.convergents if q <= q_max)
    return kept if kept else seq.convergents[:1]


@dataclass(frozen=True)
class PenaltyParams:
    """Inputs of the equidistribution penalty.

    coeff = 2*sqrt(6)*delta_plus / (3*delta_minus^(3/2)) couples the
    interaction stiffness into the penalty; tau is the pulse half-period.
    """

    coeff: float
    tau: float

    def __post_init__(self):
        if not (self.coeff > 0.0):
            raise ValueError(f"coeff must be positive, got {self.coeff}")
        if not (self.tau > 0.0):
            raise ValueError(f"tau must be positive, got {self.tau}")


def penalty_coefficient(delta_minus: float, delta_plus: float) -> float:
    """2*sqrt(6)*delta_plus / (3*delta_minus^(3/2))."""
    if not (delta_minus > 0.0):
        raise ValueError(f"delta_minus must be positive, got {delta_minus}")
    return 2.0 * math.sqrt(6.0) * delta_plus / (3.0 * delta_minus ** 1.5)


def equidistribution_penalty(seq: ConvergentSeq, params: PenaltyParams) -> float:
    """sqrt(3) * min over convergents of (coeff*q/sqrt(tau) + 1/q)^(1/2).

    Only denominators q < 1 + sqrt(tau)/coeff can beat the q=1 term, so the
    scan is finite even for infinite expansions; the first convergent is
    always included so the minimum is over a nonempty set.
    """
    if not seq.convergents:
        raise ValueError("empty convergent sequence")
    sqrt_tau = math.sqrt(params.tau)
    cap = 1.0 + sqrt_tau / params.coeff
    best = math.inf
    for i, (_, q) in enumerate(seq.convergents):
        if i > 0 and q >= cap:
            continue
        best = min(best, params.coeff * q / sqrt_tau + 1.0 / q)
    return math.sqrt(3.0 * best)


def levy_constant() -> float:
    """exp(pi^2 / (12 ln 2)) ~ 3.2758229: a.e. growth rate of q_n^(1/n)."""
    return math.exp(math.pi ** 2 / (12.0 * math.log(2.0)))


def rational_approximant(rho: RhoLike, q_max: int = 233) -> Fraction:
    """Best rational stand-in for rho with denominator at most q_max.

    Simulations run on periodic cells, so irrational or float spacings are
    replaced by their largest continued-fraction convergent below the
    denominator cap; rational input within the cap is returned unchanged.
    """
    if isinstance(rho, (int, Fraction)) or (isinstance(rho, float) and rho.is_integer()):
        frac = Fraction(rho)
        if frac.denominator <= q_max:
            return frac
    seq = continued_fraction(rho, max_terms=256, q_cap=q_max)
    p, q = convergents_up_to(seq, q_max)[-1]
    return Fraction(p, q)
