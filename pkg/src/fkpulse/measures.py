"""Shift-invariant cell statistics and exact L1 optimal transport on the circle.

The empirical measure of a cell puts weight 1/q on each of the q cyclic
shifts of the state; integrals against it are exact finite averages over
the cell, so the measure-level statements (width, energy, drift) are
testable without sampling error. Projecting the cell to the circle gives
an atomic measure whose L1-Wasserstein distance to another atomic measure
or to the uniform measure is computed in closed form:

    d1(mu, nu) = min_c  integral_0^1 | F_mu(x) - F_nu(x) - c | dx

where F are circle CDFs from an arbitrary cut point and the optimal offset
c is a weighted median of the CDF difference. For two atomic measures the
difference is piecewise constant; against the uniform measure it is
piecewise linear with slope -1, and both integrals are evaluated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ChainState, spacings
from .potentials import InteractionPotential

__all__ = [
    "EmpiricalMeasure",
    "CircleMeasure",
    "avg_width",
    "energy",
    "cell_width_rms",
    "project_circle",
    "mean_displacement",
    "w1_circle",
    "w1_to_uniform",
]

MERGE_TOL = 1e-12


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniform probability over the q cyclic shifts of a cell.

    Shift-invariant by construction: integrating f after a shift equals
    integrating f.
    """

    base: ChainState

    @property
    def rho(self) -> float:
        return self.base.rho


def avg_width(mu: EmpiricalMeasure) -> float:
    """Variance-like width: mean over the cell of (u(k+1) - u(k) - rho)^2."""
    dev = spacings(mu.base) - mu.rho
    return float(np.mean(dev * dev))


def energy(mu: EmpiricalMeasure, w: InteractionPotential) -> float:
    """Mean coupling energy per bond, the off-phase Lyapunov function."""
    return float(np.mean(w.value(spacings(mu.base))))


def cell_width_rms(state: ChainState) -> float:
    """Root-mean-square spacing deviation of a single cell."""
    return math.sqrt(avg_width(EmpiricalMeasure(state)))


def mean_displacement(before: EmpiricalMeasure, after: EmpiricalMeasure) -> float:
    """Cell-mean displacement between two snapshots of the same cell."""
    a, b = before.base, after.base
    if (a.p, a.q) != (b.p, b.q):
        raise ValueError("snapshots must share the winding pair")
    return float(np.mean(b.positions - a.positions))


@dataclass(frozen=True)
class CircleMeasure:
    """Atomic probability measure on the circle [0, 1).

    Positions are sorted and distinct; weights are positive and sum to 1
    (validated to 1e-9, then renormalised exactly).
    """

    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        wts = np.asarray(self.weights, dtype=float)
        if pos.ndim != 1 or pos.shape != wts.shape or pos.size == 0:
            raise ValueError("positions and weights must be equal-length 1d arrays")
        if np.any(wts <= 0.0):
            raise ValueError("weights must be positive")
        total = float(wts.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {total}, expected 1")
        if np.any(pos < 0.0) or np.any(pos >= 1.0):
            raise ValueError("positions must lie in [0, 1)")
        if np.any(np.diff(pos) <= 0.0):
            raise ValueError("positions must be strictly increasing")
        pos = pos.copy()
        wts = wts / total
        pos.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", wts)

    @classmethod
    def from_atoms(cls, positions, weights) -> "CircleMeasure":
        """Build from unsorted atoms; wraps mod 1 and merges exact duplicates."""
        pos = np.mod(np.asarray(positions, dtype=float), 1.0)
        wts = np.asarray(weights, dtype=float)
        order = np.argsort(pos, kind="stable")
        pos, wts = pos[order], wts[order]
        upos, inverse = np.unique(pos, return_inverse=True)
        merged = np.zeros_like(upos)
        np.add.at(merged, inverse, wts)
        keep = merged > 0.0
        return cls(upos[keep], merged[keep])

    @classmethod
    def equally_spaced(cls, n: int, offset: float = 0.0) -> "CircleMeasure":
        return cls.from_atoms((offset + np.arange(n) / n) % 1.0, np.full(n, 1.0 / n))


def project_circle(mu: EmpiricalMeasure) -> CircleMeasure:
    """Push the cell positions to the circle, weight 1/q each.

    Atoms closer than 1e-12 (including across the 1 -> 0 seam) merge, so
    degenerate cells do not spawn zero-length transport segments. The
    result does not depend on which site indexes the cell.
    """
    q = mu.base.q
    pos = np.sort(np.mod(mu.base.positions, 1.0))
    counts = np.ones(q)
    # merge near-coincident neighbours, then the seam pair
    keep_pos: list[float] = []
    keep_cnt: list[float] = []
    for x, c in zip(pos, counts):
        if keep_pos and x - keep_pos[-1] <= MERGE_TOL:
            keep_cnt[-1] += c
        else:
            keep_pos.append(float(x))
            keep_cnt.append(float(c))
    if len(keep_pos) > 1 and (1.0 - keep_pos[-1]) + keep_pos[0] <= MERGE_TOL:
        keep_cnt[0] += keep_cnt[-1]
        keep_pos.pop()
        keep_cnt.pop()
    return CircleMeasure(np.asarray(keep_pos), np.asarray(keep_cnt) / q)


def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    cum = np.cumsum(w)
    half = 0.5 * cum[-1]
    return float(v[np.searchsorted(cum, half)])


def w1_circle(mu: CircleMeasure, nu: CircleMeasure) -> float:
    """Exact L1 transport cost between two atomic circle measures."""
    xs = np.concatenate([mu.positions, nu.positions])
    signed = np.concatenate([mu.weights, -nu.weights])
    order = np.argsort(xs, kind="stable")
    xs, signed = xs[order], signed[order]
    diff = np.cumsum(signed)            # F_mu - F_nu on [xs[i], xs[i+1])
    seg = np.diff(xs, append=xs[0] + 1.0)
    c = _weighted_median(diff, seg)
    return float(np.sum(seg * np.abs(diff - c)))


def _uniform_mixture_median(lo: np.ndarray, hi: np.ndarray) -> float:
    # median of the mixture of Uniform[lo_j, hi_j] with weights hi_j - lo_j
    # (total weight 1); mass_below(c) is piecewise linear and nondecreasing.
    def mass_below(c: float) -> float:
        return float(np.sum(np.clip(c - lo, 0.0, hi - lo)))

    cands = np.unique(np.concatenate([lo, hi]))
    masses = np.array([mass_below(c) for c in cands])
    i = int(np.searchsorted(masses, 0.5))
    if i == 0:
        return float(cands[0])
    c0, c1 = cands[i - 1], cands[i]
    m0, m1 = masses[i - 1], masses[i]
    if m1 == m0:
        return float(c1)
    return float(c0 + (0.5 - m0) * (c1 - c0) / (m1 - m0))


def w1_to_uniform(mu: CircleMeasure) -> float:
    """Exact L1 transport cost from an atomic measure to the uniform measure.

    On the segment between consecutive atoms the CDF difference decreases
    linearly with slope -1, so its value distribution is a mixture of
    uniforms; the optimal offset is that mixture's median and each
    segment's contribution integrates in closed form. q equally spaced
    atoms give exactly 1/(4q).
    """
    x, w = mu.positions, mu.weights
    cum = np.cumsum(w)
    seg = np.diff(x, append=x[0] + 1.0)
    top = cum - x                       # CDF difference just after each atom
    bot = top - seg                     # ... just before the next atom
    c = _uniform_mixture_median(bot, top)
    # per segment: integral_bot^top |v - c| dv = (f(top-c) + f(c-bot)) / 2
    # with f(z) = z|z|; the signed squares handle c outside [bot, top]
    above = top - c
    below = c - bot
    return float(0.5 * np.sum(above * np.abs(above) + below * np.abs(below)))
