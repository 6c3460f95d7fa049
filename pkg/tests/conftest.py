"""Shared fixtures: the default model, relaxed cells, and the acceptance sweep.

The expensive artifacts are session-scoped and built lazily, so unit-test
runs stay fast while the acceptance module reuses one sweep and one batch
of relaxed states across criteria.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

import fkpulse as fk
from fkpulse.dynamics import ChainState, evolve

# (rho, tau) cells used by the relaxed-state criteria
FIXTURE_CELLS = (
    (Fraction(1, 2), 2.0),
    (Fraction(3, 5), 3.0),
    (Fraction(5, 8), 4.0),
    (Fraction(8, 13), 5.0),
    (Fraction(13, 21), 6.0),
)

SWEEP_RHOS = (Fraction(8, 13), Fraction(13, 21), Fraction(21, 34), Fraction(34, 55))
SWEEP_TAUS = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0)


@pytest.fixture(scope="session")
def model():
    return fk.default_model()


@pytest.fixture(scope="session")
def relaxed_states():
    """20 post-transient states: 4 seeded snapshots from each of 5 cells.

    Each state sits at a pulse-period boundary (start of an off phase),
    between 50 and 66 periods after the straight-line start.
    """
    rng = np.random.default_rng(2024)
    out = []
    for frac, tau in FIXTURE_CELLS:
        m = fk.default_model(tau=tau)
        period = 2.0 * tau
        st = evolve(ChainState.straight_line(frac.numerator, frac.denominator),
                    50 * period, m)
        snaps = [st]
        for _ in range(16):
            st = evolve(st, st.time + period, m)
            snaps.append(st)
        for idx in rng.choice(len(snaps), size=4, replace=False):
            out.append((m, snaps[idx]))
    return out


@pytest.fixture(scope="session")
def invariant_reports():
    """verify_invariants over the five fixture cells (criteria 3, 4, 6)."""
    reports = []
    for frac, tau in FIXTURE_CELLS:
        reports.append(fk.verify_invariants(frac, fk.default_model(tau=tau)))
    return reports


@pytest.fixture(scope="session")
def acceptance_sweep():
    """The criterion-7 grid: golden-mean convergents x 8 logarithmic taus."""
    return fk.sweep(list(SWEEP_RHOS), list(SWEEP_TAUS), fk.default_model())
