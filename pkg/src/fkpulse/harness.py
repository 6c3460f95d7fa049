"""End-to-end experiments: speed measurement, invariant verification, sweeps.

The speed estimator starts every cell from the straight line, discards a
transient, then averages the cell-mean displacement per pulse period over
consecutive windows until the windowed value stabilises; the cell mean
makes the estimator agree exactly with the shift-invariant-measure
integral at the measured state. verify_invariants relaxes one cell and
checks every measure-level inequality the dissipative half of the theory
asserts, sampling the off and on phase at their boundaries and 16 interior
times. sweep maps the estimator and the bound evaluators over a
(rho, tau) grid and emits deterministic CSV.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .bounds import BoundInputs, speed_lower_bound
from .cfrac import (ConvergentSeq, PenaltyParams, continued_fraction,
                    convergents_up_to, equidistribution_penalty,
                    penalty_coefficient)
from .config import (ConfigDoc, load_config, model_digest,
                     model_from_config, parse_rho)
from .dynamics import (ChainState, DynamicsMode, IntegratorConfig, evolve,
                       is_rotationally_ordered, poincare_map,
                       second_differences, spacings, width_function)
from .errors import ConfigurationError, InvariantViolation
from .measures import (EmpiricalMeasure, avg_width, energy, mean_displacement,
                       project_circle, w1_to_uniform)
from .potentials import ModelSpec

__all__ = [
    "SpeedEstimate",
    "CheckResult",
    "InvariantReport",
    "SweepCell",
    "SweepResult",
    "measure_speed",
    "verify_invariants",
    "sweep",
    "run_config",
    "stats_row",
    "STATS_HEADER",
    "SWEEP_HEADER",
    "write_checkpoint",
    "read_checkpoint",
]

RhoInput = Union[Fraction, int, tuple]

STATS_HEADER = "t,phase,avg_width,energy,w1_leb,mean_disp"
SWEEP_HEADER = ("p,q,tau,v,converged,n_periods,residual,bound,vacuous,"
                "gamma,alpha,beta,coeff,delta_minus,delta_plus")


def _as_fraction(rho: RhoInput) -> Fraction:
    if isinstance(rho, tuple):
        return Fraction(*rho)
    return Fraction(rho)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# speed measurement


@dataclass(frozen=True)
class SpeedEstimate:
    """Measured transport speed of one (rho, tau) cell.

    v is lattice units per time; residual is the change of the windowed
    per-period speed over the last two windows, and converged means it
    fell below the tolerance before the period budget ran out.
    """

    rho: Fraction
    tau: float
    v: float
    n_periods: int
    converged: bool
    residual: float


def measure_speed(rho: RhoInput, model: ModelSpec,
                  mode: DynamicsMode = DynamicsMode.PULSATING_POTENTIAL,
                  cfg: IntegratorConfig = IntegratorConfig(),
                  transient_periods: int = 50,
                  max_periods: int = 4096,
                  window: int = 32,
                  speed_tol: float = 1e-6) -> SpeedEstimate:
    """Relax from the straight line, then average displacement per period.

    The estimate is the cell-mean displacement per pulse period divided by
    the period, taken over the last full window; convergence requires two
    consecutive windows to agree within speed_tol. A non-converged result
    is returned flagged, never silently as a speed.
    """
    frac = _as_fraction(rho)
    p, q = frac.numerator, frac.denominator
    period = 2.0 * model.pulse.tau
    state = ChainState.straight_line(p, q)
    state = evolve(state, transient_periods * period, model, mode, cfg)
    periods = transient_periods

    v_prev: Optional[float] = None
    v_cur = 0.0
    residual = math.inf
    converged = False
    while periods + window <= max_periods:
        nxt = evolve(state, (periods + window) * period, model, mode, cfg)
        v_cur = float(np.mean(nxt.positions - state.positions)) / (window * period)
        periods += window
        state = nxt
        if v_prev is not None:
            residual = abs(v_cur - v_prev)
            if residual < speed_tol:
                converged = True
                break
        v_prev = v_cur
    return SpeedEstimate(frac, model.pulse.tau, v_cur, periods, converged, residual)


def fixed_point_residual(rho: RhoInput, model: ModelSpec,
                         mode: DynamicsMode = DynamicsMode.PULSATING_POTENTIAL,
                         cfg: IntegratorConfig = IntegratorConfig(),
                         transient_periods: int = 50) -> float:
    """max_k |T u - u| / q after the transient (0 iff the cycle map pins the cell)."""
    frac = _as_fraction(rho)
    period = 2.0 * model.pulse.tau
    state = ChainState.straight_line(frac.numerator, frac.denominator)
    state = evolve(state, transient_periods * period, model, mode, cfg)
    mapped = poincare_map(state, model, mode, cfg)
    return float(np.max(np.abs(mapped.positions - state.positions))) / frac.denominator


# ---------------------------------------------------------------------------
# invariant verification


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass
class InvariantReport:
    rho: Fraction
    tau: float
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "rho": f"{self.rho.numerator}/{self.rho.denominator}",
            "tau": self.tau,
            "passed": self.passed,
            "checks": {c.name: {"passed": c.passed, "margin": c.margin,
                                "detail": c.detail}
                       for c in self.checks},
        }

    def summary_lines(self) -> list:
        out = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            extra = f"  ({c.detail})" if c.detail else ""
            out.append(f"{status}  {c.name:28s} margin={c.margin:+.3e}{extra}")
        return out


def _geometry_margins(state: ChainState, delta_minus: float, delta_plus: float,
                      w_of_rho: float, model: ModelSpec) -> dict:
    """Pointwise measure-level inequalities for one rotationally ordered cell.

    Returns signed margins (nonnegative means the inequality holds):
      poincare:   sqrt(mean (second difference)^2) - avg_width
      force_gap:  mean (coupling-force gap)^2 - delta_minus^2 * mean (sec diff)^2
      excess_lo:  (energy - W(rho)) - (delta_minus/2) * avg_width
      excess_hi:  (delta_plus/2) * avg_width - (energy - W(rho))
      width:      1 - max width
    """
    mu = EmpiricalMeasure(state)
    wdt = avg_width(mu)
    en = energy(mu, model.w)
    sd = second_differences(state)
    g = spacings(state)
    force = model.w.deriv(g)
    force_gap = force - np.roll(force, 1)
    msd = float(np.mean(sd * sd))
    excess = en - w_of_rho
    return {
        "rotational_order": 1.0 if is_rotationally_ordered(state) else -1.0,
        "poincare": math.sqrt(msd) - wdt,
        "force_gap": float(np.mean(force_gap * force_gap)) - delta_minus ** 2 * msd,
        "excess_lo": excess - 0.5 * delta_minus * wdt,
        "excess_hi": 0.5 * delta_plus * wdt - excess,
        "width": 1.0 - float(width_function(state).max()),
        "avg_width": wdt,
        "energy": en,
    }


def width_decay_bound(delta_minus: float, delta_plus: float, tau: float) -> float:
    """Off-phase width ceiling delta_plus^2 / (2 delta_minus^3 tau + delta_plus delta_minus)."""
    return delta_plus ** 2 / (2.0 * delta_minus ** 3 * tau + delta_plus * delta_minus)


def circle_bound_margin(state: ChainState, seq: ConvergentSeq, q_max: int) -> float:
    """Worst margin of d1(projection, uniform) <= (q/sqrt3)*rms + 3/(4q).

    Scans every convergent denominator q of the cell's spacing up to q_max.
    """
    mu = EmpiricalMeasure(state)
    eps = math.sqrt(avg_width(mu))
    d1 = w1_to_uniform(project_circle(mu))
    worst = math.inf
    for _, qq in convergents_up_to(seq, q_max):
        worst = min(worst, qq / math.sqrt(3.0) * eps + 3.0 / (4.0 * qq) - d1)
    return worst


def verify_invariants(rho: RhoInput, model: ModelSpec,
                      cfg: IntegratorConfig = IntegratorConfig(),
                      *,
                      transient_periods: int = 50,
                      n_interior: int = 16,
                      q_max: int = 233,
                      slack: float = 1e-9,
                      drift_tol: float = 1e-8,
                      width_tol: float = 1e-6) -> InvariantReport:
    """Relax one cell, then check the dissipative-phase inequalities.

    One full pulse cycle is sampled at the phase boundaries and n_interior
    interior times per phase. Off-phase checks: zero cell-mean drift,
    energy monotonicity, width decay at the phase end, and the circle
    equidistribution bound. Both phases: rotational order, width <= 1, the
    discrete Poincare inequality and the convexity chain. Only the
    pulsating-potential dynamics is verified; the statements are specific
    to it.
    """
    frac = _as_fraction(rho)
    p, q = frac.numerator, frac.denominator
    tau = model.pulse.tau
    period = 2.0 * tau
    dm, dp = model.curvature_range(float(frac))
    w_rho = float(model.w.value(float(frac)))
    mode = DynamicsMode.PULSATING_POTENTIAL

    state = evolve(ChainState.straight_line(p, q), transient_periods * period,
                   model, mode, cfg)
    t0 = state.time

    geo_names = ("rotational_order", "poincare", "force_gap",
                 "excess_lo", "excess_hi", "width")
    geo_worst = {name: math.inf for name in geo_names}
    energies: list[float] = []
    off_samples = n_interior + 2

    cur = state
    step = tau / (off_samples - 1)
    times = [t0 + j * step for j in range(off_samples)]
    times[-1] = t0 + tau
    times += [t0 + tau + j * step for j in range(1, off_samples)]
    times[-1] = t0 + 2.0 * tau
    off_end = on_end = state
    for j, t in enumerate(times):
        if t > cur.time:
            cur = evolve(cur, t, model, mode, cfg)
        margins = _geometry_margins(cur, dm, dp, w_rho, model)
        for name in geo_names:
            geo_worst[name] = min(geo_worst[name], margins[name])
        if j < off_samples:
            energies.append(margins["energy"])
        if j == off_samples - 1:
            off_end = cur
    on_end = cur

    checks = []

    def add(name, margin, tol, detail=""):
        checks.append(CheckResult(name, margin >= -tol, float(margin), detail))

    drift_off = mean_displacement(EmpiricalMeasure(state), EmpiricalMeasure(off_end))
    add("off_phase_drift", drift_tol - abs(drift_off), 0.0,
        f"|mean displacement| = {abs(drift_off):.3e}")

    steps = np.diff(np.asarray(energies))
    add("energy_monotone", float(-(steps.max())) if steps.size else 0.0, slack,
        "off-phase energy steps")

    add("rotational_order", geo_worst["rotational_order"], 0.0)
    add("width_bound", geo_worst["width"], width_tol)
    add("poincare_inequality", geo_worst["poincare"], slack)
    add("second_difference_force", geo_worst["force_gap"], slack)
    add("energy_excess_lower", geo_worst["excess_lo"], slack)
    add("energy_excess_upper", geo_worst["excess_hi"], slack)

    ceiling = width_decay_bound(dm, dp, tau)
    v_end = avg_width(EmpiricalMeasure(off_end))
    add("width_decay", ceiling - v_end, 1e-9,
        f"avg_width(off end) = {v_end:.3e} vs ceiling {ceiling:.3e}")

    seq = continued_fraction(frac)
    add("circle_equidistribution", circle_bound_margin(off_end, seq, q_max), slack,
        f"checked q <= {q_max}")

    drift_on = mean_displacement(EmpiricalMeasure(off_end), EmpiricalMeasure(on_end))
    checks.append(CheckResult("on_phase_drift", True, drift_on,
                              "reported only; nonzero is the ratchet effect"))

    report = InvariantReport(frac, tau, checks)
    return report


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepCell:
    p: int
    q: int
    tau: float
    v: float
    converged: bool
    n_periods: int
    residual: float
    bound: float
    vacuous: bool
    gamma: float
    alpha: float
    beta: float
    coeff: float
    delta_minus: float
    delta_plus: float

    def csv_row(self) -> str:
        flag = lambda b: "1" if b else "0"
        return ",".join([
            str(self.p), str(self.q), _fmt(self.tau), _fmt(self.v),
            flag(self.converged), str(self.n_periods), _fmt(self.residual),
            _fmt(self.bound), flag(self.vacuous), _fmt(self.gamma),
            _fmt(self.alpha), _fmt(self.beta), _fmt(self.coeff),
            _fmt(self.delta_minus), _fmt(self.delta_plus),
        ])


@dataclass
class SweepResult:
    cells: list

    def to_csv(self) -> str:
        lines = [SWEEP_HEADER]
        lines += [c.csv_row() for c in self.cells]
        return "\n".join(lines) + "\n"

    def violations(self, speed_tol: float = 1e-6) -> list:
        """Cells whose measured speed undercuts a non-vacuous bound."""
        bad = []
        for c in self.cells:
            if not c.vacuous and c.converged and c.v < c.bound - speed_tol:
                bad.append(c)
        return bad

    def cell(self, rho: Fraction, tau: float) -> SweepCell:
        for c in self.cells:
            if (c.p, c.q) == (rho.numerator, rho.denominator) and c.tau == tau:
                return c
        raise KeyError((rho, tau))


def _sweep_cell(args) -> SweepCell:
    (p, q, tau, model, mode, cfg, transient_periods, max_periods, window,
     speed_tol, grid_n) = args
    cell_model = model.with_tau(tau)
    est = measure_speed(Fraction(p, q), cell_model, mode, cfg,
                        transient_periods=transient_periods,
                        max_periods=max_periods, window=window,
                        speed_tol=speed_tol)
    rho = p / q
    dm, dp = model.curvature_range(rho)
    coeff = penalty_coefficient(dm, dp)
    seq = continued_fraction(Fraction(p, q))
    gamma = equidistribution_penalty(seq, PenaltyParams(coeff, tau))
    asym = cell_model.asymmetry(rho, grid_n=grid_n, tau=tau, gamma=gamma)
    if asym is None:
        bound, alpha, beta, vacuous = math.nan, math.nan, math.nan, True
    else:
        bound = speed_lower_bound(BoundInputs(
            alpha=asym.alpha, beta=asym.beta, tau=tau, gamma=gamma,
            coeff=coeff, epsilon=min(gamma, 1.0) ** 2 / 4.0))
        alpha, beta = asym.alpha, asym.beta
        vacuous = not (bound > 0.0)
    return SweepCell(p=p, q=q, tau=tau, v=est.v, converged=est.converged,
                     n_periods=est.n_periods, residual=est.residual,
                     bound=bound, vacuous=vacuous, gamma=gamma, alpha=alpha,
                     beta=beta, coeff=coeff, delta_minus=dm, delta_plus=dp)


def sweep(rho_list: Sequence[RhoInput], tau_list: Sequence[float],
          model: ModelSpec,
          mode: DynamicsMode = DynamicsMode.PULSATING_POTENTIAL,
          cfg: IntegratorConfig = IntegratorConfig(),
          *,
          workers: int = 1,
          transient_periods: int = 50,
          max_periods: int = 4096,
          window: int = 32,
          speed_tol: float = 1e-6,
          grid_n: int = 4096) -> SweepResult:
    """Measure speed and evaluate bounds over the (rho, tau) grid.

    Cells are independent and may run in a process pool; rows are sorted
    by (rho, tau) before emission, so the output is deterministic for any
    worker count.
    """
    if not rho_list or not tau_list:
        raise ValueError("rho_list and tau_list must be nonempty")
    fracs = [_as_fraction(r) for r in rho_list]
    jobs = [(f.numerator, f.denominator, float(tau), model, mode, cfg,
             transient_periods, max_periods, window, speed_tol, grid_n)
            for f in fracs for tau in tau_list]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_sweep_cell, jobs))
    else:
        cells = [_sweep_cell(job) for job in jobs]
    cells.sort(key=lambda c: (c.p / c.q, c.tau))
    return SweepResult(cells)


# ---------------------------------------------------------------------------
# per-phase statistics rows


def stats_row(t: float, phase: str, state: ChainState, model: ModelSpec,
              disp: float) -> str:
    mu = EmpiricalMeasure(state)
    return ",".join([
        _fmt(t), phase, _fmt(avg_width(mu)), _fmt(energy(mu, model.w)),
        _fmt(w1_to_uniform(project_circle(mu))), _fmt(disp),
    ])


def simulate_stats(rho: RhoInput, model: ModelSpec, periods: int,
                   mode: DynamicsMode = DynamicsMode.PULSATING_POTENTIAL,
                   cfg: IntegratorConfig = IntegratorConfig()) -> tuple:
    """Run `periods` pulse cycles from the straight line, collecting the
    per-half-phase statistics CSV rows. Returns (final state, rows)."""
    frac = _as_fraction(rho)
    state = ChainState.straight_line(frac.numerator, frac.denominator)
    tau = model.pulse.tau
    rows = [stats_row(0.0, "init", state, model, 0.0)]
    for half in range(1, 2 * periods + 1):
        nxt = evolve(state, half * tau, model, mode, cfg)
        disp = float(np.mean(nxt.positions - state.positions))
        phase = "off" if half % 2 else "on"
        rows.append(stats_row(half * tau, phase, nxt, model, disp))
        state = nxt
    return state, rows


# ---------------------------------------------------------------------------
# bound reporting


def bound_report(model: ModelSpec, rho: Fraction, tau: float,
                 grid_n: int = 4096) -> str:
    """Human-readable evaluation of every bound at one (rho, tau) cell.

    Each line is labelled by the evaluator that produced it; the
    asymptotic remainder of the typical-spacing bound is reported as
    unknown rather than dropped.
    """
    from .bounds import (golden_mean_bound, optimal_tau,
                         typical_spacing_bound)

    cell_model = model.with_tau(tau)
    rho_f = float(rho)
    dm, dp = model.curvature_range(rho_f)
    coeff = penalty_coefficient(dm, dp)
    seq = continued_fraction(rho)
    gamma = equidistribution_penalty(seq, PenaltyParams(coeff, tau))
    lines = [
        f"rho = {rho.numerator}/{rho.denominator}  tau = {tau:.17g}",
        f"delta_minus = {dm:.17g}  delta_plus = {dp:.17g}",
        f"penalty coefficient = {coeff:.17g}",
        f"equidistribution penalty = {gamma:.17g}",
    ]
    asym = cell_model.asymmetry(rho_f, grid_n=grid_n, tau=tau, gamma=gamma)
    if asym is None:
        lines.append("asymmetry: condition not satisfied at this kappa; "
                     "speed bound unavailable")
        return "\n".join(lines) + "\n"
    a, b = asym.interval
    lines.append(f"alpha = {asym.alpha:.17g}  beta = {asym.beta:.17g}  "
                 f"interval = [{a:.6f}, {b:.6f}]")
    main = speed_lower_bound(BoundInputs(alpha=asym.alpha, beta=asym.beta,
                                         tau=tau, gamma=gamma, coeff=coeff))
    tag = "" if main > 0 else "  [vacuous]"
    lines.append(f"speed_lower_bound     = {main:.17g}{tag}")
    try:
        gm = golden_mean_bound(coeff, asym.alpha, asym.beta, tau)
        lines.append(f"golden_mean_bound     = {gm:.17g}")
    except ValueError as exc:
        lines.append(f"golden_mean_bound     : not applicable ({exc})")
    ts = typical_spacing_bound(asym.alpha, coeff, tau)
    lines.append(f"typical_spacing_bound = {ts:.17g} + o(tau^-1/8) "
                 "(remainder unknown)")
    lines.append(f"optimal_tau           = {optimal_tau(coeff, asym.alpha):.17g}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# checkpoints


def write_checkpoint(state: ChainState, model: ModelSpec, path) -> None:
    """One line per site `index position`; header carries p, q, time, model hash."""
    lines = [
        "# fkpulse-checkpoint v1",
        f"# p = {state.p}",
        f"# q = {state.q}",
        f"# time = {state.time:.17g}",
        f"# model = sha256:{model_digest(model)}",
    ]
    lines += [f"{k} {state.positions[k]:.17g}" for k in range(state.q)]
    _atomic_write(path, "\n".join(lines) + "\n")


def read_checkpoint(path) -> tuple:
    """Returns (ChainState, model digest recorded at write time)."""
    header: dict[str, str] = {}
    positions: dict[int, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, value = (s.strip() for s in body.split("=", 1))
                    header[key] = value
                continue
            idx, pos = line.split()
            positions[int(idx)] = float(pos)
    try:
        p, q, time = int(header["p"]), int(header["q"]), float(header["time"])
        digest = header["model"].removeprefix("sha256:")
        pos = np.array([positions[k] for k in range(q)])
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"malformed checkpoint {path}: {exc}") from exc
    return ChainState(pos, p, q, time), digest


def _atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# config-driven runs


def _cfg_from_doc(doc: ConfigDoc) -> IntegratorConfig:
    kwargs = {}
    if doc.get("run", "dt_max") is not None:
        kwargs["dt_max"] = float(doc.require("run", "dt_max"))
    if doc.get("run", "safety") is not None:
        kwargs["safety"] = float(doc.require("run", "safety"))
    try:
        return IntegratorConfig(**kwargs)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc


def _mode_from_doc(doc: ConfigDoc) -> DynamicsMode:
    raw = doc.get("run", "mode", "pulsating-potential")
    for mode in DynamicsMode:
        if mode.value == raw:
            return mode
    raise ConfigurationError(f"unknown mode {raw!r}")


def _int_key(doc: ConfigDoc, key: str, default: int) -> int:
    raw = doc.get("run", key)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"invalid integer for {key}: {raw!r}") from exc


def run_config(path) -> int:
    """Dispatch the subcommand described by a config file.

    Exit status: 0 success, 1 invariant violation, 2 configuration error.
    Output files are written atomically (temp file + rename).
    """
    try:
        doc = load_config(path)
        command = doc.require("run", "command")
        out = doc.get("run", "out")
        cfg = _cfg_from_doc(doc)
        mode = _mode_from_doc(doc)

        if command == "speed":
            model = model_from_config(doc)
            est = measure_speed(parse_rho(doc.require("run", "rho")), model, mode,
                                cfg,
                                transient_periods=_int_key(doc, "transient_periods", 50),
                                max_periods=_int_key(doc, "max_periods", 4096),
                                window=_int_key(doc, "window", 32),
                                speed_tol=float(doc.get("run", "speed_tol", "1e-6")))
            text = json.dumps({
                "rho": f"{est.rho.numerator}/{est.rho.denominator}",
                "tau": est.tau, "v": est.v, "n_periods": est.n_periods,
                "converged": est.converged, "residual": est.residual,
            }, indent=2) + "\n"
            _emit(out, text)
            return 0

        if command == "sweep":
            model = model_from_config(doc)
            rhos = [parse_rho(tok) for tok in
                    doc.require("run", "rho_list").split(",")]
            taus = [float(tok) for tok in doc.require("run", "tau_list").split(",")]
            result = sweep(rhos, taus, model, mode, cfg,
                           workers=_int_key(doc, "workers", 1),
                           transient_periods=_int_key(doc, "transient_periods", 50),
                           max_periods=_int_key(doc, "max_periods", 4096),
                           window=_int_key(doc, "window", 32),
                           speed_tol=float(doc.get("run", "speed_tol", "1e-6")),
                           grid_n=_int_key(doc, "grid_n", 4096))
            _emit(out, result.to_csv())
            bad = result.violations(float(doc.get("run", "speed_tol", "1e-6")))
            if bad:
                raise InvariantViolation(
                    f"{len(bad)} sweep cells violate the bound/measurement contract")
            return 0

        if command == "verify":
            model = model_from_config(doc)
            report = verify_invariants(
                parse_rho(doc.require("run", "rho")), model, cfg,
                transient_periods=_int_key(doc, "transient_periods", 50),
                q_max=_int_key(doc, "q_max", 233))
            _emit(out, json.dumps(report.to_dict(), indent=2) + "\n")
            for line in report.summary_lines():
                print(line)
            if not report.passed:
                failed = [c.name for c in report.checks if not c.passed]
                raise InvariantViolation("failed checks: " + ", ".join(failed))
            return 0

        if command == "simulate":
            model = model_from_config(doc)
            state, rows = simulate_stats(
                parse_rho(doc.require("run", "rho")), model,
                _int_key(doc, "periods", 50), mode, cfg)
            _emit(out, "\n".join([STATS_HEADER] + rows) + "\n")
            return 0

        if command == "cfrac":
            seq = continued_fraction(parse_rho(doc.require("run", "rho")),
                                     max_terms=_int_key(doc, "max_terms", 64))
            lines = ["terms: " + " ".join(str(a) for a in seq.terms)]
            lines += [f"{p}/{q}" for p, q in seq.convergents]
            _emit(out, "\n".join(lines) + "\n")
            return 0

        if command == "bound":
            model = model_from_config(doc)
            text = bound_report(model, parse_rho(doc.require("run", "rho")),
                                float(doc.require("run", "tau")),
                                grid_n=_int_key(doc, "grid_n", 4096))
            _emit(out, text)
            return 0

        raise ConfigurationError(f"unknown command {command!r}")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 1


def _emit(out: Optional[str], text: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        _atomic_write(out, text)
