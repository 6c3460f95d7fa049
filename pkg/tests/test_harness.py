import json
import math
import os
from fractions import Fraction

import numpy as np
import pytest

import fkpulse as fk
import fkpulse.cli as cli
from fkpulse.config import (model_digest, model_from_config, parse_config,
                            parse_rho, serialize_model)
from fkpulse.dynamics import ChainState, evolve
from fkpulse.errors import ConfigurationError
from fkpulse.harness import (STATS_HEADER, SWEEP_HEADER, SweepCell,
                             SweepResult, bound_report, measure_speed,
                             read_checkpoint, run_config, simulate_stats,
                             sweep, verify_invariants, write_checkpoint)
from fkpulse.harness import _geometry_margins, fixed_point_residual


# ---------------------------------------------------------------------------
# speed estimator


def test_speed_zero_without_pulse():
    est = measure_speed(Fraction(13, 21), fk.default_model(tau=2.0, kappa=0.0))
    assert est.converged
    assert abs(est.v) <= 1e-6


def test_speed_zero_at_integer_spacing():
    est = measure_speed(Fraction(2, 1), fk.default_model(tau=2.0))
    assert est.converged
    assert abs(est.v) <= 1e-6


def test_speed_positive_golden_convergent():
    est = measure_speed(Fraction(13, 21), fk.default_model(tau=4.0))
    assert est.converged
    assert est.v > 1e-3
    # the attractor locks the advance to 5/21 sites per period
    assert est.v == pytest.approx(5.0 / 21.0 / 8.0, rel=1e-6)


def test_speed_transient_insensitive():
    m = fk.default_model(tau=4.0)
    a = measure_speed(Fraction(13, 21), m, transient_periods=50)
    b = measure_speed(Fraction(13, 21), m, transient_periods=100)
    assert abs(a.v - b.v) <= 2e-6


def test_speed_nonconvergence_is_flagged():
    est = measure_speed(Fraction(13, 21), fk.default_model(tau=1.0),
                        transient_periods=2, max_periods=10, window=8)
    assert not est.converged
    assert est.n_periods == 10
    assert math.isinf(est.residual)


def test_fixed_point_residual_integer():
    assert fixed_point_residual(Fraction(1, 1), fk.default_model(tau=4.0)) < 1e-6


def test_speed_interaction_mode_runs():
    est = measure_speed(Fraction(1, 2), fk.default_model(tau=1.0, kappa=2.0),
                        mode=fk.DynamicsMode.PULSATING_INTERACTION,
                        transient_periods=10, max_periods=120, window=8)
    assert math.isfinite(est.v)
    assert est.converged


def test_rational_approximant():
    assert fk.rational_approximant(Fraction(13, 21)) == Fraction(13, 21)
    assert fk.rational_approximant(fk.GOLDEN_MEAN, q_max=233) == Fraction(377, 233)
    assert fk.rational_approximant(fk.GOLDEN_MEAN, q_max=100) == Fraction(144, 89)
    got = fk.rational_approximant(0.6180339887498949, q_max=55)
    assert got == Fraction(34, 55)
    big = fk.rational_approximant(Fraction(100001, 300001), q_max=233)
    assert big.denominator <= 233
    assert abs(float(big) - 100001 / 300001) < 1e-4


# ---------------------------------------------------------------------------
# invariant verification


def test_verify_default_cell():
    report = verify_invariants(Fraction(8, 13), fk.default_model(tau=5.0))
    assert report.passed
    names = {c.name for c in report.checks}
    assert {"off_phase_drift", "energy_monotone", "rotational_order",
            "width_bound", "poincare_inequality", "second_difference_force",
            "energy_excess_lower", "energy_excess_upper", "width_decay",
            "circle_equidistribution"} <= names
    blob = report.to_dict()
    assert blob["passed"] is True
    assert blob["rho"] == "8/13"


def test_verify_quartic_interaction():
    model = fk.ModelSpec(
        w=fk.InteractionPotential.quadratic_quartic(0.5, 1 / 24),
        v=fk.default_model().v,
        pulse=fk.PulseSpec(tau=3.0, kappa=10.0),
    )
    report = verify_invariants(Fraction(3, 5), model, transient_periods=40)
    assert report.passed


def test_geometry_margins_flag_corrupted_state():
    m = fk.default_model(tau=2.0)
    st = evolve(ChainState.straight_line(8, 13), 200.0, m)
    good = _geometry_margins(st, 2.0, 2.0, float(m.w.value(8 / 13)), m)
    assert good["rotational_order"] > 0
    pos = st.positions.copy()
    np.random.default_rng(0).shuffle(pos)
    bad = _geometry_margins(ChainState(pos, 8, 13, st.time), 2.0, 2.0,
                            float(m.w.value(8 / 13)), m)
    assert bad["rotational_order"] < 0


# ---------------------------------------------------------------------------
# sweep


def test_sweep_single_cell_matches_measure_speed():
    m = fk.default_model()
    res = sweep([Fraction(1, 2)], [1.0], m)
    est = measure_speed(Fraction(1, 2), m.with_tau(1.0))
    assert len(res.cells) == 1
    cell = res.cells[0]
    assert cell.v == est.v
    assert cell.converged == est.converged
    assert (cell.p, cell.q, cell.tau) == (1, 2, 1.0)
    assert cell.delta_minus == cell.delta_plus == 2.0


def test_sweep_requires_nonempty_grid():
    with pytest.raises(ValueError):
        sweep([], [1.0], fk.default_model())


def test_sweep_deterministic_and_worker_invariant():
    m = fk.default_model()
    grid = ([Fraction(1, 2)], [0.5, 1.0])
    a = sweep(*grid, m).to_csv()
    b = sweep(*grid, m).to_csv()
    c = sweep(*grid, m, workers=2).to_csv()
    assert a == b == c
    assert a.splitlines()[0] == SWEEP_HEADER


def test_sweep_contract_enforcement_path():
    # synthetic cells exercise the violation detector both ways
    good = SweepCell(p=1, q=2, tau=1.0, v=0.011, converged=True, n_periods=64,
                     residual=0.0, bound=0.01, vacuous=False, gamma=0.5,
                     alpha=0.2, beta=1.0, coeff=1.0, delta_minus=2.0,
                     delta_plus=2.0)
    bad = SweepCell(p=1, q=2, tau=2.0, v=0.001, converged=True, n_periods=64,
                    residual=0.0, bound=0.01, vacuous=False, gamma=0.5,
                    alpha=0.2, beta=1.0, coeff=1.0, delta_minus=2.0,
                    delta_plus=2.0)
    vacuous = SweepCell(p=1, q=2, tau=3.0, v=0.0, converged=True, n_periods=64,
                        residual=0.0, bound=-1.0, vacuous=True, gamma=2.0,
                        alpha=0.2, beta=1.0, coeff=1.0, delta_minus=2.0,
                        delta_plus=2.0)
    res = SweepResult([good, bad, vacuous])
    violations = res.violations(1e-6)
    assert violations == [bad]


# ---------------------------------------------------------------------------
# stats and checkpoints


def test_simulate_stats_schema():
    state, rows = simulate_stats(Fraction(1, 2), fk.default_model(tau=0.5),
                                 periods=3)
    assert len(rows) == 7
    assert STATS_HEADER == "t,phase,avg_width,energy,w1_leb,mean_disp"
    first = rows[0].split(",")
    assert first[1] == "init"
    for row in rows[1:]:
        cols = row.split(",")
        assert len(cols) == 6
        assert cols[1] in ("off", "on")
        float(cols[0]); float(cols[2]); float(cols[3]); float(cols[4]); float(cols[5])
    assert state.time == pytest.approx(3.0)


def test_checkpoint_roundtrip(tmp_path):
    m = fk.default_model(tau=1.0)
    st = evolve(ChainState.straight_line(3, 5), 7.0, m)
    path = tmp_path / "cell.chk"
    write_checkpoint(st, m, path)
    back, digest = read_checkpoint(path)
    assert np.array_equal(back.positions, st.positions)
    assert (back.p, back.q) == (3, 5)
    assert back.time == st.time
    assert digest == model_digest(m)
    assert not os.path.exists(str(path) + ".tmp")
    # deterministic bytes
    write_checkpoint(st, m, tmp_path / "cell2.chk")
    assert (tmp_path / "cell.chk").read_bytes() == (tmp_path / "cell2.chk").read_bytes()


def test_checkpoint_malformed(tmp_path):
    path = tmp_path / "bad.chk"
    path.write_text("# p = 1\n0 0.0\n")
    with pytest.raises(ConfigurationError):
        read_checkpoint(path)


# ---------------------------------------------------------------------------
# config parsing


def model_text():
    return serialize_model(fk.default_model(tau=0.5))


def test_model_roundtrip():
    m = fk.default_model(tau=0.75, kappa=3.0)
    back = model_from_config(parse_config(serialize_model(m)))
    assert back == m
    assert model_digest(back) == model_digest(m)
    assert model_digest(back) != model_digest(fk.default_model(tau=0.75, kappa=4.0))


def test_parse_config_unknown_key():
    with pytest.raises(ConfigurationError, match=r"cfg:2.*frobnicate"):
        parse_config("[pulse]\nfrobnicate = 3\n", source="cfg")


def test_parse_config_unknown_section():
    with pytest.raises(ConfigurationError, match="mystery"):
        parse_config("[mystery]\n")


def test_parse_config_syntax_errors():
    with pytest.raises(ConfigurationError, match="key outside"):
        parse_config("tau = 1\n")
    with pytest.raises(ConfigurationError, match="expected"):
        parse_config("[pulse]\nnonsense\n")
    with pytest.raises(ConfigurationError, match="duplicate"):
        parse_config("[pulse]\ntau = 1\ntau = 2\n")


def test_model_from_config_named_errors():
    with pytest.raises(ConfigurationError, match="W.kind"):
        model_from_config(parse_config(
            "[model]\nW.kind = cubic\nV.fourier = [(1, 0)]\n[pulse]\ntau = 1\nkappa = 1\n"))
    with pytest.raises(ConfigurationError, match="tau must be positive"):
        model_from_config(parse_config(
            "[model]\nW.kind = quadratic\nW.c = 1\nV.fourier = [(1, 0)]\n"
            "[pulse]\ntau = -1\nkappa = 1\n"))
    with pytest.raises(ConfigurationError, match="V.fourier"):
        model_from_config(parse_config(
            "[model]\nW.kind = quadratic\nW.c = 1\nV.fourier = junk\n"
            "[pulse]\ntau = 1\nkappa = 1\n"))


def test_parse_rho():
    assert parse_rho("13/21") == Fraction(13, 21)
    assert parse_rho(" 3 ") == 3
    with pytest.raises(ConfigurationError):
        parse_rho("x/y")


# ---------------------------------------------------------------------------
# config-driven runs


def write_config(tmp_path, body):
    path = tmp_path / "run.cfg"
    path.write_text(body)
    return path


def test_run_config_speed(tmp_path, capsys):
    out = tmp_path / "speed.json"
    cfg = write_config(tmp_path, model_text() + (
        f"[run]\ncommand = speed\nrho = 1/2\ntransient_periods = 4\n"
        f"window = 4\nmax_periods = 16\nout = {out}\n"))
    assert run_config(cfg) == 0
    blob = json.loads(out.read_text())
    assert blob["rho"] == "1/2"
    assert blob["converged"] is True


def test_run_config_sweep_golden(tmp_path):
    out = tmp_path / "grid.csv"
    cfg = write_config(tmp_path, model_text() + (
        f"[run]\ncommand = sweep\nrho_list = 1/2, 2/3\ntau_list = 0.5\n"
        f"transient_periods = 6\nwindow = 4\nmax_periods = 20\nout = {out}\n"))
    assert run_config(cfg) == 0
    first = out.read_bytes()
    lines = first.decode().splitlines()
    assert lines[0] == SWEEP_HEADER
    assert len(lines) == 3
    assert run_config(cfg) == 0
    assert out.read_bytes() == first  # bit-identical rerun


def test_run_config_verify(tmp_path, capsys):
    out = tmp_path / "verify.json"
    cfg = write_config(tmp_path, model_text() + (
        f"[run]\ncommand = verify\nrho = 1/2\ntransient_periods = 10\nout = {out}\n"))
    assert run_config(cfg) == 0
    blob = json.loads(out.read_text())
    assert blob["passed"] is True


def test_run_config_simulate(tmp_path):
    out = tmp_path / "stats.csv"
    cfg = write_config(tmp_path, model_text() + (
        f"[run]\ncommand = simulate\nrho = 1/2\nperiods = 3\nout = {out}\n"))
    assert run_config(cfg) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == STATS_HEADER
    assert len(lines) == 8


def test_run_config_bound(tmp_path):
    out = tmp_path / "bound.txt"
    cfg = write_config(tmp_path, model_text() + (
        f"[run]\ncommand = bound\nrho = 13/21\ntau = 8\nout = {out}\n"))
    assert run_config(cfg) == 0
    text = out.read_text()
    assert "speed_lower_bound" in text
    assert "o(tau^-1/8)" in text


def test_run_config_errors(tmp_path, capsys):
    assert run_config(tmp_path / "missing.cfg") == 2
    cfg = write_config(tmp_path, model_text() + "[run]\ncommand = dance\n")
    assert run_config(cfg) == 2
    err = capsys.readouterr().err
    assert "dance" in err


# ---------------------------------------------------------------------------
# bound report


def test_bound_report_labels():
    text = bound_report(fk.default_model(), Fraction(13, 21), 8.0)
    assert "speed_lower_bound" in text
    assert "[vacuous]" in text  # tau = 8 is far below the informative regime
    assert "typical_spacing_bound" in text and "remainder unknown" in text
    assert "optimal_tau" in text
    assert "golden_mean_bound" in text


def test_bound_report_no_asymmetry():
    flat = fk.ModelSpec(w=fk.InteractionPotential.quadratic(1.0),
                        v=fk.SitePotential(amps=(1e-6,), phases=(0.0,)),
                        pulse=fk.PulseSpec(tau=1.0, kappa=1.0))
    text = bound_report(flat, Fraction(1, 2), 8.0)
    assert "condition not satisfied" in text


# ---------------------------------------------------------------------------
# CLI


def test_cli_cfrac_golden(capsys):
    assert cli.main(["cfrac", "golden-mean", "--max-terms", "8"]) == 0
    out = capsys.readouterr().out
    assert "terms: 1 1 1 1 1 1 1 1" in out
    assert "21/13" in out


def test_cli_cfrac_rational(capsys):
    assert cli.main(["cfrac", "13/21"]) == 0
    out = capsys.readouterr().out
    assert out.strip().splitlines()[-1] == "13/21"


def test_cli_bound(capsys):
    assert cli.main(["bound", "--rho", "13/21", "--tau", "8"]) == 0
    assert "equidistribution penalty" in capsys.readouterr().out


def test_cli_speed(capsys, tmp_path):
    model = tmp_path / "model.cfg"
    model.write_text(model_text())
    rc = cli.main(["speed", "--model", str(model), "--rho", "1/2",
                   "--transient", "4", "--window", "4", "--max-periods", "16"])
    assert rc == 0
    blob = json.loads(capsys.readouterr().out)
    assert blob["converged"] is True


def test_cli_simulate_checkpoint(tmp_path):
    model = tmp_path / "model.cfg"
    model.write_text(model_text())
    csv = tmp_path / "stats.csv"
    chk = tmp_path / "state.chk"
    rc = cli.main(["simulate", "--model", str(model), "--rho", "2/3",
                   "--periods", "3", "--csv", str(csv), "--checkpoint", str(chk)])
    assert rc == 0
    state, digest = read_checkpoint(chk)
    assert state.q == 3
    assert digest == model_digest(model_from_config(parse_config(model_text())))
    assert csv.read_text().splitlines()[0] == STATS_HEADER


def test_cli_verify(tmp_path, capsys):
    model = tmp_path / "model.cfg"
    model.write_text(model_text())
    out = tmp_path / "report.json"
    rc = cli.main(["verify", "--model", str(model), "--rho", "1/2",
                   "--transient", "10", "--json", str(out)])
    assert rc == 0
    assert json.loads(out.read_text())["passed"] is True
    assert "width_decay" in capsys.readouterr().out
    assert cli.main(["verify", "--model", str(model), "--rho", "1/0"]) == 2


def test_cli_exit_codes_for_failures(monkeypatch, capsys):
    from fkpulse.harness import CheckResult, InvariantReport

    def fake_verify(*args, **kwargs):
        return InvariantReport(Fraction(1, 2), 1.0,
                               [CheckResult("width_bound", False, -1.0)])

    monkeypatch.setattr(cli, "verify_invariants", fake_verify)
    rc = cli.main(["verify", "--rho", "1/2"])
    assert rc == 1
    assert "width_bound" in capsys.readouterr().err


def test_cli_bad_config_exit_code(tmp_path):
    cfg = tmp_path / "broken.cfg"
    cfg.write_text("[pulse]\nmystery = 1\n")
    assert cli.main(["run", str(cfg)]) == 2
