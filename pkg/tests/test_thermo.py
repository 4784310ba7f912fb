import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from soliton_engine import thermo as th
from soliton_engine.errors import UndefinedBoundError, ValidationError
from soliton_engine.pulse import PulseKind, StrokeConfig

WEAK = (-0.1, -0.2)
STRONG = (-0.2, -0.2646)
PI2 = math.pi**2


def weak_trap_adiabatic_work(g_i, g_f, N):
    """-g^2 N^3 / 24 plus the trap energy evaluated at a = -2/(N g)."""
    e = lambda g: -g * g * N**3 / 24 + PI2 / (6 * N * g * g)
    return e(g_f) - e(g_i)


def record(W_AD, B, E, work=None, kind=PulseKind.STA):
    cfg = StrokeConfig(-0.1, -0.2, 100, 1.0)
    work = W_AD if work is None else work
    return th.StrokeRecord(config=cfg, kind=kind, backend=th.Backend.VARIATIONAL, work=work,
                           adiabatic_work=W_AD, irreversible_work=work - W_AD, fidelity=1.0,
                           initial_energy=0.0, final_energy=work, shortcut_energy=E, bures_angle=B)


def test_weak_trap_oracle_value():
    assert weak_trap_adiabatic_work(-0.1, -0.2, 100) == pytest.approx(-1251.23, abs=0.01)


@pytest.mark.parametrize("backend", ["GPE", "VARIATIONAL"])
def test_adiabatic_work_matches_weak_trap_oracle(backend):
    w = th.adiabatic_work(*WEAK, 100, backend)
    assert w == pytest.approx(weak_trap_adiabatic_work(*WEAK, 100), rel=1e-3)
    assert w == pytest.approx(-1251, abs=1.0)


@pytest.mark.parametrize("backend", ["GPE", "VARIATIONAL"])
def test_adiabatic_work_identical_in_both_regimes(backend):
    w_weak = th.adiabatic_work(*WEAK, 100, backend)
    w_strong = th.adiabatic_work(*STRONG, 100, backend)
    assert abs(w_weak - w_strong) < 2e-3 * abs(w_weak)


def test_adiabatic_work_identity_stroke():
    assert th.adiabatic_work(-0.15, -0.15, 77) == 0.0


@pytest.mark.parametrize("regime, analytic", [(WEAK, 0.75), (STRONG, 1 - 0.04 / 0.2646**2)])
def test_adiabatic_efficiency_backends(regime, analytic):
    eta_gpe = th.adiabatic_efficiency(*regime, 100, 90, "GPE")
    eta_var = th.adiabatic_efficiency(*regime, 100, 90, "VARIATIONAL")
    assert abs(eta_gpe - eta_var) < 0.02
    assert eta_var == pytest.approx(analytic, abs=2e-3)
    for N in (100, 90):
        w_gpe = th.adiabatic_work(*regime, N, "GPE")
        w_var = th.adiabatic_work(*regime, N, "VARIATIONAL")
        assert abs(w_gpe - w_var) < 0.01 * abs(w_gpe)


def test_stroke_bookkeeping_identity_and_invariants():
    rec = th.run_stroke(StrokeConfig(*WEAK, 100, 0.3), "STA", "VARIATIONAL", keep_series=True)
    assert rec.irreversible_work == rec.work - rec.adiabatic_work
    assert rec.check() == []
    assert rec.shortcut_energy > 0
    assert rec.series.shape[1] == 8
    assert rec.series[0, -1] == 0.0 and rec.series[-1, -1] == pytest.approx(rec.work, rel=1e-12)


def test_variational_sta_is_exact_shortcut():
    rec = th.run_stroke(StrokeConfig(*WEAK, 100, 0.15), "STA", "VARIATIONAL")
    assert abs(rec.irreversible_work) < 1e-6 * abs(rec.adiabatic_work)
    assert rec.fidelity > 1 - 1e-9


def test_slow_strokes_are_adiabatic():
    for kind in ("STA", "TRA"):
        rec = th.run_stroke(StrokeConfig(*WEAK, 100, 10.0), kind, "VARIATIONAL")
        assert abs(rec.irreversible_work) < 1e-4
        assert rec.fidelity > 0.999


def test_check_reports_violations():
    rec = record(-1000.0, 0.3, 1.0, work=-1001.0)
    rec.fidelity = 1.2
    rec.bures_angle = 2.0
    problems = rec.check()
    assert len(problems) == 3


def test_qsl_formula():
    rc, re_ = record(-1251.0, 0.4, 50.0), record(1013.0, 0.38, 40.0)
    q = th.qsl_bounds(rc, re_, Q_minus=317.0, tau=0.5)
    assert q.T_QSL_C == pytest.approx(0.4 / 50.0)
    assert q.T_QSL_E == pytest.approx(0.38 / 40.0)
    assert q.eta_QSL == pytest.approx(238.0 / (317.0 + 0.78 / 0.5))
    assert q.P_QSL == pytest.approx(238.0 / (0.008 + 0.0095))


def test_qsl_large_tau_limit():
    rc, re_ = record(-1251.0, 0.4, 50.0), record(1013.0, 0.38, 40.0)
    etas = [th.qsl_bounds(rc, re_, 317.0, tau).eta_QSL for tau in (1.0, 1e3, 1e9)]
    assert etas[0] < etas[1] < etas[2]
    assert etas[2] == pytest.approx(238.0 / 317.0, rel=1e-9)


def test_qsl_zero_angle():
    q = th.qsl_bounds(record(-10.0, 0.0, 1.0), record(5.0, 0.0, 1.0), 10.0, 1.0)
    assert q.T_QSL_C == 0.0 and q.T_QSL_E == 0.0
    assert q.P_QSL == math.inf


@pytest.mark.parametrize("E", [0.0, -1.0, math.nan])
def test_qsl_undefined(E):
    with pytest.raises(UndefinedBoundError, match="shortcut energy"):
        th.qsl_bounds(record(-10.0, 0.3, E), record(5.0, 0.3, 1.0), 10.0, 1.0)


@settings(max_examples=50)
@given(W=st.floats(-2000, -1), Q=st.floats(1, 2000), tau=st.floats(1e-2, 1e3))
def test_cost_zero_identity(W, Q, tau):
    eta, P = th.cost_corrected(W * 0.6, W * 0.4, Q, 0.0, 0.0, tau)
    assert eta == pytest.approx(-W / Q, rel=1e-12)
    assert P == pytest.approx(-W / tau, rel=1e-12)


@settings(max_examples=50)
@given(W=st.floats(-2000, -1), Q=st.floats(1, 2000), tau=st.floats(1e-2, 1e3),
       ec=st.floats(0, 100), ee=st.floats(0, 100))
def test_cost_never_helps(W, Q, tau, ec, ee):
    eta, P = th.cost_corrected(W, 0.0, Q, ec, ee, tau)
    assert eta <= -W / Q * (1 + 1e-12)
    assert P <= -W / tau * (1 + 1e-12)


def test_cycle_config_validation():
    with pytest.raises(ValidationError, match="N_C > N_E"):
        th.CycleConfig(*WEAK, 90, 100, 1.0)
    with pytest.raises(ValidationError, match="soliton regime"):
        th.CycleConfig(-0.01, -0.2, 100, 90, 1.0)
    with pytest.raises(ValidationError):
        th.CycleConfig(*WEAK, 100, 90, 1.0, protocol="ADIABATIC_REFERENCE")
    c = th.CycleConfig(*WEAK, 100, 90, 1.0, protocol="tra")
    assert c.protocol is PulseKind.TRA
    assert c.expansion().g_initial == -0.2 and c.expansion().N == 90


def test_cycle_first_law_closure_and_adiabatic_efficiency():
    rep = th.run_cycle(th.CycleConfig(*WEAK, 100, 90, 10.0), "VARIATIONAL")
    total = rep.W_C + rep.W_E + rep.Q_minus + rep.Q_plus
    assert abs(total) < 1e-9 * abs(rep.Q_minus)
    assert rep.is_engine and "not-an-engine" not in rep.flags
    assert rep.efficiency == pytest.approx(rep.adiabatic_efficiency, abs=1e-6)
    assert rep.adiabatic_efficiency == pytest.approx(
        th.adiabatic_efficiency(*WEAK, 100, 90, "VARIATIONAL"), rel=1e-6)
    assert rep.tau == 20.0
    assert "eta_AD" in rep.summary()


def test_cost_below_plain_metrics_for_sta_cycle():
    rep = th.run_cycle(th.CycleConfig(*STRONG, 100, 90, 0.3), "VARIATIONAL")
    assert rep.efficiency_cost <= rep.efficiency
    assert rep.power_cost <= rep.power
    tra = th.run_cycle(th.CycleConfig(*STRONG, 100, 90, 0.3, protocol="TRA"), "VARIATIONAL")
    assert tra.efficiency_cost == tra.efficiency


def test_signed_shortcut_energy_is_flagged():
    s = th.SolverSettings(shortcut_energy="signed")
    rep = th.run_cycle(th.CycleConfig(*WEAK, 100, 90, 0.5), "VARIATIONAL", s)
    assert rep.compression.shortcut_energy + rep.expansion.shortcut_energy < 0
    assert "negative-shortcut-energy" in rep.flags
    assert rep.qsl is None


def test_bures_angle_conventions():
    cfg = StrokeConfig(*WEAK, 100, 0.3)
    target = th.run_stroke(cfg, "TRA", "VARIATIONAL")
    dyn = th.run_stroke(cfg, "TRA", "VARIATIONAL", th.SolverSettings(bures="dynamical"))
    assert target.bures_angle == pytest.approx(0.40, abs=0.01)
    assert dyn.bures_angle != target.bures_angle


def test_sweep_order_errors_and_csv():
    tpl = th.CycleConfig(*WEAK, 100, 90, 1.0)
    Ts = [0.05, 0.2, 1.0]
    pts = th.sweep(tpl, Ts, "VARIATIONAL")
    assert [p.T_f for p in pts] == Ts
    assert pts[0].report is None and "SolitonBreakdownError" in pts[0].error
    assert all(p.report is not None for p in pts[1:])
    par = th.sweep(tpl, Ts, "VARIATIONAL", workers=2)
    assert th.sweep_to_csv(par, tpl) == th.sweep_to_csv(pts, tpl)
    lines = th.sweep_to_csv(pts, tpl).strip().split("\n")
    assert lines[0].split(",")[:18] == list(th.SWEEP_COLUMNS)
    assert len(lines) == 4
    assert all(len(ln.split(",")) == 19 for ln in lines)
    with pytest.raises(ValidationError):
        th.sweep(tpl, [1.0, 0.5])
    with pytest.raises(ValidationError):
        th.sweep(tpl, [])


def test_forty_point_sweep_completes():
    tpl = th.CycleConfig(*STRONG, 100, 90, 1.0)
    pts = th.sweep(tpl, np.geomspace(0.05, 5, 40), "VARIATIONAL")
    assert len(pts) == 40
    assert all(p.report is not None for p in pts)
    rows = th.sweep_to_csv(pts, tpl).strip().split("\n")[1:]
    assert len(rows) == 40
    eta = np.array([p.report.efficiency for p in pts])
    assert eta[-1] == pytest.approx(pts[-1].report.adiabatic_efficiency, abs=1e-6)


def test_strong_sta_power_peaks_at_short_strokes():
    tpl = th.CycleConfig(*STRONG, 100, 90, 1.0)
    pts = th.sweep(tpl, [0.035, 0.045, 0.06], "GPE")
    P = [p.report.power for p in pts]
    assert P[1] > P[0] and P[1] > P[2]
