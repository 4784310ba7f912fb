"""Work strokes, the particle-exchange Otto cycle and its figures of merit.

Sign conventions: work done on the soliton is positive, so an engine has
W_C + W_E < 0. The cycle is

    compression  g_i -> g_f at N_C      (work W_C)
    remove particles at g_f, N_C -> N_E  (Q_minus = eps_E(0, N_E) - eps_C(T_f, N_C))
    expansion    g_f -> g_i at N_E      (work W_E)
    add particles at g_i, N_E -> N_C     (Q_plus  = eps_C(0, N_C) - eps_E(T_f, N_E))

with instantaneous, perfect particle exchange, so the cycle time is 2 T_f.
"""
from __future__ import annotations

import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import gpe
from . import variational as var
from .errors import NumericalError, UndefinedBoundError, ValidationError
from .pulse import PulseKind, StrokeConfig, design, sta_pulse, tra_pulse

HBAR = 1.0


class Backend(str, enum.Enum):
    GPE = "GPE"
    VARIATIONAL = "VARIATIONAL"


def _backend(b) -> Backend:
    return Backend(b.upper() if isinstance(b, str) else b)


@dataclass(frozen=True)
class SolverSettings:
    """Numerical knobs shared by every stroke of a run."""

    grid: gpe.Grid = gpe.Grid()
    dt: float = gpe.DEFAULT_DT
    # Instantaneous eigenenergies for the shortcut-energy integrand.
    eigen_mode: str = "VARIATIONAL"
    # "absolute": time average of |eps_STA - eps_TRA|; "signed": plain average.
    shortcut_energy: str = "absolute"
    # Bures angle from the initial ground state to the "target" ground state
    # or to the "dynamical" final state.
    bures: str = "target"


@dataclass
class StrokeRecord:
    config: StrokeConfig
    kind: PulseKind
    backend: Backend
    work: float
    adiabatic_work: float
    irreversible_work: float
    fidelity: float
    initial_energy: float
    final_energy: float
    shortcut_energy: float
    bures_angle: float
    series: Optional[np.ndarray] = field(default=None, repr=False)

    def check(self, tol: float = 1e-6) -> list[str]:
        """Invariant violations, as messages (empty when all hold)."""
        problems = []
        if self.irreversible_work < -tol * abs(self.adiabatic_work):
            problems.append(f"negative irreversible work {self.irreversible_work:.3e}")
        if not 0.0 <= self.fidelity <= 1.0:
            problems.append(f"fidelity {self.fidelity} outside [0, 1]")
        if not 0.0 <= self.bures_angle <= math.pi / 2:
            problems.append(f"Bures angle {self.bures_angle} outside [0, pi/2]")
        return problems


def adiabatic_work(g_i: float, g_f: float, N: float, backend=Backend.GPE,
                   grid: gpe.Grid = gpe.Grid()) -> float:
    mode = "NUMERIC" if _backend(backend) is Backend.GPE else "VARIATIONAL"
    if g_i == g_f:
        return 0.0
    return (gpe.instantaneous_eigenenergy(g_f, N, mode, grid)
            - gpe.instantaneous_eigenenergy(g_i, N, mode, grid))


def adiabatic_efficiency(g_i: float, g_f: float, N_C: float, N_E: float, backend=Backend.GPE,
                         grid: gpe.Grid = gpe.Grid()) -> float:
    """eta of the cycle run infinitely slowly, from ground-state energies alone."""
    mode = "NUMERIC" if _backend(backend) is Backend.GPE else "VARIATIONAL"
    eps = lambda g, n: gpe.instantaneous_eigenenergy(g, n, mode, grid)
    w = adiabatic_work(g_i, g_f, N_C, backend, grid) + adiabatic_work(g_f, g_i, N_E, backend, grid)
    return -w / (eps(g_f, N_E) - eps(g_f, N_C))


def _eigen_energies(g_values, N, settings: SolverSettings) -> np.ndarray:
    mode = gpe.EigenMode(settings.eigen_mode)
    if mode is gpe.EigenMode.VARIATIONAL:
        return np.array([gpe.instantaneous_eigenenergy(g, N) for g in g_values])
    # Numeric eigenenergies on a coarse table, interpolated along the pulse.
    from scipy.interpolate import CubicSpline
    lo, hi = float(np.min(g_values)), float(np.max(g_values))
    table_g = np.linspace(lo, hi, 33)
    table_e = [gpe.ground_state(g, N, settings.grid).energy.total for g in table_g]
    return CubicSpline(table_g, table_e)(g_values)


def shortcut_energy(cfg: StrokeConfig, settings: SolverSettings = SolverSettings()) -> float:
    """Time-averaged eigenenergy gap between the STA and TRA ramps."""
    sta = sta_pulse(cfg)
    tra = tra_pulse(cfg)
    diff = _eigen_energies(sta.g_values, cfg.N, settings) - _eigen_energies(tra.g_values, cfg.N, settings)
    if settings.shortcut_energy == "absolute":
        diff = np.abs(diff)
    elif settings.shortcut_energy != "signed":
        raise ValidationError(f"unknown shortcut-energy convention {settings.shortcut_energy!r}")
    return float(np.trapezoid(diff, cfg.times) / cfg.T_f)


def _stroke_gpe(cfg, pulse, settings: SolverSettings, keep_series: bool):
    grid = settings.grid
    start = gpe.ground_state(cfg.g_initial, cfg.N, grid)
    target = gpe.ground_state(cfg.g_final, cfg.N, grid)
    evo = gpe.evolve(start.psi, pulse, settings.dt)
    e0 = evo.series.energy_total[0]
    e1 = evo.series.energy_total[-1]
    fid = gpe.fidelity(evo.psi, target.psi)
    other = target.psi if settings.bures == "target" else evo.psi
    bures = gpe.bures_angle(start.psi, other)
    w_ad = target.energy.total - start.energy.total
    series = evo.series.as_array() if keep_series else None
    return e0, e1, w_ad, fid, bures, series


def _stroke_variational(cfg, pulse, settings: SolverSettings, keep_series: bool):
    N = cfg.N
    grid = settings.grid
    a_i = var.equilibrium_width(cfg.g_initial, N)
    a_f = var.equilibrium_width(cfg.g_final, N)
    ode_dt = min(settings.dt, cfg.T_f / 1e4)
    traj = var.integrate_width_eom(pulse, a_i, 0.0, dt=ode_dt)
    g_t = pulse.g_at(traj.times)
    eps = np.array([var.chirped_energy(a, v, g, N) for a, v, g in zip(traj.width, traj.velocity, g_t)])
    e_target = var.ansatz_energy(var.SolitonParams(a_f, N, cfg.g_final)).total
    e_start = var.ansatz_energy(var.SolitonParams(a_i, N, cfg.g_initial)).total
    final = gpe.sech_state(grid, traj.width[-1], N, traj.velocity[-1])
    target = gpe.sech_state(grid, a_f, N)
    start = gpe.sech_state(grid, a_i, N)
    fid = gpe.fidelity(final, target)
    bures = gpe.bures_angle(start, target if settings.bures == "target" else final)
    series = None
    if keep_series:
        zeros = np.zeros_like(traj.times)
        kin = N / (6 * traj.width**2) + 0.5 * var.breathing_mass(N) * traj.velocity**2
        trap = N * var.PI2 * traj.width**2 / 24
        inter = g_t * N * N / (6 * traj.width)
        rms = traj.width * math.pi / math.sqrt(12.0)
        series = np.column_stack([traj.times, zeros + N, eps, kin, trap, inter, rms, eps - eps[0]])
    return float(eps[0]), float(eps[-1]), e_target - e_start, fid, bures, series


def run_stroke(cfg: StrokeConfig, kind=PulseKind.STA, backend=Backend.GPE,
               settings: SolverSettings = SolverSettings(), keep_series: bool = False) -> StrokeRecord:
    kind = PulseKind(kind.upper() if isinstance(kind, str) else kind)
    backend = _backend(backend)
    pulse = design(cfg, kind)
    if backend is Backend.GPE:
        e0, e1, w_ad, fid, bures, series = _stroke_gpe(cfg, pulse, settings, keep_series)
    else:
        e0, e1, w_ad, fid, bures, series = _stroke_variational(cfg, pulse, settings, keep_series)
    work = e1 - e0
    try:
        e_sta = shortcut_energy(cfg, settings)
    except NumericalError:
        # The shortcut itself is not realizable at this T_f; only TRA strokes get here.
        e_sta = math.nan
    return StrokeRecord(
        config=cfg, kind=kind, backend=backend,
        work=work, adiabatic_work=w_ad, irreversible_work=work - w_ad,
        fidelity=fid, initial_energy=e0, final_energy=e1,
        shortcut_energy=e_sta, bures_angle=bures,
        series=series,
    )


# -- cycle ----------------------------------------------------------------------

@dataclass(frozen=True)
class CycleConfig:
    g_i: float
    g_f: float
    N_C: float
    N_E: float
    T_f: float
    protocol: PulseKind = PulseKind.STA
    samples: int = 1001
    endpoints: str = "exact"

    def __post_init__(self):
        object.__setattr__(self, "protocol", PulseKind(
            self.protocol.upper() if isinstance(self.protocol, str) else self.protocol))
        if self.protocol is PulseKind.ADIABATIC_REFERENCE:
            raise ValidationError("cycle protocol must be STA or TRA")
        if not self.N_C > self.N_E > 0:
            raise ValidationError(f"need N_C > N_E > 0, got N_C={self.N_C}, N_E={self.N_E}")
        if not (self.g_i < 0 and self.g_f < 0):
            raise ValidationError("interactions must be negative")
        for g in (self.g_i, self.g_f):
            for n in (self.N_C, self.N_E):
                if abs(g) * n <= 1:
                    raise ValidationError(f"|g N| = {abs(g) * n:g} <= 1 leaves the soliton regime")
        if not self.T_f > 0:
            raise ValidationError(f"T_f must be positive, got {self.T_f}")

    def compression(self) -> StrokeConfig:
        return StrokeConfig(self.g_i, self.g_f, self.N_C, self.T_f, self.samples, self.endpoints)

    def expansion(self) -> StrokeConfig:
        return StrokeConfig(self.g_f, self.g_i, self.N_E, self.T_f, self.samples, self.endpoints)


@dataclass(frozen=True)
class QslReport:
    B_C: float
    B_E: float
    E_STA_C: float
    E_STA_E: float
    T_QSL_C: float
    T_QSL_E: float
    eta_QSL: float
    P_QSL: float


@dataclass
class CycleReport:
    config: CycleConfig
    backend: Backend
    W_C: float
    W_E: float
    Q_minus: float
    Q_plus: float
    efficiency: float
    adiabatic_efficiency: float
    power: float
    tau: float
    qsl: Optional[QslReport]
    efficiency_cost: float
    power_cost: float
    compression: StrokeRecord = field(repr=False)
    expansion: StrokeRecord = field(repr=False)
    flags: list = field(default_factory=list)

    @property
    def is_engine(self) -> bool:
        return self.W_C + self.W_E < 0 and self.Q_minus > 0

    def summary(self) -> str:
        c = self.config
        lines = [
            f"cycle  protocol={c.protocol.value}  backend={self.backend.value}",
            f"  g_i={c.g_i:g}  g_f={c.g_f:g}  N_C={c.N_C:g}  N_E={c.N_E:g}  T_f={c.T_f:g}  tau={self.tau:g}",
            f"  W_C={self.W_C:.10g}  W_E={self.W_E:.10g}",
            f"  Q_minus={self.Q_minus:.10g}  Q_plus={self.Q_plus:.10g}",
            f"  eta={self.efficiency:.10g}  eta_AD={self.adiabatic_efficiency:.10g}  P={self.power:.10g}",
            f"  eta_cost={self.efficiency_cost:.10g}  P_cost={self.power_cost:.10g}",
            f"  compression: Wirr={self.compression.irreversible_work:.6g}  F={self.compression.fidelity:.8f}",
            f"  expansion:   Wirr={self.expansion.irreversible_work:.6g}  F={self.expansion.fidelity:.8f}",
        ]
        if self.qsl is not None:
            q = self.qsl
            lines.append(f"  QSL: B_C={q.B_C:.6g} B_E={q.B_E:.6g} E_STA_C={q.E_STA_C:.6g} "
                         f"E_STA_E={q.E_STA_E:.6g} T_QSL_C={q.T_QSL_C:.6g} T_QSL_E={q.T_QSL_E:.6g}")
            lines.append(f"  eta_QSL={q.eta_QSL:.10g}  P_QSL={q.P_QSL:.10g}")
        lines.append(f"  engine={'yes' if self.is_engine else 'no'}  flags={';'.join(self.flags) or '-'}")
        return "\n".join(lines)


def qsl_bounds(rec_C: StrokeRecord, rec_E: StrokeRecord, Q_minus: float, tau: float) -> QslReport:
    """Speed-limit times T = hbar B / E_STA and the efficiency/power bounds."""
    for name, rec in (("compression", rec_C), ("expansion", rec_E)):
        if not rec.shortcut_energy > 0:  # also catches NaN
            raise UndefinedBoundError(
                f"{name} shortcut energy {rec.shortcut_energy:.6g} is not positive; speed-limit time undefined"
            )
    t_c = HBAR * rec_C.bures_angle / rec_C.shortcut_energy
    t_e = HBAR * rec_E.bures_angle / rec_E.shortcut_energy
    w_ad = rec_C.adiabatic_work + rec_E.adiabatic_work
    eta_qsl = -w_ad / (Q_minus + HBAR * (rec_C.bures_angle + rec_E.bures_angle) / tau)
    p_qsl = -w_ad / (t_c + t_e) if t_c + t_e > 0 else math.inf
    return QslReport(B_C=rec_C.bures_angle, B_E=rec_E.bures_angle,
                     E_STA_C=rec_C.shortcut_energy, E_STA_E=rec_E.shortcut_energy,
                     T_QSL_C=t_c, T_QSL_E=t_e, eta_QSL=eta_qsl, P_QSL=p_qsl)


def cost_corrected(W_C: float, W_E: float, Q_minus: float, E_STA_C: float, E_STA_E: float,
                   tau: float) -> tuple[float, float]:
    """Efficiency and power with the shortcut energy counted as an input.

    The pulse energy enlarges the heat input in the efficiency and is
    subtracted from the output in the power.
    """
    extra = E_STA_C + E_STA_E
    eta_cost = -(W_C + W_E) / (Q_minus + extra)
    p_cost = -(W_C + W_E + extra) / tau
    return eta_cost, p_cost


def run_cycle(cfg: CycleConfig, backend=Backend.GPE,
              settings: SolverSettings = SolverSettings()) -> CycleReport:
    backend = _backend(backend)
    comp = run_stroke(cfg.compression(), cfg.protocol, backend, settings)
    expa = run_stroke(cfg.expansion(), cfg.protocol, backend, settings)
    W_C, W_E = comp.work, expa.work
    Q_minus = expa.initial_energy - comp.final_energy
    Q_plus = comp.initial_energy - expa.final_energy
    tau = 2.0 * cfg.T_f
    eta = -(W_C + W_E) / Q_minus
    power = -(W_C + W_E) / tau
    # Adiabatic heat: the compression would end in the g_f ground state.
    q_ad = expa.initial_energy - (comp.initial_energy + comp.adiabatic_work)
    eta_ad = -(comp.adiabatic_work + expa.adiabatic_work) / q_ad

    flags = []
    if not (W_C + W_E < 0 and Q_minus > 0):
        flags.append("not-an-engine")
    for rec in (comp, expa):
        flags.extend(f"{rec.config.g_initial:g}->{rec.config.g_final:g}: {p}" for p in rec.check())
    try:
        qsl = qsl_bounds(comp, expa, Q_minus, tau)
    except UndefinedBoundError as exc:
        qsl = None
        flags.append(f"qsl-undefined: {exc}")
    if comp.shortcut_energy + expa.shortcut_energy < 0:
        flags.append("negative-shortcut-energy")
    # Only a shortcut protocol pays for the shortcut pulse.
    if cfg.protocol is PulseKind.STA:
        eta_cost, p_cost = cost_corrected(W_C, W_E, Q_minus, comp.shortcut_energy,
                                          expa.shortcut_energy, tau)
    else:
        eta_cost, p_cost = eta, power
    return CycleReport(config=cfg, backend=backend, W_C=W_C, W_E=W_E, Q_minus=Q_minus, Q_plus=Q_plus,
                       efficiency=eta, adiabatic_efficiency=eta_ad, power=power, tau=tau, qsl=qsl,
                       efficiency_cost=eta_cost, power_cost=p_cost,
                       compression=comp, expansion=expa, flags=flags)


# -- sweeps ---------------------------------------------------------------------

SWEEP_COLUMNS = ("T_f", "protocol", "regime", "W_C", "W_E", "Q_minus", "Q_plus", "eta", "eta_AD",
                 "P", "eta_QSL", "P_QSL", "eta_cost", "P_cost", "F_C", "F_E", "Wirr_C", "Wirr_E")


@dataclass
class SweepPoint:
    T_f: float
    report: Optional[CycleReport]
    error: Optional[str] = None


def _sweep_one(args) -> SweepPoint:
    template, T_f, backend, settings = args
    try:
        return SweepPoint(T_f, run_cycle(replace(template, T_f=float(T_f)), backend, settings))
    except (NumericalError, ValidationError) as exc:
        return SweepPoint(T_f, None, f"{type(exc).__name__}: {exc}")


def sweep(template: CycleConfig, T_values: Sequence[float], backend=Backend.GPE,
          settings: SolverSettings = SolverSettings(), workers: int = 1) -> list[SweepPoint]:
    """One cycle per T_f; failures are recorded per point and the sweep goes on."""
    T_values = [float(t) for t in T_values]
    if not T_values:
        raise ValidationError("sweep needs at least one T_f")
    if any(t <= 0 for t in T_values) or any(b < a for a, b in zip(T_values, T_values[1:])):
        raise ValidationError("T_f values must be positive and sorted")
    jobs = [(template, t, _backend(backend), settings) for t in T_values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_one, jobs))
    return [_sweep_one(j) for j in jobs]


def regime_name(cfg: CycleConfig) -> str:
    return f"{cfg.g_i:g}->{cfg.g_f:g}"


def _num(v) -> str:
    return "nan" if v is None else "%.17g" % v


def sweep_to_csv(points: Sequence[SweepPoint], template: CycleConfig) -> str:
    buf = io.StringIO()
    buf.write(",".join(SWEEP_COLUMNS) + ",error\n")
    for pt in points:
        r = pt.report
        head = [_num(pt.T_f), template.protocol.value, regime_name(template)]
        if r is None:
            body = ["nan"] * (len(SWEEP_COLUMNS) - 3)
            err = (pt.error or "").replace(",", ";").replace("\n", " ")
        else:
            q = r.qsl
            body = [_num(v) for v in (
                r.W_C, r.W_E, r.Q_minus, r.Q_plus, r.efficiency, r.adiabatic_efficiency, r.power,
                q.eta_QSL if q else None, q.P_QSL if q else None, r.efficiency_cost, r.power_cost,
                r.compression.fidelity, r.expansion.fidelity,
                r.compression.irreversible_work, r.expansion.irreversible_work)]
            err = ";".join(r.flags).replace(",", ";")
        buf.write(",".join(head + body + [err]) + "\n")
    return buf.getvalue()
