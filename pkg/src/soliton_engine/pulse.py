"""Interaction-strength ramps for compressing or expanding the soliton.

Three ramps are available for a stroke g_initial -> g_final of duration T_f:

* the smooth reference ``g_c(t)`` (cosine ramp with vanishing first and
  second derivatives at both ends), which fixes the boundary widths;
* the shortcut (STA): a quintic width trajectory ``a_p(t)`` matching the
  boundary widths with zero velocity and acceleration at both ends, inverted
  through the width equation of motion to give ``g(t)``;
* the time-rescaled adiabatic ramp (TRA): ``g(t)`` for which ``a_p(t)`` is
  the instantaneous equilibrium width, i.e. the shortcut without its
  acceleration term.
"""
from __future__ import annotations

import enum
import io
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import variational as var
from .errors import DomainError, NumericalError, SolitonBreakdownError, ValidationError

DEFAULT_SAMPLES = 1001


class PulseKind(str, enum.Enum):
    STA = "STA"
    TRA = "TRA"
    ADIABATIC_REFERENCE = "ADIABATIC_REFERENCE"


@dataclass(frozen=True)
class StrokeConfig:
    """One work stroke.

    ``endpoints`` selects how the boundary widths are obtained: ``"exact"``
    uses the root of the equilibrium quartic (so the designed ramp starts at
    g_initial and ends at g_final exactly), ``"weak_trap"`` uses -2/(N g).
    """

    g_initial: float
    g_final: float
    N: float
    T_f: float
    samples: int = DEFAULT_SAMPLES
    endpoints: str = "exact"

    def __post_init__(self):
        if not (self.g_initial < 0 and self.g_final < 0):
            raise ValidationError(
                f"interactions must be negative, got g_initial={self.g_initial}, g_final={self.g_final}"
            )
        if self.g_initial == self.g_final:
            raise ValidationError("g_initial and g_final must differ")
        if not self.N > 0:
            raise ValidationError(f"N must be positive, got {self.N}")
        if not self.T_f > 0:
            raise ValidationError(f"T_f must be positive, got {self.T_f}")
        if int(self.samples) != self.samples or self.samples < 2:
            raise ValidationError(f"samples must be an integer >= 2, got {self.samples}")
        if self.endpoints not in ("exact", "weak_trap"):
            raise ValidationError(f"endpoints must be 'exact' or 'weak_trap', got {self.endpoints!r}")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T_f, int(self.samples))

    def boundary_widths(self) -> tuple[float, float]:
        if self.endpoints == "weak_trap":
            width = var.weak_trap_width
        else:
            width = var.equilibrium_width
        return width(self.g_initial, self.N), width(self.g_final, self.N)

    def reversed(self) -> "StrokeConfig":
        return replace(self, g_initial=self.g_final, g_final=self.g_initial)


def reference_ramp(cfg: StrokeConfig, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > cfg.T_f):
        raise DomainError(f"t must lie in [0, {cfg.T_f}]")
    gi, gf = cfg.g_initial, cfg.g_final
    phase = math.pi * t / cfg.T_f
    g = (gi + gf) / 2 + 9 * (gi - gf) * np.cos(phase) / 16 + (gf - gi) * np.cos(3 * phase) / 16
    return g if g.ndim else float(g)


@dataclass(frozen=True)
class PolynomialTrajectory:
    """a(t) = sum_i coefficients[i] t^i on [0, T_f]."""

    coefficients: np.ndarray
    T_f: float

    def __call__(self, t, derivative: int = 0):
        poly = np.polynomial.Polynomial(self.coefficients)
        if derivative:
            poly = poly.deriv(derivative)
        return poly(np.asarray(t, dtype=float))


def design_quintic(cfg: StrokeConfig) -> PolynomialTrajectory:
    """Quintic width trajectory with the six boundary conditions imposed."""
    a_i, a_f = cfg.boundary_widths()
    T = cfg.T_f
    rows = []
    for t in (0.0, T):
        rows.append([t**i for i in range(6)])
        rows.append([i * t ** (i - 1) if i >= 1 else 0.0 for i in range(6)])
        rows.append([i * (i - 1) * t ** (i - 2) if i >= 2 else 0.0 for i in range(6)])
    rhs = [a_i, 0.0, 0.0, a_f, 0.0, 0.0]
    try:
        coeffs = np.linalg.solve(np.array(rows), np.array(rhs))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"boundary system is singular for T_f={T}") from exc
    return PolynomialTrajectory(coefficients=coeffs, T_f=T)


@dataclass
class PulseProfile:
    kind: PulseKind
    times: np.ndarray
    g_values: np.ndarray
    a_values: np.ndarray
    config: StrokeConfig
    # Exact g(t) when the pulse was designed here; loaded pulses interpolate.
    g_func: Optional[Callable] = field(default=None, repr=False, compare=False)
    interpolation: str = "cubic"

    def __post_init__(self):
        self.kind = PulseKind(self.kind)
        self.times = np.asarray(self.times, dtype=float)
        self.g_values = np.asarray(self.g_values, dtype=float)
        self.a_values = np.asarray(self.a_values, dtype=float)
        self._spline = None

    @property
    def T_f(self) -> float:
        return float(self.times[-1])

    def g_at(self, t):
        if self.g_func is not None:
            return self.g_func(t)
        if self.interpolation == "linear":
            return np.interp(t, self.times, self.g_values)
        if self._spline is None:
            self._spline = CubicSpline(self.times, self.g_values)
        val = self._spline(t)
        return float(val) if np.ndim(val) == 0 else val

    def min_abs_gN(self) -> float:
        return float(np.min(-self.g_values * self.config.N))

    def check_soliton_regime(self, threshold: float = 1.0):
        gN = self.g_values * self.config.N
        bad = gN >= -threshold
        if np.any(bad):
            j = int(np.argmax(bad))
            raise SolitonBreakdownError(
                f"{self.kind.value} pulse leaves the soliton regime: g*N={gN[j]:.6g} >= -{threshold} "
                f"at t={self.times[j]:.6g} (T_f={self.config.T_f})"
            )

    # -- delimited text ---------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        cfg = asdict(self.config)
        head = [f"kind={self.kind.value}"] + [f"{k}={_fmt(v)}" for k, v in cfg.items()]
        buf.write("# " + ",".join(head) + "\n")
        buf.write("t,g,a\n")
        for t, g, a in zip(self.times, self.g_values, self.a_values):
            buf.write(f"{_fmt(t)},{_fmt(g)},{_fmt(a)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PulseProfile":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise ValidationError("pulse file must start with a '# kind=...' header")
        meta = dict(item.split("=", 1) for item in lines[0][1:].strip().split(","))
        kind = meta.pop("kind")
        cfg = StrokeConfig(
            g_initial=float(meta["g_initial"]),
            g_final=float(meta["g_final"]),
            N=float(meta["N"]),
            T_f=float(meta["T_f"]),
            samples=int(meta["samples"]),
            endpoints=meta.get("endpoints", "exact"),
        )
        data = np.array([[float(v) for v in row.split(",")] for row in lines[2:] if row.strip()])
        return cls(kind=kind, times=data[:, 0], g_values=data[:, 1], a_values=data[:, 2], config=cfg)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.17g" % v


def invert_to_pulse(traj: PolynomialTrajectory, cfg: StrokeConfig) -> PulseProfile:
    """Shortcut ramp g(t) = [pi^2 a^2 (a'' + a) - 4/a] / (2N) along a_p(t)."""
    N = cfg.N

    def g_func(t):
        a = traj(t)
        if np.any(a <= 0):
            raise SolitonBreakdownError("quintic width trajectory is not positive")
        acc = traj(t, 2)
        g = (var.PI2 * a * a * (acc + a) - 4.0 / a) / (2.0 * N)
        return float(g) if np.ndim(g) == 0 else g

    times = cfg.times
    a = traj(times)
    if np.any(a <= 0):
        raise SolitonBreakdownError("quintic width trajectory is not positive")
    pulse = PulseProfile(PulseKind.STA, times, g_func(times), a, cfg, g_func=g_func)
    pulse.check_soliton_regime()
    return pulse


def sta_pulse(cfg: StrokeConfig) -> PulseProfile:
    return invert_to_pulse(design_quintic(cfg), cfg)


def tra_pulse(cfg: StrokeConfig, shape: str = "adiabatic") -> PulseProfile:
    """Time-rescaled adiabatic ramp.

    ``shape="adiabatic"`` (default) follows the equilibrium relation along the
    same quintic width trajectory as the shortcut, so the two ramps differ
    only by the acceleration term and coincide as T_f grows.
    ``shape="reference"`` uses the cosine reference ``g_c(t)`` instead.
    """
    times = cfg.times
    N = cfg.N
    if shape == "adiabatic":
        traj = design_quintic(cfg)

        def g_func(t):
            g = var.adiabatic_interaction(traj(t), N)
            return float(g) if np.ndim(g) == 0 else g

        a = traj(times)
    elif shape == "reference":
        def g_func(t):
            return reference_ramp(cfg, np.clip(t, 0.0, cfg.T_f))

        a = np.array([var.equilibrium_width(g, N) for g in g_func(times)])
    else:
        raise ValidationError(f"unknown TRA shape {shape!r}")
    pulse = PulseProfile(PulseKind.TRA, times, g_func(times), a, cfg, g_func=g_func)
    pulse.check_soliton_regime()
    return pulse


def reference_pulse(cfg: StrokeConfig) -> PulseProfile:
    times = cfg.times
    g = reference_ramp(cfg, times)
    a = np.array([var.equilibrium_width(gv, cfg.N) for gv in g])
    return PulseProfile(PulseKind.ADIABATIC_REFERENCE, times, g, a, cfg,
                        g_func=lambda t: reference_ramp(cfg, np.clip(t, 0.0, cfg.T_f)))


def design(cfg: StrokeConfig, kind) -> PulseProfile:
    kind = PulseKind(kind.upper() if isinstance(kind, str) else kind)
    if kind is PulseKind.STA:
        return sta_pulse(cfg)
    if kind is PulseKind.TRA:
        return tra_pulse(cfg)
    return reference_pulse(cfg)
