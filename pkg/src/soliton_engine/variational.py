"""Closed-form physics of the sech soliton ansatz in a harmonic trap.

Units are harmonic-oscillator units (hbar = m = omega = 1). The ansatz is

    psi(x) = A sech(x / a),   A = sqrt(N / (2 a)),

for which the mean-field energy (interaction term +g/2 |psi|^4, attractive
for g < 0) evaluates to

    kinetic     = N / (6 a^2)
    trap        = N pi^2 a^2 / 24
    interaction = g N^2 / (6 a)

Allowing a quadratic phase chirp turns the width into a particle of mass
pi^2 N / 12 moving in the potential a^2/2 + U(a), with

    U(a) = 2 g N / (pi^2 a) + 2 / (pi^2 a^2),

so that  a'' = -a + 4 / (pi^2 a^3) + 2 g N / (pi^2 a^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import BlowUpError, DomainError, NoRootError

PI2 = math.pi**2

# Bracket scanned for the equilibrium width.
A_MIN = 1e-4
A_MAX = 10.0


@dataclass(frozen=True)
class SolitonParams:
    width: float
    particle_number: float
    interaction: float

    def __post_init__(self):
        if not self.width > 0:
            raise DomainError(f"width must be positive, got {self.width}")
        if not self.particle_number > 0:
            raise DomainError(f"particle number must be positive, got {self.particle_number}")

    @property
    def amplitude(self) -> float:
        return math.sqrt(self.particle_number / (2.0 * self.width))


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    trap: float
    interaction: float

    @property
    def total(self) -> float:
        return self.kinetic + self.trap + self.interaction

    def as_dict(self) -> dict:
        return {
            "kinetic": self.kinetic,
            "trap": self.trap,
            "interaction": self.interaction,
            "total": self.total,
        }


def _check_width(a):
    if not a > 0:
        raise DomainError(f"width must be positive, got {a}")


def ansatz_energy(p: SolitonParams) -> EnergyBreakdown:
    a, N, g = p.width, p.particle_number, p.interaction
    return EnergyBreakdown(
        kinetic=N / (6.0 * a * a),
        trap=N * PI2 * a * a / 24.0,
        interaction=g * N * N / (6.0 * a),
    )


def breathing_mass(N: float) -> float:
    """Effective mass of the width coordinate, pi^2 N / 12."""
    return PI2 * N / 12.0


def chirped_energy(a: float, velocity: float, g: float, N: float) -> float:
    """Energy of the sech ansatz with the chirp that carries width velocity."""
    return 0.5 * breathing_mass(N) * velocity**2 + ansatz_energy(SolitonParams(a, N, g)).total


def _quartic(a, g, N):
    return a**4 - 2.0 * g * N * a / PI2 - 4.0 / PI2


def equilibrium_width(g: float, N: float, a_max: float = A_MAX) -> float:
    """Positive root of a^4 - 2 g N a / pi^2 = 4 / pi^2.

    For g < 0 the quartic is increasing on a > 0, so the root is unique. The
    root is located by scanning (A_MIN, a_max] for a sign change and then
    refined with Brent's method.
    """
    if not N > 0:
        raise DomainError(f"particle number must be positive, got {N}")
    edges = np.geomspace(A_MIN, a_max, 200)
    vals = _quartic(edges, g, N)
    change = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if change.size == 0:
        raise NoRootError(
            f"no sign change of the equilibrium quartic in ({A_MIN}, {a_max}] "
            f"for g={g}, N={N}"
        )
    i = change[0]
    return brentq(_quartic, edges[i], edges[i + 1], args=(g, N), xtol=1e-15, rtol=1e-14, maxiter=200)


def weak_trap_width(g: float, N: float) -> float:
    if not g < 0:
        raise DomainError(f"weak-trap width needs g < 0, got {g}")
    if not N > 0:
        raise DomainError(f"particle number must be positive, got {N}")
    return -2.0 / (N * g)


def adiabatic_interaction(a, N: float):
    """Interaction strength for which width ``a`` is the equilibrium width.

    Inverse of :func:`equilibrium_width`; works on arrays.
    """
    a = np.asarray(a, dtype=float)
    return (PI2 * a**4 - 4.0) / (2.0 * N * a)


def kepler_potential(a: float, g: float, N: float) -> float:
    _check_width(a)
    return 2.0 * g * N / (PI2 * a) + 2.0 / (PI2 * a * a)


def width_potential(a: float, g: float, N: float) -> float:
    """Kepler potential plus the harmonic a^2/2 term from the trap."""
    return 0.5 * a * a + kepler_potential(a, g, N)


def width_eom_rhs(a, g, N):
    if np.any(np.asarray(a) <= 0):
        raise DomainError(f"width must be positive, got {a}")
    return -a + 4.0 / (PI2 * a**3) + 2.0 * g * N / (PI2 * a**2)


@dataclass(frozen=True)
class WidthTrajectory:
    times: np.ndarray
    width: np.ndarray
    velocity: np.ndarray


def integrate_width_eom(g_of_t, a0: float, v0: float = 0.0, dt: float | None = None,
                        N: float | None = None, times=None) -> WidthTrajectory:
    """Fixed-step RK4 integration of the width equation of motion.

    ``g_of_t`` is either a pulse profile (anything with ``times``, ``g_at``
    and ``config.N``) or a plain callable, in which case ``times`` and ``N``
    must be given. The state is reported on ``times``; between two output
    times the step is shrunk so that an integer number of steps fits, never
    exceeding ``dt`` (default: span / 10^4).
    """
    if hasattr(g_of_t, "g_at"):
        g_fun: Callable = g_of_t.g_at
        times = g_of_t.times if times is None else times
        N = g_of_t.config.N if N is None else N
    else:
        g_fun = g_of_t
        if times is None or N is None:
            raise DomainError("times and N are required when g_of_t is a plain callable")
    _check_width(a0)
    times = np.asarray(times, dtype=float)
    span = times[-1] - times[0]
    if dt is None:
        dt = span / 1e4

    # Step sizes per output interval, then g at every RK4 stage in one call.
    widths = np.diff(times)
    nsub = np.maximum(1, np.ceil(widths / dt - 1e-9).astype(int))
    h_per = np.repeat(widths / nsub, nsub)
    t_start = np.repeat(times[:-1], nsub) + h_per * np.concatenate([np.arange(m) for m in nsub])
    g_stage = np.asarray(g_fun(np.concatenate([t_start, t_start + 0.5 * h_per, t_start + h_per])), dtype=float)
    g_stage = g_stage.reshape(3, -1)
    c_rep = 4.0 / PI2
    c_int = 2.0 * N / PI2

    def acc(a, g):
        if a <= 0:
            raise BlowUpError(f"soliton width collapsed (a={a})")
        return -a + c_rep / (a * a * a) + c_int * g / (a * a)

    a, v = float(a0), float(v0)
    out = np.empty((times.size, 2))
    out[0] = a, v
    step = 0
    for j, m in enumerate(nsub):
        for _ in range(m):
            h = h_per[step]
            g0, gm, g1 = g_stage[0, step], g_stage[1, step], g_stage[2, step]
            ka1, kv1 = v, acc(a, g0)
            ka2, kv2 = v + 0.5 * h * kv1, acc(a + 0.5 * h * ka1, gm)
            ka3, kv3 = v + 0.5 * h * kv2, acc(a + 0.5 * h * ka2, gm)
            ka4, kv4 = v + h * kv3, acc(a + h * ka3, g1)
            a += h / 6.0 * (ka1 + 2 * ka2 + 2 * ka3 + ka4)
            v += h / 6.0 * (kv1 + 2 * kv2 + 2 * kv3 + kv4)
            step += 1
        if a <= 0:
            raise BlowUpError(f"soliton width collapsed (a={a}) at t={times[j + 1]}")
        out[j + 1] = a, v
    return WidthTrajectory(times=times.copy(), width=out[:, 0], velocity=out[:, 1])
