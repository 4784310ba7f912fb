"""Spectral split-step solver for the 1D Gross-Pitaevskii equation

    i psi_t = [-1/2 d_xx + x^2/2 + g(t) |psi|^2] psi

on a periodic box, with N = int |psi|^2 dx.
"""
from __future__ import annotations

import enum
import io
import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.fft as sfft

from . import variational as var
from .errors import (BoxTooSmallError, ConvergenceError, GridMismatchError, NormDriftError,
                     ValidationError)
from .variational import EnergyBreakdown

DEFAULT_L = 16.0
DEFAULT_N_POINTS = 1024
DEFAULT_DT = 1e-4
EDGE_TOL = 1e-8


@dataclass(frozen=True)
class Grid:
    length: float = DEFAULT_L
    points: int = DEFAULT_N_POINTS

    def __post_init__(self):
        if not self.length > 0:
            raise ValidationError(f"box length must be positive, got {self.length}")
        n = int(self.points)
        if n != self.points or n < 2 or n & (n - 1):
            raise ValidationError(f"grid points must be a power of two, got {self.points}")

    @property
    def dx(self) -> float:
        return self.length / self.points

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.length + self.dx * np.arange(self.points)

    @property
    def k(self) -> np.ndarray:
        return 2 * np.pi * sfft.fftfreq(self.points, d=self.dx)

    def integrate(self, f):
        # Trapezoidal rule on a periodic grid.
        total = np.sum(f) * self.dx
        return complex(total) if np.iscomplexobj(total) else float(total)


@dataclass
class WaveFunction:
    grid: Grid
    psi: np.ndarray
    N: float

    @property
    def norm(self) -> float:
        return self.grid.integrate(np.abs(self.psi) ** 2)

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.psi * math.sqrt(self.N / self.norm), self.N)

    def edge_ratio(self) -> float:
        amp = np.abs(self.psi)
        return float(max(amp[0], amp[-1]) / amp.max())

    def width_rms(self) -> float:
        rho = np.abs(self.psi) ** 2
        return math.sqrt(self.grid.integrate(self.grid.x**2 * rho) / self.grid.integrate(rho))

    def to_bytes(self) -> bytes:
        """n (int64), dx (float64), interleaved re/im float64; little-endian."""
        data = np.empty(2 * self.grid.points, dtype="<f8")
        data[0::2] = self.psi.real
        data[1::2] = self.psi.imag
        return struct.pack("<qd", self.grid.points, self.grid.dx) + data.tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes, N: Optional[float] = None) -> "WaveFunction":
        n, dx = struct.unpack("<qd", blob[:16])
        data = np.frombuffer(blob[16:], dtype="<f8")
        if data.size != 2 * n:
            raise ValidationError(f"snapshot holds {data.size} floats, expected {2 * n}")
        grid = Grid(length=n * dx, points=n)
        psi = data[0::2] + 1j * data[1::2]
        wf = cls(grid, psi, 0.0)
        wf.N = wf.norm if N is None else N
        return wf


def sech_state(grid: Grid, width: float, N: float, velocity: float = 0.0) -> WaveFunction:
    """Sampled sech ansatz; a width velocity adds the matching quadratic chirp."""
    x = grid.x
    amp = math.sqrt(N / (2.0 * width)) / np.cosh(x / width)
    phase = velocity / (2.0 * width) * x**2
    return WaveFunction(grid, amp * np.exp(1j * phase), N)


def energy(psi: WaveFunction, g: float) -> EnergyBreakdown:
    grid = psi.grid
    pk = sfft.fft(psi.psi)
    kinetic = 0.5 * grid.dx / grid.points * float(np.sum(grid.k**2 * np.abs(pk) ** 2))
    rho = np.abs(psi.psi) ** 2
    return EnergyBreakdown(
        kinetic=kinetic,
        trap=0.5 * grid.integrate(grid.x**2 * rho),
        interaction=0.5 * g * grid.integrate(rho**2),
    )


def fidelity(psi: WaveFunction, target: WaveFunction) -> float:
    if psi.grid != target.grid:
        raise GridMismatchError(f"grids differ: {psi.grid} vs {target.grid}")
    overlap = psi.grid.integrate(np.conj(psi.psi) * target.psi)
    return min(1.0, abs(overlap) ** 2 / (psi.norm * target.norm))


def bures_angle(psi: WaveFunction, target: WaveFunction) -> float:
    return math.acos(math.sqrt(fidelity(psi, target)))


# -- ground state -------------------------------------------------------------

@dataclass
class GroundStateResult:
    psi: WaveFunction
    chemical_potential: float
    energy: EnergyBreakdown
    iterations: int
    residual: float
    g: float


@lru_cache(maxsize=4)
def _kinetic_matrix(grid: Grid) -> np.ndarray:
    # Spectral -1/2 d_xx as a dense real matrix; used only by the Newton polish.
    eye = np.eye(grid.points)
    return np.real(sfft.ifft(0.5 * grid.k[:, None] ** 2 * sfft.fft(eye, axis=0), axis=0))


def _apply_h(psi, grid: Grid, g: float):
    kin = sfft.ifft(0.5 * grid.k**2 * sfft.fft(psi))
    if np.isrealobj(psi):
        kin = kin.real
    return kin + (0.5 * grid.x**2 + g * np.abs(psi) ** 2) * psi


def _mu_and_residual(psi, grid: Grid, g: float):
    hpsi = _apply_h(psi, grid, g)
    nrm = grid.integrate(np.abs(psi) ** 2)
    mu = float(np.real(grid.integrate(np.conj(psi) * hpsi))) / nrm
    res = math.sqrt(grid.integrate(np.abs(hpsi - mu * psi) ** 2) / nrm)
    return mu, res


def prepare_ground_state(g: float, N: float, grid: Grid = Grid(), *, dtau: float = 1e-3,
                         max_imag_steps: int = 20000, imag_tol: float = 1e-11,
                         tol: float = 1e-8, max_newton: int = 30) -> GroundStateResult:
    """Ground state at fixed g and N.

    Imaginary-time split-step relaxation from the sech ansatz at the
    equilibrium width, renormalizing to N after each step, followed by Newton
    iterations on the stationary equation (with the norm as constraint) to
    remove the O(dtau^2) splitting bias and reach ``tol`` in the residual
    ||H psi - mu psi|| / ||psi||.
    """
    if not N > 0:
        raise ValidationError(f"N must be positive, got {N}")
    x, k, dx = grid.x, grid.k, grid.dx
    a0 = var.equilibrium_width(g, N)
    psi = sech_state(grid, a0, N).psi.real.copy()

    half_kin = np.exp(-0.5 * dtau * 0.5 * k**2)
    trap = 0.5 * x**2
    e_old = np.inf
    steps = 0
    for steps in range(1, max_imag_steps + 1):
        psi = sfft.ifft(half_kin * sfft.fft(psi)).real
        psi *= np.exp(-dtau * (trap + g * psi**2))
        psi = sfft.ifft(half_kin * sfft.fft(psi)).real
        psi *= math.sqrt(N / (np.sum(psi**2) * dx))
        if steps % 50 == 0:
            e = energy(WaveFunction(grid, psi, N), g).total
            if abs(e - e_old) <= imag_tol * abs(e):
                break
            e_old = e

    T = _kinetic_matrix(grid)
    n = grid.points
    jac = np.zeros((n + 1, n + 1))
    mu, res = _mu_and_residual(psi, grid, g)
    newton = 0
    while res > 0.1 * tol and newton < max_newton:
        newton += 1
        f_psi = _apply_h(psi, grid, g) - mu * psi
        f_norm = 0.5 * (np.sum(psi**2) * dx - N)
        jac[:n, :n] = T
        jac[np.arange(n), np.arange(n)] += trap + 3 * g * psi**2 - mu
        jac[:n, n] = -psi
        jac[n, :n] = psi * dx
        jac[n, n] = 0.0
        step = np.linalg.solve(jac, -np.concatenate([f_psi, [f_norm]]))
        psi = psi + step[:n]
        mu = mu + step[n]
        new_mu, new_res = _mu_and_residual(psi, grid, g)
        mu = new_mu
        if new_res >= res and new_res < tol:
            res = new_res
            break
        res = new_res
    if psi[np.argmax(np.abs(psi))] < 0:
        psi = -psi
    if res > tol:
        raise ConvergenceError(
            f"ground state did not converge for g={g}, N={N}: residual {res:.3e} > {tol:.1e}"
        )
    wf = WaveFunction(grid, psi.astype(complex), N)
    if wf.edge_ratio() > EDGE_TOL:
        raise BoxTooSmallError(
            f"ground state reaches the box edge (|psi_edge|/max = {wf.edge_ratio():.2e}); enlarge L={grid.length}"
        )
    return GroundStateResult(psi=wf, chemical_potential=mu, energy=energy(wf, g),
                             iterations=steps + newton, residual=res, g=g)


@lru_cache(maxsize=256)
def _cached_ground_state(g: float, N: float, grid: Grid) -> GroundStateResult:
    return prepare_ground_state(g, N, grid)


def ground_state(g: float, N: float, grid: Grid = Grid()) -> GroundStateResult:
    """Memoized :func:`prepare_ground_state`; callers must not mutate the result."""
    return _cached_ground_state(float(g), float(N), grid)


class EigenMode(str, enum.Enum):
    VARIATIONAL = "VARIATIONAL"
    NUMERIC = "NUMERIC"


def instantaneous_eigenenergy(g: float, N: float, mode=EigenMode.VARIATIONAL,
                              grid: Grid = Grid()) -> float:
    mode = EigenMode(mode)
    if mode is EigenMode.VARIATIONAL:
        a = var.equilibrium_width(g, N)
        return var.ansatz_energy(var.SolitonParams(a, N, g)).total
    return ground_state(g, N, grid).energy.total


# -- real-time evolution --------------------------------------------------------

SERIES_COLUMNS = ("t", "norm", "energy_total", "energy_kinetic", "energy_trap",
                  "energy_interaction", "width_rms", "work")


@dataclass
class ObservableSeries:
    t: list = field(default_factory=list)
    norm: list = field(default_factory=list)
    energy_total: list = field(default_factory=list)
    energy_kinetic: list = field(default_factory=list)
    energy_trap: list = field(default_factory=list)
    energy_interaction: list = field(default_factory=list)
    width_rms: list = field(default_factory=list)
    work: list = field(default_factory=list)

    def append(self, t, norm, e: EnergyBreakdown, width, work):
        self.t.append(t)
        self.norm.append(norm)
        self.energy_total.append(e.total)
        self.energy_kinetic.append(e.kinetic)
        self.energy_trap.append(e.trap)
        self.energy_interaction.append(e.interaction)
        self.width_rms.append(width)
        self.work.append(work)

    def as_array(self) -> np.ndarray:
        return np.column_stack([np.asarray(getattr(self, c), dtype=float) for c in SERIES_COLUMNS])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(SERIES_COLUMNS) + "\n")
        for row in self.as_array():
            buf.write(",".join("%.17g" % v for v in row) + "\n")
        return buf.getvalue()


@dataclass
class EvolutionResult:
    psi: WaveFunction
    series: ObservableSeries
    snapshots: list
    steps: int
    dt: float


def evolve(psi0: WaveFunction, pulse, dt: float = DEFAULT_DT, *, record_every: Optional[int] = None,
           keep_snapshots: bool = False, min_steps: int = 1000,
           norm_tol: float = 1e-6) -> EvolutionResult:
    """Strang-split evolution of ``psi0`` under ``pulse`` over [0, T_f].

    ``pulse`` needs ``T_f``, ``g_at(t)`` and ``check_soliton_regime()``. The
    step is reduced so that an integer number of at least ``min_steps`` steps
    spans the pulse. Observables are recorded every ``record_every`` steps
    (default: about 1000 records) and at the end; work is measured against
    the energy at t=0 evaluated with g(0).
    """
    pulse.check_soliton_regime()
    grid = psi0.grid
    T_f = pulse.T_f
    n_steps = max(math.ceil(T_f / dt - 1e-9), min_steps)
    h = T_f / n_steps
    if record_every is None:
        record_every = max(1, n_steps // 1000)

    k2 = grid.k**2
    half_kin = np.exp(-0.25j * h * k2)
    full_kin = half_kin * half_kin
    trap = 0.5 * grid.x**2
    N = psi0.N

    series = ObservableSeries()
    snaps = []
    g0 = pulse.g_at(0.0)
    e0 = energy(psi0, g0)
    series.append(0.0, psi0.norm, e0, psi0.width_rms(), 0.0)
    if keep_snapshots:
        snaps.append((0.0, psi0.psi.copy()))

    # Midpoint couplings for all steps in one vectorized call.
    g_mid = np.asarray(pulse.g_at((np.arange(n_steps) + 0.5) * h), dtype=float)

    psi_k = sfft.fft(psi0.psi) * half_kin
    psi = None
    for step in range(n_steps):
        psi = sfft.ifft(psi_k)
        psi *= np.exp(-1j * h * (trap + g_mid[step] * (psi.real**2 + psi.imag**2)))
        psi_k = sfft.fft(psi)
        done = step + 1
        if done % record_every == 0 or done == n_steps:
            psi_k *= half_kin
            psi = sfft.ifft(psi_k)
            t = done * h
            wf = WaveFunction(grid, psi, N)
            nrm = wf.norm
            if abs(nrm - N) > norm_tol * N:
                raise NormDriftError(f"norm drifted to {nrm:.12g} (target {N}) at t={t:.6g}")
            e = energy(wf, pulse.g_at(t))
            series.append(t, nrm, e, wf.width_rms(), e.total - e0.total)
            if keep_snapshots:
                snaps.append((t, psi.copy()))
            if done < n_steps:
                psi_k *= half_kin
        else:
            psi_k *= full_kin
    return EvolutionResult(psi=WaveFunction(grid, psi, N), series=series, snapshots=snaps,
                           steps=n_steps, dt=h)
