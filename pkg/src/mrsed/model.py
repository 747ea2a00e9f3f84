"""Continuous sedimentation-consolidation model.

Flux density, effective solid stress, the degenerate diffusion coefficient
and its primitive, and the initial-boundary value problem description
(batch column = Problem A, continuous operation = Problem B).

Space runs upward from the column bottom ``x = 0`` to the top ``x = H``;
solids settle downward, so the batch flux density is non-positive.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

DEFAULT_DELTA_RHO_G = 1500.0 * 9.81
TABLE_NODES = 4096


class ProblemKind(str, Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class FluxModel:
    """Richardson-Zaki batch flux ``f(u) = -v_inf * u * (1 - u)**exponent_c``."""

    v_inf: float = 6.05e-4
    exponent_c: float = 12.59
    u_max: float = 1.0

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        inside = (u >= 0.0) & (u <= self.u_max)
        uc = np.clip(u, 0.0, self.u_max)
        val = -self.v_inf * uc * np.power(1.0 - uc, self.exponent_c)
        return np.where(inside, val, 0.0)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        inside = (u >= 0.0) & (u <= self.u_max)
        uc = np.clip(u, 0.0, self.u_max)
        c = self.exponent_c
        val = -self.v_inf * np.power(1.0 - uc, c - 1.0) * ((1.0 - uc) - c * uc)
        return np.where(inside, val, 0.0)


@dataclass(frozen=True)
class CustomFlux:
    """User-supplied flux density with its derivative, zero outside ``[0, u_max]``."""

    func: Callable[[np.ndarray], np.ndarray]
    dfunc: Callable[[np.ndarray], np.ndarray]
    u_max: float = 1.0

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        inside = (u >= 0.0) & (u <= self.u_max)
        return np.where(inside, self.func(np.clip(u, 0.0, self.u_max)), 0.0)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        inside = (u >= 0.0) & (u <= self.u_max)
        return np.where(inside, self.dfunc(np.clip(u, 0.0, self.u_max)), 0.0)


@dataclass(frozen=True)
class CompressionModel:
    """Effective solid stress ``sigma0 * ((u/u_c)**exponent_k - 1)`` above ``u_c``."""

    sigma0: float = 100.0
    u_c: float = 0.23
    exponent_k: float = 8.0
    delta_rho_g: float = DEFAULT_DELTA_RHO_G

    def sigma_e_prime(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(u > self.u_c, self._sigma_branch(u), 0.0)

    def _sigma_branch(self, u):
        k = self.exponent_k
        return self.sigma0 * k / self.u_c * np.power(np.maximum(u, 0.0) / self.u_c, k - 1.0)


def eval_flux(flux, u):
    return flux(u)


def eval_flux_derivative(flux, u):
    return flux.derivative(u)


def eval_sigma_e_prime(compression: CompressionModel, u):
    return compression.sigma_e_prime(u)


def _diffusion_branch(flux, compression: CompressionModel, u):
    # a(u) = |f(u)| sigma_e'(u) / (drho g u) without the u <= u_c cutoff
    u = np.asarray(u, dtype=float)
    safe = np.where(u > 0.0, u, 1.0)
    val = np.abs(flux(u)) * compression._sigma_branch(u) / (compression.delta_rho_g * safe)
    return np.where(u > 0.0, val, 0.0)


def eval_diffusion(flux, compression: Optional[CompressionModel], u):
    """Diffusion coefficient ``a(u)``; identically zero for an ideal suspension."""
    u = np.asarray(u, dtype=float)
    if compression is None:
        return np.zeros_like(u)
    return np.where(u > compression.u_c, _diffusion_branch(flux, compression, u), 0.0)


class IntegratedDiffusion:
    """Tabulated primitive ``A(u) = int_0^u a(s) ds``.

    Nodes are uniform on ``[u_c, u_max]``; node values come from 8-point
    Gauss-Legendre panels, and evaluation is cubic Hermite using the exact
    one-sided derivatives ``a(u)``, with Fritsch-Carlson limiting so the
    interpolant stays monotone.
    """

    def __init__(self, flux, compression: Optional[CompressionModel], nodes: int = TABLE_NODES):
        self.compression = compression
        self.u_max = float(flux.u_max)
        if compression is None or compression.u_c >= self.u_max:
            self.u_c = self.u_max
            self.table_u = np.array([self.u_max])
            self.table_A = np.zeros(1)
            return
        self.u_c = float(compression.u_c)
        u = np.linspace(self.u_c, self.u_max, nodes)
        du = u[1] - u[0]
        gx, gw = np.polynomial.legendre.leggauss(8)
        mid = 0.5 * (u[:-1] + u[1:])
        pts = mid[:, None] + 0.5 * du * gx[None, :]
        panel = 0.5 * du * (_diffusion_branch(flux, compression, pts) @ gw)
        A = np.concatenate([[0.0], np.cumsum(panel)])
        # one-sided derivatives: at u_c the right limit of the positive branch
        dl = _diffusion_branch(flux, compression, u[:-1])
        dr = _diffusion_branch(flux, compression, u[1:])
        secant = panel / du
        lim = 3.0 * secant
        self.table_u = u
        self.table_A = A
        self._du = du
        self._span = np.diff(A)
        # derivatives scaled by the cell secant (0 where the cell is flat)
        with np.errstate(divide="ignore", invalid="ignore"):
            self._al = np.where(secant > 0, np.minimum(dl, lim) / secant, 0.0)
            self._ar = np.where(secant > 0, np.minimum(dr, lim) / secant, 0.0)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.table_u.size == 1:
            return np.zeros_like(u)
        uc = np.clip(u, self.u_c, self.u_max)
        s = (uc - self.u_c) / self._du
        i = np.minimum(s.astype(np.int64), self.table_u.size - 2)
        t = s - i
        A0 = self.table_A[i]
        span = self._span[i]
        # normalized monotone shape on [0, 1]; A0 + span*H keeps rounding monotone
        shape = t * t * (3.0 - 2.0 * t) + t * (1.0 - t) * ((1.0 - t) * self._al[i] - t * self._ar[i])
        val = A0 + span * np.clip(shape, 0.0, 1.0)
        return np.where(u <= self.u_c, 0.0, val)


def eval_integrated_diffusion(table: IntegratedDiffusion, u):
    return table(u)


@dataclass(frozen=True)
class PiecewiseConstant:
    """Right-continuous step function of time: ``values[i]`` on ``[times[i], times[i+1])``."""

    times: tuple
    values: tuple

    def __post_init__(self):
        if len(self.times) != len(self.values) or not self.times:
            raise ValueError("times and values must be non-empty and of equal length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")

    @classmethod
    def constant(cls, value: float) -> "PiecewiseConstant":
        return cls((0.0,), (float(value),))

    def __call__(self, t: float) -> float:
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self.values[max(i, 0)])

    def extremes(self) -> tuple:
        return min(self.values), max(self.values)


@dataclass(frozen=True)
class ConstantProfile:
    value: float

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value)


@dataclass
class ProblemSpec:
    height: float
    t_end: float
    flux: object = field(default_factory=FluxModel)
    compression: Optional[CompressionModel] = None
    q: Callable[[float], float] = field(default_factory=lambda: PiecewiseConstant.constant(0.0))
    psi: Optional[Callable[[float], float]] = None
    u0: Callable[[np.ndarray], np.ndarray] = field(default_factory=lambda: ConstantProfile(0.05))
    kind: ProblemKind = ProblemKind.A

    def __post_init__(self):
        self.kind = ProblemKind(self.kind)
        if self.height <= 0:
            raise ValueError("height must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.kind is ProblemKind.A and self.psi is not None:
            raise ValueError("Problem A takes no feed flux psi")
        if self.kind is ProblemKind.B and self.psi is None:
            raise ValueError("Problem B requires a feed flux psi")
        ts = self.time_samples()
        if max(self.q(t) for t in ts) > 0.0:
            raise ValueError("bulk velocity q(t) must be <= 0")
        self._A = IntegratedDiffusion(self.flux, self.compression)

    def time_samples(self, n: int = 257) -> np.ndarray:
        ts = np.linspace(0.0, self.t_end, n)
        for fn in (self.q, self.psi):
            if isinstance(fn, PiecewiseConstant):
                ts = np.concatenate([ts, [t for t in fn.times if 0.0 <= t <= self.t_end]])
        return ts

    @property
    def u_max(self) -> float:
        return float(self.flux.u_max)

    def f(self, u):
        return self.flux(u)

    def df(self, u):
        return self.flux.derivative(u)

    def a(self, u):
        return eval_diffusion(self.flux, self.compression, u)

    def A(self, u):
        return self._A(u)

    def initial(self, x: Sequence[float]) -> np.ndarray:
        u = np.asarray(self.u0(np.asarray(x, dtype=float)), dtype=float)
        if np.any(u < 0.0) or np.any(u > self.u_max):
            raise ValueError("initial concentration outside [0, u_max]")
        return u
