"""Second-order conservative point-value scheme.

Node ``j`` sits at ``x_j = j*dx``. Interface ``m`` lies between nodes ``m``
and ``m + 1``; the total flux there is

    Phi_m = q(t) * upwind(u^+_m, u^-_{m+1}) + EO(u^+_m, u^-_{m+1})
            - (A(u_{m+1}) - A(u_m)) / dx

with theta-limited interface values ``u^{+-}``. Boundary nodes own half
cells, so the trapezoid mass ``dx * (u_0/2 + u_1 + ... + u_N/2)`` changes
only through the two boundary fluxes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .model import ProblemKind, ProblemSpec


def minmod3(a, b, c):
    a, b, c = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(c, float))
    pos = (a > 0) & (b > 0) & (c > 0)
    neg = (a < 0) & (b < 0) & (c < 0)
    out = np.where(pos, np.minimum(np.minimum(a, b), c),
                   np.where(neg, np.maximum(np.maximum(a, b), c), 0.0))
    return out[()]


def limited_slope(u_left, u_center, u_right, theta, dx):
    u_left, u_center, u_right = (np.asarray(v, float) for v in (u_left, u_center, u_right))
    return minmod3(theta * (u_center - u_left) / dx,
                   (u_right - u_left) / (2.0 * dx),
                   theta * (u_right - u_center) / dx)


def find_flux_minimizer(flux, lo: float = 0.0, hi: Optional[float] = None, samples: int = 10_000) -> float:
    """Interior minimizer of a valley-shaped flux, by bisection on ``f'``.

    Raises ValueError when ``f'`` has no negative-to-positive sign change.
    """
    hi = float(flux.u_max) if hi is None else hi
    grid = np.linspace(lo, hi, samples + 2)[1:-1]
    d = flux.derivative(grid)
    up = np.nonzero((d[:-1] < 0) & (d[1:] >= 0))[0]
    if up.size == 0:
        raise ValueError("flux derivative has no sign change; flux is not valley-shaped")
    a, b = grid[up[0]], grid[up[0] + 1]
    if flux.derivative(b) == 0.0:
        return float(b)
    while True:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        if flux.derivative(mid) < 0:
            a = mid
        else:
            b = mid
    da, db = abs(float(flux.derivative(a))), abs(float(flux.derivative(b)))
    return float(a if da <= db else b)


def flux_valley(flux) -> float:
    """State splitting the EO integrals: the minimizer, or an endpoint for monotone fluxes."""
    try:
        return find_flux_minimizer(flux)
    except ValueError:
        grid = np.linspace(0.0, flux.u_max, 10_001)
        return float(grid[np.argmin(flux(grid))])


def eo_flux(flux, u_minus, u_plus, u_star: Optional[float] = None):
    """Engquist-Osher flux ``f(0) + int_0^a max(f',0) + int_0^b min(f',0)``.

    Closed form valid when ``f`` decreases on ``[0, u*]`` and increases after.
    """
    if u_star is None:
        u_star = flux_valley(flux)
    a = np.asarray(u_minus, float)
    b = np.asarray(u_plus, float)
    return flux(np.maximum(a, u_star)) + flux(np.minimum(b, u_star)) - flux(u_star)


def _max_on_interval(fn: Callable, lo: float, hi: float, samples: int = 10_000) -> float:
    grid = np.linspace(lo, hi, samples)
    vals = fn(grid)
    i = int(np.argmax(vals))
    best = float(vals[i])
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, samples - 1)]
    if b > a:
        res = minimize_scalar(lambda s: -float(fn(s)), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return best


def max_speeds(problem: ProblemSpec) -> tuple:
    """(max |f'|, max a, max |q|) used by the time-step restriction."""
    fmax = _max_on_interval(lambda s: np.abs(problem.df(s)), 0.0, problem.u_max)
    amax = _max_on_interval(problem.a, 0.0, problem.u_max) if problem.compression else 0.0
    qmax = max(abs(problem.q(t)) for t in problem.time_samples())
    return fmax, amax, qmax


def compute_dt(problem: ProblemSpec, dx: float, cfl: float) -> float:
    """``dt = cfl*dx / (max|f'| + max|q| + 2 max a / dx)``."""
    if not 0.0 < cfl <= 1.0:
        raise ValueError("cfl must lie in (0, 1]")
    if dx <= 0.0:
        raise ValueError("dx must be positive")
    fmax, amax, qmax = max_speeds(problem)
    return cfl * dx / (fmax + qmax + 2.0 * amax / dx)


@dataclass
class SchemeConfig:
    theta: float = 1.0
    cfl: float = 0.5
    dx: float = 0.0
    dt: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= 2.0:
            raise ValueError("theta must lie in [0, 2]")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")


@dataclass
class StateVector:
    values: np.ndarray
    dx: float
    t: float


class Discretization:
    """Uniform-grid scheme for one problem.

    ``periodic=True`` drops the physical boundary conditions and wraps the
    stencil; it exists for pure-advection verification runs.
    """

    def __init__(self, problem: ProblemSpec, n: int, theta: float = 1.0, cfl: float = 0.5,
                 periodic: bool = False, dt: Optional[float] = None):
        self.problem = problem
        self.n = int(n)
        self.periodic = periodic
        dx = problem.height / self.n
        self.config = SchemeConfig(theta=theta, cfl=cfl, dx=dx,
                                   dt=compute_dt(problem, dx, cfl) if dt is None else dt)
        self.u_star = flux_valley(problem.flux)
        npts = self.n if periodic else self.n + 1
        self.x = np.arange(npts) * dx
        self.flux_evals = 0
        # interfaces whose flux is evaluated by the scheme formula
        last = self.n if periodic or problem.kind is ProblemKind.B else self.n - 1
        self.active = np.arange(last)

    @property
    def dx(self) -> float:
        return self.config.dx

    @property
    def dt(self) -> float:
        return self.config.dt

    @property
    def n_interfaces(self) -> int:
        return self.n

    def _slopes(self, u: np.ndarray, nodes: np.ndarray) -> np.ndarray:
        npts = u.size
        if self.periodic:
            left, right = u[(nodes - 1) % npts], u[(nodes + 1) % npts]
        else:
            left, right = u[np.maximum(nodes - 1, 0)], u[np.minimum(nodes + 1, npts - 1)]
        s = limited_slope(left, u[nodes], right, self.config.theta, self.dx)
        if not self.periodic:
            s = np.where((nodes == 0) | (nodes == npts - 1), 0.0, s)
        return s

    def interface_fluxes(self, u: np.ndarray, t: float, m: Optional[np.ndarray] = None) -> np.ndarray:
        """Total numerical flux at interfaces ``m`` (default: all active ones)."""
        m = self.active if m is None else np.asarray(m, dtype=np.int64)
        self.flux_evals += m.size
        p = (m + 1) % u.size if self.periodic else m + 1
        h = self.dx
        ul = u[m] + 0.5 * h * self._slopes(u, m)
        ur = u[p] - 0.5 * h * self._slopes(u, p)
        q = self.problem.q(t)
        A = self.problem.A
        return (min(q, 0.0) * ur + max(q, 0.0) * ul
                + eo_flux(self.problem.flux, ul, ur, self.u_star)
                - (A(u[p]) - A(u[m])) / h)

    def boundary_fluxes(self, u: np.ndarray, t: float) -> tuple:
        """(bottom, top) face fluxes. Bottom: only bulk discharge ``q*u_0``."""
        bottom = self.problem.q(t) * u[0]
        top = self.problem.psi(t) if self.problem.kind is ProblemKind.B else 0.0
        return bottom, top

    def assemble(self, u: np.ndarray, phi_active: np.ndarray, t: float) -> np.ndarray:
        """Conservative divergence from interface fluxes of ``self.active``."""
        h = self.dx
        if self.periodic:
            return -(phi_active - np.roll(phi_active, 1)) / h
        phi = np.zeros(self.n)
        phi[: phi_active.size] = phi_active
        bottom, top = self.boundary_fluxes(u, t)
        rhs = np.empty(self.n + 1)
        rhs[0] = -(phi[0] - bottom) / (0.5 * h)
        rhs[1:-1] = -(phi[1:] - phi[:-1]) / h
        if self.problem.kind is ProblemKind.B:
            rhs[-1] = -(top - phi[-1]) / (0.5 * h)
        else:
            rhs[-1] = 0.0
        return rhs

    def spatial_operator(self, u: np.ndarray, t: float) -> np.ndarray:
        if u.size < 5:
            raise ValueError("state needs at least 5 points")
        return self.assemble(u, self.interface_fluxes(u, t), t)

    def apply_boundary(self, u: np.ndarray, t: float) -> np.ndarray:
        if not self.periodic and self.problem.kind is ProblemKind.A:
            u[-1] = 0.0
        return u

    def rk2_step(self, u: np.ndarray, t: float, dt: Optional[float] = None,
                 operator: Optional[Callable] = None, clip: bool = True) -> np.ndarray:
        """Heun step; boundary after each stage, clipping after the full step."""
        dt = self.dt if dt is None else dt
        L = self.spatial_operator if operator is None else operator
        u1 = self.apply_boundary(u + dt * L(u, t), t + dt)
        u2 = u1 + dt * L(u1, t + dt)
        out = self.apply_boundary(0.5 * u + 0.5 * u2, t + dt)
        if clip:
            out = self.clip(out)
        return out

    def clip(self, u: np.ndarray) -> np.ndarray:
        """Project onto ``[0, u_max]`` keeping the trapezoid mass unchanged.

        Mass added by lifting negatives is taken back proportionally from
        positive nodes; mass removed above ``u_max`` is returned in
        proportion to the remaining headroom.
        """
        umax = self.problem.u_max
        v = np.clip(u, 0.0, umax)
        w = np.full(u.size, self.dx)
        if not self.periodic:
            w[0] = w[-1] = 0.5 * self.dx
            if self.problem.kind is ProblemKind.A:
                w[-1] = 0.0
        excess = float(w @ (v - u))
        if excess > 0.0:
            room = w * v
            total = room.sum()
            if total > excess:
                v -= v * (excess / total)
        elif excess < 0.0:
            room = w * (umax - v)
            total = room.sum()
            if total > -excess:
                v += (umax - v) * (-excess / total)
        return v

    def mass(self, u: np.ndarray) -> float:
        if self.periodic:
            return float(self.dx * np.sum(u))
        return float(self.dx * (np.sum(u[1:-1]) + 0.5 * (u[0] + u[-1])))


def spatial_operator(state: StateVector, problem: ProblemSpec, config: SchemeConfig, t: float) -> np.ndarray:
    disc = Discretization(problem, round(problem.height / config.dx), config.theta, config.cfl,
                          dt=config.dt or None)
    return disc.spatial_operator(np.asarray(state.values, float), t)


def rk2_step(state: StateVector, problem: ProblemSpec, config: SchemeConfig) -> StateVector:
    disc = Discretization(problem, round(problem.height / config.dx), config.theta, config.cfl,
                          dt=config.dt or None)
    vals = disc.rk2_step(np.asarray(state.values, float), state.t)
    return StateVector(vals, config.dx, state.t + disc.dt)


__all__ = [
    "Discretization", "SchemeConfig", "StateVector", "compute_dt",
    "eo_flux", "find_flux_minimizer", "flux_valley", "limited_slope", "max_speeds",
    "minmod3", "rk2_step", "spatial_operator",
]
