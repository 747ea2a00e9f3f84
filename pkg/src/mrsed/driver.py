"""Reference and multiresolution runs, snapshot capture and run metrics."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .model import ProblemSpec
from .mr import GridHierarchy, HybridFluxes, MRState, ThresholdStrategy, compression_rate, refresh_mask
from .scheme import Discretization, StateVector

log = logging.getLogger(__name__)


@dataclass
class MRConfig:
    epsilon: float = 1e-4
    levels: int = 5
    r: int = 3

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


@dataclass
class Snapshot:
    t: float
    V: float
    V_strict: float
    mu: float
    e1: float
    einf: float
    mass: float


@dataclass
class RunMetrics:
    snapshots: List[Snapshot] = field(default_factory=list)
    wall_times: tuple = (0.0, 0.0)
    flux_eval_counts: tuple = (0, 0)

    def rows(self):
        return [(s.t, s.V, s.mu, s.e1, s.einf, s.mass) for s in self.snapshots]


@dataclass
class MRSnapshot:
    """MR state captured at a snapshot time (for mask dumps)."""

    t: float
    encoded: MRState
    mask: list


def _check_times(problem: ProblemSpec, snapshot_times: Sequence[float]) -> List[float]:
    times = sorted(float(t) for t in snapshot_times)
    if any(t < 0 or t > problem.t_end for t in times):
        raise ValueError(f"snapshot times must lie in [0, {problem.t_end}]")
    return times


def _march(disc: Discretization, u: np.ndarray, times: List[float], step, on_snapshot):
    """Advance with the stable dt, shortening the last step onto each snapshot time."""
    t = 0.0
    for target in times:
        while t < target:
            dt = disc.dt
            last = t + dt >= target - 1e-12 * max(target, 1.0)
            if last:
                dt = target - t
            u = step(u, t, dt)
            t = target if last else t + dt
        on_snapshot(target, u)
    return u


def run_reference(problem: ProblemSpec, n0: int, snapshot_times: Sequence[float], theta: float = 1.0,
                  cfl: float = 0.5):
    """Uniform fine-grid solve; returns (snapshots, discretization)."""
    times = _check_times(problem, snapshot_times)
    disc = Discretization(problem, n0, theta, cfl)
    u = disc.apply_boundary(problem.initial(disc.x), 0.0)
    out: List[StateVector] = []
    _march(disc, u, times, lambda v, t, dt: disc.rk2_step(v, t, dt),
           lambda t, v: out.append(StateVector(v.copy(), disc.dx, t)))
    return out, disc


@dataclass
class MRRun:
    snapshots: List[StateVector]
    mr_snapshots: List[MRSnapshot]
    disc: Discretization
    hybrid: HybridFluxes
    V: List[float]
    V_strict: List[float]
    exact_counts: List[int]


def run_mr_only(problem: ProblemSpec, n0: int, mr_config: MRConfig, snapshot_times: Sequence[float],
                theta: float = 1.0, cfl: float = 0.5) -> MRRun:
    """MR-accelerated solve: the graded mask is refreshed once per RK2 step."""
    times = _check_times(problem, snapshot_times)
    hier = GridHierarchy(n0, mr_config.levels, problem.height)
    disc = Discretization(problem, n0, theta, cfl)
    hybrid = HybridFluxes(disc, hier, mr_config.r)
    strategy = ThresholdStrategy(mr_config.epsilon)
    r = mr_config.r
    run = MRRun([], [], disc, hybrid, [], [], [])

    def step(u, t, dt):
        _, _, mask = refresh_mask(u, hier, strategy, r)
        return disc.rk2_step(u, t, dt, operator=lambda v, tt: hybrid.rhs(v, tt, mask))

    def capture(t, u):
        enc, sig, mask = refresh_mask(u, hier, strategy, r)
        run.snapshots.append(StateVector(u.copy(), disc.dx, t))
        run.mr_snapshots.append(MRSnapshot(t, enc, mask))
        run.V.append(compression_rate(mask, hier))
        run.V_strict.append(compression_rate(sig, hier))
        run.exact_counts.append(hybrid.exact_count)

    u = disc.apply_boundary(problem.initial(disc.x), 0.0)
    _march(disc, u, times, step, capture)
    return run


def speedup(metrics: RunMetrics) -> dict:
    """Wall-time ratio (None when unmeasurable) and flux-evaluation ratio."""
    ref_t, mr_t = metrics.wall_times
    ref_n, mr_n = metrics.flux_eval_counts
    return {
        "wall": ref_t / mr_t if mr_t > 0 else None,
        "flux": ref_n / mr_n if mr_n > 0 else float("inf"),
    }


def run_mr(problem: ProblemSpec, n0: int, mr_config: MRConfig, snapshot_times: Sequence[float],
           theta: float = 1.0, cfl: float = 0.5):
    """Reference plus MR run with per-snapshot metrics.

    The ``mu`` column of each snapshot is the cumulative flux-evaluation ratio
    reference/MR up to that time; wall times land in ``RunMetrics.wall_times``.
    """
    times = _check_times(problem, snapshot_times)
    counts_ref: List[int] = []
    reference: List[StateVector] = []
    t0 = time.perf_counter()
    ref_disc = Discretization(problem, n0, theta, cfl)
    u = ref_disc.apply_boundary(problem.initial(ref_disc.x), 0.0)

    def grab(t, v):
        reference.append(StateVector(v.copy(), ref_disc.dx, t))
        counts_ref.append(ref_disc.flux_evals)

    _march(ref_disc, u, times, lambda v, t, dt: ref_disc.rk2_step(v, t, dt), grab)
    ref_time = time.perf_counter() - t0

    t0 = time.perf_counter()
    run = run_mr_only(problem, n0, mr_config, times, theta, cfl)
    counts_mr = run.exact_counts
    mr_time = time.perf_counter() - t0

    h0 = problem.height / n0
    metrics = RunMetrics(wall_times=(ref_time, mr_time))
    for i, (sr, sm) in enumerate(zip(reference, run.snapshots)):
        diff = np.abs(sm.values - sr.values)
        mu = counts_ref[i] / counts_mr[i] if counts_mr[i] > 0 else 1.0
        metrics.snapshots.append(Snapshot(
            t=sm.t, V=run.V[i], V_strict=run.V_strict[i], mu=mu,
            e1=float(h0 * diff.sum()), einf=float(diff.max()), mass=run.disc.mass(sm.values)))
    if times:
        metrics.flux_eval_counts = (counts_ref[-1], counts_mr[-1])
    log.info("reference %.2fs, MR %.2fs, flux evaluations %s", ref_time, mr_time, metrics.flux_eval_counts)
    return run.snapshots, metrics, run
