"""Point-value multiresolution on nested dyadic grids.

Grid ``k`` holds every ``2**k``-th fine node. Detail ``(k, j)`` lives at
index ``2j + 1`` of grid ``k - 1`` and measures the error of centered
Lagrange interpolation (``s`` points per side, degree ``r = 2s - 1``) from
grid ``k``. Its children are ``(k - 1, 2j)`` and ``(k - 1, 2j + 1)``.

Masks and details are stored as one flat array per level, index 0 for
level 1 (finest details).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional

import numpy as np

from .scheme import Discretization


@dataclass(frozen=True)
class GridHierarchy:
    n0: int
    levels: int
    height: float = 1.0
    origin: float = 0.0

    def __post_init__(self):
        if self.levels < 0:
            raise ValueError("levels must be >= 0")
        if self.n0 <= 0 or self.n0 % (2 ** self.levels):
            raise ValueError(f"n0={self.n0} is not divisible by 2**levels={2 ** self.levels}")

    @property
    def h0(self) -> float:
        return self.height / self.n0

    def size(self, k: int) -> int:
        return self.n0 // 2 ** k

    def spacing(self, k: int) -> float:
        return self.h0 * 2 ** k

    def points(self, k: int) -> np.ndarray:
        return self.origin + np.arange(self.size(k) + 1) * self.spacing(k)

    def detail_positions(self, k: int) -> np.ndarray:
        return self.origin + (2 * np.arange(self.size(k)) + 1) * self.spacing(k - 1)


@dataclass(frozen=True)
class ThresholdStrategy:
    epsilon: float

    def level_tolerance(self, k: int, levels: int) -> float:
        return 2.0 ** (k - levels) * self.epsilon


@dataclass
class MRState:
    coarse: np.ndarray
    details: List[np.ndarray]
    mask: Optional[List[np.ndarray]] = None

    @property
    def levels(self) -> int:
        return len(self.details)


def stencil_width(r: int) -> int:
    if r < 1 or r % 2 == 0:
        raise ValueError("interpolation order r must be odd and >= 1")
    return (r + 1) // 2


@lru_cache(maxsize=None)
def midpoint_stencil(n_coarse: int, s: int):
    """Indices and Lagrange weights predicting the ``n_coarse - 1`` midpoints.

    Centered with ``s`` points per side, shifted one-sided near the ends.
    """
    width = min(2 * s, n_coarse)
    mids = np.arange(n_coarse - 1)
    start = np.clip(mids - s + 1, 0, n_coarse - width)
    idx = start[:, None] + np.arange(width)[None, :]
    xm = mids + 0.5
    w = np.ones(idx.shape)
    for a in range(width):
        for b in range(width):
            if a != b:
                w[:, a] *= (xm - idx[:, b]) / (idx[:, a] - idx[:, b])
    idx.setflags(write=False)
    w.setflags(write=False)
    return idx, w


def predict(coarse: np.ndarray, s: int) -> np.ndarray:
    idx, w = midpoint_stencil(coarse.size, s)
    vals = coarse[idx]
    # weights sum to one: anchoring on the first value keeps constants exact
    return vals[:, 0] + np.einsum("ij,ij->i", vals[:, 1:] - vals[:, :1], w[:, 1:])


def encode(fine_values, hierarchy: GridHierarchy, r: int = 3) -> MRState:
    u = np.asarray(fine_values, dtype=float)
    if u.size != hierarchy.n0 + 1:
        raise ValueError(f"expected {hierarchy.n0 + 1} values, got {u.size}")
    s = stencil_width(r)
    details = []
    cur = u
    for _ in range(hierarchy.levels):
        coarse = cur[::2]
        details.append(cur[1::2] - predict(coarse, s))
        cur = coarse
    return MRState(cur.copy(), details)


def decode(mr: MRState, hierarchy: GridHierarchy, r: int = 3) -> np.ndarray:
    if mr.levels != hierarchy.levels or mr.coarse.size != hierarchy.size(hierarchy.levels) + 1:
        raise ValueError("MRState does not match the grid hierarchy")
    s = stencil_width(r)
    cur = mr.coarse
    for k in range(hierarchy.levels, 0, -1):
        d = mr.details[k - 1]
        if d.size != cur.size - 1:
            raise ValueError(f"level {k} detail count mismatch")
        fine = np.empty(2 * cur.size - 1)
        fine[::2] = cur
        fine[1::2] = d + predict(cur, s)
        cur = fine
    return cur


def truncate(mr: MRState, strategy: ThresholdStrategy) -> MRState:
    L = mr.levels
    mask, kept = [], []
    for k, d in enumerate(mr.details, start=1):
        m = np.abs(d) >= strategy.level_tolerance(k, L)
        mask.append(m)
        kept.append(np.where(m, d, 0.0))
    return MRState(mr.coarse.copy(), kept, mask)


def enforce_gradedness(mask: List[np.ndarray], r: int = 3) -> List[np.ndarray]:
    """Mark every level-(k+1) detail inside the stencil of a retained level-k detail."""
    s = stencil_width(r)
    out = [m.copy() for m in mask]
    for k in range(1, len(out)):
        sel = np.nonzero(out[k - 1])[0]
        if sel.size == 0:
            continue
        idx, _ = midpoint_stencil(out[k - 1].size + 1, s)
        pts = idx[sel].ravel()
        odd = pts[pts % 2 == 1]
        out[k][(odd - 1) // 2] = True
    return out


def add_safety_points(mask: List[np.ndarray], r: int = 3) -> List[np.ndarray]:
    """Same-level neighbours and finer children of every significant detail, then grading."""
    out = [m.copy() for m in mask]
    for k, sig in enumerate(mask, start=1):
        j = np.nonzero(sig)[0]
        if j.size == 0:
            continue
        n = sig.size
        out[k - 1][j[j > 0] - 1] = True
        out[k - 1][j[j < n - 1] + 1] = True
        if k >= 2:
            out[k - 2][2 * j] = True
            out[k - 2][2 * j + 1] = True
    return enforce_gradedness(out, r)


def retained_count(mask: List[np.ndarray]) -> int:
    return int(sum(int(m.sum()) for m in mask))


def compression_rate(mask: List[np.ndarray], hierarchy: GridHierarchy) -> float:
    kept = retained_count(mask) + hierarchy.size(hierarchy.levels) + 1
    return (hierarchy.n0 + 1) / kept


def mask_to_points(mask: List[np.ndarray], n0: int) -> np.ndarray:
    """Boolean flag per fine node: True where the node carries a retained detail."""
    flags = np.zeros(n0 + 1, dtype=bool)
    for k, m in enumerate(mask, start=1):
        j = np.nonzero(m)[0]
        flags[(2 * j + 1) * 2 ** (k - 1)] = True
    return flags


def mask_dump_rows(mr: MRState, mask: List[np.ndarray], hierarchy: GridHierarchy):
    """Rows ``(level, index, x_position, detail_value)`` for retained details."""
    rows = []
    for k in range(hierarchy.levels, 0, -1):
        x = hierarchy.detail_positions(k)
        for j in np.nonzero(mask[k - 1])[0]:
            rows.append((k, int(j), float(x[j]), float(mr.details[k - 1][j])))
    return rows


@dataclass
class HybridFluxes:
    """Harten's hybrid flux evaluation on the fine grid.

    Interface ``m`` (between nodes ``m`` and ``m + 1``) belongs to the same
    dyadic level as node ``m``. Fluxes on the coarsest level, near the top
    boundary, or next to a retained detail are evaluated by the scheme;
    all others are interpolated level by level from the coarser flux grid.
    """

    disc: Discretization
    hierarchy: GridHierarchy
    r: int = 3
    exact_count: int = field(default=0, init=False)

    def __post_init__(self):
        n = self.hierarchy.n0
        if self.disc.n != n or self.disc.periodic:
            raise ValueError("discretization does not match the hierarchy")
        L = self.hierarchy.levels
        m = np.arange(n)
        base = m % 2 ** L == 0
        for k in range(1, L + 1):
            base[n - 2 ** (k - 1)] = True
        self._base = base
        self._n_active = self.disc.active.size
        # interfaces fixed by a boundary condition instead of the scheme
        self._fixed = m >= self._n_active

    def exact_set(self, mask: List[np.ndarray]) -> np.ndarray:
        pts = mask_to_points(mask, self.hierarchy.n0)
        ex = self._base | pts[:-1]
        return ex & ~self._fixed

    def fluxes(self, u: np.ndarray, t: float, mask: List[np.ndarray]) -> np.ndarray:
        n = self.hierarchy.n0
        s = stencil_width(self.r)
        exact = self.exact_set(mask)
        phi = np.zeros(n)
        idx = np.nonzero(exact)[0]
        phi[idx] = self.disc.interface_fluxes(u, t, idx)
        self.exact_count += idx.size
        known = exact | self._fixed
        for k in range(self.hierarchy.levels, 0, -1):
            step = 2 ** k
            coarse = phi[::step]
            new = np.arange(step // 2, n - step, step)
            todo = ~known[new]
            if todo.any():
                phi[new[todo]] = predict(coarse, s)[todo]
        return phi[: self._n_active]

    def rhs(self, u: np.ndarray, t: float, mask: List[np.ndarray]) -> np.ndarray:
        return self.disc.assemble(u, self.fluxes(u, t, mask), t)


def adaptive_rhs(state_fine, mask, disc: Discretization, hierarchy: GridHierarchy, t: float,
                 r: int = 3) -> np.ndarray:
    return HybridFluxes(disc, hierarchy, r).rhs(np.asarray(state_fine, float), t, mask)


def full_mask(hierarchy: GridHierarchy) -> List[np.ndarray]:
    return [np.ones(hierarchy.size(k), dtype=bool) for k in range(1, hierarchy.levels + 1)]


def empty_mask(hierarchy: GridHierarchy) -> List[np.ndarray]:
    return [np.zeros(hierarchy.size(k), dtype=bool) for k in range(1, hierarchy.levels + 1)]


def refresh_mask(u: np.ndarray, hierarchy: GridHierarchy, strategy: ThresholdStrategy, r: int = 3):
    """Encode, threshold and grade; returns (encoded state, significant mask, graded mask)."""
    mr = encode(u, hierarchy, r)
    sig = truncate(mr, strategy).mask
    return mr, sig, add_safety_points(sig, r)


__all__ = [
    "GridHierarchy", "HybridFluxes", "MRState", "ThresholdStrategy",
    "adaptive_rhs", "add_safety_points", "compression_rate", "decode", "empty_mask",
    "encode", "enforce_gradedness", "full_mask", "mask_dump_rows", "mask_to_points",
    "midpoint_stencil", "predict", "refresh_mask", "retained_count", "stencil_width", "truncate",
]
