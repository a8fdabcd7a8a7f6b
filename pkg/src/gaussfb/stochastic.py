"""Time grids, seeded Brownian paths, bridge refinement and the sup-norm.

Paths are piecewise linear between grid points. Every path object is
immutable: the value arrays are flagged read-only on construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRID_RTOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Partition ``0 = t_0 < t_1 < ... < t_n = T`` of ``[0, T]``."""

    points: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a grid needs at least two points")
        if pts[0] != 0.0:
            raise ValueError("grid must start at 0")
        if not np.all(np.diff(pts) > 0):
            raise ValueError("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @property
    def T(self) -> float:
        return float(self.points[-1])

    @property
    def n(self) -> int:
        """Number of steps."""
        return self.points.size - 1

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.points)

    @property
    def max_step(self) -> float:
        return float(self.steps.max())

    @property
    def is_even(self) -> bool:
        return bool(np.allclose(self.steps, self.T / self.n, rtol=GRID_RTOL, atol=0.0))

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeGrid) or len(self) != len(other):
            return False
        return bool(np.allclose(self.points, other.points, rtol=0.0, atol=GRID_RTOL * max(self.T, other.T)))

    __hash__ = None

    def index_in(self, fine: "TimeGrid") -> np.ndarray:
        """Positions of this grid's points inside ``fine``.

        Raises ValueError unless ``fine`` contains every point of this grid
        (to relative tolerance 1e-12) and shares its horizon.
        """
        tol = GRID_RTOL * max(self.T, fine.T)
        if abs(self.T - fine.T) > tol:
            raise ValueError("grids have different horizons")
        idx = np.searchsorted(fine.points, self.points - tol)
        idx = np.minimum(idx, len(fine) - 1)
        if np.any(np.abs(fine.points[idx] - self.points) > tol):
            raise ValueError("fine grid does not contain every coarse grid point")
        return idx

    def nests_in(self, fine: "TimeGrid") -> bool:
        try:
            self.index_in(fine)
        except ValueError:
            return False
        return True

    def __repr__(self) -> str:
        return f"TimeGrid(n={self.n}, T={self.T:g}, max_step={self.max_step:g})"


def make_even_grid(T: float, n: int) -> TimeGrid:
    if not T > 0:
        raise ValueError(f"horizon T must be positive, got {T}")
    if int(n) != n or n < 1:
        raise ValueError(f"number of steps n must be a positive integer, got {n}")
    n = int(n)
    pts = T * np.arange(n + 1) / n
    pts[-1] = T
    return TimeGrid(pts)


def refine_grid(g: TimeGrid, factor: int) -> TimeGrid:
    """Split every step of ``g`` into ``factor`` equal substeps."""
    if int(factor) != factor or factor < 2:
        raise ValueError(f"refinement factor must be an integer >= 2, got {factor}")
    factor = int(factor)
    a = g.points[:-1, None]
    h = g.steps[:, None]
    inner = (a + h * np.arange(factor) / factor).ravel()
    inner[::factor] = g.points[:-1]
    return TimeGrid(np.append(inner, g.points[-1]))


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Real path known at grid points, linear in between."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.shape != self.grid.points.shape:
            raise ValueError("one value per grid point is required")
        object.__setattr__(self, "values", vals)

    @property
    def T(self) -> float:
        return self.grid.T

    def __call__(self, s):
        return np.interp(s, self.grid.points, self.values)

    def prefix(self, s: float) -> tuple[np.ndarray, np.ndarray]:
        """Knot times and values of the path restricted to ``[0, s]``."""
        pts = self.grid.points
        k = int(np.searchsorted(pts, s, side="right"))
        times, vals = pts[:k], self.values[:k]
        if times[-1] < s:
            times = np.append(times, s)
            vals = np.append(vals, self(s))
        return times, vals

    def sup_norm(self, s: float | None = None) -> float:
        """``sup_{0 <= r <= s} |path(r)|`` (whole horizon by default)."""
        if s is None:
            return float(np.max(np.abs(self.values)))
        return float(np.max(np.abs(self.prefix(s)[1])))

    def restrict(self, coarse: TimeGrid) -> "SamplePath":
        idx = coarse.index_in(self.grid)
        return SamplePath(coarse, self.values[idx])


@dataclass(frozen=True, eq=False)
class BrownianPath(SamplePath):
    """Standard Brownian motion sampled on a grid, starting at 0."""

    def __post_init__(self):
        super().__post_init__()
        if self.values[0] != 0.0:
            raise ValueError("a Brownian path starts at 0")

    def restrict(self, coarse: TimeGrid) -> "BrownianPath":
        idx = coarse.index_in(self.grid)
        return BrownianPath(coarse, self.values[idx])


def brownian_values(grid: TimeGrid, normals: np.ndarray) -> np.ndarray:
    """Brownian values on ``grid`` from standard normals of shape (..., n)."""
    incr = normals * np.sqrt(grid.steps)
    out = np.zeros(normals.shape[:-1] + (len(grid),))
    np.cumsum(incr, axis=-1, out=out[..., 1:])
    return out


def sample_brownian(g: TimeGrid, seed: int) -> BrownianPath:
    rng = np.random.default_rng(seed)
    return BrownianPath(g, brownian_values(g, rng.standard_normal(g.n)))


def bridge_values(coarse: TimeGrid, values: np.ndarray, fine: TimeGrid, normals: np.ndarray) -> np.ndarray:
    """Refine Brownian values on ``coarse`` to ``fine`` by bridge sampling.

    ``values`` has shape (..., len(coarse)); ``normals`` (..., fine.n) drives
    an auxiliary Brownian motion W on the fine grid. On each coarse step
    ``[a, b]`` the pinned process ``W(t) - W(a) - (t-a)/(b-a) (W(b)-W(a))`` is a
    Brownian bridge independent of the coarse values; adding it to the linear
    interpolation gives the exact conditional law. Coarse points are copied
    through unchanged.
    """
    idx = coarse.index_in(fine)
    pos = np.arange(len(fine))
    right = np.searchsorted(idx, pos, side="left")
    right = np.minimum(right, coarse.n)
    left = np.where(idx[right] == pos, right, right - 1)
    t = fine.points
    a, b = coarse.points[left], coarse.points[right]
    span = np.where(right > left, b - a, 1.0)
    lam = np.where(right > left, (t - a) / span, 0.0)

    w = brownian_values(fine, normals)
    wa, wb = w[..., idx[left]], w[..., idx[right]]
    pinned = w - wa - lam * (wb - wa)
    va, vb = values[..., left], values[..., right]
    out = va + lam * (vb - va) + pinned
    out[..., idx] = values
    return out


def bridge_refine(p: BrownianPath, fine: TimeGrid, seed: int) -> BrownianPath:
    if not p.grid.nests_in(fine):
        raise ValueError("fine grid must contain every point of the path's grid")
    rng = np.random.default_rng(seed)
    return BrownianPath(fine, bridge_values(p.grid, p.values, fine, rng.standard_normal(fine.n)))


def union_points(*grids: TimeGrid) -> np.ndarray:
    pts = np.unique(np.concatenate([g.points for g in grids]))
    tol = GRID_RTOL * pts[-1]
    keep = np.append(True, np.diff(pts) > tol)
    return pts[keep]


def sup_distance(a: SamplePath, b: SamplePath) -> float:
    """Sup-norm distance of two piecewise-linear paths on a common horizon.

    Both interpolants are linear between points of the union grid, so the
    supremum is attained at one of those points.
    """
    if abs(a.T - b.T) > GRID_RTOL * max(a.T, b.T):
        raise ValueError("paths have different horizons")
    pts = union_points(a.grid, b.grid)
    return float(np.max(np.abs(a(pts) - b(pts))))
