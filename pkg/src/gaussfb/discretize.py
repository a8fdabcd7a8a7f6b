"""Euler-Maruyama discretisation, reference solutions and Girsanov exponents.

The drift integral over a step, ``int_{t_i}^{t_{i+1}} g(s, m, y_0^{t_i}) ds``,
is always computed by :func:`drift_increment` (one midpoint node, prefix
frozen at ``t_i``). The simulator and the discrete density exponent A3 both
call it, so likelihoods are evaluated under exactly the law that generated
the paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from . import _mc
from .channels import ChannelDrift, ChannelSpec
from .stochastic import (
    BrownianPath,
    SamplePath,
    TimeGrid,
    bridge_values,
    brownian_values,
    refine_grid,
)

DEFAULT_REF_FACTOR = 64


def drift_increment(drift: ChannelDrift, a: float, b: float, m, times, values) -> np.ndarray:
    """Midpoint-rule ``int_a^b g(s, m, prefix) ds`` with the prefix held fixed."""
    return (b - a) * drift(0.5 * (a + b), m, times, values)


@dataclass(frozen=True, eq=False)
class EMPath(SamplePath):
    """Euler-Maruyama solution on ``grid`` driven by ``brownian``."""

    message: float = 0.0
    brownian: BrownianPath | None = None


@dataclass(frozen=True)
class GirsanovExponent:
    value: float
    kind: Literal["A1", "A2", "A3"]

    def __float__(self) -> float:
        return self.value


def _em_values(drift: ChannelDrift, m, grid: TimeGrid, b: np.ndarray) -> np.ndarray:
    """EM recursion for paths stacked along the leading axes of ``b``.

    The output is kept as ``B + D`` with ``D`` the accumulated drift, which is
    the same recursion written so that a zero drift reproduces ``B`` bitwise.
    """
    pts = grid.points
    d = np.zeros_like(b)
    y = np.array(b, dtype=float)
    for i in range(grid.n):
        g = drift_increment(drift, pts[i], pts[i + 1], m, pts[: i + 1], y[..., : i + 1])
        d[..., i + 1] = d[..., i] + g
        y[..., i + 1] = d[..., i + 1] + b[..., i + 1]
    return y


def _brownian_on(grid: TimeGrid, b: BrownianPath) -> BrownianPath:
    if b.grid == grid:
        return b
    return b.restrict(grid)


def simulate_em(drift: ChannelDrift, m, grid: TimeGrid, b: BrownianPath) -> EMPath:
    bg = _brownian_on(grid, b)
    vals = _em_values(drift, np.asarray(float(m)), grid, bg.values)
    return EMPath(grid, vals, message=float(m), brownian=bg)


def simulate_reference(
    drift: ChannelDrift, m, coarse: TimeGrid, b_fine: BrownianPath, ref_factor: int = DEFAULT_REF_FACTOR
) -> SamplePath:
    """Stand-in for the exact solution sampled on ``coarse``.

    Runs EM on ``coarse`` refined ``ref_factor`` times and restricts the
    result back to ``coarse``.
    """
    if ref_factor < 16:
        raise ValueError("ref_factor must be >= 16")
    fine = refine_grid(coarse, ref_factor)
    path = simulate_em(drift, m, fine, b_fine)
    return path.restrict(coarse)


def exponent_A1(drift: ChannelDrift, m, path: SamplePath) -> GirsanovExponent:
    """``-int g dY + 1/2 int g^2 ds`` by left-endpoint (Ito) sums on the path grid.

    The path grid should be much finer than the scale on which ``g`` varies;
    the sums converge at the usual Euler rate in the step size.
    """
    pts, y = path.grid.points, path.values
    m = np.asarray(float(m))
    stoch, quad = [], []
    for i in range(path.grid.n):
        g = float(drift(pts[i], m, pts[: i + 1], y[: i + 1]))
        stoch.append(g * (y[i + 1] - y[i]))
        quad.append(g * g * (pts[i + 1] - pts[i]))
    return GirsanovExponent(-math.fsum(stoch) + 0.5 * math.fsum(quad), "A1")


def exponent_A2(drift: ChannelDrift, m, grid: TimeGrid, path: SamplePath) -> GirsanovExponent:
    """A1 with the drift frozen at left grid endpoints of ``grid``.

    On ``[t_{i-1}, t_i)`` the drift is ``g(t_{i-1}, m, .)`` applied to the
    piecewise-linear interpolation of the path through the grid points, so
    both integrals are exact finite sums over the steps.
    """
    coarse = path.restrict(grid) if path.grid != grid else path
    pts, y = grid.points, coarse.values
    m = np.asarray(float(m))
    stoch, quad = [], []
    for i in range(grid.n):
        g = float(drift(pts[i], m, pts[: i + 1], y[: i + 1]))
        stoch.append(g * (y[i + 1] - y[i]))
        quad.append(g * g * (pts[i + 1] - pts[i]))
    return GirsanovExponent(-math.fsum(stoch) + 0.5 * math.fsum(quad), "A2")


def exponent_A3(drift: ChannelDrift, m, em: SamplePath) -> GirsanovExponent:
    """Exponent of the Gaussian transition density of an EM path.

    ``sum_i (-2 G_i dY_i + G_i^2) / (2 dt_i)`` with ``G_i`` the drift integral
    over step ``i``; ``log f(path | m) = -A3 + const`` with a constant that does
    not depend on ``m``.
    """
    pts, y = em.grid.points, em.values
    m = np.asarray(float(m))
    terms = []
    for i in range(em.grid.n):
        h = pts[i + 1] - pts[i]
        G = float(drift_increment(drift, pts[i], pts[i + 1], m, pts[: i + 1], y[: i + 1]))
        terms.append((-2.0 * G * (y[i + 1] - y[i]) + G * G) / (2.0 * h))
    return GirsanovExponent(math.fsum(terms), "A3")


@dataclass
class EMBatch:
    """Euler-Maruyama paths for a block of Monte Carlo path indices."""

    grid: TimeGrid
    m_index: np.ndarray
    m: np.ndarray
    B: np.ndarray
    Y: np.ndarray


def draw_messages_and_brownian(spec: ChannelSpec, grid: TimeGrid, seed: int, lo: int, hi: int):
    """Messages and Brownian values on ``grid`` for paths ``lo..hi-1``."""
    u, z = _mc.path_draws(seed, lo, hi, grid.n)
    idx = spec.message.index_from_uniform(u)
    return idx, brownian_values(grid, z)


def em_batch(spec: ChannelSpec, grid: TimeGrid, seed: int, lo: int, hi: int) -> EMBatch:
    idx, B = draw_messages_and_brownian(spec, grid, seed, lo, hi)
    m = spec.message.symbols[idx]
    Y = _em_values(spec.drift, m, grid, B)
    return EMBatch(grid, idx, m, B, Y)


@dataclass(frozen=True)
class ErrorRow:
    n: int
    delta: float
    mean_sq_error: float
    stderr: float


def strong_error_study(
    spec: ChannelSpec,
    grids: Sequence[TimeGrid],
    n_paths: int,
    seed: int,
    ref_factor: int = DEFAULT_REF_FACTOR,
    threads: int = 1,
) -> list[ErrorRow]:
    """Mean squared sup-distance between EM paths and a fine reference.

    For every path one Brownian realisation is drawn on the coarsest grid
    and bridge-refined to the reference grid (the finest grid refined
    ``ref_factor`` times); all grids see restrictions of that realisation.
    The reference is EM on the reference grid restricted to each grid, and
    the distance is the sup-norm of the difference of the two piecewise-linear
    paths on that grid.
    """
    if n_paths < 100:
        raise ValueError("n_paths must be >= 100")
    if ref_factor < 16:
        raise ValueError("ref_factor must be >= 16")
    grids = list(grids)
    if not grids:
        raise ValueError("at least one grid is required")
    finest = max(grids, key=len)
    coarsest = min(grids, key=len)
    for g in grids:
        if abs(g.T - spec.T) > 1e-12 * spec.T:
            raise ValueError("every grid must span the channel horizon")
        if not g.nests_in(finest):
            raise ValueError("grids must nest into the finest grid")
    if not coarsest.nests_in(finest):
        raise ValueError("grids must nest into the finest grid")
    ref = refine_grid(finest, ref_factor)
    positions = [g.index_in(ref) for g in grids]
    sym = spec.message.symbols

    def chunk(lo, hi):
        u, z = _mc.path_draws(seed, lo, hi, coarsest.n + ref.n)
        m = sym[spec.message.index_from_uniform(u)]
        b0 = brownian_values(coarsest, z[:, : coarsest.n])
        b = bridge_values(coarsest, b0, ref, z[:, coarsest.n :])
        y_ref = _em_values(spec.drift, m, ref, b)
        out = np.empty((hi - lo, len(grids)))
        for j, (g, pos) in enumerate(zip(grids, positions)):
            y = _em_values(spec.drift, m, g, b[:, pos])
            out[:, j] = np.max(np.abs(y - y_ref[:, pos]), axis=1) ** 2
        return out

    errs = np.concatenate(_mc.map_chunks(chunk, n_paths, threads, chunk=512))
    rows = []
    for j, g in enumerate(grids):
        mean, se = _mc.batch_means(errs[:, j])
        rows.append(ErrorRow(g.n, g.max_step, mean, se))
    return rows


def loglog_slope(rows: Sequence[ErrorRow]) -> float:
    """Least-squares slope of log(mean squared error) against log(step)."""
    x = np.log([r.delta for r in rows])
    y = np.log([r.mean_sq_error for r in rows])
    return float(np.polyfit(x, y, 1)[0])
