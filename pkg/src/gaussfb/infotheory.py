"""Mutual information of the discretised channel, bounds and capacity formulas.

All information is in nats. Both estimators average over (message, Brownian
path) pairs; the mixture over messages is an exact finite sum done in log
space, so the only error is Monte Carlo error over paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import logsumexp

from . import _mc
from .channels import ChannelSpec
from .discretize import EMPath, draw_messages_and_brownian, drift_increment, exponent_A3
from .stochastic import TimeGrid, bridge_values, brownian_values, refine_grid

GH_NODES = 128


@dataclass(frozen=True)
class PosteriorWeights:
    alphabet: tuple
    weights: np.ndarray

    def __getitem__(self, symbol) -> float:
        return float(self.weights[self.alphabet.index(float(symbol))])


@dataclass(frozen=True)
class MIEstimate:
    value: float
    stderr: float
    n_paths: int
    method: Literal["plugin", "cmmse"]


def _normalise(logp: np.ndarray, a3: np.ndarray) -> np.ndarray:
    """Posterior pmf from log-prior and exponents, last axis over messages."""
    z = logp - a3
    z = z - np.max(z, axis=-1, keepdims=True)
    w = np.exp(z)
    return w / w.sum(axis=-1, keepdims=True)


def _log_prior(spec: ChannelSpec) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(spec.message.prior)


def posterior_weights(spec: ChannelSpec, em: EMPath) -> PosteriorWeights:
    """Posterior over messages given an observed EM path, ``p(m) exp(-A3(m))``."""
    a3 = np.array([exponent_A3(spec.drift, m, em).value for m in spec.message.alphabet])
    return PosteriorWeights(spec.message.alphabet, _normalise(_log_prior(spec), a3))


@dataclass
class _Pass:
    a3: np.ndarray
    cmmse: np.ndarray | None
    energy: np.ndarray | None


def _likelihood_pass(spec: ChannelSpec, grid: TimeGrid, idx: np.ndarray, B: np.ndarray, cmmse=False, energy=False) -> _Pass:
    """Simulate EM paths and accumulate A3 for every message in one sweep.

    With ``cmmse`` the per-path posterior variance of the drift at each left
    endpoint is integrated as well; with ``energy`` the per-step ``G_i^2 / dt_i``
    of the transmitted message is kept.
    """
    drift = spec.drift
    sym = spec.message.symbols
    logp = _log_prior(spec)
    pts, steps = grid.points, grid.steps
    n_p, k = B.shape[0], sym.size
    rows = np.arange(n_p)
    d = np.zeros(n_p)
    Y = np.array(B, dtype=float)
    acc = _mc.Neumaier((n_p, k))
    post_var = _mc.Neumaier(n_p) if cmmse else None
    en = np.empty((n_p, grid.n)) if energy else None
    for i in range(grid.n):
        prefix = Y[:, None, : i + 1]
        G = drift_increment(drift, pts[i], pts[i + 1], sym, pts[: i + 1], prefix)
        if cmmse:
            w = _normalise(logp, acc.value)
            g = drift(pts[i], sym, pts[: i + 1], prefix)
            mean = (w * g).sum(axis=1)
            var = np.maximum((w * g * g).sum(axis=1) - mean * mean, 0.0)
            post_var.add(0.5 * steps[i] * var)
        Gm = G[rows, idx]
        d = d + Gm
        Y[:, i + 1] = d + B[:, i + 1]
        dY = Y[:, i + 1] - Y[:, i]
        acc.add((-2.0 * G * dY[:, None] + G * G) / (2.0 * steps[i]))
        if energy:
            en[:, i] = Gm * Gm / steps[i]
    return _Pass(acc.value, post_var.value if cmmse else None, en)


def _plugin_values(spec: ChannelSpec, a3: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Per-path ``-A3(M) - log sum_m p(m) exp(-A3(m))``."""
    logp = _log_prior(spec)
    own = a3[np.arange(a3.shape[0]), idx]
    vals = -own - logsumexp(logp - a3, axis=1)
    # message-blind paths carry exactly zero information
    vals[np.ptp(a3, axis=1) == 0] = 0.0
    return vals


def _check_paths(n_paths: int) -> None:
    if n_paths < 100:
        raise ValueError("n_paths must be >= 100")


def mi_plugin(spec: ChannelSpec, grid: TimeGrid, n_paths: int, seed: int, threads: int = 1) -> MIEstimate:
    """Density-ratio estimate of ``I(M; Y^(n)(grid))`` from exact EM densities."""
    _check_paths(n_paths)

    def chunk(lo, hi):
        idx, B = draw_messages_and_brownian(spec, grid, seed, lo, hi)
        return _plugin_values(spec, _likelihood_pass(spec, grid, idx, B).a3, idx)

    vals = np.concatenate(_mc.map_chunks(chunk, n_paths, threads))
    return MIEstimate(*_mc.batch_means(vals), n_paths, "plugin")


def mi_cmmse(spec: ChannelSpec, grid: TimeGrid, n_paths: int, seed: int, threads: int = 1) -> MIEstimate:
    """Estimate ``1/2 int (E[g^2] - E[ghat^2]) ds`` with running posteriors.

    Per path the integrand is the posterior variance of the drift across
    messages given the prefix up to each left endpoint; its expectation is
    ``E[g^2] - E[ghat^2]``. Same seeds give the same paths as :func:`mi_plugin`.
    """
    _check_paths(n_paths)

    def chunk(lo, hi):
        idx, B = draw_messages_and_brownian(spec, grid, seed, lo, hi)
        return _likelihood_pass(spec, grid, idx, B, cmmse=True).cmmse

    vals = np.concatenate(_mc.map_chunks(chunk, n_paths, threads))
    return MIEstimate(*_mc.batch_means(vals), n_paths, "cmmse")


@dataclass(frozen=True)
class BoundChain:
    """Upper bounds on the discretised mutual information, in nats.

    ``b_log`` and ``b_power`` are built from the same per-step energies
    ``E[G_i^2] / dt_i`` (``G_i`` the drift integral over step i), so
    ``b_log <= b_power`` holds term by term. ``stderr`` is the Monte Carlo
    error of ``b_power``.
    """

    b_log: float
    b_power: float
    b_half_pt: float
    stderr: float
    n_paths: int


def mi_bound_chain(spec: ChannelSpec, grid: TimeGrid, n_paths: int, seed: int, threads: int = 1) -> BoundChain:
    _check_paths(n_paths)

    def chunk(lo, hi):
        idx, B = draw_messages_and_brownian(spec, grid, seed, lo, hi)
        return _likelihood_pass(spec, grid, idx, B, energy=True).energy

    energy = np.concatenate(_mc.map_chunks(chunk, n_paths, threads))
    per_step = energy.mean(axis=0)
    b_log = 0.5 * float(np.sum(np.log1p(per_step)))
    b_power = 0.5 * float(np.sum(per_step))
    _, se = _mc.batch_means(0.5 * energy.sum(axis=1))
    return BoundChain(b_log, b_power, 0.5 * spec.P * spec.T, se, n_paths)


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    n: int
    delta: float
    value: float
    stderr: float


def mi_convergence_study(
    spec: ChannelSpec,
    base_grid: TimeGrid,
    n_levels: int,
    n_paths: int,
    seed: int,
    threads: int = 1,
    factor: int = 2,
) -> list[ConvergenceRow]:
    """Plug-in MI on nested grids, every level driven by one Brownian path.

    Level k is ``base_grid`` refined ``factor**k`` times; the Brownian path of
    level k is the bridge refinement of level k-1, so all levels share a
    realisation and level 0 matches :func:`mi_plugin` on ``base_grid``.
    """
    if n_levels < 2:
        raise ValueError("n_levels must be >= 2")
    _check_paths(n_paths)
    grids = [base_grid]
    for _ in range(n_levels - 1):
        grids.append(refine_grid(grids[-1], factor))
    total = sum(g.n for g in grids)

    def chunk(lo, hi):
        u, z = _mc.path_draws(seed, lo, hi, total)
        idx = spec.message.index_from_uniform(u)
        out = np.empty((hi - lo, n_levels))
        B = brownian_values(grids[0], z[:, : grids[0].n])
        used = grids[0].n
        for level, g in enumerate(grids):
            if level:
                B = bridge_values(grids[level - 1], B, g, z[:, used : used + g.n])
                used += g.n
            out[:, level] = _plugin_values(spec, _likelihood_pass(spec, g, idx, B).a3, idx)
        return out

    vals = np.concatenate(_mc.map_chunks(chunk, n_paths, threads))
    rows = []
    for level, g in enumerate(grids):
        mean, se = _mc.batch_means(vals[:, level])
        rows.append(ConvergenceRow(level, g.n, g.max_step, mean, se))
    return rows


def capacity_band(P: float, omega: float) -> float:
    """Capacity ``omega log(1 + P / (2 omega))`` of the band-limited channel, nats/s."""
    if not P > 0 or not omega > 0:
        raise ValueError("P and omega must be positive")
    return float(omega * np.log1p(P / (2.0 * omega)))


def bpsk_awgn_oracle(snr: float, nodes: int = GH_NODES) -> float:
    """``I(X; sqrt(snr) X + N)`` for equiprobable ``X = +-1``, nats.

    Gauss-Hermite quadrature over ``Z ~ N(sqrt(snr), 1)`` of
    ``ln 2 - E ln(1 + exp(-2 sqrt(snr) Z))``.
    """
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    if snr == 0:
        return 0.0
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    a = np.sqrt(snr)
    expect = np.dot(w, np.logaddexp(0.0, -2.0 * a * (a + x))) / np.sqrt(2.0 * np.pi)
    return float(np.log(2.0) - expect)
