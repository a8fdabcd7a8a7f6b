"""Rate-R block codes over [0, T] with a Schalkwijk-Kailath feedback encoder.

Messages ``1..K`` (``K = ceil(exp(T R))``) sit on a uniform lattice in
``[-1, 1]``. The transmitter sends ``a_i (theta - theta_hat_i)`` on step i,
where ``theta_hat_i`` is the receiver's linear MMSE estimate of ``theta``
from the fed-back output and ``a_i = sqrt(P' / Sigma_i)`` keeps the expected
power at ``P'`` while the error variance ``Sigma_i`` shrinks by
``1 + P' dt_i`` per step. The decoder rounds the final estimate to the
nearest lattice point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _mc
from .channels import ChannelDrift
from .stochastic import BrownianPath, TimeGrid, brownian_values, make_even_grid

POWER_FRACTION = 0.9
PROBE_TRIALS = 4096


@dataclass(frozen=True)
class CodeConfig:
    rate: float
    T: float
    P: float
    grid: TimeGrid

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if not self.P > 0:
            raise ValueError("power P must be positive")
        if abs(self.grid.T - self.T) > 1e-12 * self.T:
            raise ValueError("grid must span [0, T]")
        if self.n_messages < 2:
            raise ValueError(f"ceil(exp(T R)) = {self.n_messages}; a code needs at least 2 messages")

    @property
    def n_messages(self) -> int:
        return int(math.ceil(math.exp(self.T * self.rate) - 1e-12))

    @property
    def lattice(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.n_messages)

    def with_horizon(self, T: float) -> "CodeConfig":
        """Same rate, power and step size over a new horizon."""
        n = max(1, int(round(T / self.grid.max_step)))
        return CodeConfig(self.rate, T, self.P, make_even_grid(T, n))


@dataclass(frozen=True)
class TransmissionResult:
    sent: int
    decoded: int
    error: bool
    realized_power: float


@dataclass(frozen=True)
class SKDesign:
    """Gains of the feedback encoder on a fixed grid."""

    amplitude: np.ndarray
    kalman_gain: np.ndarray
    design_power: float


def sk_design(cfg: CodeConfig, design_power: float) -> SKDesign:
    steps = cfg.grid.steps
    k = cfg.n_messages
    sigma = (k + 1) / (3.0 * (k - 1))
    amp = np.empty(steps.size)
    gain = np.empty(steps.size)
    for i, h in enumerate(steps):
        amp[i] = math.sqrt(design_power / sigma)
        gain[i] = sigma * amp[i] / (1.0 + design_power * h)
        sigma /= 1.0 + design_power * h
    return SKDesign(amp, gain, design_power)


def _nearest(lattice: np.ndarray, est: np.ndarray) -> np.ndarray:
    # argmin keeps the first (smaller) index on ties
    return np.argmin(np.abs(est[..., None] - lattice), axis=-1)


def _run(cfg: CodeConfig, design: SKDesign, theta: np.ndarray, B: np.ndarray):
    """Vectorised transmission of ``theta`` over Brownian paths ``B``."""
    steps = cfg.grid.steps
    est = np.zeros(theta.shape)
    energy = np.zeros(theta.shape)
    for i, h in enumerate(steps):
        x = design.amplitude[i] * (theta - est)
        dy = x * h + (B[..., i + 1] - B[..., i])
        est = est + design.kalman_gain[i] * dy
        energy += x * x * h
    return est, energy / cfg.T


def calibrate(cfg: CodeConfig, seed: int, trials: int = PROBE_TRIALS) -> SKDesign:
    """Scale the encoder so the probed average power is ``0.9 P``."""
    target = POWER_FRACTION * cfg.P
    design = sk_design(cfg, target)
    u, z = _mc.path_draws(seed, 0, trials, cfg.grid.n, 1)
    theta = cfg.lattice[np.minimum((u * cfg.n_messages).astype(int), cfg.n_messages - 1)]
    _, power = _run(cfg, design, theta, brownian_values(cfg.grid, z))
    return sk_design(cfg, target * target / float(power.mean()))


def sk_drift(cfg: CodeConfig, design: SKDesign) -> ChannelDrift:
    """The encoder as a general drift functional of the output prefix.

    ``theta_hat`` is recomputed from the prefix increments on every call, so
    this is quadratic in the number of steps; it exists to cross-check the
    fast recursion against the generic simulator.
    """
    lattice = cfg.lattice
    pts = cfg.grid.points

    def func(s, m, times, values):
        i = len(times) - 1
        if i >= design.amplitude.size or abs(times[-1] - pts[i]) > 1e-12 * cfg.T:
            raise ValueError("sk drift is only defined on its own grid")
        theta = lattice[np.asarray(m, dtype=int) - 1]
        est = np.diff(values, axis=-1) @ design.kalman_gain[:i]
        return design.amplitude[i] * (theta - est)

    L = float(design.amplitude.max() * (1.0 + 2.0 * design.kalman_gain.sum()))
    return ChannelDrift(
        func, L, L, feedback=True, alphabet=tuple(float(k) for k in range(1, cfg.n_messages + 1)), name="sk_code"
    )


def sk_transmit(cfg: CodeConfig, msg_index: int, b: BrownianPath, design: SKDesign | None = None) -> TransmissionResult:
    if not 1 <= msg_index <= cfg.n_messages:
        raise ValueError(f"message index must be in [1, {cfg.n_messages}]")
    if design is None:
        design = sk_design(cfg, POWER_FRACTION * cfg.P)
    bg = b if b.grid == cfg.grid else b.restrict(cfg.grid)
    theta = np.array(cfg.lattice[msg_index - 1])
    est, power = _run(cfg, design, theta, bg.values)
    decoded = int(_nearest(cfg.lattice, est)) + 1
    return TransmissionResult(msg_index, decoded, decoded != msg_index, float(power))


@dataclass(frozen=True)
class ErrorRateRow:
    T: float
    n_messages: int
    p_error: float
    stderr: float
    power_mean: float
    power_stderr: float
    power_violation: bool


def error_rate_curve(
    cfg_base: CodeConfig,
    horizons: Sequence[float],
    n_trials: int,
    seed: int,
    threads: int = 1,
) -> list[ErrorRateRow]:
    """Empirical average error probability of the SK code per horizon.

    Each horizon keeps the rate, power and step size of ``cfg_base``.
    Messages are uniform per trial; the encoder is calibrated by a probe run
    on a separate random stream before the trials.
    """
    if n_trials < 100:
        raise ValueError("n_trials must be >= 100")
    rows = []
    for h, T in enumerate(horizons):
        cfg = cfg_base.with_horizon(T)
        design = calibrate(cfg, seed + 7919 * (h + 1))
        k = cfg.n_messages

        def chunk(lo, hi, cfg=cfg, design=design, k=k, h=h):
            u, z = _mc.path_draws(seed, lo, hi, cfg.grid.n, 0, h)
            sent = np.minimum((u * k).astype(int), k - 1)
            est, power = _run(cfg, design, cfg.lattice[sent], brownian_values(cfg.grid, z))
            return np.stack([_nearest(cfg.lattice, est) != sent, power], axis=1)

        res = np.concatenate(_mc.map_chunks(chunk, n_trials, threads))
        prop = _mc.wilson(int(res[:, 0].sum()), n_trials)
        p_mean, p_se = _mc.batch_means(res[:, 1])
        rows.append(ErrorRateRow(T, k, prop.p, prop.stderr, p_mean, p_se, p_mean > cfg.P + 3 * p_se))
    return rows
