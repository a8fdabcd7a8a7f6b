"""Messages, drift functionals ``g(s, m, y_0^s)`` and their validity checks.

A drift is stored as a vectorised function ``func(s, m, times, values)``:

* ``s``      scalar time argument,
* ``m``      message symbols, broadcastable against ``values.shape[:-1]``,
* ``times``  knot times of the observed prefix (ending at the freeze time),
* ``values`` prefix values with shape ``(..., len(times))``.

It returns an array of shape ``broadcast(m, values[..., 0])``. Passing the
prefix as knots keeps the functional general (it may read the whole past)
while the builtins only look at the latest value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _mc
from .stochastic import SamplePath, TimeGrid

PMF_TOL = 1e-12

DriftFunc = Callable[[float, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Message:
    """Finite message alphabet with a prior pmf."""

    alphabet: tuple
    prior: np.ndarray

    def __post_init__(self):
        alphabet = tuple(float(a) for a in self.alphabet)
        prior = np.array(self.prior, dtype=float)
        if not alphabet:
            raise ValueError("message alphabet is empty")
        if len(set(alphabet)) != len(alphabet):
            raise ValueError("message alphabet has duplicate symbols")
        if prior.shape != (len(alphabet),):
            raise ValueError("prior needs one probability per symbol")
        if np.any(prior < 0) or abs(prior.sum() - 1.0) > PMF_TOL:
            raise ValueError("prior must be nonnegative and sum to 1")
        prior.flags.writeable = False
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "prior", prior)

    @classmethod
    def uniform(cls, alphabet) -> "Message":
        alphabet = tuple(alphabet)
        return cls(alphabet, np.full(len(alphabet), 1.0 / len(alphabet)))

    @property
    def symbols(self) -> np.ndarray:
        return np.array(self.alphabet)

    @property
    def size(self) -> int:
        return len(self.alphabet)

    @property
    def entropy(self) -> float:
        p = self.prior[self.prior > 0]
        return float(-(p * np.log(p)).sum())

    def index_from_uniform(self, u: np.ndarray) -> np.ndarray:
        """Inverse-cdf draw of symbol indices from uniforms in [0, 1)."""
        cdf = np.cumsum(self.prior)
        idx = np.searchsorted(cdf, u, side="right")
        idx = np.minimum(idx, self.size - 1)
        # never land on a zero-probability symbol through rounding in the cdf
        while np.any(self.prior[idx] == 0):
            bad = self.prior[idx] == 0
            idx[bad] -= 1
        return idx


@dataclass(frozen=True, eq=False)
class ChannelDrift:
    """Channel input functional with declared regularity constants.

    ``lipschitz_L`` bounds ``|g(s1, m, y_0^{s2}) - g(t1, m, z_0^{t2})|`` by
    ``L (|s1 - t1| + ||y_0^{s2} - z_0^{t2}||)``; ``growth_L`` bounds
    ``|g(t, m, y_0^t)|`` by ``L (1 + ||y_0^t||)``. Both are claims that
    :func:`check_conditions` tries to falsify.
    """

    func: DriftFunc
    lipschitz_L: float
    growth_L: float
    feedback: bool
    alphabet: tuple = (-1.0, 1.0)
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, s, m, times, values) -> np.ndarray:
        return np.asarray(self.func(s, m, times, values), dtype=float)

    def evaluate(self, s: float, m, prefix: SamplePath) -> float:
        """``g(s, m, prefix)`` for a single path prefix ending at or before ``s``."""
        return float(self.func(s, np.asarray(float(m)), prefix.grid.points, prefix.values))


@dataclass(frozen=True)
class ChannelSpec:
    drift: ChannelDrift
    message: Message
    T: float
    P: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        if not self.P > 0:
            raise ValueError("power limit P must be positive")
        extra = set(self.message.alphabet) - set(self.drift.alphabet)
        if extra:
            raise ValueError(f"drift {self.drift.name!r} is not defined for symbols {sorted(extra)}")


def _latest(values):
    return np.asarray(values)[..., -1]


def builtin_zero() -> ChannelDrift:
    def func(s, m, times, values):
        return np.zeros(np.broadcast_shapes(np.shape(m), np.shape(_latest(values))))

    return ChannelDrift(func, 0.0, 0.0, feedback=False, name="zero")


def builtin_constant_antipodal(a: float, prior=None) -> ChannelDrift:
    """``g(s, m, .) = a m`` on ``m in {-1, +1}``; no feedback.

    ``prior`` is accepted for symmetry with the channel config and only
    validated here; the message model lives in :class:`Message`.
    """
    if not np.isfinite(a):
        raise ValueError("amplitude a must be finite")
    if prior is not None:
        Message((-1.0, 1.0), prior)
    a = float(a)

    def func(s, m, times, values):
        m = np.asarray(m, dtype=float)
        return np.broadcast_to(a * m, np.broadcast_shapes(m.shape, np.shape(_latest(values)))).copy()

    return ChannelDrift(func, 0.0, abs(a), feedback=False, name="constant_antipodal", params={"a": a})


def builtin_sk_linear_feedback(
    gamma: float,
    theta: dict,
    s_floor: float = 1.0 / 64,
    clip: float | None = None,
) -> ChannelDrift:
    """Linear error-feedback drift ``gamma (theta[m] - y(s) / max(s, s_floor))``.

    ``y(s)`` is the latest prefix value. The receiver-side estimate
    ``y(s) / max(s, s_floor)`` is clipped to ``[-clip, clip]`` (default
    ``1 + 2 max|theta|``); without the clip the drift is not uniformly
    Lipschitz in ``s``. Inside the clip range it is exactly affine in ``y``.
    """
    if not np.isfinite(gamma):
        raise ValueError("gamma must be finite")
    if not s_floor > 0:
        raise ValueError("s_floor must be positive")
    keys = np.array(sorted(float(k) for k in theta))
    vals = np.array([float(theta[k]) for k in sorted(theta)])
    theta_max = float(np.max(np.abs(vals)))
    if clip is None:
        clip = 1.0 + 2.0 * theta_max
    if not clip > 0:
        raise ValueError("clip must be positive")
    gamma, s_floor, clip = float(gamma), float(s_floor), float(clip)

    def lookup(m):
        m = np.asarray(m, dtype=float)
        idx = np.clip(np.searchsorted(keys, m), 0, keys.size - 1)
        if np.any(keys[idx] != m):
            raise ValueError(f"unknown message symbol(s): {np.unique(m[keys[idx] != m]).tolist()}")
        return vals[idx]

    def func(s, m, times, values):
        est = np.clip(_latest(values) / max(s, s_floor), -clip, clip)
        return gamma * (lookup(m) - est)

    lip = abs(gamma) * max(1.0, clip) / s_floor
    growth = abs(gamma) * (theta_max + clip)
    return ChannelDrift(
        func,
        lip,
        growth,
        feedback=True,
        alphabet=tuple(keys),
        name="sk_linear_feedback",
        params={"gamma": gamma, "theta": dict(zip(keys.tolist(), vals.tolist())), "s_floor": s_floor, "clip": clip},
    )


def builtin_saturated_feedback(L: float, alphabet=(-1.0, 1.0)) -> ChannelDrift:
    """``g(s, m, y_0^s) = L tanh(m + y(s))``: bounded by L and L-Lipschitz."""
    if not L > 0:
        raise ValueError("L must be positive")
    L = float(L)

    def func(s, m, times, values):
        return L * np.tanh(np.asarray(m, dtype=float) + _latest(values))

    return ChannelDrift(
        func, L, L, feedback=True, alphabet=tuple(float(a) for a in alphabet), name="saturated_feedback", params={"L": L}
    )


BUILTINS = {
    "zero": builtin_zero,
    "constant_antipodal": builtin_constant_antipodal,
    "sk_linear_feedback": builtin_sk_linear_feedback,
    "saturated_feedback": builtin_saturated_feedback,
}


@dataclass(frozen=True)
class ConditionReport:
    probes: int
    lipschitz_ratio: float
    growth_ratio: float
    declared_lipschitz: float
    declared_growth: float
    lipschitz_violation: bool
    growth_violation: bool
    feedback_consistent: bool

    @property
    def violation(self) -> bool:
        return self.lipschitz_violation or self.growth_violation or not self.feedback_consistent


def _stopped(times, values, s, pts):
    """Values at ``pts`` of the path prefix on ``[0, s]`` held constant after ``s``."""
    return np.interp(np.minimum(pts, s), times, values)


def _prefix(times, values, s):
    k = int(np.searchsorted(times, s, side="right"))
    t, v = times[:k], values[:k]
    if t[-1] < s:
        t = np.append(t, s)
        v = np.append(v, np.interp(s, times, values))
    return t, v


def check_conditions(drift: ChannelDrift, probes: int, seed: int, T: float = 1.0, n_knots: int = 64) -> ConditionReport:
    """Probe the uniform Lipschitz and linear-growth claims of a drift.

    Each probe draws two random paths on ``[0, T]`` (scaled Brownian motion
    plus an offset), cut at random times, and a shared message. Half the probes
    are local: the second path is a small perturbation of the first with
    nearby times, which is where a too-small Lipschitz constant shows up.
    """
    if probes < 1:
        raise ValueError("probes must be >= 1")
    rng = np.random.default_rng(seed)
    knots = np.linspace(0.0, T, n_knots + 1)
    alphabet = np.array(drift.alphabet)
    worst_lip = 0.0
    worst_growth = 0.0
    consistent = True
    for k in range(probes):
        m = rng.choice(alphabet)
        scale = rng.choice([0.1, 1.0, 5.0])
        y = np.concatenate([[0.0], np.cumsum(rng.standard_normal(n_knots))]) * scale * np.sqrt(T / n_knots)
        y = y + rng.normal(0.0, scale)
        s1, s2 = rng.uniform(0.0, T, size=2)
        if k % 2:
            eps = 10.0 ** rng.uniform(-6, -1)
            z = y + eps * rng.standard_normal(y.size)
            t1 = min(max(s1 + eps * rng.standard_normal(), 0.0), T)
            t2 = min(max(s2 + eps * rng.standard_normal(), 0.0), T)
        else:
            z = np.concatenate([[0.0], np.cumsum(rng.standard_normal(n_knots))]) * scale * np.sqrt(T / n_knots)
            z = z + rng.normal(0.0, scale)
            t1, t2 = rng.uniform(0.0, T, size=2)
        ty, vy = _prefix(knots, y, s2)
        tz, vz = _prefix(knots, z, t2)
        gy = float(drift(s1, np.asarray(m), ty, vy))
        gz = float(drift(t1, np.asarray(m), tz, vz))
        pts = np.unique(np.concatenate([knots, [s2, t2]]))
        dist = float(np.max(np.abs(_stopped(ty, vy, s2, pts) - _stopped(tz, vz, t2, pts))))
        denom = abs(s1 - t1) + dist
        if denom > 0:
            worst_lip = max(worst_lip, abs(gy - gz) / denom)
        worst_growth = max(worst_growth, abs(gy) / (1.0 + float(np.max(np.abs(vy)))))
        if not drift.feedback:
            if float(drift(s1, np.asarray(m), tz, vz)) != gy:
                consistent = False
    return ConditionReport(
        probes=probes,
        lipschitz_ratio=worst_lip,
        growth_ratio=worst_growth,
        declared_lipschitz=drift.lipschitz_L,
        declared_growth=drift.growth_L,
        lipschitz_violation=worst_lip > drift.lipschitz_L * (1 + 1e-9) + 1e-300,
        growth_violation=worst_growth > drift.growth_L * (1 + 1e-9) + 1e-300,
        feedback_consistent=consistent,
    )


@dataclass(frozen=True)
class PowerEstimate:
    value: float
    stderr: float
    n_paths: int


def estimate_average_power(spec: ChannelSpec, grid: TimeGrid, n_paths: int, seed: int, threads: int = 1) -> PowerEstimate:
    """Monte Carlo ``(1/T) int_0^T E[g^2] ds`` along Euler-Maruyama paths.

    The time integral is the left-endpoint sum over ``grid``, with the drift
    evaluated on the prefix frozen at each left endpoint.
    """
    from .discretize import em_batch

    if n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    pts = grid.points
    steps = grid.steps

    def chunk(lo, hi):
        run = em_batch(spec, grid, seed, lo, hi)
        acc = np.zeros(hi - lo)
        for i in range(grid.n):
            g = spec.drift(pts[i], run.m, pts[: i + 1], run.Y[:, : i + 1])
            acc += steps[i] * g * g
        return acc / grid.T

    per_path = np.concatenate(_mc.map_chunks(chunk, n_paths, threads))
    value, se = _mc.batch_means(per_path)
    return PowerEstimate(value, se, n_paths)


__all__ = [
    "Message",
    "ChannelDrift",
    "ChannelSpec",
    "ConditionReport",
    "PowerEstimate",
    "BUILTINS",
    "builtin_zero",
    "builtin_constant_antipodal",
    "builtin_sk_linear_feedback",
    "builtin_saturated_feedback",
    "check_conditions",
    "estimate_average_power",
]
