import numpy as np
import pytest

from gaussfb.coding import (
    POWER_FRACTION,
    CodeConfig,
    calibrate,
    error_rate_curve,
    sk_design,
    sk_drift,
    sk_transmit,
)
from gaussfb.discretize import simulate_em
from gaussfb.stochastic import BrownianPath, make_even_grid, sample_brownian


def _cfg(rate=0.4, T=2.0, P=2.0, dt=1 / 64):
    return CodeConfig(rate, T, P, make_even_grid(T, round(T / dt)))


def test_message_count_and_lattice():
    cfg = _cfg(T=4.0)
    assert cfg.n_messages == int(np.ceil(np.exp(1.6)))
    lat = cfg.lattice
    assert lat[0] == -1.0 and lat[-1] == 1.0 and lat.size == cfg.n_messages


def test_single_message_code_rejected():
    with pytest.raises(ValueError):
        CodeConfig(1e-14, 1.0, 2.0, make_even_grid(1.0, 4))
    with pytest.raises(ValueError):
        CodeConfig(0.4, 1.0, 2.0, make_even_grid(2.0, 4))


def test_noiseless_two_message_decoding():
    cfg = CodeConfig(0.3, 2.0, 2.0, make_even_grid(2.0, 32))
    assert cfg.n_messages == 2
    b = BrownianPath(cfg.grid, np.zeros(cfg.grid.n + 1))
    for k in (1, 2):
        r = sk_transmit(cfg, k, b)
        assert r.decoded == k and not r.error


def test_transmit_deterministic_and_validates_index():
    cfg = _cfg()
    b = sample_brownian(cfg.grid, 12)
    assert sk_transmit(cfg, 2, b) == sk_transmit(cfg, 2, b)
    with pytest.raises(ValueError):
        sk_transmit(cfg, 0, b)
    with pytest.raises(ValueError):
        sk_transmit(cfg, cfg.n_messages + 1, b)


def test_recursion_matches_generic_simulator():
    cfg = _cfg(T=1.0, dt=1 / 16)
    design = sk_design(cfg, 1.5)
    drift = sk_drift(cfg, design)
    b = sample_brownian(cfg.grid, 3)
    for k in range(1, cfg.n_messages + 1):
        path = simulate_em(drift, float(k), cfg.grid, b)
        est = np.diff(path.values) @ design.kalman_gain
        r = sk_transmit(cfg, k, b, design)
        decoded = int(np.argmin(np.abs(est - cfg.lattice))) + 1
        assert decoded == r.decoded


def test_calibration_hits_target_power():
    cfg = _cfg(T=4.0)
    design = calibrate(cfg, 0)
    powers = [sk_transmit(cfg, 1 + s % cfg.n_messages, sample_brownian(cfg.grid, s), design).realized_power for s in range(2000)]
    assert np.mean(powers) == pytest.approx(POWER_FRACTION * cfg.P, rel=0.05)


def test_error_rate_decreases_below_capacity():
    rows = error_rate_curve(_cfg(), [2.0, 4.0, 8.0], 4000, 1)
    for a, b in zip(rows, rows[1:]):
        assert b.p_error < a.p_error + 2 * np.hypot(a.stderr, b.stderr)
    for r in rows:
        assert 0.0 <= r.p_error <= 1.0 and 0.0 < r.stderr <= 0.5
        assert r.power_mean <= 2.0 + 3 * r.power_stderr
        assert not r.power_violation


def test_zero_rate_limit():
    base = CodeConfig(0.01, 1.0, 0.5, make_even_grid(1.0, 16))
    rows = error_rate_curve(base, [1.0, 4.0, 16.0], 4000, 2)
    assert all(r.n_messages == 2 for r in rows)
    assert rows[-1].p_error < rows[0].p_error
    assert rows[-1].p_error < 0.01


def test_error_rate_curve_is_thread_invariant():
    a = error_rate_curve(_cfg(), [2.0], 5000, 3, threads=1)
    b = error_rate_curve(_cfg(), [2.0], 5000, 3, threads=2)
    assert a == b


def test_error_rate_curve_requires_trials():
    with pytest.raises(ValueError):
        error_rate_curve(_cfg(), [2.0], 10, 0)
