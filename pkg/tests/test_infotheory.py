import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtri

from gaussfb.channels import (
    ChannelSpec,
    Message,
    builtin_constant_antipodal,
    builtin_saturated_feedback,
    builtin_sk_linear_feedback,
    builtin_zero,
)
from gaussfb.discretize import simulate_em
from gaussfb.infotheory import (
    bpsk_awgn_oracle,
    capacity_band,
    mi_bound_chain,
    mi_cmmse,
    mi_convergence_study,
    mi_plugin,
    posterior_weights,
)
from gaussfb.stochastic import BrownianPath, make_even_grid, sample_brownian

# Frozen before the estimators were written: Gauss-Hermite quadrature with
# 128 nodes; adaptive quadrature and stratified Monte Carlo agree.
BPSK_SNR1 = 0.33683082034683176


def _spec(drift, prior=None, T=1.0, P=2.0):
    msg = Message.uniform(drift.alphabet) if prior is None else Message(drift.alphabet, prior)
    return ChannelSpec(drift, msg, T, P)


def _sk():
    return builtin_sk_linear_feedback(1.0, {-1.0: -1.0, 1.0: 1.0}, s_floor=1 / 32)


def test_golden_value_quadrature():
    assert bpsk_awgn_oracle(1.0) == pytest.approx(BPSK_SNR1, abs=1e-14)
    assert bpsk_awgn_oracle(1.0, nodes=256) == pytest.approx(BPSK_SNR1, abs=1e-13)


def test_golden_value_stratified_monte_carlo():
    # 10^7 stratified samples of Y ~ N(1, 1), the sufficient statistic given X = +1
    n, chunk = 10_000_000, 1_000_000
    rng = np.random.default_rng(20240101)
    total = 0.0
    for lo in range(0, n, chunk):
        u = (np.arange(lo, lo + chunk) + rng.random(chunk)) / n
        y = 1.0 + ndtri(u)
        total += np.logaddexp(0.0, -2.0 * y).sum()
    mc = np.log(2.0) - total / n
    assert round(mc, 4) == round(BPSK_SNR1, 4)


def test_oracle_limits():
    assert bpsk_awgn_oracle(0.0) == 0.0
    assert bpsk_awgn_oracle(400.0) == pytest.approx(np.log(2), abs=1e-12)
    with pytest.raises(ValueError):
        bpsk_awgn_oracle(-1.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.001, 50.0), st.floats(1.01, 2.0))
def test_oracle_monotone_and_bounded(snr, k):
    lo, hi = bpsk_awgn_oracle(snr), bpsk_awgn_oracle(snr * k)
    assert 0 < lo <= hi + 1e-15 <= np.log(2) + 1e-12


def test_capacity_examples():
    assert capacity_band(2.0, 1.0) == pytest.approx(np.log(2), rel=1e-15)
    assert capacity_band(2.0, 100.0) == pytest.approx(100 * np.log(1.01), rel=1e-12)
    assert capacity_band(2.0, 10.0) == pytest.approx(10 * np.log(1.1), rel=1e-12)
    assert abs(capacity_band(2.0, 100.0) - 1.0) < 0.005


def test_capacity_sweep_monotone_and_bounded():
    caps = [capacity_band(2.0, 2.0**k) for k in range(21)]
    assert all(b > a for a, b in zip(caps, caps[1:]))
    assert all(c <= 1.0 for c in caps)
    assert abs(capacity_band(2.0, 2.0**20 * 2.0) - 1.0) < 1e-6


def test_capacity_rejects_nonpositive():
    with pytest.raises(ValueError):
        capacity_band(0.0, 1.0)
    with pytest.raises(ValueError):
        capacity_band(1.0, -1.0)


def test_posterior_zero_drift_is_prior():
    g = make_even_grid(1.0, 8)
    spec = _spec(builtin_zero())
    w = posterior_weights(spec, simulate_em(builtin_zero(), 1.0, g, sample_brownian(g, 0)))
    assert w.weights.tolist() == [0.5, 0.5]


def test_posterior_single_symbol():
    spec = _spec(builtin_saturated_feedback(1.0, alphabet=(0.5,)))
    g = make_even_grid(1.0, 8)
    w = posterior_weights(spec, simulate_em(spec.drift, 0.5, g, sample_brownian(g, 0)))
    assert w.weights.tolist() == [1.0]


@pytest.mark.parametrize("y", [-2.0, -0.3, 0.0, 0.8, 3.0])
def test_posterior_likelihood_ratio_one_step(y):
    g = make_even_grid(1.0, 1)
    spec = _spec(builtin_constant_antipodal(1.0))
    em = simulate_em(spec.drift, 1.0, g, BrownianPath(g, np.array([0.0, y - 1.0])))
    w = posterior_weights(spec, em)
    assert w[1] / w[-1] == pytest.approx(np.exp(2 * em.values[1]), rel=1e-12)
    assert w.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_posterior_does_not_underflow_in_log_space():
    g = make_even_grid(1.0, 1)
    spec = _spec(builtin_constant_antipodal(12.0))
    em = simulate_em(spec.drift, 1.0, g, BrownianPath(g, np.array([0.0, 0.0])))
    w = posterior_weights(spec, em)
    # log-likelihood gap 2 * 12 * 12 = 288 nats < 700: weight must stay positive
    assert 0 < w[-1] < 1e-120


def test_zero_drift_estimators_exactly_zero():
    spec = _spec(builtin_zero())
    g = make_even_grid(1.0, 16)
    for est in (mi_plugin(spec, g, 500, 1), mi_cmmse(spec, g, 500, 1)):
        assert est.value == 0.0 and est.stderr == 0.0
    chain = mi_bound_chain(spec, g, 500, 1)
    assert (chain.b_log, chain.b_power, chain.b_half_pt) == (0.0, 0.0, 1.0)


def test_point_mass_prior_gives_zero():
    spec = _spec(builtin_saturated_feedback(1.0), prior=[0.0, 1.0])
    g = make_even_grid(1.0, 16)
    assert mi_cmmse(spec, g, 500, 2).value == 0.0
    assert mi_plugin(spec, g, 500, 2).value == 0.0


def test_plugin_matches_oracle():
    est = mi_plugin(_spec(builtin_constant_antipodal(1.0)), make_even_grid(1.0, 32), 20_000, 3)
    assert abs(est.value - BPSK_SNR1) <= 3 * est.stderr


def test_cmmse_matches_plugin_antipodal():
    spec = _spec(builtin_constant_antipodal(1.0))
    g = make_even_grid(1.0, 64)
    a, b = mi_plugin(spec, g, 20_000, 4), mi_cmmse(spec, g, 20_000, 4)
    assert abs(a.value - b.value) <= 3 * np.hypot(a.stderr, b.stderr)


@pytest.mark.parametrize("drift", [builtin_saturated_feedback(1.0), _sk()], ids=["saturated", "sk"])
def test_plugin_below_entropy(drift):
    est = mi_plugin(_spec(drift), make_even_grid(1.0, 16), 4000, 5)
    assert est.value <= np.log(2) + 3 * est.stderr
    assert est.method == "plugin"


def test_bound_chain_antipodal_closed_form():
    chain = mi_bound_chain(_spec(builtin_constant_antipodal(1.0)), make_even_grid(1.0, 4), 1000, 0)
    assert chain.b_power == pytest.approx(0.5, abs=1e-12)
    assert chain.b_log == pytest.approx(2 * np.log(1.25), abs=1e-12)
    assert round(chain.b_log, 4) == 0.4463


@pytest.mark.parametrize(
    "drift",
    [builtin_constant_antipodal(1.0), builtin_saturated_feedback(1.0), _sk()],
    ids=["antipodal", "saturated", "sk"],
)
def test_bound_chain_ordering(drift):
    spec = _spec(drift)
    g = make_even_grid(1.0, 32)
    chain = mi_bound_chain(spec, g, 4000, 6)
    plug = mi_plugin(spec, g, 4000, 6)
    assert chain.b_log <= chain.b_power
    assert plug.value <= chain.b_log + 3 * np.hypot(plug.stderr, chain.stderr)
    assert chain.b_power <= chain.b_half_pt + 3 * chain.stderr


def test_convergence_zero_drift():
    rows = mi_convergence_study(_spec(builtin_zero()), make_even_grid(1.0, 4), 3, 200, 0)
    assert [r.value for r in rows] == [0.0, 0.0, 0.0]
    assert [r.n for r in rows] == [4, 8, 16]


def test_convergence_level0_matches_plugin():
    spec = _spec(builtin_saturated_feedback(1.0))
    g = make_even_grid(1.0, 8)
    rows = mi_convergence_study(spec, g, 2, 1000, 7)
    assert rows[0].value == pytest.approx(mi_plugin(spec, g, 1000, 7).value, rel=1e-12)


def test_convergence_antipodal_near_oracle():
    rows = mi_convergence_study(_spec(builtin_constant_antipodal(1.0)), make_even_grid(1.0, 8), 3, 10_000, 8)
    for r in rows:
        assert abs(r.value - BPSK_SNR1) <= 3 * r.stderr
    for a, b in zip(rows, rows[1:]):
        assert b.value >= a.value - 3 * np.hypot(a.stderr, b.stderr)


def test_convergence_saturated_cauchy():
    rows = mi_convergence_study(_spec(builtin_saturated_feedback(1.0)), make_even_grid(1.0, 8), 3, 5000, 9)
    a, b = rows[-2], rows[-1]
    assert abs(a.value - b.value) < 3 * np.hypot(a.stderr, b.stderr)


def test_estimators_are_thread_invariant():
    spec = _spec(builtin_saturated_feedback(1.0))
    g = make_even_grid(1.0, 8)
    a = mi_plugin(spec, g, 9000, 10, threads=1)
    b = mi_plugin(spec, g, 9000, 10, threads=3)
    assert a == b
