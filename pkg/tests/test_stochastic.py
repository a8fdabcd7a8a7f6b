import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussfb.stochastic import (
    BrownianPath,
    SamplePath,
    TimeGrid,
    bridge_refine,
    make_even_grid,
    refine_grid,
    sample_brownian,
    sup_distance,
)


def test_even_grid_single_step():
    g = make_even_grid(1.0, 1)
    assert list(g.points) == [0.0, 1.0]
    assert g.max_step == 1.0
    assert g.is_even


def test_even_grid_four_steps():
    g = make_even_grid(2.0, 4)
    np.testing.assert_array_equal(g.points, [0.0, 0.5, 1.0, 1.5, 2.0])
    assert g.max_step == 0.5


@pytest.mark.parametrize("T,n", [(1.0, 0), (1.0, -3), (0.0, 4), (-1.0, 2)])
def test_even_grid_rejects_bad_arguments(T, n):
    with pytest.raises(ValueError):
        make_even_grid(T, n)


@pytest.mark.parametrize("pts", [[0.0], [0.1, 1.0], [0.0, 0.5, 0.5, 1.0], [0.0, 0.7, 0.3, 1.0]])
def test_time_grid_invariants(pts):
    with pytest.raises(ValueError):
        TimeGrid(np.array(pts))


def test_uneven_grid_is_not_even():
    assert not TimeGrid(np.array([0.0, 0.3, 1.0])).is_even


def test_refine_examples():
    np.testing.assert_array_equal(refine_grid(make_even_grid(1.0, 1), 2).points, [0.0, 0.5, 1.0])
    np.testing.assert_array_equal(refine_grid(make_even_grid(1.0, 2), 2).points, [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ValueError):
        refine_grid(make_even_grid(1.0, 2), 1)


def test_refine_nests_random_grids():
    rng = np.random.default_rng(0)
    for _ in range(100):
        inner = np.sort(rng.uniform(0, 3.0, size=rng.integers(1, 12)))
        g = TimeGrid(np.unique(np.concatenate([[0.0], inner, [3.0]])))
        f = refine_grid(g, int(rng.integers(2, 6)))
        assert np.isin(g.points, f.points).all()
        assert g.nests_in(f)
        assert f.n == g.n * (f.n // g.n)


def test_sample_brownian_starts_at_zero_and_is_deterministic():
    g = make_even_grid(1.0, 32)
    for seed in range(20):
        p = sample_brownian(g, seed)
        assert p.values[0] == 0.0
    a, b = sample_brownian(g, 7), sample_brownian(g, 7)
    assert a.values.tobytes() == b.values.tobytes()


def test_brownian_terminal_variance():
    g = make_even_grid(1.0, 1)
    n = 100_000
    ends = np.array([sample_brownian(g, s).values[-1] for s in range(n)])
    assert abs(np.mean(ends**2) - 1.0) <= 3 * np.sqrt(2 / n)


def test_brownian_path_requires_zero_start():
    with pytest.raises(ValueError):
        BrownianPath(make_even_grid(1.0, 1), np.array([0.1, 0.3]))


def test_interpolation_and_prefix():
    p = SamplePath(make_even_grid(1.0, 2), np.array([0.0, 1.0, -1.0]))
    assert p(0.25) == 0.5
    assert p(0.75) == 0.0
    t, v = p.prefix(0.75)
    np.testing.assert_allclose(t, [0.0, 0.5, 0.75])
    np.testing.assert_allclose(v, [0.0, 1.0, 0.0])
    assert p.sup_norm(0.25) == 0.5
    assert p.sup_norm() == 1.0


def test_bridge_restriction_is_exact():
    c = make_even_grid(1.0, 4)
    f = refine_grid(c, 8)
    p = sample_brownian(c, 3)
    q = bridge_refine(p, f, 11)
    assert q.restrict(c).values.tobytes() == p.values.tobytes()


def test_bridge_midpoint_variance():
    c = TimeGrid(np.array([0.0, 0.4, 1.0]))
    f = refine_grid(c, 2)
    p = BrownianPath(c, np.array([0.0, 0.3, -0.2]))
    n = 100_000
    mids = np.array([bridge_refine(p, f, s).values[3] for s in range(n)])
    # step (0.4, 1.0): mean is the chord midpoint, variance (b - a) / 4
    assert abs(mids.mean() - 0.05) < 4 * np.sqrt(0.15 / n)
    assert abs(mids.var() - 0.15) < 4 * 0.15 * np.sqrt(2 / n)


def test_bridge_requires_nesting():
    c = make_even_grid(1.0, 3)
    with pytest.raises(ValueError):
        bridge_refine(sample_brownian(c, 0), make_even_grid(1.0, 4), 0)


def test_sup_distance_examples():
    g = make_even_grid(1.0, 1)
    a = SamplePath(g, np.zeros(2))
    b = SamplePath(g, np.array([0.0, 2.0]))
    assert sup_distance(a, a) == 0.0
    assert sup_distance(a, b) == 2.0


def test_sup_distance_across_grids():
    a = SamplePath(make_even_grid(1.0, 2), np.array([0.0, 1.0, 0.0]))
    b = SamplePath(make_even_grid(1.0, 1), np.zeros(2))
    assert sup_distance(a, b) == 1.0
    with pytest.raises(ValueError):
        sup_distance(a, SamplePath(make_even_grid(2.0, 1), np.zeros(2)))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 3, 8]), st.sampled_from([2, 5, 16]))
def test_triangle_inequality(seed, n1, n2):
    rng = np.random.default_rng(seed)
    paths = [
        SamplePath(make_even_grid(1.0, n), rng.normal(size=n + 1)) for n in (n1, n2, max(n1, n2) * 2)
    ]
    a, b, c = paths
    assert sup_distance(a, c) <= sup_distance(a, b) + sup_distance(b, c) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 100.0), st.integers(1, 500))
def test_even_grid_property(T, n):
    g = make_even_grid(T, n)
    assert g.points[0] == 0.0 and g.points[-1] == T
    assert np.all(np.diff(g.points) > 0)
    assert g.is_even
    assert g.max_step == pytest.approx(T / n)
