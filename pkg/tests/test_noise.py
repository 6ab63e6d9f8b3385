"""Sinogram noise generation tests: determinism, moments, independence."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

import lranoise as lr


@pytest.fixture(scope="module")
def grid():
    return lr.build_grid(epsilon=1e-2, kappa=2.0 * math.pi)


def test_draw_determinism(grid, field):
    a = lr.draw_noise(grid, field, "uniform", seed=11, sample_index=3)
    b = lr.draw_noise(grid, field, "uniform", seed=11, sample_index=3)
    np.testing.assert_array_equal(a.values, b.values)


def test_distinct_samples_differ(grid, field):
    a = lr.draw_noise(grid, field, "uniform", seed=11, sample_index=0)
    b = lr.draw_noise(grid, field, "uniform", seed=11, sample_index=1)
    c = lr.draw_noise(grid, field, "uniform", seed=12, sample_index=0)
    assert not np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_draw_shape_and_zero_field(grid):
    zero = lr.make_sigma2_constant(0.0)
    draw = lr.draw_noise(grid, zero, "gaussian", seed=1)
    assert draw.values.shape == (grid.n_angles, grid.n_detectors)
    np.testing.assert_array_equal(draw.values, 0.0)


@pytest.mark.parametrize("distribution", ["uniform", "gaussian"])
def test_entry_variance_matches_field(grid, field, distribution):
    """Averaging squared entries over draws recovers sigma^2 delta_alpha."""
    n = 400
    acc = np.zeros((grid.n_angles, grid.n_detectors))
    for s in range(n):
        acc += lr.draw_noise(grid, field, distribution, seed=5, sample_index=s
                             ).values ** 2
    mean_sq = acc.mean() / n
    target = float(
        np.mean(field(grid.angles[:, None], grid.detectors[None, :]))
        * grid.delta_alpha
    )
    # 5 standard errors on the grand mean
    assert mean_sq == pytest.approx(target, rel=0.02)


def test_entries_uncorrelated(grid, field):
    draw = lr.draw_noise(grid, field, "uniform", seed=3)
    flat = draw.values.ravel()
    flat = (flat - flat.mean()) / flat.std()
    lag1 = float(np.mean(flat[:-1] * flat[1:]))
    assert abs(lag1) < 4.0 / math.sqrt(flat.size)


def test_uniform_range(grid, field):
    draw = lr.draw_noise(grid, field, "uniform", seed=9)
    bound = np.sqrt(
        3.0 * field(grid.angles[:, None], grid.detectors[None, :])
        * grid.delta_alpha
    )
    assert np.all(np.abs(draw.values) <= bound + 1e-15)


def test_unknown_distribution(grid, field):
    with pytest.raises(ValueError):
        lr.draw_noise(grid, field, "laplace", seed=0)


def test_negative_variance_rejected():
    with pytest.raises(ValueError):
        lr.make_sigma2_constant(-1.0)
    grid = lr.build_grid(epsilon=1e-2, kappa=2.0 * math.pi)
    bad = lr.make_sigma2_custom(lambda a, p: np.sin(50.0 * a) - 0.5)
    with pytest.raises(ValueError):
        lr.noise_scale(grid, bad, "uniform")


@pytest.mark.parametrize("distribution", ["uniform", "gaussian"])
def test_absolute_third_moment_closed_form(distribution):
    """E|eta|^3 from the closed form vs direct density quadrature."""
    s2 = 0.37
    if distribution == "uniform":
        a = math.sqrt(3.0 * s2)
        val, _ = quad(lambda x: abs(x) ** 3 / (2.0 * a), -a, a)
    else:
        sd = math.sqrt(s2)
        val, _ = quad(
            lambda x: abs(x) ** 3 * math.exp(-x ** 2 / (2 * s2))
            / (sd * math.sqrt(2 * math.pi)),
            -12 * sd,
            12 * sd,
            limit=200,
        )
    assert lr.absolute_third_moment(s2, distribution) == pytest.approx(
        val, rel=1e-9
    )


@pytest.mark.parametrize("distribution", ["uniform", "gaussian"])
def test_third_moment_bound(grid, field, distribution):
    report = lr.third_moment_bound_check(grid, field, distribution)
    assert report["holds"]
    assert report["max_third_moment"] <= report["bound"] * (1 + 1e-12)


def test_variance_field_roundtrip(field):
    restored = lr.VarianceField.from_dict(field.to_dict())
    a = np.linspace(0, 2 * math.pi, 17)
    p = np.linspace(-1, 1, 17)
    np.testing.assert_array_equal(field(a, p), restored(a, p))
    with pytest.raises(ValueError):
        lr.make_sigma2_custom(lambda a, p: a * 0 + 1).to_dict()


def test_product_field_bounds(field):
    a = np.linspace(0, 2 * math.pi, 301)
    p = np.linspace(-1, 1, 301)
    vals = field(a[:, None], p[None, :])
    assert np.min(vals) >= 1.0 / 12.0 - 1e-12
    assert np.max(vals) <= 0.75 + 1e-12
