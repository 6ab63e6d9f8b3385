"""Limiting covariance, lattice sums, and moment asymptotics tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import lranoise as lr


def test_cov_constant_field_closed_form(ac):
    """With constant sigma^2 the angular integral factorizes exactly."""
    const = lr.make_sigma2_constant(0.4)
    kappa = 2.0 * math.pi
    c0 = lr.predicted_cov_scalar((0.0, 0.0), (0.3, 0.1), const, ac, kappa)
    closed = (kappa / (4.0 * math.pi)) ** 2 * 0.4 * 2.0 * math.pi * ac(0.0)
    assert c0 == pytest.approx(closed, rel=1e-12)


def test_cov_even(field, ac, x0):
    kappa = 2.0 * math.pi
    for v in [(0.3, 0.4), (1.1, -0.7), (2.5, 0.1)]:
        plus = lr.predicted_cov_scalar(v, x0, field, ac, kappa)
        minus = lr.predicted_cov_scalar((-v[0], -v[1]), x0, field, ac, kappa)
        assert plus == pytest.approx(minus, abs=1e-12)


def test_cov_quadrature_converged(field, ac, x0):
    kappa = 2.0 * math.pi
    coarse = lr.predicted_cov_scalar((0.5, 0.2), x0, field, ac, kappa, nodes=1024)
    fine = lr.predicted_cov_scalar((0.5, 0.2), x0, field, ac, kappa, nodes=8192)
    assert coarse == pytest.approx(fine, rel=1e-10)
    with pytest.raises(ValueError):
        lr.predicted_cov_scalar((0.0, 0.0), x0, field, ac, kappa, nodes=100)


def test_cov_matrix_structure(field, ac, x0, chx):
    patch = lr.LocalPatch(
        x0=x0, offsets=((0.0, 0.0), chx, (1.0, -0.5)), epsilon=1e-3
    )
    pred = lr.predicted_cov_matrix(patch, field, ac, 2.0 * math.pi)
    mat = pred.matrix
    np.testing.assert_allclose(mat, mat.T, atol=1e-14)
    assert np.all(np.diag(mat) == pytest.approx(pred.c0, rel=1e-12))
    assert np.min(np.linalg.eigvalsh(mat)) > -1e-10
    assert pred.quadrature_error < 1e-10


def test_psi_periodic_in_first_argument(fk):
    probe = lr.psi_sum(0.37, 0.81, fk)
    shifted = lr.psi_sum(1.37, 0.81, fk)
    assert abs(probe.psi_value - shifted.psi_value) <= 2 * probe.psi_tail_bound


@given(
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=-2.0, max_value=2.0),
)
@settings(max_examples=50, deadline=None)
def test_psi_finite_and_positive(a, b):
    fk = lr.build_filtered_kernel(lr.keys_kernel())
    probe = lr.psi_sum(a, b, fk)
    assert 0.0 < probe.psi_value < 10.0
    assert 0.0 < probe.big_psi_value < 10.0
    assert lr.big_psi_sum(a, b, fk) == probe.big_psi_value


def test_psi_mean_equals_energy(fk):
    """The average of psi over a unit period is int (Hphi')^2."""
    energy = fk.integral_of_square()
    rs = (np.arange(500) + 0.5) / 500.0
    for b in (0.0, 0.3, 0.55, 0.8, 1.7):
        mean = np.mean([lr.psi_sum(r, b, fk).psi_value for r in rs])
        assert mean == pytest.approx(energy, abs=1e-4)


def test_psi_truncation_guard(fk):
    with pytest.raises(ValueError):
        lr.psi_sum(0.1, 0.0, fk, J=10)


def test_d_epsilon_limit_constant_field(fk):
    const = lr.make_sigma2_constant(0.25)
    limit = lr.d_epsilon_limit((0.3, 0.2), const, fk)
    assert limit == pytest.approx(
        2.0 * math.pi * 0.25 * fk.integral_of_square(), rel=1e-12
    )


def test_d_epsilon_approaches_limit(field, fk, x0, chx):
    limit = lr.d_epsilon_limit(x0, field, fk)
    grid = lr.build_grid(epsilon=2.0 ** -9, kappa=2.0 * math.pi)
    d = lr.d_epsilon(grid, x0, (0.5 * chx[0], 0.5 * chx[1]), field, fk)
    assert d == pytest.approx(limit, rel=0.02)


def test_lyapunov_single_equals_multi_k1(field, fk, x0, chx):
    grid = lr.build_grid(epsilon=1e-2, kappa=2.0 * math.pi)
    single = lr.lyapunov_ratio(grid, x0, chx, field, fk, "uniform")
    multi = lr.lyapunov_ratio_multi(
        grid, x0, [chx], [1.0], field, fk, "uniform"
    )
    assert single == multi


def test_lyapunov_zero_theta_rejected(field, fk, x0, chx):
    grid = lr.build_grid(epsilon=1e-2, kappa=2.0 * math.pi)
    with pytest.raises(ValueError):
        lr.lyapunov_ratio_multi(
            grid, x0, [chx], [0.0], field, fk, "uniform"
        )


def test_lyapunov_decreases_with_epsilon(field, fk, x0, chx):
    grids = [
        lr.build_grid(epsilon=e, kappa=2.0 * math.pi)
        for e in (1 / 50, 1 / 200, 1 / 800)
    ]
    ratios = [
        lr.lyapunov_ratio(g, x0, chx, field, fk, "uniform") for g in grids
    ]
    assert ratios[0] > ratios[1] > ratios[2] > 0.0


def test_second_moment_matches_prediction(field, fk, ac, x0, chx):
    """The exact finite-epsilon second moment approaches theta^T C theta."""
    eps = 1e-3
    grid = lr.build_grid(epsilon=eps, kappa=2.0 * math.pi)
    patch = lr.LocalPatch(x0=x0, offsets=((0.0, 0.0), chx), epsilon=eps)
    pred = lr.predicted_cov_matrix(patch, field, ac, grid.kappa).matrix
    for theta in ([1.0, 0.0], [0.0, 1.0], [1.0, -1.0]):
        exact, frozen = lr.second_moment_multi(
            grid, x0, patch, theta, field, fk
        )
        target = float(np.asarray(theta) @ pred @ np.asarray(theta))
        assert exact == pytest.approx(target, rel=0.05)
        assert frozen == pytest.approx(target, rel=0.05)
