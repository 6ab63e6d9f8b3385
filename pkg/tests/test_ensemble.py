"""Monte Carlo ensemble machinery tests."""

import math

import numpy as np
import pytest

import lranoise as lr


@pytest.fixture(scope="module")
def setup(field, fk, x0, chx):
    grid = lr.build_grid(epsilon=1e-2, kappa=2.0 * math.pi)
    patch = lr.LocalPatch(x0=x0, offsets=((0.0, 0.0), chx), epsilon=grid.epsilon)
    return grid, patch


def test_determinism_across_thread_counts(setup, field, fk):
    grid, patch = setup
    runs = [
        lr.run_ensemble(
            1000, grid, patch, field, "uniform", fk, master_seed=7,
            threads=t, hist_half_width=4.0,
        )
        for t in (1, 2, 4)
    ]
    assert runs[0].fingerprint == runs[1].fingerprint == runs[2].fingerprint
    np.testing.assert_array_equal(runs[0].cov, runs[2].cov)
    np.testing.assert_array_equal(runs[0].hist_counts, runs[2].hist_counts)


def test_seed_changes_output(setup, field, fk):
    grid, patch = setup
    a = lr.run_ensemble(500, grid, patch, field, "uniform", fk, 1,
                        hist_half_width=4.0)
    b = lr.run_ensemble(500, grid, patch, field, "uniform", fk, 2,
                        hist_half_width=4.0)
    assert a.fingerprint != b.fingerprint


def test_minimum_samples(setup, field, fk):
    grid, patch = setup
    with pytest.raises(ValueError):
        lr.run_ensemble(1, grid, patch, field, "uniform", fk, 0)


def test_histogram_accounting(setup, field, fk):
    grid, patch = setup
    stats = lr.run_ensemble(2000, grid, patch, field, "uniform", fk, 3,
                            hist_half_width=6.0)
    # wide box: every sample lands in some bin
    assert stats.hist_counts.sum() == stats.n_samples
    assert stats.hist_counts.shape == (20, 20)


def test_marginal_variance(setup, field, fk, ac, x0):
    grid, patch = setup
    c_eps = lr.second_moment_multi(
        grid, x0, patch, [1.0, 0.0], field, fk
    )[0]
    n = 20000
    stats = lr.run_ensemble(n, grid, patch, field, "uniform", fk, 17,
                            threads=4, hist_half_width=5.0)
    # 5 standard errors of a variance estimate
    se = c_eps * math.sqrt(2.0 / n)
    assert abs(stats.cov[0, 0] - c_eps) < 5.0 * se
    assert np.linalg.norm(stats.mean) < 5.0 * math.sqrt(c_eps / n) * 2.0


def test_gaussian_pdf_normalization():
    cov = np.array([[1.3, 0.4], [0.4, 1.1]])
    edges = (np.linspace(-8, 8, 81), np.linspace(-8, 8, 81))
    pdf = lr.gaussian_pdf_on_grid(cov, edges)
    area = (edges[0][1] - edges[0][0]) ** 2
    assert pdf.sum() * area == pytest.approx(1.0, abs=1e-6)


def test_gaussian_pdf_singular_rejected():
    with pytest.raises(ValueError):
        lr.gaussian_pdf_on_grid(np.array([[1.0, 1.0], [1.0, 1.0]]),
                                (np.linspace(-1, 1, 5), np.linspace(-1, 1, 5)))


def test_compare_report(setup, field, fk, ac, x0, chx):
    grid, patch = setup
    pred = lr.predicted_cov_matrix(patch, field, ac, grid.kappa)
    stats = lr.run_ensemble(
        8000, grid, patch, field, "uniform", fk, 23, threads=4,
        hist_half_width=4.0 * math.sqrt(pred.c0),
    )
    report = lr.compare(stats, pred, cov_threshold=0.2, pdf_threshold=0.2)
    assert report.cov_error_frobenius < 0.2
    assert report.pdf_error_l2 < 0.2
    assert report.passed


def test_epsilon_sweep_csv(tmp_path, field, fk, ac, x0, chx):
    patch = lr.LocalPatch(x0=x0, offsets=((0.0, 0.0), chx), epsilon=1e-2)
    pred = lr.predicted_cov_matrix(patch, field, ac, 2.0 * math.pi)
    out = tmp_path / "sweep.csv"
    result = lr.epsilon_sweep(
        [1e-2, 2e-2, 0.1], 500, 2.0 * math.pi, x0, ((0.0, 0.0), chx),
        field, "uniform", fk, pred, master_seed=5, csv_path=str(out),
    )
    assert len(result["rows"]) == 3
    assert result["spearman_rho"] is not None
    text = out.read_text().splitlines()
    assert text[0] == (
        "epsilon,n_samples,cov_error_frobenius,pdf_error_l2,mean_norm"
    )
    assert len(text) == 4
