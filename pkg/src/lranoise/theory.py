"""Analytic predictors for the limiting local noise statistics.

The limit of the locally reconstructed noise is a zero-mean Gaussian
random field whose covariance at offset separation v is

    C(v) = (kappa / 4 pi)^2 * int_0^{2pi} sigma^2(alpha, alpha_vec . x0)
           (phi' * phi')(alpha_vec . v) d alpha.

This module evaluates C, the lattice sums of squared and cubed filtered
kernel values, the angular sum whose limit normalizes the central limit
theorem, and the third-moment-to-variance ratios whose decay rate in
epsilon certifies Gaussianity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import GridSpec, LocalPatch, a_k_all
from .kernels import Autocorrelation, FilteredKernelTable
from .noise import VarianceField, absolute_third_moment


@dataclass(frozen=True, eq=False)
class PredictedCovariance:
    """Covariance matrix of the limiting field on a patch.

    Entries depend only on offset differences; the matrix is symmetric
    with constant diagonal C(0).
    """

    patch: LocalPatch
    matrix: np.ndarray
    c0: float
    nodes: int
    quadrature_error: float

    def to_dict(self) -> dict:
        return {
            "offsets": [list(o) for o in self.patch.offsets],
            "matrix": self.matrix.tolist(),
            "c0": self.c0,
            "nodes": self.nodes,
            "quadrature_error": self.quadrature_error,
        }


@dataclass(frozen=True)
class LatticeSumProbe:
    """One evaluation of the square / cube lattice sums with tail bounds."""

    a: float
    b: float
    psi_value: float
    big_psi_value: float
    truncation: int
    psi_tail_bound: float
    big_psi_tail_bound: float


def _cov_integrand(alpha, v, x0, field, ac):
    cos, sin = np.cos(alpha), np.sin(alpha)
    sigma2 = field(alpha, cos * x0[0] + sin * x0[1])
    return sigma2 * ac(cos * v[0] + sin * v[1])


def predicted_cov_scalar(
    v,
    x0,
    field: VarianceField,
    ac: Autocorrelation,
    kappa: float,
    nodes: int = 4096,
) -> float:
    """Covariance C(v) of the limiting field at offset separation v.

    Trapezoidal quadrature over the full angular period; nodes >= 256.
    """
    if nodes < 256:
        raise ValueError("nodes must be at least 256")
    alpha = np.arange(nodes) * (2.0 * math.pi / nodes)
    mean = float(np.mean(_cov_integrand(alpha, v, x0, field, ac)))
    return (kappa / (4.0 * math.pi)) ** 2 * 2.0 * math.pi * mean


def predicted_cov_matrix(
    patch: LocalPatch,
    field: VarianceField,
    ac: Autocorrelation,
    kappa: float,
    nodes: int = 4096,
) -> PredictedCovariance:
    """Pairwise covariance matrix C(offset_i - offset_j) on a patch.

    Symmetric by construction; the quadrature error is estimated by node
    doubling on the diagonal entry.
    """
    offs = patch.offset_array()
    k = len(offs)
    mat = np.zeros((k, k))
    cache = {}
    for i in range(k):
        for j in range(i, k):
            d = offs[i] - offs[j]
            key = (round(abs(d[0]), 14), round(abs(d[1]), 14))
            if key not in cache:
                cache[key] = predicted_cov_scalar(d, patch.x0, field, ac, kappa, nodes)
            mat[i, j] = mat[j, i] = cache[key]
    c0 = predicted_cov_scalar((0.0, 0.0), patch.x0, field, ac, kappa, nodes)
    c0_fine = predicted_cov_scalar((0.0, 0.0), patch.x0, field, ac, kappa, 2 * nodes)
    return PredictedCovariance(
        patch=patch,
        matrix=mat,
        c0=c0,
        nodes=nodes,
        quadrature_error=abs(c0_fine - c0),
    )


def _lattice_args(a: float, b: float, J: int) -> np.ndarray:
    center = int(round(a + b))
    j = center + np.arange(-J, J + 1)
    return (a + b) - j


def _tail_bound(c: float, J: int, power: int) -> float:
    # sum over |j| > J of |c / j^2|^(power/2 * 2) ... for |Hphi'| ~ c/t^2 the
    # omitted terms are bounded by 2 c^q integral_{J-1}^inf t^(-2q) dt
    q = power  # exponent on |Hphi'|
    expo = 2 * q - 1
    return 2.0 * abs(c) ** q / (expo * max(J - 1, 1) ** expo)


def psi_sum(
    a: float, b: float, fk: FilteredKernelTable, J: int = 200
) -> LatticeSumProbe:
    """Lattice sums of squared and cubed filtered kernel values.

    psi(a, b) = sum_j Hphi'(a - j + b)^2, 1-periodic in a; the cube sum is
    its bounded companion.  Both series converge absolutely thanks to the
    1/t^2 decay; explicit tail bounds from the fitted tail coefficient are
    attached.
    """
    if J < 50:
        raise ValueError("truncation J must be at least 50")
    vals = fk(_lattice_args(a, b, J))
    return LatticeSumProbe(
        a=a,
        b=b,
        psi_value=float(np.sum(vals ** 2)),
        big_psi_value=float(np.sum(np.abs(vals) ** 3)),
        truncation=J,
        psi_tail_bound=_tail_bound(fk.tail_coefficient, J, 2),
        big_psi_tail_bound=_tail_bound(fk.tail_coefficient, J, 3),
    )


def big_psi_sum(a: float, b: float, fk: FilteredKernelTable, J: int = 200) -> float:
    """sum_j |Hphi'(a - j + b)|^3, truncated at |j - round(a+b)| <= J."""
    if J < 50:
        raise ValueError("truncation J must be at least 50")
    vals = fk(_lattice_args(a, b, J))
    return float(np.sum(np.abs(vals) ** 3))


def _psi_matrix(grid: GridSpec, x0, chx, fk: FilteredKernelTable, J: int):
    """Filtered-kernel values at every (angle, lattice offset), plus sigma args."""
    a = a_k_all(grid, x0)
    b = grid.directions @ np.asarray(chx, dtype=float)
    center = np.round(a + b).astype(int)
    j = center[:, None] + np.arange(-J, J + 1)[None, :]
    args = (a + b)[:, None] - j
    return fk(args.ravel()).reshape(args.shape)


def d_epsilon(
    grid: GridSpec,
    x0,
    chx,
    field: VarianceField,
    fk: FilteredKernelTable,
    J: int = 200,
) -> float:
    """Angular lattice sum normalizing the Lyapunov denominator.

    delta_alpha * sum_k psi(a_k, alpha_vec_k . chx) *
    sigma^2(alpha_k, alpha_vec_k . x0), with the variance frozen on the
    central trajectory.
    """
    vals = _psi_matrix(grid, x0, chx, fk, J)
    psi = np.sum(vals ** 2, axis=1)
    traj = grid.directions @ np.asarray(x0, dtype=float)
    sigma2 = field(grid.angles, traj)
    return float(grid.delta_alpha * np.sum(psi * sigma2))


def d_epsilon_limit(x0, field: VarianceField, fk: FilteredKernelTable,
                    nodes: int = 8192) -> float:
    """Limit of the angular lattice sum: int (Hphi')^2 * int sigma^2 along x0."""
    alpha = np.arange(nodes) * (2.0 * math.pi / nodes)
    traj = np.cos(alpha) * x0[0] + np.sin(alpha) * x0[1]
    sigma_integral = 2.0 * math.pi * float(np.mean(field(alpha, traj)))
    return fk.integral_of_square() * sigma_integral


def _multi_weight_sums(
    grid: GridSpec,
    x0,
    offsets: np.ndarray,
    theta: np.ndarray,
    fk: FilteredKernelTable,
    J: int,
):
    """Combined weights w_kj = sum_i theta_i Hphi'(a_k - j + alpha_k . chx_i).

    Returns (weights matrix over a common lattice window, detector values
    p_kj of each lattice point) for moment sums.
    """
    a = a_k_all(grid, x0)
    shifts = grid.directions @ offsets.T  # (n_angles, K)
    center = np.round(a).astype(int)
    j = center[:, None] + np.arange(-J, J + 1)[None, :]  # (n_angles, 2J+1)
    w = np.zeros(j.shape)
    for i in range(offsets.shape[0]):
        args = (a + shifts[:, i])[:, None] - j
        w += theta[i] * fk(args.ravel()).reshape(args.shape)
    p = grid.p_bar + j * grid.epsilon
    return w, p


def lyapunov_ratio(
    grid: GridSpec,
    x0,
    chx,
    field: VarianceField,
    fk: FilteredKernelTable,
    distribution: str,
    J: int = 200,
) -> float:
    """Third-moment to variance^(3/2) ratio of the reconstruction sum.

    Uses exact per-entry moments of the chosen noise law with the variance
    evaluated at the true detector positions.  Decays like sqrt(epsilon)
    for admissible center points.
    """
    return lyapunov_ratio_multi(
        grid,
        x0,
        np.asarray([chx], dtype=float),
        np.asarray([1.0]),
        field,
        fk,
        distribution,
        J=J,
    )


def lyapunov_ratio_multi(
    grid: GridSpec,
    x0,
    offsets,
    theta,
    field: VarianceField,
    fk: FilteredKernelTable,
    distribution: str,
    J: int = 200,
) -> float:
    """Multi-point Lyapunov ratio with combination weights theta."""
    offsets = np.asarray(offsets, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if not np.any(theta):
        raise ValueError("theta must be nonzero")
    w, p = _multi_weight_sums(grid, x0, offsets, theta, fk, J)
    sigma2_da = field(grid.angles[:, None], p) * grid.delta_alpha
    numerator = float(np.sum(np.abs(w) ** 3 * absolute_third_moment(
        sigma2_da, distribution)))
    denominator = float(np.sum(w ** 2 * sigma2_da))
    if denominator <= 0.0:
        raise ValueError(
            "zero variance along the trajectory; the ratio is undefined"
        )
    return numerator / denominator ** 1.5


def second_moment_multi(
    grid: GridSpec,
    x0,
    patch: LocalPatch,
    theta,
    field: VarianceField,
    fk: FilteredKernelTable,
    J: int = 200,
) -> tuple:
    """Second moment of theta . (patch reconstruction), exact and frozen.

    Returns (exact, frozen): the exact value uses sigma^2 at the true
    detector positions, the frozen one substitutes the central trajectory
    value sigma^2(alpha_k, alpha_vec_k . x0); their gap shrinks linearly
    in epsilon.  Includes the reconstruction prefactor, so the exact value
    converges to theta^T C theta.
    """
    offsets = patch.offset_array()
    theta = np.asarray(theta, dtype=float)
    w, p = _multi_weight_sums(grid, x0, offsets, theta, fk, J)
    pref2 = (grid.delta_alpha / (4.0 * math.pi * grid.epsilon)) ** 2
    da = grid.delta_alpha
    sigma2_exact = field(grid.angles[:, None], p)
    traj = grid.directions @ np.asarray(x0, dtype=float)
    sigma2_frozen = np.broadcast_to(
        field(grid.angles, traj)[:, None], p.shape
    )
    exact = pref2 * da * float(np.sum(w ** 2 * sigma2_exact))
    frozen = pref2 * da * float(np.sum(w ** 2 * sigma2_frozen))
    return exact, frozen
