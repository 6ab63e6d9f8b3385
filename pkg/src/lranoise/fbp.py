"""Discrete filtered back-projection of sinograms.

The operator is linear in the sinogram: each output value is the double
sum over (angle, detector) of the ramp-filtered kernel weight times the
data entry, with prefactor -delta_alpha / (4 pi epsilon).  Local patch
reconstruction evaluates the sum at x0 + epsilon * offset; image
reconstruction evaluates it on a pixel grid via per-angle convolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .geometry import GridSpec, LocalPatch, a_k_all
from .kernels import FilteredKernelTable
from .noise import NoiseDraw


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    """Reconstructed values with their evaluation points and provenance."""

    points: np.ndarray
    values: np.ndarray
    provenance: dict


def prefactor(grid: GridSpec) -> float:
    """The overall weight -delta_alpha / (4 pi epsilon) = -kappa / (4 pi)."""
    return -grid.delta_alpha / (4.0 * math.pi * grid.epsilon)


def local_weights(
    grid: GridSpec,
    patch: LocalPatch,
    fk: FilteredKernelTable,
    window: float = None,
):
    """Per-entry weights of the patch reconstruction.

    Returns (entries, weights) where entries is a pair of index arrays
    (angle positions, detector positions) into the grid, and weights has
    shape (n_entries, n_offsets).  With window=None every detector is
    included; otherwise only entries with filtered-kernel argument within
    +/- (window + max offset reach) of zero, whose omitted tail carries
    O(1/window) total weight per angle.
    """
    a = a_k_all(grid, patch.x0)  # (n_angles,)
    offsets = patch.offset_array()  # (K, 2)
    shifts = grid.directions @ offsets.T  # (n_angles, K)
    j = grid.detector_indices

    if window is None:
        kk, jj = np.meshgrid(
            np.arange(grid.n_angles), np.arange(grid.n_detectors), indexing="ij"
        )
        entry_k = kk.ravel()
        entry_j = jj.ravel()
    else:
        reach = float(np.max(np.abs(shifts))) if offsets.size else 0.0
        half = window + reach + 1.0
        lo = np.ceil(a - half).astype(int)
        hi = np.floor(a + half).astype(int)
        lo = np.clip(lo, j[0], j[-1] + 1)
        hi = np.clip(hi, j[0] - 1, j[-1])
        counts = np.maximum(hi - lo + 1, 0)
        entry_k = np.repeat(np.arange(grid.n_angles), counts)
        entry_j = (
            np.concatenate(
                [np.arange(l, h + 1) for l, h in zip(lo, hi) if h >= l]
            )
            - j[0]
        )

    args = (
        a[entry_k, None] - j[entry_j, None] + shifts[entry_k, :]
    )  # (n_entries, K)
    weights = prefactor(grid) * fk(args.ravel()).reshape(args.shape)
    return (entry_k, entry_j), weights


def reconstruct_local(
    noise: NoiseDraw,
    patch: LocalPatch,
    grid: GridSpec,
    fk: FilteredKernelTable,
    window: float = None,
) -> ReconstructionResult:
    """Reconstruct the noise at x0 + epsilon * offset for every patch offset."""
    if patch.epsilon != grid.epsilon:
        raise ValueError(
            f"patch epsilon {patch.epsilon} does not match grid epsilon "
            f"{grid.epsilon}"
        )
    (entry_k, entry_j), weights = local_weights(grid, patch, fk, window=window)
    data = noise.values[entry_k, entry_j]
    values = data @ weights
    return ReconstructionResult(
        points=patch.physical_points(),
        values=values,
        provenance={
            "seed": noise.seed,
            "sample_index": noise.sample_index,
            "distribution": noise.distribution,
            "window": window,
        },
    )


def reconstruct_image(
    sinogram: np.ndarray,
    region: tuple,
    resolution: int,
    grid: GridSpec,
    fk: FilteredKernelTable,
    upsample: int = 20,
) -> ReconstructionResult:
    """Evaluate the reconstruction on a uniform pixel grid over a rectangle.

    region is (xmin, xmax, ymin, ymax); pixels are sampled at cell centers,
    row-major from the top-left (min x, max y).  Each angle's filtered
    projection is formed by convolving the upsampled sinogram row with
    kernel samples at step 1/upsample, then interpolated at the pixel
    coordinates.

    Note: the operator carries the leading minus sign of its defining
    formula, so applying it to the sinogram of a density f yields -f.
    Noise statistics are unaffected by the sign.
    """
    sinogram = np.asarray(sinogram, dtype=float)
    if sinogram.shape != (grid.n_angles, grid.n_detectors):
        raise ValueError("sinogram shape does not match the grid")
    xmin, xmax, ymin, ymax = region
    step_x = (xmax - xmin) / resolution
    step_y = (ymax - ymin) / resolution
    xs = xmin + (np.arange(resolution) + 0.5) * step_x
    ys = ymax - (np.arange(resolution) + 0.5) * step_y
    px, py = np.meshgrid(xs, ys)  # row-major, top-left first

    q = int(upsample)
    # the filtered kernel decays only as t^-2, so its samples must span
    # every (evaluation point, detector) distance; truncating at the
    # tabulated range would bias sinograms with a nonzero mean
    half_width = grid.n_detectors + 2.0
    m = int(round(half_width * q))
    kernel_samples = fk(np.arange(-m, m + 1) / q)

    j = grid.detector_indices
    n_j = grid.n_detectors
    up = np.zeros((grid.n_angles, (n_j - 1) * q + 1))
    up[:, ::q] = sinogram
    # filtered projection on the s-grid s = j[0] - m/q + i/q
    proj = fftconvolve(up, kernel_samples[None, :], mode="full", axes=1)
    s0 = j[0] - m / q

    image = np.zeros(px.shape)
    pref = prefactor(grid)
    flat_x = px.ravel()
    flat_y = py.ravel()
    acc = np.zeros(flat_x.shape)
    for idx in range(grid.n_angles):
        c, s = grid.directions[idx]
        coord = (c * flat_x + s * flat_y - grid.p_bar) / grid.epsilon
        acc += np.interp(
            (coord - s0) * q,
            np.arange(proj.shape[1]),
            proj[idx],
            left=0.0,
            right=0.0,
        )
    image = pref * acc.reshape(px.shape)
    return ReconstructionResult(
        points=np.stack([px, py], axis=-1),
        values=image,
        provenance={"region": region, "resolution": resolution},
    )


def radon_disk(center, radius: float, grid: GridSpec, density: float = 1.0) -> np.ndarray:
    """Exact chord-length sinogram of a constant-density disk."""
    if math.hypot(center[0], center[1]) + radius > grid.radius:
        raise ValueError("disk extends beyond detector coverage")
    d = grid.directions @ np.asarray(center, dtype=float)
    dist = grid.detectors[None, :] - d[:, None]
    chord = np.zeros_like(dist)
    inside = np.abs(dist) < radius
    chord[inside] = 2.0 * np.sqrt(radius ** 2 - dist[inside] ** 2)
    return density * chord
