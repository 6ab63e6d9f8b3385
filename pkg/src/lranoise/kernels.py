"""Interpolation kernels and the weight functions derived from them.

Three derived objects drive everything else in this package: the kernel
derivative, its Hilbert transform (the per-sample weight of the discrete
filtered back-projection sum), and the autocorrelation of the derivative
(the angular integrand of the limiting covariance).  For piecewise
polynomial kernels all three admit exact evaluation, which is what the
builders below do; dense tables with spline interpolation are kept for
fast bulk evaluation and for serialization.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

SERIALIZATION_VERSION = 1

_GAUSS3_NODES = np.array([-np.sqrt(3.0 / 5.0), 0.0, np.sqrt(3.0 / 5.0)])
_GAUSS3_WEIGHTS = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


def _differentiate(coeffs, order):
    """Coefficients (ascending powers) of the order-th derivative."""
    c = list(coeffs)
    for _ in range(order):
        c = [k * c[k] for k in range(1, len(c))]
        if not c:
            c = [0.0]
    return tuple(c)


def _polyval(coeffs, t):
    out = np.zeros_like(t, dtype=float)
    for c in reversed(coeffs):
        out = out * t + c
    return out


@dataclass(frozen=True)
class Kernel:
    """Compactly supported piecewise-polynomial interpolation kernel.

    pieces: tuple of (lo, hi, coeffs) covering the support contiguously,
        with coeffs in ascending powers of t.
    support_radius: half-width of the support; evaluation is exactly zero
        outside [-support_radius, support_radius].
    smoothness_order: largest M such that the (M+1)-th derivative is
        essentially bounded.
    """

    pieces: tuple
    support_radius: float
    smoothness_order: int
    even: bool = True

    def __call__(self, t, derivative_order: int = 0):
        if derivative_order not in (0, 1, 2, 3):
            raise ValueError(
                f"derivative_order must be in 0..3, got {derivative_order}"
            )
        scalar = np.isscalar(t)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros_like(t)
        for lo, hi, coeffs in self.pieces:
            mask = (t >= lo) & (t < hi)
            if mask.any():
                out[mask] = _polyval(_differentiate(coeffs, derivative_order), t[mask])
        return float(out[0]) if scalar else out

    @property
    def breakpoints(self):
        pts = {lo for lo, _, _ in self.pieces} | {hi for _, hi, _ in self.pieces}
        return tuple(sorted(pts))

    def mass(self):
        """Exact integral of the kernel over its support."""
        total = 0.0
        for lo, hi, coeffs in self.pieces:
            for k, c in enumerate(coeffs):
                total += c * (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)
        return total

    def derivative_square_integral(self):
        """Exact integral of the squared derivative."""
        total = 0.0
        for lo, hi, coeffs in self.pieces:
            d = _differentiate(coeffs, 1)
            sq = np.polynomial.polynomial.polymul(d, d)
            for k, c in enumerate(sq):
                total += c * (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)
        return total

    def to_json(self) -> str:
        doc = {
            "version": SERIALIZATION_VERSION,
            "type": "kernel",
            "support_radius": self.support_radius,
            "smoothness_order": self.smoothness_order,
            "even": self.even,
            "pieces": [
                {"lo": lo, "hi": hi, "coeffs": list(coeffs)}
                for lo, hi, coeffs in self.pieces
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Kernel":
        doc = json.loads(text)
        if doc.get("version") != SERIALIZATION_VERSION or doc.get("type") != "kernel":
            raise ValueError("unrecognized kernel document")
        pieces = tuple(
            (p["lo"], p["hi"], tuple(p["coeffs"])) for p in doc["pieces"]
        )
        return cls(
            pieces=pieces,
            support_radius=doc["support_radius"],
            smoothness_order=doc["smoothness_order"],
            even=doc["even"],
        )


def keys_kernel(a: float = -0.5) -> Kernel:
    """Cubic convolution interpolation kernel with free parameter ``a``.

    The default a = -1/2 is the standard third-order-accurate choice.  The
    kernel is even, supported on [-2, 2], interpolatory (value 1 at 0, 0 at
    other integers) and has unit mass for every ``a``.  Its second
    derivative has jumps at t = +/-1, +/-2, so only the first derivative
    admits a uniform bound on the next derivative (smoothness_order 1).
    """
    pieces = (
        (-2.0, -1.0, (-4.0 * a, -8.0 * a, -5.0 * a, -a)),
        (-1.0, 0.0, (1.0, 0.0, -(a + 3.0), -(a + 2.0))),
        (0.0, 1.0, (1.0, 0.0, -(a + 3.0), (a + 2.0))),
        (1.0, 2.0, (-4.0 * a, 8.0 * a, -5.0 * a, a)),
    )
    return Kernel(pieces=pieces, support_radius=2.0, smoothness_order=1, even=True)


def _monomial_fourier(n, u, v, lam):
    """integral of t^n * exp(-i lam t) over [u, v], vectorized in lam."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.empty(lam.shape, dtype=complex)
    span = max(abs(u), abs(v))
    small = np.abs(lam) * span < 0.5

    if small.any():
        ls = lam[small]
        acc = np.zeros(ls.shape, dtype=complex)
        factor = np.ones(ls.shape, dtype=complex)  # (-i lam)^m / m!
        for m in range(40):
            acc += factor * (v ** (n + m + 1) - u ** (n + m + 1)) / (n + m + 1)
            factor = factor * (-1j * ls) / (m + 1)
        out[small] = acc

    big = ~small
    if big.any():
        lb = lam[big]
        eu = np.exp(-1j * lb * u)
        ev = np.exp(-1j * lb * v)
        ilam = 1j * lb
        val = (eu - ev) / ilam  # I_0
        for k in range(1, n + 1):
            val = (u ** k * eu - v ** k * ev) / ilam + (k / ilam) * val
        out[big] = val
    return out


def kernel_spectrum(kernel: Kernel, lam):
    """Fourier transform of the kernel, integral phi(t) exp(-i lam t) dt.

    Computed in closed form from the polynomial pieces; real (up to
    roundoff) for even kernels.
    """
    scalar = np.isscalar(lam)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.zeros(lam.shape, dtype=complex)
    for lo, hi, coeffs in kernel.pieces:
        for k, c in enumerate(coeffs):
            if c != 0.0:
                out += c * _monomial_fourier(k, lo, hi, lam)
    return complex(out[0]) if scalar else out


def filtered_derivative(kernel: Kernel, t):
    """Hilbert transform of the kernel derivative, evaluated exactly.

    For a piecewise polynomial derivative p on [u, v] the principal value
    integral (1/pi) PV int p(s)/(t-s) ds reduces to logarithmic terms plus
    a polynomial remainder, both exact.  At piece boundaries the log terms
    of adjacent pieces cancel (the derivative is continuous there), so the
    boundary value is the analytic limit.
    """
    scalar = np.isscalar(t)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    for lo, hi, coeffs in kernel.pieces:
        d = _differentiate(coeffs, 1)
        p_t = _polyval(d, t)

        log_lo = np.zeros_like(t)
        diff = t - lo
        nz = diff != 0.0
        log_lo[nz] = np.log(np.abs(diff[nz]))

        log_hi = np.zeros_like(t)
        diff = t - hi
        nz = diff != 0.0
        log_hi[nz] = np.log(np.abs(diff[nz]))

        out += p_t * (log_lo - log_hi)
        # subtract int_u^v (p(s) - p(t)) / (s - t) ds, polynomial in t
        for k in range(1, len(d)):
            ck = d[k]
            if ck == 0.0:
                continue
            for i in range(k):
                out -= (
                    ck
                    * t ** (k - 1 - i)
                    * (hi ** (i + 1) - lo ** (i + 1))
                    / (i + 1)
                )
    out /= np.pi
    return float(out[0]) if scalar else out


def _encode_array(a: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode()


def _decode_array(s: str) -> np.ndarray:
    return np.frombuffer(base64.b64decode(s), dtype="<f8").copy()


@dataclass(frozen=True, eq=False)
class FilteredKernelTable:
    """Dense tabulation of the ramp-filtered kernel weight.

    values hold samples on [-half_range, half_range] with spacing
    grid_step; beyond the table the 1/t^2 asymptote with the fitted
    tail_coefficient is used.  Immutable after construction.
    """

    grid_step: float
    half_range: float
    values: np.ndarray
    tail_coefficient: float

    @cached_property
    def _spline(self):
        n = int(round(self.half_range / self.grid_step))
        x = np.arange(-n, n + 1) * self.grid_step
        return CubicSpline(x, self.values, extrapolate=False)

    def __call__(self, t):
        scalar = np.isscalar(t)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        inside = np.abs(t) <= self.half_range
        if inside.any():
            out[inside] = self._spline(t[inside])
        outside = ~inside
        if outside.any():
            out[outside] = self.tail_coefficient / t[outside] ** 2
        return float(out[0]) if scalar else out

    def integral_of_square(self) -> float:
        """integral of the squared weight over the real line (tail analytic)."""
        body = np.trapezoid(self.values ** 2, dx=self.grid_step)
        tail = 2.0 * self.tail_coefficient ** 2 / (3.0 * self.half_range ** 3)
        return body + tail

    def to_json(self) -> str:
        doc = {
            "version": SERIALIZATION_VERSION,
            "type": "filtered_kernel_table",
            "grid_step": self.grid_step,
            "half_range": self.half_range,
            "tail_coefficient": self.tail_coefficient,
            "values_b64": _encode_array(self.values),
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "FilteredKernelTable":
        doc = json.loads(text)
        if (
            doc.get("version") != SERIALIZATION_VERSION
            or doc.get("type") != "filtered_kernel_table"
        ):
            raise ValueError("unrecognized filtered-kernel document")
        return cls(
            grid_step=doc["grid_step"],
            half_range=doc["half_range"],
            values=_decode_array(doc["values_b64"]),
            tail_coefficient=doc["tail_coefficient"],
        )


class TableBuildError(RuntimeError):
    """Raised when a kernel table fails its internal consistency checks."""


@lru_cache(maxsize=8)
def build_filtered_kernel(
    kernel: Kernel, grid_step: float = 1e-3, half_range: float = 24.0
) -> FilteredKernelTable:
    """Tabulate the Hilbert transform of the kernel derivative.

    The table is built from the exact closed form and fitted with a 1/t^2
    tail over the outer half of the range.  Raises TableBuildError if the
    tabulated values do not merge into the tail asymptote at the boundary
    (relative mismatch 1e-3), which would indicate half_range is too small
    for the kernel.
    """
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    if half_range < 4.0 * kernel.support_radius:
        raise ValueError("half_range must be at least 4 support radii")
    n = int(round(half_range / grid_step))
    x = np.arange(-n, n + 1) * grid_step
    values = filtered_derivative(kernel, x)

    fit = np.abs(x) >= half_range / 2.0
    tf, vf = x[fit], values[fit]
    tail = float(np.sum(vf / tf ** 2) / np.sum(1.0 / tf ** 4))

    table = FilteredKernelTable(
        grid_step=grid_step, half_range=half_range, values=values,
        tail_coefficient=tail,
    )
    _verify_filtered_table(table)

    # off-node interpolation must reproduce the closed form
    probes = np.linspace(
        -kernel.support_radius - 1.5, kernel.support_radius + 1.5, 257
    ) + 0.5 * grid_step
    interp_err = float(np.max(np.abs(table(probes) - filtered_derivative(
        kernel, probes))))
    if interp_err >= 1e-3:
        raise TableBuildError(
            f"interpolated table deviates from the closed form by "
            f"{interp_err:.2e}; grid_step is too coarse"
        )
    return table


def _verify_filtered_table(table: FilteredKernelTable) -> None:
    asymptote = table.tail_coefficient / table.half_range ** 2
    mismatch = abs(table.values[-1] - asymptote) / abs(asymptote)
    if mismatch >= 1e-3:
        raise TableBuildError(
            f"table does not match its 1/t^2 tail at the boundary "
            f"(relative mismatch {mismatch:.2e})"
        )


@dataclass(frozen=True, eq=False)
class Autocorrelation:
    """Tabulated autocorrelation of the kernel derivative.

    Compactly supported on [-exact_support_radius, exact_support_radius];
    evaluation outside is exactly zero.
    """

    grid_step: float
    exact_support_radius: float
    values: np.ndarray

    @cached_property
    def _spline(self):
        n = int(round(self.exact_support_radius / self.grid_step))
        x = np.arange(-n, n + 1) * self.grid_step
        return CubicSpline(x, self.values, extrapolate=False)

    def __call__(self, t):
        scalar = np.isscalar(t)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros_like(t)
        inside = np.abs(t) <= self.exact_support_radius
        if inside.any():
            out[inside] = self._spline(t[inside])
        return float(out[0]) if scalar else out

    def to_json(self) -> str:
        doc = {
            "version": SERIALIZATION_VERSION,
            "type": "autocorrelation",
            "grid_step": self.grid_step,
            "exact_support_radius": self.exact_support_radius,
            "values_b64": _encode_array(self.values),
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "Autocorrelation":
        doc = json.loads(text)
        if (
            doc.get("version") != SERIALIZATION_VERSION
            or doc.get("type") != "autocorrelation"
        ):
            raise ValueError("unrecognized autocorrelation document")
        return cls(
            grid_step=doc["grid_step"],
            exact_support_radius=doc["exact_support_radius"],
            values=_decode_array(doc["values_b64"]),
        )


def autocorrelation_exact(kernel: Kernel, t: float) -> float:
    """Exact (phi' * phi')(t) by Gauss quadrature between breakpoints.

    The integrand is piecewise polynomial of degree <= 2*(piece degree - 1),
    so 3-point Gauss per smooth subinterval is exact for cubic-piece
    kernels.
    """
    r = kernel.support_radius
    lo = max(-r, -r - t)
    hi = min(r, r - t)
    if hi <= lo:
        return 0.0
    pts = {lo, hi}
    for b in kernel.breakpoints:
        if lo < b < hi:
            pts.add(b)
        if lo < b - t < hi:
            pts.add(b - t)
    pts = np.array(sorted(pts))
    mids = 0.5 * (pts[1:] + pts[:-1])
    halfs = 0.5 * (pts[1:] - pts[:-1])
    nodes = (mids[:, None] + halfs[:, None] * _GAUSS3_NODES[None, :]).ravel()
    weights = (halfs[:, None] * _GAUSS3_WEIGHTS[None, :]).ravel()
    vals = kernel(nodes + t, 1) * kernel(nodes, 1)
    return float(np.sum(weights * vals))


@lru_cache(maxsize=8)
def build_autocorrelation(kernel: Kernel, grid_step: float = 1e-3) -> Autocorrelation:
    """Tabulate the autocorrelation of the kernel derivative exactly."""
    radius = 2.0 * kernel.support_radius
    n = int(round(radius / grid_step))
    x = np.arange(-n, n + 1) * grid_step
    values = np.array([autocorrelation_exact(kernel, float(t)) for t in x])
    return Autocorrelation(
        grid_step=grid_step, exact_support_radius=radius, values=values
    )


def cross_correlate(f, g, t: float, step: float = 1e-3, s_range: float = None) -> float:
    """(f * g)(t) = int f(t + s) g(s) ds by table-resolution quadrature.

    f and g are callables (tables).  s_range defaults to the support of g
    when g is an Autocorrelation, otherwise it must be given.
    """
    if s_range is None:
        if isinstance(g, Autocorrelation):
            s_range = g.exact_support_radius
        elif isinstance(g, FilteredKernelTable):
            s_range = g.half_range
        else:
            raise ValueError("s_range required for generic callables")
    s = np.arange(-s_range, s_range + step / 2, step)
    return float(np.trapezoid(f(t + s) * g(s), dx=step))


def filtered_autocorrelation(
    fk: FilteredKernelTable, t: float, s_range: float = 300.0, step: float = 1e-3
) -> float:
    """Autocorrelation of the filtered kernel, int Hphi'(t+s) Hphi'(s) ds.

    Integrates over the table range at table resolution and over the
    algebraic tail at a coarser step (the tail is smooth and slowly
    varying).
    """
    r = fk.half_range
    s_in = np.arange(-r, r + step / 2, step)
    body = np.trapezoid(fk(t + s_in) * fk(s_in), dx=step)
    coarse = 0.01
    s_out = np.arange(r + coarse, s_range, coarse)
    tail = np.trapezoid(fk(t + s_out) * fk(s_out), dx=coarse)
    tail += np.trapezoid(fk(t - s_out) * fk(-s_out), dx=coarse)
    return float(body + tail)
