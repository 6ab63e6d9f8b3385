"""Observation lattice, local patch coordinates, and sampling diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

#: largest continued-fraction denominator that a double-precision input can
#: certify; quotients past this point reflect the binary representation,
#: not the underlying number.
_CF_DENOMINATOR_HORIZON = 6.7e7

MAX_ANGULAR_STEP = math.pi / 4.0


@dataclass(frozen=True, eq=False)
class GridSpec:
    """The (angle, detector) sampling lattice.

    epsilon is the detector step; the angular step is kappa * epsilon.
    Detectors are 1-based: p_j = p_bar + j * epsilon for j = j_start ..
    j_start + n_detectors - 1.  convention selects the angle enumeration:
    "full-turn" uses alpha_k = k * delta_alpha for k = 1..n_angles covering
    (0, 2*pi]; "symmetric" uses k = -K..K covering [-pi, pi].
    """

    epsilon: float
    kappa: float
    p_bar: float
    radius: float
    convention: str = "full-turn"
    j_start: int = 1

    @property
    def delta_alpha(self) -> float:
        return self.kappa * self.epsilon

    @cached_property
    def angle_indices(self) -> np.ndarray:
        if self.convention == "full-turn":
            n = int(round(2.0 * math.pi / self.delta_alpha))
            return np.arange(1, n + 1)
        k_max = int(math.floor(math.pi / self.delta_alpha))
        return np.arange(-k_max, k_max + 1)

    @cached_property
    def angles(self) -> np.ndarray:
        return self.angle_indices * self.delta_alpha

    @property
    def n_angles(self) -> int:
        return len(self.angle_indices)

    @cached_property
    def detector_indices(self) -> np.ndarray:
        n = int(round(2.0 * self.radius / self.epsilon)) + 1
        return np.arange(self.j_start, self.j_start + n)

    @cached_property
    def detectors(self) -> np.ndarray:
        return self.p_bar + self.detector_indices * self.epsilon

    @property
    def n_detectors(self) -> int:
        return len(self.detector_indices)

    @cached_property
    def directions(self) -> np.ndarray:
        """Unit direction vectors (cos, sin) for every angle, shape (n, 2)."""
        a = self.angles
        return np.stack([np.cos(a), np.sin(a)], axis=1)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "kappa": self.kappa,
            "p_bar": self.p_bar,
            "radius": self.radius,
            "convention": self.convention,
            "j_start": self.j_start,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GridSpec":
        return cls(**doc)


def build_grid(
    epsilon: float,
    kappa: float,
    p_bar: float = None,
    radius: float = 1.0,
    convention: str = "full-turn",
) -> GridSpec:
    """Construct the sampling lattice covering detectors in [-radius, radius].

    The default p_bar = -radius - epsilon reproduces the 1-based detector
    enumeration p_1 = -radius.  Raises ValueError if the angular step
    kappa * epsilon exceeds pi/4, which is too coarse for any of the
    asymptotic quantities computed here to be meaningful.
    """
    if epsilon <= 0 or kappa <= 0 or radius <= 0:
        raise ValueError("epsilon, kappa and radius must be positive")
    if convention not in ("full-turn", "symmetric"):
        raise ValueError(f"unknown angle convention {convention!r}")
    if kappa * epsilon > MAX_ANGULAR_STEP:
        raise ValueError(
            "angular step too coarse for meaningful asymptotics: "
            f"kappa*epsilon = {kappa * epsilon:.3f} > pi/4"
        )
    if p_bar is None:
        p_bar = -radius - epsilon
    return GridSpec(
        epsilon=epsilon,
        kappa=kappa,
        p_bar=p_bar,
        radius=radius,
        convention=convention,
    )


def a_k_of(grid: GridSpec, x0, k: int) -> float:
    """Fractional detector coordinate of the line through x0 at angle index k."""
    if k not in grid.angle_indices:
        raise ValueError(f"angle index {k} outside grid range")
    alpha = k * grid.delta_alpha
    dot = math.cos(alpha) * x0[0] + math.sin(alpha) * x0[1]
    return (dot - grid.p_bar) / grid.epsilon


def a_k_all(grid: GridSpec, x0) -> np.ndarray:
    """Fractional detector coordinates for every angle, vectorized."""
    dots = grid.directions @ np.asarray(x0, dtype=float)
    return (dots - grid.p_bar) / grid.epsilon


@dataclass(frozen=True)
class LocalPatch:
    """Dimensionless offsets around a center point.

    Physical evaluation points are x0 + epsilon * offset; offsets must be
    pairwise distinct.
    """

    x0: tuple
    offsets: tuple
    epsilon: float

    def __post_init__(self):
        seen = set()
        for off in self.offsets:
            key = (float(off[0]), float(off[1]))
            if key in seen:
                raise ValueError(f"duplicate patch offset {off}")
            seen.add(key)

    @property
    def n_points(self) -> int:
        return len(self.offsets)

    def physical_points(self) -> np.ndarray:
        x0 = np.asarray(self.x0, dtype=float)
        return x0[None, :] + self.epsilon * np.asarray(self.offsets, dtype=float)

    def offset_array(self) -> np.ndarray:
        return np.asarray(self.offsets, dtype=float)


@dataclass(frozen=True)
class AssumptionReport:
    """Diagnostics for the sampling-commensurability and variance conditions.

    The irrationality type cannot be decided from finitely many digits, so
    estimated_type_nu is advisory; rational_flag marks exact or suspicious
    near-rational values of kappa * |x0|.
    """

    kappa_x0_norm: float
    continued_fraction_quotients: tuple
    estimated_type_nu: object  # float or "inconclusive"
    rational_flag: bool
    sigma_positive: bool
    sigma_interval: tuple
    warnings: tuple = ()


def continued_fraction(value: float, depth: int):
    """Partial quotients of value, capped at the double-precision horizon.

    Returns (quotients, terminated) where terminated is True if the
    expansion of the exact binary value ended before hitting either the
    depth or the reliability cap on convergent denominators.
    """
    x = Fraction(value)
    quotients = []
    q_prev, q_cur = 0, 1  # convergent denominators
    terminated = False
    for _ in range(depth):
        a = x.numerator // x.denominator
        quotients.append(int(a))
        frac = x - a
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        if frac == 0:
            terminated = True
            break
        if q_cur > _CF_DENOMINATOR_HORIZON:
            break
        x = 1 / frac
    return quotients, terminated


def estimate_irrationality_type(quotients) -> object:
    """Estimate the type from convergent growth, max log q_{n+1} / log q_n."""
    denoms = []
    q_prev, q_cur = 0, 1
    for a in quotients:
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        denoms.append(q_cur)
    usable = [q for q in denoms if q >= 10]
    if len(usable) < 3:
        return "inconclusive"
    ratios = [
        math.log(usable[i + 1]) / math.log(usable[i]) for i in range(len(usable) - 1)
    ]
    return float(max(ratios))


def check_assumptions(grid: GridSpec, x0, field, depth: int = 30) -> AssumptionReport:
    """Report-only diagnostics for the center point and variance field.

    Computes the continued fraction of kappa * |x0| up to the reliability
    horizon of double precision, estimates the irrationality type from
    convergent growth, and samples the variance along the trajectory
    alpha -> sigma^2(alpha, alpha_vec . x0) for positivity on an interval.
    """
    if depth < 10:
        raise ValueError("depth must be at least 10")
    value = grid.kappa * math.hypot(x0[0], x0[1])
    quotients, terminated = continued_fraction(value, depth)

    warnings = []
    rational = terminated
    if any(a > 1e6 for a in quotients[1:]):
        rational = True
        warnings.append(
            "a huge partial quotient suggests kappa*|x0| is (near) rational"
        )
    if terminated:
        warnings.append(
            "kappa*|x0| is rational: the sum-to-integral limits are not "
            "guaranteed to hold at this center point"
        )
    nu = estimate_irrationality_type(quotients)

    alpha = np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False)
    traj = field(
        alpha, np.cos(alpha) * x0[0] + np.sin(alpha) * x0[1]
    )
    positive = bool(np.max(traj) > 0)
    interval = (0.0, 0.0)
    if positive:
        imax = int(np.argmax(traj))
        level = 0.5 * traj[imax]
        lo = imax
        while lo > 0 and traj[lo - 1] > level:
            lo -= 1
        hi = imax
        while hi < len(alpha) - 1 and traj[hi + 1] > level:
            hi += 1
        interval = (float(alpha[lo]), float(alpha[hi]))

    return AssumptionReport(
        kappa_x0_norm=value,
        continued_fraction_quotients=tuple(quotients),
        estimated_type_nu=nu,
        rational_flag=rational,
        sigma_positive=positive,
        sigma_interval=interval,
        warnings=tuple(warnings),
    )
