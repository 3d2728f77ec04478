"""Contour regions, quadrature rules on their boundary and the rational filter.

A rule ``(z_j, w_j)`` is normalised so that ``sum_j w_j g(z_j)`` approximates
``(1 / 2 pi i) * contour_integral(g)``; the ``1 / 2 pi i`` factor lives in
the weights.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PoleCollision, UnsupportedRule

POLE_TOL = 1e-14


@dataclass(frozen=True)
class ContourRegion:
    """Interior of a circle or an axis-aligned ellipse.

    ``semi_major`` is the semi-axis along the real direction and
    ``semi_minor`` the one along the imaginary direction (the naming follows
    the usual "wide and flat" interval-search ellipse).
    """

    kind: str
    center: complex
    semi_major: float
    semi_minor: float

    def __post_init__(self):
        if self.kind not in ("circle", "ellipse"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        if not (self.semi_major > 0 and self.semi_minor > 0):
            raise ValueError("region semi-axes must be positive")
        if self.kind == "circle" and self.semi_major != self.semi_minor:
            raise ValueError("a circle needs semi_major == semi_minor")
        object.__setattr__(self, "center", complex(self.center))

    @classmethod
    def circle(cls, center=0.0, radius=1.0):
        return cls("circle", complex(center), float(radius), float(radius))

    @classmethod
    def ellipse(cls, center=0.0, a=1.0, b=0.1):
        if a == b:
            return cls.circle(center, a)
        return cls("ellipse", complex(center), float(a), float(b))

    @property
    def radius(self):
        return self.semi_major if self.kind == "circle" else None

    def level(self, lam):
        """Parametric level ((x-cx)/a)^2 + ((y-cy)/b)^2; < 1 means inside."""
        lam = np.asarray(lam, dtype=np.complex128)
        d = lam - self.center
        return (d.real / self.semi_major) ** 2 + (d.imag / self.semi_minor) ** 2

    def contains(self, lam, margin=0.0):
        """Strict membership; ``margin`` scales both semi-axes by ``1 + margin``."""
        inside = self.level(lam) < (1.0 + margin) ** 2
        return bool(inside) if np.ndim(inside) == 0 else inside

    def boundary(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if self.kind == "circle":
            return self.center + self.semi_major * np.exp(1j * theta)
        return self.center + self.semi_major * np.cos(theta) + 1j * self.semi_minor * np.sin(theta)

    def boundary_derivative(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if self.kind == "circle":
            return 1j * self.semi_major * np.exp(1j * theta)
        return -self.semi_major * np.sin(theta) + 1j * self.semi_minor * np.cos(theta)

    def symmetric_about_real_axis(self):
        return self.center.imag == 0.0


@dataclass(frozen=True)
class QuadratureRule:
    region: ContourRegion
    N: int
    points: np.ndarray
    weights: np.ndarray
    rule_kind: str = "trapezoidal"
    offset: float = 0.5
    thetas: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.points) != self.N or len(self.weights) != self.N:
            raise ValueError("points and weights must both have N entries")

    def boundary_residual(self):
        """Largest deviation of a node from the boundary equation."""
        return float(np.max(np.abs(self.region.level(self.points) - 1.0)))

    def with_weights(self, weights):
        return QuadratureRule(self.region, self.N, self.points,
                              np.asarray(weights, dtype=np.complex128),
                              self.rule_kind, self.offset, self.thetas)


def build_rule(region, kind="trapezoidal", N=32, offset=0.5):
    """Quadrature nodes and weights on the boundary of ``region``.

    Trapezoidal nodes sit at ``theta_j = 2 pi (j - 1 + offset) / N``.  The
    default half-step offset keeps every node off the real axis, so the
    nodes pair up under conjugation when the region is symmetric.

    Gauss-Legendre is available on circles only: four quarter arcs carrying
    ``N / 4`` nodes each.
    """
    N = int(N)
    if N < 2:
        raise ValueError("a quadrature rule needs N >= 2")
    if kind == "trapezoidal":
        theta = 2.0 * np.pi * (np.arange(N) + offset) / N
        z = region.boundary(theta)
        w = region.boundary_derivative(theta) / (1j * N)
        if region.kind == "circle":
            w = (z - region.center) / N
        return QuadratureRule(region, N, z, w, "trapezoidal", float(offset), theta)
    if kind == "gauss_legendre":
        if region.kind != "circle":
            raise UnsupportedRule("Gauss-Legendre is implemented for circles only")
        if N % 4:
            raise UnsupportedRule("Gauss-Legendre on a circle needs N divisible by 4")
        t, wt = np.polynomial.legendre.leggauss(N // 4)
        theta = np.concatenate([q * np.pi / 2 + (t + 1.0) * np.pi / 4 for q in range(4)])
        wts = np.tile(wt, 4)
        z = region.boundary(theta)
        # d theta = (pi/4) dt and z'(theta) / (2 pi i) = (z - c) / (2 pi)
        w = wts * (z - region.center) / 8.0
        return QuadratureRule(region, N, z, w, "gauss_legendre", 0.0, theta)
    raise UnsupportedRule(f"unknown rule kind {kind!r}")


@dataclass
class WeightConditionReport:
    max_violation_k: int
    max_abs: float
    k_minus1_value: complex
    passes: bool
    ratios: dict = field(default_factory=dict)


def _fsum_complex(terms):
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def check_weight_condition(rule, tol):
    """Check ``sum_j w_j z_j^k == 0`` for ``k = 0..N-2`` and ``!= 0`` for ``k = -1``.

    A power sum counts as zero when its magnitude is at most
    ``tol * max_j |w_j z_j^k|``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    z, w = rule.points, rule.weights
    km1 = _fsum_complex(w / z)
    worst_k, worst_ratio, worst_abs = 0, -1.0, 0.0
    ratios = {}
    ok = True
    for k in range(rule.N - 1):
        terms = w * z ** k
        s = abs(_fsum_complex(terms))
        scale = float(np.max(np.abs(terms)))
        ratio = s / scale if scale > 0 else 0.0
        ratios[k] = ratio
        if ratio > worst_ratio:
            worst_k, worst_ratio, worst_abs = k, ratio, s
        if s > tol * scale:
            ok = False
    if not abs(km1) > tol:
        ok = False
    return WeightConditionReport(worst_k, worst_abs, km1, ok, ratios)


def _check_poles(rule, lam, index=None):
    if np.min(np.abs(rule.points - lam)) <= POLE_TOL:
        raise PoleCollision(lam, index)


def filter_eval(rule, lam):
    """Rational filter ``f(lam) = sum_j w_j / (z_j - lam)``."""
    lam = complex(lam)
    _check_poles(rule, lam)
    return complex(np.sum(rule.weights / (rule.points - lam)))


@dataclass(frozen=True)
class FilterProfile:
    sample_points: np.ndarray
    magnitudes: np.ndarray
    rule: QuadratureRule = field(repr=False)


def filter_profile(rule, samples):
    samples = np.asarray(samples, dtype=np.complex128).ravel()
    mags = np.empty(samples.size)
    for i, lam in enumerate(samples):
        _check_poles(rule, lam, i)
        mags[i] = abs(np.sum(rule.weights / (rule.points - lam)))
    return FilterProfile(samples, mags, rule)


def fk_vector(rule, lam, block_size, k):
    """``[sum_j w_j z_j^k / (z_j - lam)^p for p = 1..block_size]``."""
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    if not 0 <= k:
        raise ValueError("k must be nonnegative")
    lam = complex(lam)
    _check_poles(rule, lam)
    z, w = rule.points, rule.weights
    d = z - lam
    wk = w * z ** k
    return np.array([np.sum(wk / d ** p) for p in range(1, block_size + 1)])
