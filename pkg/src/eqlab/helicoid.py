"""Generalized helicoids and their hyperplane intersections.

The family M^n(a_1..a_k, b) in R^(n+k) is parametrized by (s, t_1..t_{n-1}):

    (t_1 cos(a_1 s), t_1 sin(a_1 s), ..., t_k cos(a_k s), t_k sin(a_k s),
     t_{k+1}, ..., t_{n-1}, b s)

It is ruled (affine in t for fixed s) and, away from the degenerate
coefficient patterns, a minimal submanifold. When b * prod(a_i) = 0 the
image degenerates to (a subset of) an affine subspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from eqlab import dual
from eqlab.errors import DomainError
from eqlab.geometry import Box, Chart

INTERSECT_COEFF_TOL = 1e-8
DEFAULT_T_RANGE = (0.1, 2.0)


@dataclass
class HelicoidSpec:
    """Generalized helicoid: dimension n, codimension k, pitches a (len k), slope b."""

    n: int
    k: int
    a: np.ndarray
    b: float

    def __post_init__(self):
        self.a = np.atleast_1d(np.asarray(self.a, float))
        self.b = float(self.b)
        if self.n < 2:
            raise DomainError("need n >= 2")
        # the parametrization pairs t_1..t_k with trig factors, so k <= n-1
        if not (1 <= self.k <= self.n - 1):
            raise DomainError(f"need 1 <= k <= n-1, got k={self.k}, n={self.n}")
        if self.a.shape != (self.k,):
            raise DomainError(f"a must have length k={self.k}")

    @property
    def ambient_dim(self) -> int:
        return self.n + self.k


def is_degenerate(spec: HelicoidSpec) -> bool:
    """True exactly when b * prod(a_i) == 0 (tested exactly, no tolerance)."""
    return spec.b * math.prod(spec.a.tolist()) == 0.0


def is_affine(spec: HelicoidSpec) -> bool:
    """True when the parametrization itself is affine in (s, t): all a_i == 0."""
    return bool(np.all(spec.a == 0.0))


def standard_box(spec: HelicoidSpec) -> Box:
    """Scan box: one full period in s, fiber coordinates away from the axis."""
    nonzero = np.abs(spec.a[spec.a != 0.0])
    s_max = 2 * np.pi / float(nonzero.min()) if len(nonzero) else 1.0
    lower = np.concatenate([[0.0], np.full(spec.n - 1, DEFAULT_T_RANGE[0])])
    upper = np.concatenate([[s_max], np.full(spec.n - 1, DEFAULT_T_RANGE[1])])
    return Box(lower, upper)


def helicoid_chart(spec: HelicoidSpec, domain: Box | None = None) -> Chart:
    """Geometry chart of the helicoid; dual-safe and ruled in t."""
    a, b, n, k = spec.a, spec.b, spec.n, spec.k

    def chart_map(u):
        s = u[0]
        t = u[1:]
        out = []
        for i in range(k):
            out.append(t[i] * dual.cos(a[i] * s))
            out.append(t[i] * dual.sin(a[i] * s))
        out.extend(t[k:])
        out.append(b * s)
        return out

    return Chart(map=chart_map, domain=domain or standard_box(spec), n=n, k=k,
                 name=f"helicoid-n{n}k{k}", dual_safe=True, affine=is_affine(spec))


@dataclass
class Hyperplane:
    """Affine hyperplane sum_j coefficients_j x_j = delta in R^(n+k).

    Coefficients follow the ambient coordinate order of the helicoid:
    (alpha_1, beta_1, ..., alpha_k, beta_k, alpha_{k+1}, ..., alpha_n).
    """

    coefficients: np.ndarray
    delta: float

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, float)
        self.delta = float(self.delta)
        if not np.any(self.coefficients != 0.0):
            raise DomainError("hyperplane needs a nonzero coefficient vector")

    def evaluate(self, x) -> float:
        return float(np.dot(self.coefficients, np.asarray(x, float)))


@dataclass
class Intersection:
    """One parameter point of the helicoid lying on the hyperplane."""

    s: float
    t: np.ndarray
    residual: float
    point: np.ndarray


def _split_coefficients(spec: HelicoidSpec, plane: Hyperplane):
    if plane.coefficients.shape != (spec.ambient_dim,):
        raise DomainError(f"hyperplane lives in dimension {len(plane.coefficients)}, "
                          f"helicoid in {spec.ambient_dim}")
    k = spec.k
    alphas_trig = plane.coefficients[0:2 * k:2]
    betas_trig = plane.coefficients[1:2 * k:2]
    linear = plane.coefficients[2 * k:-1]      # alpha_{k+1}..alpha_{n-1}
    alpha_n = float(plane.coefficients[-1])
    return alphas_trig, betas_trig, linear, alpha_n


def hyperplane_intersection(spec: HelicoidSpec, plane: Hyperplane,
                            scan_points: int = 720) -> Intersection | None:
    """One intersection point of the helicoid with an affine hyperplane.

    Strategy in order: (i) a nonzero coefficient on a purely linear
    coordinate solves at s = 0; (ii) otherwise scan s until a trig
    combination c_i(s) = alpha_i cos(a_i s) + beta_i sin(a_i s) is usable
    and solve for t_i; (iii) otherwise only the slope coordinate carries a
    coefficient and s = delta / (alpha_n b). Nondegenerate helicoids
    (b * prod a_i != 0) always intersect; degenerate ones may be parallel
    to the plane, which returns None rather than raising.
    """
    alphas, betas, linear, alpha_n = _split_coefficients(spec, plane)
    chart = helicoid_chart(spec)

    def build(s: float, t: np.ndarray) -> Intersection:
        point = chart(np.concatenate([[s], t]))
        return Intersection(s=s, t=t, residual=abs(plane.evaluate(point) - plane.delta),
                            point=point)

    # (i) solve along a purely linear fiber coordinate at s = 0
    nz = np.nonzero(linear != 0.0)[0]
    if len(nz):
        j = int(nz[0])
        t = np.zeros(spec.n - 1)
        t[spec.k + j] = plane.delta / linear[j]
        return build(0.0, t)

    # (ii) scan s for a usable trig coefficient
    if np.any(alphas != 0.0) or np.any(betas != 0.0):
        s_period = standard_box(spec).upper[0]
        for s in np.linspace(0.0, s_period, scan_points, endpoint=False):
            c = alphas * np.cos(spec.a * s) + betas * np.sin(spec.a * s)
            usable = np.nonzero(np.abs(c) > INTERSECT_COEFF_TOL)[0]
            if len(usable):
                i = int(usable[0])
                t = np.zeros(spec.n - 1)
                t[i] = (plane.delta - alpha_n * spec.b * s) / c[i]
                return build(float(s), t)
        # degenerate pitches (or negligible trig weights): fall through to
        # the slope coordinate

    # (iii) only the slope coordinate is usable
    if alpha_n != 0.0 and spec.b != 0.0:
        return build(plane.delta / (alpha_n * spec.b), np.zeros(spec.n - 1))
    if plane.delta == 0.0:
        return build(0.0, np.zeros(spec.n - 1))
    return None
