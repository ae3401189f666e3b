"""Extrinsic geometry of parametrized submanifolds of Euclidean space.

A :class:`Chart` is a smooth map from an n-dimensional parameter box into
R^(n+k). Everything here is computed numerically from the map alone:
induced metric g = J^T J, an orthonormal normal frame, the second
fundamental form contracted into the mean-curvature vector

    H = (1/n) * sum_ab g^ab P_normal(d2 Phi / du_a du_b),

grid scans for minimality, dispersion of the unit normal (codimension
one), tangential acceleration of curves, and the first variation of patch
volume under boundary-vanishing normal perturbations.

Conventions: the trace is averaged (division by n), so a unit cylinder
has mean-curvature norm 1/2. First derivatives use exact forward-mode
dual numbers when the chart supports them, otherwise central differences
with relative step ``h_rel``; second derivatives always use central
differences with relative step ``h2_rel``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from eqlab.dual import Dual
from eqlab.errors import (
    DegenerateChartError,
    DomainError,
    EqLabError,
    NonOrientableSamplingError,
)
from eqlab.quadrature import QuadratureSpec, gauss_points

H_REL_DEFAULT = 1e-6
H2_REL_DEFAULT = 1e-4
RANK_TOL_DEFAULT = 1e-8
TOL_MINIMAL = 1e-5


@dataclass(eq=False)
class Box:
    """Axis-aligned box in chart parameters."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.atleast_1d(np.asarray(self.lower, float))
        self.upper = np.atleast_1d(np.asarray(self.upper, float))
        if self.lower.shape != self.upper.shape:
            raise DomainError("box bounds must have equal length")
        if np.any(self.lower >= self.upper):
            raise DomainError("box must satisfy lower < upper componentwise")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def sides(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, u, margin: float = 0.0) -> bool:
        u = np.asarray(u, float)
        return bool(np.all(u >= self.lower + margin) and np.all(u <= self.upper - margin))

    def contains_box(self, other: "Box") -> bool:
        return bool(np.all(other.lower >= self.lower) and np.all(other.upper <= self.upper))

    def grid(self, shape) -> np.ndarray:
        """Regular grid of points, shape (*shape, dim), C-ordered."""
        shape = _normalize_shape(shape, self.dim)
        axes = [np.linspace(self.lower[j], self.upper[j], shape[j]) for j in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)


def _normalize_shape(shape, dim: int):
    if np.isscalar(shape):
        return (int(shape),) * dim
    shape = tuple(int(s) for s in shape)
    if len(shape) != dim:
        raise DomainError(f"grid shape {shape} does not match box dimension {dim}")
    return shape


@dataclass(eq=False)
class GridSpec:
    """Scan grid: points per axis, optionally on a sub-box of the domain."""

    shape: tuple
    box: Optional[Box] = None


@dataclass(eq=False)
class Chart:
    """Parametrized submanifold patch: map from an n-box into R^(n+k).

    ``map`` takes a length-n 1-d array and returns a length-(n+k) sequence.
    Charts built from arithmetic supported by :mod:`eqlab.dual` can set
    ``dual_safe`` to get exact first derivatives; charts wrapping iterative
    solvers must leave it False. ``affine`` marks maps known to be affine
    in the parameters.
    """

    map: Callable
    domain: Box
    n: int
    k: int
    name: str = ""
    dual_safe: bool = False
    affine: bool = False
    rank_tol: float = RANK_TOL_DEFAULT
    h_rel: float = H_REL_DEFAULT
    h2_rel: float = H2_REL_DEFAULT

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise DomainError("need n >= 1 and k >= 1")
        if self.domain.dim != self.n:
            raise DomainError("domain dimension does not match n")

    @property
    def ambient_dim(self) -> int:
        return self.n + self.k

    def __call__(self, u) -> np.ndarray:
        out = self.map(np.asarray(u, float))
        return np.asarray(out, float)


def _jacobian_dual(chart: Chart, u: np.ndarray) -> np.ndarray:
    cols = []
    for j in range(chart.n):
        seeded = np.array([Dual(ui, 1.0 if i == j else 0.0) for i, ui in enumerate(u)],
                          dtype=object)
        out = chart.map(seeded)
        cols.append([o.b if isinstance(o, Dual) else 0.0 for o in out])
    return np.array(cols, float).T


def jacobian_fd(chart: Chart, u, h_rel: float | None = None) -> np.ndarray:
    """Central-difference Jacobian, step h_j = h_rel * (1 + |u_j|) per axis."""
    u = np.asarray(u, float)
    h_rel = chart.h_rel if h_rel is None else h_rel
    cols = []
    for j in range(chart.n):
        h = h_rel * (1 + abs(u[j]))
        e = np.zeros(chart.n)
        e[j] = h
        cols.append((chart(u + e) - chart(u - e)) / (2 * h))
    return np.stack(cols, axis=1)


def jacobian(chart: Chart, u, richardson: bool = False) -> np.ndarray:
    """(n+k) x n Jacobian of the chart map at u.

    Dual-safe charts are differentiated exactly; others by central
    differences, optionally Richardson-extrapolated (steps h and h/2).
    Raises DegenerateChartError if the numerical rank drops below n.
    """
    u = np.asarray(u, float)
    if chart.dual_safe:
        jac = _jacobian_dual(chart, u)
    elif richardson:
        jac_h = jacobian_fd(chart, u)
        jac_h2 = jacobian_fd(chart, u, chart.h_rel / 2)
        jac = (4.0 * jac_h2 - jac_h) / 3.0
    else:
        jac = jacobian_fd(chart, u)
    svals = np.linalg.svd(jac, compute_uv=False)
    if svals[-1] <= chart.rank_tol * max(1.0, svals[0]):
        raise DegenerateChartError(
            f"chart {chart.name or '<unnamed>'} is rank-deficient at {u} "
            f"(smallest singular value {svals[-1]:.3e})")
    return jac


def metric(chart: Chart, u):
    """Induced metric g = J^T J and sqrt(det g) at u."""
    jac = jacobian(chart, u)
    g = jac.T @ jac
    eigs = np.linalg.eigvalsh(g)
    if eigs[0] <= 0:
        raise DegenerateChartError(f"induced metric not positive definite at {u}")
    return g, float(np.sqrt(np.prod(eigs)))


def _orient_k1(normal: np.ndarray) -> np.ndarray:
    # sign: positive along the axis of largest |component|; argmax ties
    # resolve toward the first (price) axis
    idx = int(np.argmax(np.abs(normal)))
    return -normal if normal[idx] < 0 else normal


def normal_frame(chart: Chart, u, jac: np.ndarray | None = None) -> np.ndarray:
    """Orthonormal basis of the normal space, shape (k, n+k).

    The frame comes from the full SVD of the Jacobian (left singular
    vectors beyond the column space). For k = 1 the sign is fixed by
    :func:`_orient_k1`; orientation continuity across calls is the
    caller's responsibility.
    """
    if jac is None:
        jac = jacobian(chart, u)
    u_full, _, _ = np.linalg.svd(jac, full_matrices=True)
    frame = u_full[:, chart.n:].T
    if chart.k == 1:
        frame = np.array([_orient_k1(frame[0])])
    return frame


@dataclass(eq=False)
class CurvatureReport:
    """Pointwise extrinsic curvature summary."""

    point: np.ndarray
    metric_det: float
    normal_frame: np.ndarray
    mean_curvature: np.ndarray
    mean_curvature_norm: float
    hessian_scale: float

    @property
    def is_minimal(self) -> bool:
        return self.mean_curvature_norm < TOL_MINIMAL * (1.0 + self.hessian_scale)


def second_derivatives(chart: Chart, u, h2_rel: float | None = None) -> np.ndarray:
    """Array of d2 Phi / du_a du_b vectors, shape (n, n, n+k), central FD.

    Charts flagged ``affine`` return exact zeros: the flag asserts the map
    is affine in its parameters, and trusting it avoids amplifying float
    cancellation noise by 1/h^2.
    """
    u = np.asarray(u, float)
    if chart.affine:
        return np.zeros((chart.n, chart.n, chart.ambient_dim))
    h2_rel = chart.h2_rel if h2_rel is None else h2_rel
    n = chart.n
    hs = [h2_rel * (1 + abs(u[j])) for j in range(n)]
    f0 = chart(u)
    out = np.empty((n, n, len(f0)))
    for a in range(n):
        ea = np.zeros(n)
        ea[a] = hs[a]
        out[a, a] = (chart(u + ea) - 2 * f0 + chart(u - ea)) / hs[a] ** 2
        for b in range(a + 1, n):
            eb = np.zeros(n)
            eb[b] = hs[b]
            mixed = (chart(u + ea + eb) - chart(u + ea - eb)
                     - chart(u - ea + eb) + chart(u - ea - eb)) / (4 * hs[a] * hs[b])
            out[a, b] = out[b, a] = mixed
    return out


def mean_curvature(chart: Chart, u) -> CurvatureReport:
    """Mean-curvature vector at u with the trace-averaged convention.

    H = (1/n) sum_ab g^ab P_normal(d2 Phi/du_a du_b); P_normal projects
    onto the orthogonal complement of the tangent space.
    """
    u = np.asarray(u, float)
    jac = jacobian(chart, u)
    g = jac.T @ jac
    g_inv = np.linalg.inv(g)
    frame = normal_frame(chart, u, jac=jac)
    hess = second_derivatives(chart, u)
    contracted = np.einsum("ab,abi->i", g_inv, hess) / chart.n
    h_vec = frame.T @ (frame @ contracted)
    return CurvatureReport(
        point=u,
        metric_det=float(np.linalg.det(g)),
        normal_frame=frame,
        mean_curvature=h_vec,
        mean_curvature_norm=float(np.linalg.norm(h_vec)),
        hessian_scale=float(np.max(np.linalg.norm(hess, axis=2))),
    )


@dataclass(eq=False)
class MinimalityScan:
    """Result of a mean-curvature grid scan."""

    sup_norm: float
    argmax: np.ndarray
    reports: list
    degenerate_count: int
    failures: list = field(default_factory=list)


def minimality_scan(chart: Chart, grid) -> MinimalityScan:
    """Sup of the mean-curvature norm over a grid.

    ``grid`` is a GridSpec, a points-per-axis int, or a shape tuple.
    Points where the chart degenerates or fails to evaluate are recorded
    per cell and excluded from the sup.
    """
    spec = grid if isinstance(grid, GridSpec) else GridSpec(shape=grid)
    box = spec.box or chart.domain
    if not chart.domain.contains_box(box):
        raise DomainError("scan box exceeds the chart domain")
    points = box.grid(spec.shape).reshape(-1, chart.n)
    reports, failures = [], []
    sup, argmax = -1.0, None
    for u in points:
        try:
            rep = mean_curvature(chart, u)
        except EqLabError as exc:
            failures.append((u, str(exc)))
            continue
        reports.append(rep)
        if rep.mean_curvature_norm > sup:
            sup, argmax = rep.mean_curvature_norm, u
    if argmax is None:
        raise DegenerateChartError("every grid point was degenerate")
    return MinimalityScan(sup_norm=sup, argmax=argmax, reports=reports,
                          degenerate_count=len(failures), failures=failures)


def _propagated_normals(chart: Chart, grid_points: np.ndarray, orient_tol: float):
    """Unit normals over a grid, sign-propagated from the grid origin."""
    shape = grid_points.shape[:-1]
    normals = np.empty(shape + (chart.ambient_dim,))
    for idx in np.ndindex(shape):
        n_vec = normal_frame(chart, grid_points[idx])[0]
        ref_idx = None
        for axis in reversed(range(len(idx))):
            if idx[axis] > 0:
                ref_idx = idx[:axis] + (idx[axis] - 1,) + idx[axis + 1:]
                break
        if ref_idx is not None:
            d = float(np.dot(n_vec, normals[ref_idx]))
            if abs(d) < orient_tol:
                raise NonOrientableSamplingError(
                    f"normal nearly orthogonal to neighbor at grid index {idx}; "
                    "refine the grid")
            if d < 0:
                n_vec = -n_vec
        normals[idx] = n_vec
    return normals.reshape(-1, chart.ambient_dim)


def gauss_map_dispersion(chart: Chart, grid, orient_tol: float = 0.1) -> float:
    """Max pairwise angle (radians) of the unit normal over a grid (k = 1)."""
    if chart.k != 1:
        raise DomainError("Gauss-map dispersion requires codimension one")
    spec = grid if isinstance(grid, GridSpec) else GridSpec(shape=grid)
    box = spec.box or chart.domain
    points = box.grid(spec.shape)
    normals = _propagated_normals(chart, points, orient_tol)
    dots = np.clip(normals @ normals.T, -1.0, 1.0)
    return float(np.max(np.arccos(dots)))


def geodesic_residual(chart: Chart, curve: Callable, t: float, h_c: float = 1e-4) -> float:
    """Norm of the tangential part of the ambient acceleration of chart o curve.

    Zero (up to discretization) exactly when the acceleration is normal to
    the submanifold, i.e. when the curve is an affinely parametrized
    geodesic.
    """
    gamma = lambda s: chart(curve(s))
    acc = (gamma(t + h_c) - 2.0 * gamma(t) + gamma(t - h_c)) / h_c ** 2
    jac = jacobian(chart, curve(t))
    coeffs, *_ = np.linalg.lstsq(jac, acc, rcond=None)
    return float(np.linalg.norm(jac @ coeffs))


def normal_graph_chart(chart: Chart, psi: Callable, eps: float,
                       ref_point=None) -> Chart:
    """Chart of the normal perturbation Phi + eps * psi * N (k = 1 only).

    Normals are oriented against the normal at ``ref_point`` (default: the
    domain center) so the perturbation field is continuous on patches
    where the normal stays within a half-sphere.
    """
    if chart.k != 1:
        raise DomainError("normal perturbations require codimension one")
    ref = chart.domain.center if ref_point is None else np.asarray(ref_point, float)
    n_ref = normal_frame(chart, ref)[0]

    def perturbed(u):
        n_vec = normal_frame(chart, np.asarray(u, float))[0]
        if np.dot(n_vec, n_ref) < 0:
            n_vec = -n_vec
        return chart(u) + eps * float(psi(u)) * n_vec

    return Chart(map=perturbed, domain=chart.domain, n=chart.n, k=chart.k,
                 name=f"{chart.name}+normal-graph", dual_safe=False,
                 h_rel=chart.h_rel, h2_rel=chart.h2_rel)


@dataclass(eq=False)
class FirstVariation:
    """Numeric and curvature-formula values of dV/d(eps) at eps = 0."""

    numeric: float
    analytic: float


def first_variation_volume(chart: Chart, box: Box, psi: Callable,
                           eps: float = 1e-4,
                           quad: QuadratureSpec | None = None) -> FirstVariation:
    """First variation of patch volume under Phi + eps * psi * N (k = 1).

    ``numeric`` is the central difference of the perturbed volume at
    +-eps; ``analytic`` is -integral psi * n * <H, N> dvol with the same
    oriented normal. psi must vanish on the box boundary.
    """
    if chart.k != 1:
        raise DomainError("first variation requires codimension one")
    quad = quad or QuadratureSpec()
    ref = box.center
    n_ref = normal_frame(chart, ref)[0]
    points, weights = gauss_points(box.lower, box.upper, quad.nodes, quad.panels)

    def patch_volume(c: Chart) -> float:
        return float(sum(w * metric(c, u)[1] for u, w in zip(points, weights)))

    v_plus = patch_volume(normal_graph_chart(chart, psi, eps, ref_point=ref))
    v_minus = patch_volume(normal_graph_chart(chart, psi, -eps, ref_point=ref))
    numeric = (v_plus - v_minus) / (2 * eps)

    analytic = 0.0
    for u, w in zip(points, weights):
        rep = mean_curvature(chart, u)
        n_vec = rep.normal_frame[0]
        if np.dot(n_vec, n_ref) < 0:
            n_vec = -n_vec
        h_scalar = float(np.dot(rep.mean_curvature, n_vec))
        analytic -= w * float(psi(u)) * chart.n * h_scalar * np.sqrt(rep.metric_det)
    return FirstVariation(numeric=float(numeric), analytic=float(analytic))


def bump(box: Box, amplitude: float = 1.0) -> Callable:
    """Product-of-sines bump on a box, vanishing on the boundary."""
    lower, sides = box.lower, box.sides

    def psi(u):
        rel = (np.asarray(u, float) - lower) / sides
        return amplitude * float(np.prod(np.sin(np.pi * np.clip(rel, 0.0, 1.0))))

    return psi
