import numpy as np
import pytest

from eqlab import dual
from eqlab.dual import Dual
from eqlab.errors import DegenerateChartError, DomainError, NonOrientableSamplingError
from eqlab.geometry import (
    Box,
    Chart,
    GridSpec,
    bump,
    first_variation_volume,
    gauss_map_dispersion,
    geodesic_residual,
    jacobian,
    jacobian_fd,
    mean_curvature,
    metric,
    minimality_scan,
    normal_frame,
    second_derivatives,
)
from eqlab.quadrature import QuadratureSpec


def helicoid_map(u):
    s, t = u[0], u[1]
    return [t * dual.cos(s), t * dual.sin(s), s]


@pytest.fixture
def helicoid():
    return Chart(map=helicoid_map, domain=Box([-1.0, 0.1], [7.0, 2.0]), n=2, k=1,
                 name="helicoid", dual_safe=True)


# -- boxes ---------------------------------------------------------------------

def test_box_validation_and_grid():
    with pytest.raises(DomainError):
        Box([0.0, 0.0], [1.0, 0.0])
    box = Box([0.0, 1.0], [1.0, 3.0])
    grid = box.grid((3, 5))
    assert grid.shape == (3, 5, 2)
    assert box.contains([0.5, 2.0])
    assert not box.contains([0.5, 2.99], margin=0.1)


# -- jacobians ------------------------------------------------------------------

def test_jacobian_saddle_at_origin():
    chart = Chart(map=lambda u: [u[0], u[1], u[0] * u[1]],
                  domain=Box([-1, -1], [1, 1]), n=2, k=1, dual_safe=True)
    np.testing.assert_allclose(jacobian(chart, [0.0, 0.0]),
                               [[1, 0], [0, 1], [0, 0]], atol=1e-12)


def test_affine_chart_constant_jacobian():
    a_mat = np.array([[1.0, 2.0], [0.0, 1.0], [3.0, -1.0]])
    chart = Chart(map=lambda u: a_mat @ u, domain=Box([-2, -2], [2, 2]),
                  n=2, k=1, dual_safe=True, affine=True)
    for u in ([0.0, 0.0], [1.3, -0.7], [-1.9, 1.9]):
        np.testing.assert_allclose(jacobian(chart, u), a_mat, atol=1e-12)


def test_jacobian_helicoid_against_analytic(helicoid):
    s, t = 0.0, 1.0
    analytic = np.array([[-t * np.sin(s), np.cos(s)],
                         [t * np.cos(s), np.sin(s)],
                         [1.0, 0.0]])
    assert np.max(np.abs(jacobian(helicoid, [s, t]) - analytic)) < 1e-8
    # finite differences agree with the dual backend
    assert np.max(np.abs(jacobian_fd(helicoid, [s, t]) - analytic)) < 1e-8


def test_dual_fd_agreement_on_polynomial_chart():
    chart = Chart(map=lambda u: [u[0] ** 3, u[0] * u[1], u[1] ** 2 + 1.0, u[0]],
                  domain=Box([-2, -2], [2, 2]), n=2, k=2, dual_safe=True)
    fd_chart = Chart(map=chart.map, domain=chart.domain, n=2, k=2, dual_safe=False)
    for u in ([0.3, 0.8], [-1.2, 0.5]):
        assert np.max(np.abs(jacobian(chart, u) - jacobian(fd_chart, u))) < 1e-6


def test_jacobian_richardson_improves_fd():
    chart = Chart(map=lambda u: np.array([np.sin(3 * u[0]), np.cos(2 * u[0]), u[0]]),
                  domain=Box([-2.0], [2.0]), n=1, k=2, h_rel=1e-3)
    u = [0.4]
    exact = np.array([[3 * np.cos(1.2)], [-2 * np.sin(0.8)], [1.0]])
    err_plain = np.max(np.abs(jacobian(chart, u) - exact))
    err_rich = np.max(np.abs(jacobian(chart, u, richardson=True) - exact))
    assert err_rich < err_plain / 10


def test_rank_deficiency_detected():
    chart = Chart(map=lambda u: [u[0], u[0], 0.0], domain=Box([-1, -1], [1, 1]), n=2, k=1)
    with pytest.raises(DegenerateChartError):
        jacobian(chart, [0.0, 0.0])


# -- metric ----------------------------------------------------------------------

def test_metric_isometric_affine():
    chart = Chart(map=lambda u: [u[0], u[1], 0.0], domain=Box([-1, -1], [1, 1]),
                  n=2, k=1, dual_safe=True)
    g, sdet = metric(chart, [0.2, -0.2])
    np.testing.assert_allclose(g, np.eye(2), atol=1e-12)
    assert sdet == pytest.approx(1.0, abs=1e-12)


def test_metric_scaling():
    chart = Chart(map=lambda u: [2.0 * u[0], 2.0 * u[1], 0.0],
                  domain=Box([-1, -1], [1, 1]), n=2, k=1, dual_safe=True)
    _, sdet = metric(chart, [0.0, 0.0])
    assert sdet == pytest.approx(4.0, rel=1e-12)


def test_metric_helicoid_closed_form(helicoid):
    for s, t in [(0.3, 0.5), (2.0, 1.7)]:
        g, sdet = metric(helicoid, [s, t])
        np.testing.assert_allclose(g, np.diag([1 + t ** 2, 1.0]), atol=1e-9)
        assert sdet == pytest.approx(np.sqrt(1 + t ** 2), rel=1e-9)


# -- normal frames -----------------------------------------------------------------

def test_normal_plane_sign(plane_chart):
    frame = normal_frame(plane_chart, [0.3, 0.4])
    np.testing.assert_allclose(frame, [[0.0, 0.0, 1.0]], atol=1e-12)


def test_normal_cylinder_radial(cylinder_chart):
    frame = normal_frame(cylinder_chart, [0.0, 0.5])
    np.testing.assert_allclose(frame, [[1.0, 0.0, 0.0]], atol=1e-9)


def test_normal_frame_codimension_two():
    chart = Chart(map=lambda u: [u[0], u[1], u[0] * u[1], u[0] ** 2 - u[1]],
                  domain=Box([-1, -1], [1, 1]), n=2, k=2, dual_safe=True)
    u = [0.4, -0.3]
    frame = normal_frame(chart, u)
    assert frame.shape == (2, 4)
    np.testing.assert_allclose(frame @ frame.T, np.eye(2), atol=1e-10)
    jac = jacobian(chart, u)
    assert np.max(np.abs(frame @ jac)) < 1e-8


# -- mean curvature ------------------------------------------------------------------

def test_mean_curvature_affine_zero():
    a_mat = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 1.0], [3.0, -1.0, 0.5],
                      [0.5, 0.5, 0.5], [0.0, 0.0, 2.0]])
    chart = Chart(map=lambda u: a_mat @ u + 1.0, domain=Box([-1, -1, -1], [1, 1, 1]),
                  n=3, k=2, dual_safe=True, affine=True)
    rep = mean_curvature(chart, [0.1, 0.2, 0.3])
    assert rep.mean_curvature_norm < 1e-10
    assert rep.is_minimal


def test_mean_curvature_cylinder_half(cylinder_chart):
    # principal curvatures 1 and 0; the trace-averaged norm is 1/2
    rep = mean_curvature(cylinder_chart, [0.7, 0.3])
    assert rep.mean_curvature_norm == pytest.approx(0.5, abs=1e-6)
    assert not rep.is_minimal
    # curvature vector points toward the axis
    np.testing.assert_allclose(rep.mean_curvature[:2] / rep.mean_curvature_norm,
                               [-np.cos(0.7), -np.sin(0.7)], atol=1e-6)


def test_mean_curvature_sphere_unit():
    chart = Chart(map=lambda u: np.array([np.sin(u[0]) * np.cos(u[1]),
                                          np.sin(u[0]) * np.sin(u[1]),
                                          np.cos(u[0])]),
                  domain=Box([0.2, -1.0], [3.0, 7.0]), n=2, k=1)
    rep = mean_curvature(chart, [1.1, 0.6])
    assert rep.mean_curvature_norm == pytest.approx(1.0, abs=1e-5)


def test_report_invariants(cylinder_chart, sphere_chart):
    for chart, u in [(cylinder_chart, [0.4, 0.8]), (sphere_chart, [1.0, 2.0])]:
        rep = mean_curvature(chart, u)
        frame = rep.normal_frame
        np.testing.assert_allclose(frame @ frame.T, np.eye(chart.k), atol=1e-10)
        jac = jacobian(chart, u)
        assert np.max(np.abs(frame @ jac)) < 1e-8
        # H lies in the normal space
        tangential = jac.T @ rep.mean_curvature
        assert np.max(np.abs(tangential)) < 1e-8 * (1.0 + rep.mean_curvature_norm)


def test_second_derivative_convergence_order():
    chart = Chart(map=lambda u: np.array([u[0], u[1], np.sin(u[0]) * np.cos(u[1])]),
                  domain=Box([-2, -2], [2, 2]), n=2, k=1)
    u = np.array([0.5, 0.3])
    exact = np.zeros((2, 2, 3))
    exact[0, 0, 2] = -np.sin(0.5) * np.cos(0.3)
    exact[0, 1, 2] = exact[1, 0, 2] = -np.cos(0.5) * np.sin(0.3)
    exact[1, 1, 2] = -np.sin(0.5) * np.cos(0.3)
    err = [np.max(np.abs(second_derivatives(chart, u, h2_rel=h) - exact))
           for h in (2e-2, 1e-2)]
    order = np.log2(err[0] / err[1])
    assert order >= 1.8


def test_rigid_motion_invariance(cylinder_chart, helicoid):
    rng = np.random.default_rng(5)
    q_mat, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    shift = rng.uniform(-5, 5, size=3)
    for chart, u in [(cylinder_chart, [0.6, 0.2]), (helicoid, [0.9, 1.1])]:
        moved = Chart(map=lambda v, c=chart: q_mat @ np.asarray(c(v), float) + shift,
                      domain=chart.domain, n=chart.n, k=chart.k)
        base = mean_curvature(chart, u).mean_curvature_norm
        rotated = mean_curvature(moved, u).mean_curvature_norm
        assert abs(base - rotated) < 1e-9


# -- scans ---------------------------------------------------------------------------

def test_minimality_scan_helicoid(helicoid):
    scan = minimality_scan(helicoid, GridSpec(shape=(11, 11),
                                              box=Box([0.0, 0.1], [2 * np.pi, 2.0])))
    assert scan.sup_norm < 1e-6
    assert scan.degenerate_count == 0
    assert len(scan.reports) == 121


def test_minimality_scan_cylinder(cylinder_chart):
    scan = minimality_scan(cylinder_chart, (5, 5))
    assert scan.sup_norm == pytest.approx(0.5, abs=1e-6)


def test_minimality_scan_records_failures():
    def partial(u):
        if u[0] > 0.5:
            raise DegenerateChartError("outside the good patch")
        return np.array([u[0], u[1], 0.0])

    chart = Chart(map=partial, domain=Box([0.0, 0.0], [1.0, 1.0]), n=2, k=1)
    scan = minimality_scan(chart, (5, 5))
    assert scan.degenerate_count > 0
    assert scan.sup_norm < 1e-10
    assert len(scan.reports) + scan.degenerate_count == 25


def test_gauss_dispersion_affine(plane_chart):
    assert gauss_map_dispersion(plane_chart, (5, 5)) == 0.0


def test_gauss_dispersion_cylinder_patch():
    chart = Chart(map=lambda u: np.array([np.cos(u[0]), np.sin(u[0]), u[1]]),
                  domain=Box([0.0, 0.0], [1.0, 1.0]), n=2, k=1)
    disp = gauss_map_dispersion(chart, (11, 3))
    assert disp == pytest.approx(1.0, abs=1e-6)


def test_gauss_dispersion_monotone_under_refinement(cylinder_chart):
    box = Box([0.0, 0.0], [1.0, 1.0])
    coarse = gauss_map_dispersion(cylinder_chart, GridSpec(shape=(11, 2), box=box))
    fine = gauss_map_dispersion(cylinder_chart, GridSpec(shape=(21, 3), box=box))
    assert fine >= coarse - 1e-9


def test_gauss_dispersion_requires_hypersurface():
    chart = Chart(map=lambda u: [u[0], u[1], 0.0, 0.0], domain=Box([-1, -1], [1, 1]),
                  n=2, k=2, dual_safe=True)
    with pytest.raises(DomainError):
        gauss_map_dispersion(chart, (3, 3))


def test_gauss_dispersion_orientation_failure():
    # sampling a half-turn of the cylinder with 90-degree steps makes
    # adjacent normals orthogonal: propagation must refuse
    chart = Chart(map=lambda u: np.array([np.cos(u[0]), np.sin(u[0]), u[1]]),
                  domain=Box([0.0, 0.0], [np.pi, 1.0]), n=2, k=1)
    with pytest.raises(NonOrientableSamplingError):
        gauss_map_dispersion(chart, (3, 2))


# -- geodesics -----------------------------------------------------------------------

def test_geodesic_straight_line_in_affine_chart(plane_chart):
    curve = lambda t: np.array([0.3 * t - 1.0, 0.5 * t])
    assert geodesic_residual(plane_chart, curve, 0.7) < 1e-10


def test_geodesic_sphere_equator(sphere_chart):
    curve = lambda t: np.array([np.pi / 2, t])
    assert geodesic_residual(sphere_chart, curve, 0.4) < 5e-6


def test_geodesic_sphere_latitude_45(sphere_chart):
    # tangential acceleration of the 45-degree circle: sin(45) cos(45) = 1/2
    curve = lambda t: np.array([np.pi / 4, t])
    res = geodesic_residual(sphere_chart, curve, 0.9)
    assert res == pytest.approx(0.5, abs=1e-4)


# -- first variation of volume ----------------------------------------------------

def test_first_variation_affine_zero(plane_chart):
    box = Box([-0.5, -0.5], [0.5, 0.5])
    fv = first_variation_volume(plane_chart, box, bump(box), quad=QuadratureSpec(nodes=12))
    assert abs(fv.numeric) < 1e-8
    assert abs(fv.analytic) < 1e-10


def test_first_variation_cylinder_matches_formula(cylinder_chart):
    box = Box([0.0, 0.0], [1.0, 1.0])
    psi = bump(box)
    fv = first_variation_volume(cylinder_chart, box, psi, quad=QuadratureSpec(nodes=12))
    assert fv.numeric == pytest.approx(fv.analytic, rel=1e-3)
    # independent sign/value check: with the outward normal, <H, N> = -1/2,
    # so dV/deps = + integral of psi over the patch (area element = 1)
    grid = np.linspace(0, 1, 201)
    riemann = np.trapz(np.trapz(
        [[psi([s, t]) for t in grid] for s in grid], grid), grid)
    assert fv.numeric == pytest.approx(riemann, rel=1e-3)


def test_first_variation_sphere_matches_formula(sphere_chart):
    box = Box([0.8, 0.5], [1.8, 1.5])
    fv = first_variation_volume(sphere_chart, box, bump(box), quad=QuadratureSpec(nodes=12))
    assert fv.numeric == pytest.approx(fv.analytic, rel=1e-3)


def test_first_variation_zero_field(cylinder_chart):
    box = Box([0.0, 0.0], [1.0, 1.0])
    fv = first_variation_volume(cylinder_chart, box, lambda u: 0.0)
    assert fv.numeric == 0.0
    assert fv.analytic == 0.0
