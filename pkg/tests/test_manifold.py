import numpy as np
import pytest
from scipy import optimize

from eqlab.economy import CES, CobbDouglas, Economy, Price, aggregate_excess, demand
from eqlab.errors import (
    ContinuationError,
    ConvergenceError,
    OutOfConeError,
    PreconditionError,
    UnsupportedFamilyError,
)
from eqlab.geometry import Box
from eqlab.manifold import (
    BrSolver,
    ChartPoint,
    PriceIncomePoint,
    ambient_to_chart_params,
    br_point_cobb_douglas,
    br_point_numeric,
    br_residual,
    decode_ambient,
    encode_ambient,
    equilibrium_chart,
    fiber_basis,
    no_trade_curve_triple,
    no_trade_point,
    on_manifold_residual,
    phi_chart,
    theta,
)


# -- price-income points ------------------------------------------------------

def test_br_cobb_douglas_heterogeneous(heterogeneous_cd):
    pi = br_point_cobb_douglas(heterogeneous_cd, [1.0])
    assert pi.price.pbar[0] == pytest.approx(5.0 / 6.0, abs=1e-14)
    np.testing.assert_allclose(pi.w, [1.0, 8.0 / 3.0], rtol=1e-14)
    assert np.max(np.abs(br_residual(heterogeneous_cd, pi.price, pi.w))) < 1e-12


def test_br_cobb_douglas_against_independent_solver(heterogeneous_cd):
    # oracle: scipy root on (p1, w2) with w1 fixed at 1
    def system(x):
        price = Price([x[0]])
        w = np.array([1.0, x[1]])
        return br_residual(heterogeneous_cd, price, w)

    sol = optimize.root(system, x0=[1.0, 2.0], tol=1e-13)
    assert sol.success
    np.testing.assert_allclose(sol.x, [5.0 / 6.0, 8.0 / 3.0], rtol=1e-10)


def test_br_symmetric_point(identical_cd):
    pi = br_point_cobb_douglas(identical_cd, [2.0])
    assert pi.price.pbar[0] == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(pi.w, [2.0, 2.0], rtol=1e-14)


def test_identical_cd_price_constant_in_t(identical_cd):
    rng = np.random.default_rng(0)
    prices = [br_point_cobb_douglas(identical_cd, [t]).price.pbar[0]
              for t in rng.uniform(-3.0, 7.0, size=100)]
    np.testing.assert_allclose(prices, 1.0, atol=1e-13)


def test_br_requires_cobb_douglas(mirror_ces):
    with pytest.raises(UnsupportedFamilyError):
        br_point_cobb_douglas(mirror_ces, [1.0])


def test_br_out_of_cone(heterogeneous_cd):
    # p1(t) = t/6 + 2/3 turns negative for t < -4
    with pytest.raises(OutOfConeError):
        br_point_cobb_douglas(heterogeneous_cd, [-10.0])


def test_br_numeric_matches_closed_form(heterogeneous_cd):
    guess = PriceIncomePoint(Price([1.0]), np.array([1.0, 2.0]))
    pi = br_point_numeric(heterogeneous_cd, [1.0], guess)
    ref = br_point_cobb_douglas(heterogeneous_cd, [1.0])
    assert abs(pi.price.pbar[0] - ref.price.pbar[0]) < 1e-10
    np.testing.assert_allclose(pi.w, ref.w, atol=1e-10)


def test_br_numeric_mirror_symmetric(mirror_ces):
    guess = PriceIncomePoint(Price([1.0]), np.array([1.0, 1.0]))
    pi = br_point_numeric(mirror_ces, [1.0], guess)
    assert pi.price.pbar[0] == pytest.approx(1.0, abs=1e-10)
    assert pi.w[1] == pytest.approx(1.0, abs=1e-10)


def test_br_numeric_bad_guess_fails(mirror_ces):
    guess = PriceIncomePoint(Price([1e12]), np.array([1.0, -1e9]))
    with pytest.raises(ConvergenceError):
        br_point_numeric(mirror_ces, [1.0], guess, tol=1e-12)


def test_br_numeric_step_cap(mirror_ces):
    guess = PriceIncomePoint(Price([1.0]), np.array([3.0, 1.0]))
    with pytest.raises(ContinuationError):
        br_point_numeric(mirror_ces, [3.0], guess, log_price_cap=0.1)


def test_br_solver_continuation(mirror_ces):
    solver = BrSolver(mirror_ces, base_t=[1.0])
    pi = solver([3.0])
    assert np.max(np.abs(br_residual(mirror_ces, pi.price, pi.w))) < 1e-10
    # income identity on the price-income set: total wealth equals p . r
    assert pi.w.sum() == pytest.approx(float(np.dot(pi.price.full, mirror_ces.r)), abs=1e-9)
    # memoized value is the same object
    assert solver([3.0]) is pi


# -- theta, no-trade, fibers --------------------------------------------------

def test_theta_identical(identical_cd):
    total, utils = theta(identical_cd, PriceIncomePoint(Price([1.0]), np.array([2.0, 2.0])))
    np.testing.assert_allclose(total, [2.0, 2.0], rtol=1e-14)
    np.testing.assert_allclose(utils, [0.0], atol=1e-14)


def test_theta_first_component_is_r_on_br(heterogeneous_cd):
    pi = br_point_cobb_douglas(heterogeneous_cd, [1.0])
    total, _ = theta(heterogeneous_cd, pi)
    np.testing.assert_allclose(total, heterogeneous_cd.r, atol=1e-12)


def test_theta_flags_nonpositive_bundle(identical_cd):
    total, utils = theta(identical_cd, PriceIncomePoint(Price([1.0]), np.array([-2.0, 6.0])))
    assert np.isnan(utils[0])
    np.testing.assert_allclose(total, identical_cd.r, atol=1e-12)


def test_no_trade_identical(identical_cd):
    omega = no_trade_point(identical_cd, PriceIncomePoint(Price([1.0]), np.array([2.0, 2.0])))
    np.testing.assert_allclose(omega, [[1.0, 1.0], [1.0, 1.0]], rtol=1e-14)


def test_no_trade_heterogeneous(heterogeneous_cd):
    pi = br_point_cobb_douglas(heterogeneous_cd, [1.0])
    omega = no_trade_point(heterogeneous_cd, pi)
    np.testing.assert_allclose(omega[0], [0.72, 0.4], rtol=1e-12)
    np.testing.assert_allclose(omega[1], [1.28, 1.6], rtol=1e-12)
    # no-trade endowments are equilibria of themselves
    z = aggregate_excess(heterogeneous_cd, pi.price, omega)
    assert np.max(np.abs(z)) < 1e-12
    np.testing.assert_allclose(omega.sum(axis=0), heterogeneous_cd.r, rtol=1e-12)


def test_no_trade_rejects_off_manifold(identical_cd):
    with pytest.raises(PreconditionError):
        no_trade_point(identical_cd, PriceIncomePoint(Price([2.0]), np.array([2.0, 2.0])))


def test_no_trade_unique_on_fiber(heterogeneous_cd):
    # along the fiber the no-trade condition pins obar uniquely: the map
    # obar -> f_bar(p, w) - obar is affine with slope -1 per coordinate
    pi = br_point_cobb_douglas(heterogeneous_cd, [1.0])
    target = demand(heterogeneous_cd.consumers[0], pi.price.full, pi.w[0])[:-1]
    solutions = [obar for obar in np.linspace(-5, 5, 41)
                 if abs(target[0] - obar) < 1e-9]
    assert len(solutions) <= 1
    omega = no_trade_point(heterogeneous_cd, pi)
    assert omega[0, 0] == pytest.approx(target[0], abs=1e-14)


def test_fiber_basis_identical(identical_cd):
    pi = PriceIncomePoint(Price([1.0]), np.array([2.0, 2.0]))
    origin, dirs = fiber_basis(identical_cd, pi)
    assert len(dirs) == 1
    np.testing.assert_allclose(dirs[0], [0.0, 1.0, -1.0], rtol=1e-14)
    assert origin.shape == (3,)


def test_fiber_dimension_and_independence():
    eco = Economy(3, 3, [3.0, 3.0, 3.0], [CobbDouglas([0.2, 0.3, 0.5])] * 3)
    pi = br_point_cobb_douglas(eco, [1.0, 2.0])
    origin, dirs = fiber_basis(eco, pi)
    assert len(dirs) == (eco.L - 1) * (eco.M - 1)
    mat = np.stack(dirs)
    assert np.linalg.matrix_rank(mat) == len(dirs)
    # price block untouched by fiber moves
    assert np.all(mat[:, :eco.L - 1] == 0.0)
    # any point of the affine fiber stays on the manifold
    rng = np.random.default_rng(4)
    for _ in range(10):
        coeffs = rng.uniform(-2.0, 2.0, size=len(dirs))
        x = origin + mat.T @ coeffs
        assert on_manifold_residual(eco, x) < 1e-9


# -- ambient packing and the equilibrium chart --------------------------------

def test_ambient_round_trip(heterogeneous_cd):
    price = Price([0.7])
    omega = np.array([[1.2, -0.3], [0.8, 2.3]])
    x = encode_ambient(heterogeneous_cd, price, omega)
    assert x.shape == (3,)
    price2, omega2 = decode_ambient(heterogeneous_cd, x)
    np.testing.assert_allclose(price2.pbar, price.pbar)
    np.testing.assert_allclose(omega2, omega)


def test_ambient_dimension_statements():
    # M = 2 gives 2L - 1 flat coordinates; L = 2 gives 2M - 1
    eco_l3 = Economy(3, 2, [1.0, 1.0, 1.0], [CobbDouglas([0.2, 0.3, 0.5])] * 2)
    assert encode_ambient(eco_l3, Price([1.0, 1.0]), np.zeros((2, 3))).shape == (5,)
    eco_m3 = Economy(2, 3, [1.0, 1.0], [CobbDouglas([0.5, 0.5])] * 3)
    assert encode_ambient(eco_m3, Price([1.0]), np.zeros((3, 2))).shape == (5,)


def test_phi_chart_examples(identical_cd, heterogeneous_cd):
    x = phi_chart(heterogeneous_cd, ChartPoint(t=[1.0], obar=[[0.0]]))
    np.testing.assert_allclose(x, [5.0 / 6.0, 0.0, 1.0], rtol=1e-14)
    x = phi_chart(identical_cd, ChartPoint(t=[2.0], obar=[[1.0]]))
    np.testing.assert_allclose(x, [1.0, 1.0, 1.0], rtol=1e-14)


def test_phi_chart_lands_on_manifold(heterogeneous_cd):
    rng = np.random.default_rng(1)
    for _ in range(50):
        cp = ChartPoint(t=[rng.uniform(0.2, 3.0)], obar=[[rng.uniform(-2.0, 2.0)]])
        x = phi_chart(heterogeneous_cd, cp)
        assert on_manifold_residual(heterogeneous_cd, x) < 1e-8


def test_phi_affine_in_fiber_coordinates(heterogeneous_cd):
    # second differences in obar vanish to roundoff
    t = [1.3]
    delta = 0.37
    for obar in (-1.0, 0.0, 2.0):
        plus = phi_chart(heterogeneous_cd, ChartPoint(t=t, obar=[[obar + delta]]))
        mid = phi_chart(heterogeneous_cd, ChartPoint(t=t, obar=[[obar]]))
        minus = phi_chart(heterogeneous_cd, ChartPoint(t=t, obar=[[obar - delta]]))
        np.testing.assert_allclose(plus - 2 * mid + minus, 0.0, atol=1e-13)


def test_chart_round_trip_identity(heterogeneous_cd):
    # ambient -> (t, obar) -> ambient is the identity on manifold points
    for t, obar in [(0.9, 0.4), (1.7, -1.2), (2.5, 0.0)]:
        x = phi_chart(heterogeneous_cd, ChartPoint(t=[t], obar=[[obar]]))
        params = ambient_to_chart_params(heterogeneous_cd, x)
        cp = ChartPoint(t=params[:1], obar=params[1:])
        x_back = phi_chart(heterogeneous_cd, cp)
        np.testing.assert_allclose(x_back, x, atol=1e-12)


def test_equilibrium_chart_matches_phi(heterogeneous_cd):
    chart = equilibrium_chart(heterogeneous_cd, Box([0.5, -1.0], [2.5, 1.0]))
    assert chart.dual_safe and not chart.affine
    u = np.array([1.0, 0.5])
    expected = phi_chart(heterogeneous_cd, ChartPoint(t=u[:1], obar=u[1:]))
    np.testing.assert_allclose(chart(u), expected, rtol=1e-14)


def test_equilibrium_chart_identical_is_affine(identical_cd):
    chart = equilibrium_chart(identical_cd, Box([1.0, 0.0], [3.0, 2.0]))
    assert chart.affine


def test_equilibrium_chart_ces_on_manifold(mirror_ces):
    chart = equilibrium_chart(mirror_ces, Box([0.7, -0.3], [1.3, 0.3]), base_t=[1.0])
    assert not chart.dual_safe
    rng = np.random.default_rng(2)
    for _ in range(10):
        u = rng.uniform([0.7, -0.3], [1.3, 0.3])
        assert on_manifold_residual(mirror_ces, chart(u)) < 1e-8


def test_three_consumer_chart_on_manifold():
    eco = Economy(2, 3, [3.0, 3.0],
                  [CobbDouglas([0.3, 0.7]), CobbDouglas([0.5, 0.5]), CobbDouglas([0.6, 0.4])])
    chart = equilibrium_chart(eco, Box([0.5, 0.5, -1.0, -1.0], [2.0, 2.0, 1.0, 1.0]))
    rng = np.random.default_rng(3)
    for _ in range(10):
        u = rng.uniform(chart.domain.lower, chart.domain.upper)
        assert on_manifold_residual(eco, chart(u)) < 1e-8


def test_wedge_triple_vanishes_for_cobb_douglas(identical_cd, heterogeneous_cd):
    # the price path is affine in the wealth parameter for both economies,
    # so the zero-fiber curve is a straight line and the triple vanishes
    for eco in (identical_cd, heterogeneous_cd):
        triple = no_trade_curve_triple(eco, 1.5)
        assert np.linalg.norm(triple) < 1e-7


def test_wedge_triple_nonzero_for_ces(mirror_ces):
    solver = BrSolver(mirror_ces, base_t=[1.0])
    triple = no_trade_curve_triple(mirror_ces, 1.3, solver=solver)
    assert np.linalg.norm(triple) > 1e-3
