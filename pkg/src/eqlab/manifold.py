"""Concrete charts of the equilibrium manifold and its price-income core.

With the last good as numeraire and total resources r fixed, a
(price, endowment) pair is packed into the flat ambient vector

    (pbar, obar_1, o1_last, ..., obar_{M-1}, o(M-1)_last)   in R^(LM-1),

where obar_i holds the first L-1 goods of consumer i and the last
consumer's endowment is recovered as r minus the rest, so resource
feasibility is exact by construction.

The price-income set {(p, w): sum_i f_i(p, w_i) = r} is charted by the
first M-1 wealths t = (w_1, ..., w_{M-1}); together with the fiber
coordinates obar this parametrizes the equilibrium manifold:

    Phi(t, obar) = (pbar(t), obar_1, w_1 - pbar(t).obar_1, ...).

For all-Cobb-Douglas economies pbar(t) is closed-form (and affine in t);
otherwise it is obtained by damped-Newton continuation in t from a solved
base point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from eqlab.economy import (
    CobbDouglas,
    Economy,
    Price,
    aggregate_excess,
    demand,
    solve_newton,
    utility,
)
from eqlab.errors import (
    ContinuationError,
    OutOfConeError,
    PreconditionError,
    UnsupportedFamilyError,
)
from eqlab.geometry import Box, Chart

BR_TOL = 1e-12
ON_MANIFOLD_TOL = 1e-9
CONTINUATION_STEP = 0.1
LOG_PRICE_CAP = 0.1


@dataclass
class PriceIncomePoint:
    """A point (p, w_1..w_M) of the price-income equilibrium set."""

    price: Price
    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, float)


def br_residual(eco: Economy, price: Price, w) -> np.ndarray:
    """sum_i f_i(p, w_i) - r."""
    total = np.zeros(eco.L)
    for spec, wi in zip(eco.consumers, np.asarray(w, float)):
        total += demand(spec, price.full, float(wi))
    return total - eco.r


def is_on_br(eco: Economy, pi: PriceIncomePoint, tol: float = ON_MANIFOLD_TOL) -> bool:
    return float(np.max(np.abs(br_residual(eco, pi.price, pi.w)))) < tol


def br_point_cobb_douglas(eco: Economy, t) -> PriceIncomePoint:
    """Closed-form price-income point of an all-Cobb-Douglas economy.

    Interprets t as the first M-1 wealths; the last wealth balances the
    numeraire market and prices follow as p_l = sum_i alpha_il w_i / r_l.
    """
    if not eco.all_cobb_douglas:
        raise UnsupportedFamilyError("closed-form price-income point needs all Cobb-Douglas consumers")
    t = np.atleast_1d(np.asarray(t, float))
    if t.shape != (eco.M - 1,):
        raise PreconditionError(f"t must have length {eco.M - 1}")
    alpha = np.stack([spec.alpha for spec in eco.consumers])
    if alpha[-1, -1] == 0:
        raise UnsupportedFamilyError("last consumer must value the numeraire good")
    w_last = (eco.r[-1] - float(np.dot(alpha[:-1, -1], t))) / alpha[-1, -1]
    w = np.append(t, w_last)
    p_full = (alpha.T @ w) / eco.r
    if np.any(p_full[:-1] <= 0):
        raise OutOfConeError(f"wealths {w} produce non-positive prices {p_full}")
    return PriceIncomePoint(price=Price(p_full[:-1]), w=w)


def br_point_numeric(eco: Economy, t, guess: PriceIncomePoint,
                     tol: float = BR_TOL,
                     log_price_cap: float | None = None) -> PriceIncomePoint:
    """Newton solve for the price-income point at wealths t from a guess.

    Unknowns are (log pbar, w_M); the first M-1 wealths are fixed at t.
    With ``log_price_cap`` set, a solution further than the cap from the
    guess in log-price raises ContinuationError (branch-jump guard).
    """
    t = np.atleast_1d(np.asarray(t, float))
    if t.shape != (eco.M - 1,):
        raise PreconditionError(f"t must have length {eco.M - 1}")

    def residual(x):
        price = Price(np.exp(x[:-1]))
        w = np.append(t, x[-1])
        return br_residual(eco, price, w)

    x0 = np.append(np.log(guess.price.pbar), guess.w[-1])
    x = solve_newton(residual, x0, tol=tol)
    if log_price_cap is not None:
        if np.max(np.abs(x[:-1] - np.log(guess.price.pbar))) > log_price_cap:
            raise ContinuationError(
                f"price moved more than {log_price_cap} in log units within one step")
    return PriceIncomePoint(price=Price(np.exp(x[:-1])), w=np.append(t, x[-1]))


class BrSolver:
    """Price-income evaluations t -> (p(t), w(t)) for one economy.

    Cobb-Douglas economies evaluate in closed form. Other families use
    continuation: walk from the base point toward the target t in steps of
    at most ``step``, halving any step whose price moves more than
    ``log_price_cap`` in log units. Solved points are memoized per target
    t; values are independent of evaluation order.
    """

    def __init__(self, eco: Economy, base_t=None, base_point: PriceIncomePoint | None = None,
                 step: float = CONTINUATION_STEP, log_price_cap: float = LOG_PRICE_CAP,
                 tol: float = BR_TOL):
        self.eco = eco
        self.step = step
        self.log_price_cap = log_price_cap
        self.tol = tol
        self._cache: dict = {}
        if eco.all_cobb_douglas:
            self.base_t = None
            self.base_point = None
            return
        if base_t is None:
            raise PreconditionError("non-Cobb-Douglas economies need a continuation base point")
        self.base_t = np.atleast_1d(np.asarray(base_t, float))
        guess = base_point or PriceIncomePoint(
            price=Price(np.ones(eco.L - 1)),
            w=np.append(self.base_t, float(eco.r.sum()) - self.base_t.sum()))
        self.base_point = br_point_numeric(eco, self.base_t, guess, tol=tol)
        self._cache[tuple(self.base_t)] = self.base_point

    def __call__(self, t) -> PriceIncomePoint:
        t = np.atleast_1d(np.asarray(t, float))
        if self.eco.all_cobb_douglas:
            return br_point_cobb_douglas(self.eco, t)
        key = tuple(t)
        if key in self._cache:
            return self._cache[key]
        point = self._continue_to(t)
        self._cache[key] = point
        return point

    def _continue_to(self, t) -> PriceIncomePoint:
        delta = t - self.base_t
        span = float(np.max(np.abs(delta)))
        n_steps = max(1, int(np.ceil(span / self.step)))
        point = self.base_point
        k = 0
        sub = 1
        while k < n_steps * sub:
            k += 1
            target = self.base_t + delta * (k / (n_steps * sub))
            try:
                point = br_point_numeric(self.eco, target, point, tol=self.tol,
                                         log_price_cap=self.log_price_cap)
            except ContinuationError:
                if sub >= 64:
                    raise
                # re-walk the current interval at twice the resolution
                k = (k - 1) * 2
                sub *= 2
        return point


def theta(eco: Economy, pi: PriceIncomePoint):
    """Aggregate demand and the first M-1 utility levels at a price-income point.

    Returns (sum_i f_i, (u_1(f_1), ..., u_{M-1}(f_{M-1}))); utility slots
    are NaN when the bundle is not strictly positive. The first component
    equals r exactly when pi lies on the price-income set.
    """
    bundles = [demand(spec, pi.price.full, float(wi))
               for spec, wi in zip(eco.consumers, pi.w)]
    total = np.sum(bundles, axis=0)
    utilities = np.array([utility(spec, bundles[i])
                          for i, spec in enumerate(eco.consumers[:-1])])
    return total, utilities


def no_trade_point(eco: Economy, pi: PriceIncomePoint) -> np.ndarray:
    """The unique no-trade endowment of the fiber over pi: omega_i = f_i(p, w_i)."""
    if not is_on_br(eco, pi):
        raise PreconditionError("point does not lie on the price-income set")
    return np.stack([demand(spec, pi.price.full, float(wi))
                     for spec, wi in zip(eco.consumers, pi.w)])


# -- ambient packing ---------------------------------------------------------

def ambient_dim(eco: Economy) -> int:
    return eco.L * eco.M - 1


def encode_ambient(eco: Economy, price: Price, omega) -> np.ndarray:
    """(p, omega) -> flat ambient coordinates; drops p_L and consumer M."""
    omega = np.asarray(omega, float)
    parts = [price.pbar]
    for i in range(eco.M - 1):
        parts.append(omega[i])
    return np.concatenate(parts)


def decode_ambient(eco: Economy, x) -> tuple:
    """Ambient coordinates -> (Price, full M x L endowment matrix)."""
    x = np.asarray(x, float)
    if x.shape != (ambient_dim(eco),):
        raise PreconditionError(f"ambient vector must have length {ambient_dim(eco)}")
    price = Price(x[:eco.L - 1])
    omega = np.empty((eco.M, eco.L))
    pos = eco.L - 1
    for i in range(eco.M - 1):
        omega[i] = x[pos:pos + eco.L]
        pos += eco.L
    omega[-1] = eco.r - omega[:-1].sum(axis=0)
    return price, omega


def ambient_to_chart_params(eco: Economy, x) -> np.ndarray:
    """Ambient point -> chart parameters (t, obar) of the wealth chart."""
    price, omega = decode_ambient(eco, x)
    t = omega[:-1] @ price.full
    obar = omega[:-1, :-1]
    return np.concatenate([t, obar.ravel()])


@dataclass
class ChartPoint:
    """Wealth-chart parameters: t (M-1 wealths) and obar ((M-1) x (L-1) fiber coords)."""

    t: np.ndarray
    obar: np.ndarray

    def __post_init__(self):
        self.t = np.atleast_1d(np.asarray(self.t, float))
        self.obar = np.asarray(self.obar, float).reshape(len(self.t), -1)

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.t, self.obar.ravel()])


def phi_chart(eco: Economy, cp: ChartPoint, solver: BrSolver | None = None) -> np.ndarray:
    """Ambient coordinates of the equilibrium-manifold point at (t, obar)."""
    solver = solver or BrSolver(eco)
    pi = solver(cp.t)
    parts = [pi.price.pbar]
    for i in range(eco.M - 1):
        o_last = pi.w[i] - float(np.dot(pi.price.pbar, cp.obar[i]))
        parts.append(np.append(cp.obar[i], o_last))
    return np.concatenate(parts)


def fiber_basis(eco: Economy, pi: PriceIncomePoint):
    """No-trade origin and the (L-1)(M-1) affine directions of the fiber.

    Varying fiber coordinate obar_{i,l} moves the ambient point by +1 in
    that slot and -pbar_l in the consumer's numeraire slot; prices and
    wealths stay fixed.
    """
    origin = encode_ambient(eco, pi.price, no_trade_point(eco, pi))
    dim = ambient_dim(eco)
    directions = []
    for i in range(eco.M - 1):
        block = (eco.L - 1) + i * eco.L
        for l in range(eco.L - 1):
            d = np.zeros(dim)
            d[block + l] = 1.0
            d[block + eco.L - 1] = -pi.price.pbar[l]
            directions.append(d)
    return origin, directions


def equilibrium_chart(eco: Economy, domain: Box, base_t=None, name: str = "") -> Chart:
    """Geometry chart of the equilibrium manifold over a parameter box.

    Parameters are ordered (t_1..t_{M-1}, obar row-major). All-Cobb-Douglas
    economies get a dual-safe closed-form map (affine when all consumers
    share one spec); other economies wrap a continuation solver and are
    differentiated by finite differences.
    """
    n = eco.L * (eco.M - 1)
    if domain.dim != n:
        raise PreconditionError(f"domain must have dimension {n}")
    k = eco.L - 1
    m1 = eco.M - 1

    if eco.all_cobb_douglas:
        alpha = np.stack([spec.alpha for spec in eco.consumers])
        w_last_coeff = -alpha[:-1, -1] / alpha[-1, -1]
        w_last_const = eco.r[-1] / alpha[-1, -1]

        def chart_map(u):
            t = u[:m1]
            w_last = w_last_const + sum(c * ti for c, ti in zip(w_last_coeff, t))
            pbar = [(sum(alpha[i, l] * t[i] for i in range(m1)) + alpha[-1, l] * w_last) / eco.r[l]
                    for l in range(eco.L - 1)]
            out = list(pbar)
            pos = m1
            for i in range(m1):
                obar_i = u[pos:pos + eco.L - 1]
                pos += eco.L - 1
                out.extend(obar_i)
                out.append(t[i] - sum(p * o for p, o in zip(pbar, obar_i)))
            return out

        identical = all(
            np.array_equal(eco.consumers[0].alpha, spec.alpha) for spec in eco.consumers)
        return Chart(map=chart_map, domain=domain, n=n, k=k,
                     name=name or "equilibrium-chart", dual_safe=True, affine=identical)

    solver = BrSolver(eco, base_t=base_t if base_t is not None else domain.center[:m1])

    def chart_map(u):
        u = np.asarray(u, float)
        cp = ChartPoint(t=u[:m1], obar=u[m1:])
        return phi_chart(eco, cp, solver=solver)

    return Chart(map=chart_map, domain=domain, n=n, k=k,
                 name=name or "equilibrium-chart", dual_safe=False)


def on_manifold_residual(eco: Economy, x) -> float:
    """Max-norm aggregate excess demand of a decoded ambient point."""
    price, omega = decode_ambient(eco, x)
    return float(np.max(np.abs(aggregate_excess(eco, price, omega))))


def no_trade_curve_triple(eco: Economy, t: float, solver: BrSolver | None = None,
                          h: float = 1e-4) -> np.ndarray:
    """Acceleration-wedge triple of the no-trade curve of an L=2, M=2 economy.

    With p = p(t) and w = w_1(t) = t along the curve Phi(t, 0), returns
    (-p p' w'', p p'' + w' w'', p p' p''); all three components vanish when
    the curve is a straight line (flat price path).
    """
    if eco.L != 2 or eco.M != 2:
        raise PreconditionError("the wedge triple is defined for two goods and two consumers")
    solver = solver or BrSolver(eco)
    p = lambda s: float(solver(np.array([s])).price.pbar[0])
    p0, p_plus, p_minus = p(t), p(t + h), p(t - h)
    dp = (p_plus - p_minus) / (2 * h)
    ddp = (p_plus - 2 * p0 + p_minus) / h ** 2
    dw, ddw = 1.0, 0.0  # w_1(t) = t in the wealth chart
    return np.array([-p0 * dp * ddw, p0 * ddp + dw * ddw, p0 * dp * ddp])
