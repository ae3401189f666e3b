"""Closed-form demand systems and equilibrium enumeration for exchange economies.

An :class:`Economy` bundles L goods, M consumers, total resources r and one
demand specification per consumer (Cobb-Douglas or CES). Prices are
normalized with the last good as numeraire: a :class:`Price` stores the
first L-1 coordinates and the implicit last coordinate is 1.

Demand is linear in wealth and is deliberately left defined for negative
wealth; endowment spaces here are full affine subspaces, not just the
positive orthant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from eqlab.errors import ConvergenceError, DomainError, EqLabError

_ALPHA_SUM_TOL = 1e-12


@dataclass
class CobbDouglas:
    """Cobb-Douglas consumer: expenditure share alpha_l on good l."""

    alpha: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, float)
        if self.alpha.ndim != 1 or len(self.alpha) < 2:
            raise DomainError("alpha must be a vector of length >= 2")
        if np.any(self.alpha <= 0):
            raise DomainError("all Cobb-Douglas shares must be positive")
        if abs(self.alpha.sum() - 1.0) > _ALPHA_SUM_TOL:
            raise DomainError(f"Cobb-Douglas shares must sum to 1, got {self.alpha.sum()!r}")

    @property
    def goods(self) -> int:
        return len(self.alpha)


@dataclass
class CES:
    """CES consumer with weights a_l and curvature rho < 1, rho != 0.

    The rho -> 0 limit is Cobb-Douglas and must be requested as such.
    """

    a: np.ndarray
    rho: float

    def __post_init__(self):
        self.a = np.asarray(self.a, float)
        self.rho = float(self.rho)
        if self.a.ndim != 1 or len(self.a) < 2:
            raise DomainError("a must be a vector of length >= 2")
        if np.any(self.a <= 0):
            raise DomainError("all CES weights must be positive")
        if not (self.rho < 1.0) or self.rho == 0.0:
            raise DomainError("CES requires rho < 1 and rho != 0")

    @property
    def goods(self) -> int:
        return len(self.a)

    @property
    def sigma(self) -> float:
        """Elasticity of substitution 1/(1-rho)."""
        return 1.0 / (1.0 - self.rho)


DemandSpec = Union[CobbDouglas, CES]


@dataclass
class Price:
    """Normalized price vector: stores the first L-1 coordinates, last is 1."""

    pbar: np.ndarray

    def __post_init__(self):
        self.pbar = np.atleast_1d(np.asarray(self.pbar, float))
        if np.any(self.pbar <= 0) or not np.all(np.isfinite(self.pbar)):
            raise DomainError(f"price components must be positive and finite, got {self.pbar}")

    @property
    def L(self) -> int:
        return len(self.pbar) + 1

    @property
    def full(self) -> np.ndarray:
        """Length-L array (pbar..., 1)."""
        return np.append(self.pbar, 1.0)

    @classmethod
    def from_full(cls, p) -> "Price":
        """Normalize an unnormalized positive price vector by its last entry."""
        p = np.asarray(p, float)
        if np.any(p <= 0):
            raise DomainError("price components must be positive")
        return cls(p[:-1] / p[-1])


@dataclass
class Economy:
    """Pure exchange economy: L goods, M consumers, total resources r."""

    L: int
    M: int
    r: np.ndarray
    consumers: list

    def __post_init__(self):
        self.r = np.asarray(self.r, float)
        if self.L < 2 or self.M < 2:
            raise DomainError("need at least 2 goods and 2 consumers")
        if self.r.shape != (self.L,) or np.any(self.r <= 0):
            raise DomainError("r must be a strictly positive vector of length L")
        if len(self.consumers) != self.M:
            raise DomainError(f"expected {self.M} consumer specs, got {len(self.consumers)}")
        for i, spec in enumerate(self.consumers):
            if not isinstance(spec, (CobbDouglas, CES)):
                raise DomainError(f"consumer {i}: unknown demand spec {type(spec).__name__}")
            if spec.goods != self.L:
                raise DomainError(f"consumer {i}: spec covers {spec.goods} goods, economy has {self.L}")

    @property
    def all_cobb_douglas(self) -> bool:
        return all(isinstance(s, CobbDouglas) for s in self.consumers)


@dataclass
class ScanConfig:
    """Controls equilibrium enumeration.

    Two goods: dense log-price grid over [p_log_min, p_log_max] with
    ``cells`` cells, sign changes refined by bisection to ``tol_p`` in
    log-price. More goods: ``starts`` damped Newton runs in log-price
    coordinates from seeded uniform starts. Roots closer than
    ``tol_dedupe`` in log-price are merged keeping the smaller residual.
    """

    p_log_min: float = -6.0
    p_log_max: float = 6.0
    cells: int = 20000
    tol_p: float = 1e-12
    tol_residual: float = 1e-9
    tol_dedupe: float = 1e-6
    starts: int = 32
    max_iter: int = 60
    seed: int = 0

    def __post_init__(self):
        if self.p_log_max <= self.p_log_min:
            raise DomainError("empty price window")
        if min(self.cells, self.starts, self.max_iter) < 1:
            raise DomainError("cells, starts and max_iter must be >= 1")
        for name in ("tol_p", "tol_residual", "tol_dedupe"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")


@dataclass
class EquilibriaResult:
    """Roots of the aggregate excess demand for one endowment."""

    roots: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    boundary_warning: bool = False

    def __len__(self):
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)


def _as_price_array(p) -> np.ndarray:
    """Accept a Price or a raw (possibly unnormalized) positive price array."""
    if isinstance(p, Price):
        return p.full
    p = np.asarray(p, float)
    if np.any(p <= 0) or not np.all(np.isfinite(p)):
        raise DomainError(f"price components must be positive and finite, got {p}")
    return p


def demand(spec: DemandSpec, p, w: float) -> np.ndarray:
    """Individual demand at prices p and wealth w.

    Cobb-Douglas: f_l = alpha_l w / p_l. CES with sigma = 1/(1-rho):
    f_l = a_l^sigma p_l^-sigma w / sum_k a_k^sigma p_k^(1-sigma).
    Both satisfy p.f = w identically, also for negative w.
    """
    p = _as_price_array(p)
    if isinstance(spec, CobbDouglas):
        return spec.alpha * w / p
    s = spec.sigma
    coeff = spec.a ** s * p ** (-s)
    return coeff / np.dot(coeff, p) * w


def utility(spec: DemandSpec, x) -> float:
    """Direct utility of a bundle; NaN if the bundle is not strictly positive.

    Cobb-Douglas uses the log form sum_l alpha_l log x_l; CES uses the
    aggregator (sum_l a_l x_l^rho)^(1/rho).
    """
    x = np.asarray(x, float)
    if np.any(x <= 0):
        return float("nan")
    if isinstance(spec, CobbDouglas):
        return float(np.dot(spec.alpha, np.log(x)))
    return float(np.dot(spec.a, x ** spec.rho) ** (1.0 / spec.rho))


def aggregate_excess(eco: Economy, p, omega) -> np.ndarray:
    """Aggregate excess demand Z = sum_i f_i(p, p.omega_i) - sum_i omega_i."""
    p = _as_price_array(p)
    omega = np.asarray(omega, float)
    total = np.zeros(eco.L)
    for spec, om in zip(eco.consumers, omega):
        total += demand(spec, p, float(np.dot(p, om)))
    return total - omega.sum(axis=0)


def excess_on_grid(eco: Economy, omega, p1_grid) -> np.ndarray:
    """Vectorized first excess-demand coordinate over a grid of p1 (L=2 only)."""
    if eco.L != 2:
        raise DomainError("grid evaluation requires exactly two goods")
    p1 = np.asarray(p1_grid, float)
    omega = np.asarray(omega, float)
    z1 = np.full_like(p1, -(omega[:, 0].sum()))
    for spec, om in zip(eco.consumers, omega):
        w = p1 * om[0] + om[1]
        if isinstance(spec, CobbDouglas):
            z1 += spec.alpha[0] * w / p1
        else:
            s = spec.sigma
            c = spec.a ** s
            z1 += c[0] * p1 ** (-s) / (c[0] * p1 ** (1 - s) + c[1]) * w
    return z1


def _bisect_log_root(f, lo: float, hi: float, f_lo: float, tol: float) -> float:
    """Bisection for a sign change of f(exp(x)) on [lo, hi] in log-price."""
    sign_lo = np.sign(f_lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(np.exp(mid))
        if fm == 0.0:
            return mid
        if np.sign(fm) == sign_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _find_equilibria_l2(eco, omega, scan: ScanConfig) -> EquilibriaResult:
    grid = np.linspace(scan.p_log_min, scan.p_log_max, scan.cells + 1)
    z = excess_on_grid(eco, omega, np.exp(grid))
    f = lambda p1: excess_on_grid(eco, omega, np.array([p1]))[0]

    log_roots = [grid[j] for j in np.nonzero(z == 0.0)[0]]
    crossings = np.nonzero(np.sign(z[:-1]) * np.sign(z[1:]) < 0)[0]
    boundary = bool(len(crossings) and (crossings[0] == 0 or crossings[-1] == scan.cells - 1))
    for j in crossings:
        log_roots.append(_bisect_log_root(f, grid[j], grid[j + 1], z[j], scan.tol_p))

    result = EquilibriaResult(boundary_warning=boundary)
    for lr in sorted(log_roots):
        price = Price(np.array([np.exp(lr)]))
        res = float(np.max(np.abs(aggregate_excess(eco, price, omega))))
        if res < scan.tol_residual:
            _add_root(result, price, res, scan.tol_dedupe)
    result.roots, result.residuals = _sorted_by_p1(result)
    return result


def _add_root(result: EquilibriaResult, price: Price, res: float, tol_dedupe: float):
    for idx, known in enumerate(result.roots):
        if np.max(np.abs(np.log(known.pbar) - np.log(price.pbar))) < tol_dedupe:
            if res < result.residuals[idx]:
                result.roots[idx] = price
                result.residuals[idx] = res
            return
    result.roots.append(price)
    result.residuals.append(res)


def _sorted_by_p1(result: EquilibriaResult):
    order = np.argsort([r.pbar[0] for r in result.roots], kind="stable")
    return [result.roots[i] for i in order], [result.residuals[i] for i in order]


def _newton_log_price(eco, omega, xi0, scan: ScanConfig):
    """Damped Newton on the first L-1 excess demands in log-price coordinates.

    Returns None for runs that diverge, leave the sane log-price range, or
    stall; multistart treats those as misses.
    """
    bound = max(50.0, 4.0 * max(abs(scan.p_log_min), abs(scan.p_log_max)))
    xi = np.array(xi0, float)

    def zbar(xi_):
        if np.any(np.abs(xi_) > bound):
            return None
        with np.errstate(over="ignore", invalid="ignore"):
            z = aggregate_excess(eco, Price(np.exp(xi_)), omega)[:-1]
        return z if np.all(np.isfinite(z)) else None

    fx = zbar(xi)
    if fx is None:
        return None
    for _ in range(scan.max_iter):
        if np.max(np.abs(fx)) < 0.1 * scan.tol_residual:
            return xi
        jac = np.empty((len(xi), len(xi)))
        for j in range(len(xi)):
            h = 1e-7 * (1 + abs(xi[j]))
            e = np.zeros(len(xi))
            e[j] = h
            z_plus, z_minus = zbar(xi + e), zbar(xi - e)
            if z_plus is None or z_minus is None:
                return None
            jac[:, j] = (z_plus - z_minus) / (2 * h)
        try:
            step = np.linalg.solve(jac, -fx)
        except np.linalg.LinAlgError:
            return None
        norm0 = np.linalg.norm(fx)
        lam = 1.0
        for _ in range(50):
            trial = xi + lam * step
            f_trial = zbar(trial)
            if f_trial is not None and np.linalg.norm(f_trial) < norm0:
                xi, fx = trial, f_trial
                break
            lam *= 0.5
        else:
            return None
    return xi if np.max(np.abs(fx)) < scan.tol_residual else None


def _find_equilibria_newton(eco, omega, scan: ScanConfig) -> EquilibriaResult:
    rng = np.random.default_rng(scan.seed)
    starts = rng.uniform(scan.p_log_min, scan.p_log_max, size=(scan.starts, eco.L - 1))
    result = EquilibriaResult()
    for xi0 in starts:
        xi = _newton_log_price(eco, omega, xi0, scan)
        if xi is None:
            continue
        if np.any(xi < scan.p_log_min) or np.any(xi > scan.p_log_max):
            result.boundary_warning = True
            continue
        price = Price(np.exp(xi))
        res = float(np.max(np.abs(aggregate_excess(eco, price, omega))))
        if res < scan.tol_residual:
            _add_root(result, price, res, scan.tol_dedupe)
    result.roots, result.residuals = _sorted_by_p1(result)
    return result


def find_equilibria(eco: Economy, omega, scan: ScanConfig | None = None) -> EquilibriaResult:
    """All normalized equilibrium prices of the economy at endowment omega.

    For two goods the count is exact for roots inside the scan window that
    are separated by more than one grid cell; roots outside the window are
    not seen. An empty result is valid (no positive-price solution).
    """
    scan = scan or ScanConfig()
    omega = np.asarray(omega, float)
    if omega.shape != (eco.M, eco.L):
        raise DomainError(f"endowment must be {eco.M}x{eco.L}, got {omega.shape}")
    if eco.L == 2:
        return _find_equilibria_l2(eco, omega, scan)
    return _find_equilibria_newton(eco, omega, scan)


def count_equilibria(eco: Economy, omega, scan: ScanConfig | None = None) -> int:
    """Number of equilibrium prices found by :func:`find_equilibria`."""
    return len(find_equilibria(eco, omega, scan))


def solve_newton(f, x0, tol: float, max_iter: int = 60, max_halvings: int = 50,
                 accept=None, h_rel: float = 1e-7):
    """Generic damped Newton for square systems with finite-difference Jacobian.

    Halves the step until the residual norm decreases (up to
    ``max_halvings``); trial points that an optional ``accept`` predicate
    rejects, or where f overflows / raises a domain error, count as failed
    halvings. Raises ConvergenceError carrying the last residual.
    """

    def safe_eval(x_):
        if accept is not None and not accept(x_):
            return None
        try:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                val = np.asarray(f(x_), float)
        except (EqLabError, FloatingPointError, ZeroDivisionError):
            return None
        return val if np.all(np.isfinite(val)) else None

    x = np.array(x0, float)
    fx = safe_eval(x)
    if fx is None:
        raise ConvergenceError("system not evaluable at the initial guess", iterations=0)
    for it in range(max_iter):
        if np.max(np.abs(fx)) < tol:
            return x
        jac = np.empty((len(fx), len(x)))
        for j in range(len(x)):
            h = h_rel * (1 + abs(x[j]))
            e = np.zeros(len(x))
            e[j] = h
            f_plus, f_minus = safe_eval(x + e), safe_eval(x - e)
            if f_plus is None or f_minus is None:
                raise ConvergenceError("system not evaluable near the iterate",
                                       residual=float(np.max(np.abs(fx))), iterations=it)
            jac[:, j] = (f_plus - f_minus) / (2 * h)
        try:
            step = np.linalg.solve(jac, -fx)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("singular Jacobian", residual=float(np.max(np.abs(fx))),
                                   iterations=it) from exc
        norm0 = np.linalg.norm(fx)
        lam = 1.0
        for _ in range(max_halvings):
            trial = x + lam * step
            f_trial = safe_eval(trial)
            if f_trial is not None and np.linalg.norm(f_trial) < norm0:
                x, fx = trial, f_trial
                break
            lam *= 0.5
        else:
            raise ConvergenceError("damping exhausted", residual=float(norm0), iterations=it)
    if np.max(np.abs(fx)) < tol:
        return x
    raise ConvergenceError("Newton did not converge",
                           residual=float(np.max(np.abs(fx))), iterations=max_iter)
