"""Scenario execution: turns a validated config into result rows + summary.

Per-point numerical failures never abort a sweep; they become flagged
rows and are counted so the CLI can enforce the failure threshold. All
randomness flows from the config seed, and parallel execution over sweep
points is canonicalized by point index, so outputs are byte-identical
for any worker count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from eqlab import entropy as entropy_mod
from eqlab import geometry, helicoid as helicoid_mod, manifold
from eqlab.config import ExperimentConfig
from eqlab.economy import find_equilibria
from eqlab.errors import EqLabError
from eqlab.geometry import GridSpec

log = logging.getLogger("eqlab")


@dataclass(eq=False)
class ResultRow:
    scenario: str
    economy_id: str
    point: tuple = ()
    count: Optional[int] = None
    sup_mean_curvature: Optional[float] = None
    volume: Optional[float] = None
    entropy: Optional[float] = None
    gauss_dispersion: Optional[float] = None
    flags: tuple = ()


@dataclass(eq=False)
class RunResult:
    rows: list
    summary: dict
    failures: int = 0
    total_points: int = 0

    @property
    def failure_fraction(self) -> float:
        return self.failures / self.total_points if self.total_points else 0.0


def _pmap(fn, items, jobs: int):
    """Order-preserving map over a worker pool; jobs=1 stays serial."""
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _flag_of_exception(exc: Exception) -> str:
    return f"error:{type(exc).__name__}"


def _economy_chart(cfg: ExperimentConfig) -> geometry.Chart:
    base_t = cfg.chart.base_t
    return manifold.equilibrium_chart(cfg.economy, cfg.chart.box, base_t=base_t,
                                      name=cfg.economy_id)


def _run_equilibria(cfg: ExperimentConfig, jobs: int) -> RunResult:
    omegas = cfg.endowments.sample(cfg.economy, cfg.seed)

    def work(omega):
        try:
            res = find_equilibria(cfg.economy, omega, cfg.scan)
        except EqLabError as exc:
            return None, (_flag_of_exception(exc),)
        flags = ("boundary-warning",) if res.boundary_warning else ()
        return len(res), flags

    results = _pmap(work, omegas, jobs)
    rows, failures = [], 0
    counts = []
    for omega, (count, flags) in zip(omegas, results):
        if count is None:
            failures += 1
        else:
            counts.append(count)
        rows.append(ResultRow(scenario=cfg.scenario, economy_id=cfg.economy_id,
                              point=tuple(np.asarray(omega, float).ravel()),
                              count=count, flags=flags))
    summary = {
        "points": len(omegas),
        "max_count": max(counts) if counts else 0,
        "min_count": min(counts) if counts else 0,
        "boundary_warnings": sum(1 for r in rows if "boundary-warning" in r.flags),
    }
    return RunResult(rows=rows, summary=summary, failures=failures, total_points=len(omegas))


def _run_curvature_scan(cfg: ExperimentConfig, jobs: int) -> RunResult:
    chart = _economy_chart(cfg)
    points = cfg.chart.box.grid(cfg.chart.grid).reshape(-1, chart.n)

    def work(u):
        try:
            return geometry.mean_curvature(chart, u), ()
        except EqLabError as exc:
            return None, (_flag_of_exception(exc),)

    results = _pmap(work, points, jobs)
    rows, failures = [], 0
    sup, argmax = -1.0, None
    for u, (rep, flags) in zip(points, results):
        norm = None
        if rep is None:
            failures += 1
        else:
            norm = rep.mean_curvature_norm
            if norm > sup:
                sup, argmax = norm, u
        rows.append(ResultRow(scenario=cfg.scenario, economy_id=cfg.economy_id,
                              point=tuple(u), sup_mean_curvature=norm, flags=flags))
    summary = {
        "points": len(points),
        "sup_mean_curvature": sup if argmax is not None else None,
        "argmax": list(map(float, argmax)) if argmax is not None else None,
        "minimal": bool(argmax is not None and sup <= cfg.tolerances.tol_minimal),
    }
    return RunResult(rows=rows, summary=summary, failures=failures, total_points=len(points))


def _density_from_config(cfg: ExperimentConfig) -> entropy_mod.Density:
    if cfg.density["kind"] == "uniform":
        return entropy_mod.UNIFORM
    center = np.asarray(cfg.density["center"], float)
    sigma = float(cfg.density["sigma"])

    def gauss(u):
        d = (np.asarray(u, float) - center) / sigma
        return float(np.exp(-0.5 * np.dot(d, d)))

    return entropy_mod.Density(f=gauss, normalized=False)


def _run_entropy(cfg: ExperimentConfig, jobs: int) -> RunResult:
    del jobs  # single neighborhood; nothing to parallelize
    chart = _economy_chart(cfg)
    rows = []
    failures = 0
    try:
        vol = entropy_mod.volume(chart, cfg.box, cfg.quadrature)
        rows.append(ResultRow(scenario=cfg.scenario, economy_id=cfg.economy_id,
                              point=tuple(cfg.box.center), volume=vol,
                              entropy=float(np.log(vol))))
    except EqLabError as exc:
        failures += 1
        rows.append(ResultRow(scenario=cfg.scenario, economy_id=cfg.economy_id,
                              point=tuple(cfg.box.center), flags=(_flag_of_exception(exc),)))
    density = _density_from_config(cfg)
    if not density.uniform and not failures:
        try:
            h_gen = entropy_mod.entropy_general(chart, cfg.box, density, cfg.quadrature)
            rows.append(ResultRow(scenario=cfg.scenario, economy_id=cfg.economy_id,
                                  point=tuple(cfg.box.center), entropy=h_gen,
                                  flags=("general-density",)))
        except EqLabError as exc:
            failures += 1
            rows.append(ResultRow(scenario=cfg.scenario, economy_id=cfg.economy_id,
                                  point=tuple(cfg.box.center),
                                  flags=("general-density", _flag_of_exception(exc))))
    summary = {
        "volume": rows[0].volume,
        "entropy_uniform": rows[0].entropy,
    }
    if not density.uniform and len(rows) > 1:
        summary["entropy_general"] = rows[1].entropy
    return RunResult(rows=rows, summary=summary, failures=failures, total_points=len(rows))


def _random_hyperplane(rng, dim: int) -> helicoid_mod.Hyperplane:
    coeff = rng.standard_normal(dim)
    delta = float(rng.uniform(-2.0, 2.0))
    return helicoid_mod.Hyperplane(coeff, delta)


def _run_helicoid_check(cfg: ExperimentConfig, jobs: int) -> RunResult:
    rows = []
    failures = 0
    worst_residual = 0.0
    sup_by_spec = []
    all_ok = True
    for idx, spec in enumerate(cfg.helicoids):
        flags = []
        degenerate = helicoid_mod.is_degenerate(spec)
        if degenerate:
            flags.append("degenerate")
        chart = helicoid_mod.helicoid_chart(spec)
        sup = None
        try:
            scan = geometry.minimality_scan(chart, 11)
            sup = scan.sup_norm
            sup_by_spec.append(sup)
            if not degenerate and sup > cfg.tolerances.tol_minimal:
                flags.append("not-minimal")
                all_ok = False
        except EqLabError as exc:
            failures += 1
            flags.append(_flag_of_exception(exc))
            all_ok = False
        rng = np.random.default_rng(cfg.seed + idx)
        planes = [_random_hyperplane(rng, spec.ambient_dim)
                  for _ in range(cfg.hyperplane_count)]

        def work(plane):
            return helicoid_mod.hyperplane_intersection(spec, plane)

        hits = _pmap(work, planes, jobs)
        misses = sum(1 for h in hits if h is None)
        max_res = max((h.residual for h in hits if h is not None), default=0.0)
        worst_residual = max(worst_residual, max_res)
        if misses and not degenerate:
            flags.append("missing-intersection")
            all_ok = False
        if max_res > cfg.tolerances.residual:
            flags.append("intersection-residual")
            all_ok = False
        flags.append(f"intersect_max_residual={max_res:.3e}")
        if misses:
            flags.append(f"no_intersection={misses}")
        rows.append(ResultRow(
            scenario=cfg.scenario, economy_id=f"helicoid-{idx}",
            point=(float(spec.n), float(spec.k), *map(float, spec.a), spec.b),
            sup_mean_curvature=sup, flags=tuple(flags)))
    summary = {
        "specs": len(cfg.helicoids),
        "max_intersection_residual": worst_residual,
        "sup_mean_curvature": max(sup_by_spec) if sup_by_spec else None,
        "ok": all_ok,
    }
    return RunResult(rows=rows, summary=summary, failures=failures,
                     total_points=len(cfg.helicoids))


def _run_geodesic_check(cfg: ExperimentConfig, jobs: int) -> RunResult:
    chart = _economy_chart(cfg)
    eco = cfg.economy
    m1 = eco.M - 1
    solver = manifold.BrSolver(eco, base_t=cfg.chart.base_t
                               if cfg.chart.base_t is not None else cfg.chart.box.center[:m1])

    def curve(s):
        # the no-trade line t -> (t, obar=0) traced along the first wealth
        u = np.zeros(chart.n)
        u[:m1] = cfg.chart.box.center[:m1]
        u[0] = s
        return u

    def work(t_val):
        try:
            res = geometry.geodesic_residual(chart, curve, float(t_val))
            flags = []
            if eco.L == 2 and eco.M == 2:
                triple = manifold.no_trade_curve_triple(eco, float(t_val), solver=solver)
                flags.append(f"triple_norm={np.linalg.norm(triple):.6e}")
            return res, tuple(flags)
        except EqLabError as exc:
            return None, (_flag_of_exception(exc),)

    results = _pmap(work, cfg.curve_t, jobs)
    rows, failures, residuals = [], 0, []
    for t_val, (res, flags) in zip(cfg.curve_t, results):
        if res is None:
            failures += 1
        else:
            residuals.append(res)
        rows.append(ResultRow(scenario=cfg.scenario, economy_id=cfg.economy_id,
                              point=(float(t_val),), sup_mean_curvature=res, flags=flags))
    summary = {"max_residual": max(residuals) if residuals else None,
               "points": len(cfg.curve_t)}
    return RunResult(rows=rows, summary=summary, failures=failures,
                     total_points=len(cfg.curve_t))


def _run_mvp_probe(cfg: ExperimentConfig, jobs: int) -> RunResult:
    del jobs
    chart = _economy_chart(cfg)
    psi = geometry.bump(cfg.box, amplitude=cfg.perturbation["amplitude"])
    probe = entropy_mod.mvp_probe(chart, cfg.box, psi, cfg.eps, cfg.quadrature)
    rows = [ResultRow(scenario=cfg.scenario, economy_id=cfg.economy_id,
                      point=(float(e),), volume=float(v), entropy=float(h))
            for e, v, h in zip(probe.eps, probe.volumes, probe.entropies)]
    nonzero = probe.eps != 0.0
    summary = {
        "base_volume": probe.base_volume,
        "min_gap": float(np.min(probe.volumes[nonzero] - probe.base_volume))
        if np.any(nonzero) else None,
        "quadratic_coefficient": probe.quadratic_coefficient(),
    }
    return RunResult(rows=rows, summary=summary, failures=0, total_points=len(rows))


def _run_conjecture_sweep(cfg: ExperimentConfig, jobs: int) -> RunResult:
    eco = cfg.economy
    chart = _economy_chart(cfg)
    scan = geometry.minimality_scan(chart, GridSpec(shape=cfg.chart.grid, box=cfg.chart.box))
    sup_h = scan.sup_norm
    dispersion = None
    if chart.k == 1:
        try:
            dispersion = geometry.gauss_map_dispersion(chart, 11)
        except EqLabError as exc:
            log.warning("gauss dispersion failed: %s", exc)
    vol = entropy_mod.volume(chart, cfg.chart.box, cfg.quadrature)
    ent = float(np.log(vol))

    omegas = cfg.endowments.sample(eco, cfg.seed)

    def work(omega):
        try:
            res = find_equilibria(eco, omega, cfg.scan)
        except EqLabError as exc:
            return None, (_flag_of_exception(exc),)
        flags = []
        if res.boundary_warning:
            flags.append("boundary-warning")
        if len(res) == 0:
            flags.append("no-equilibrium")
        return len(res), tuple(flags)

    results = _pmap(work, omegas, jobs)
    rows, failures, counts = [], 0, []
    for omega, (count, flags) in zip(omegas, results):
        if count is None:
            failures += 1
        else:
            counts.append(count)
        rows.append(ResultRow(scenario=cfg.scenario, economy_id=cfg.economy_id,
                              point=tuple(np.asarray(omega, float).ravel()), count=count,
                              sup_mean_curvature=sup_h, volume=vol, entropy=ent,
                              gauss_dispersion=dispersion, flags=flags))

    max_count = max(counts) if counts else 0
    multiple = max_count > 1
    non_minimal = sup_h > cfg.tolerances.tol_minimal
    unique_everywhere = bool(counts) and all(c == 1 for c in counts)
    anomaly = (unique_everywhere and non_minimal) or (multiple and not non_minimal)
    if anomaly:
        for row in rows:
            row.flags = row.flags + ("conjecture-anomaly",)
    summary = {
        "contingency": {
            "multiplicity": multiple,
            "non_minimal": non_minimal,
            "cell": f"{'multiple' if multiple else 'unique'}/"
                    f"{'non-minimal' if non_minimal else 'minimal'}",
        },
        "max_count": max_count,
        "unique_everywhere_sampled": unique_everywhere,
        "sup_mean_curvature": sup_h,
        "volume": vol,
        "entropy": ent,
        "gauss_dispersion": dispersion,
        "anomaly": anomaly,
    }
    return RunResult(rows=rows, summary=summary, failures=failures, total_points=len(omegas))


_RUNNERS = {
    "equilibria": _run_equilibria,
    "curvature-scan": _run_curvature_scan,
    "entropy": _run_entropy,
    "helicoid-check": _run_helicoid_check,
    "geodesic-check": _run_geodesic_check,
    "mvp-probe": _run_mvp_probe,
    "conjecture-sweep": _run_conjecture_sweep,
}


def run(cfg: ExperimentConfig, jobs: int = 1) -> RunResult:
    """Execute the configured scenario; deterministic given the seed."""
    log.info("running scenario %s (seed %d, jobs %d)", cfg.scenario, cfg.seed, jobs)
    result = _RUNNERS[cfg.scenario](cfg, jobs)
    log.info("scenario %s: %d rows, %d failures", cfg.scenario,
             len(result.rows), result.failures)
    return result
