"""Experiment configuration: JSON schema, strict validation, defaults.

Configs are JSON objects with a ``scenario`` key plus scenario-specific
sections. Unknown keys anywhere are rejected with the offending path, so
typos cannot silently change a sweep. ``seed`` is always present
(default 0) and can be overridden from the command line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from eqlab.economy import CES, CobbDouglas, Economy, ScanConfig
from eqlab.errors import ConfigError
from eqlab.geometry import Box, TOL_MINIMAL
from eqlab.helicoid import HelicoidSpec
from eqlab.quadrature import QuadratureSpec

SCENARIOS = (
    "equilibria",
    "curvature-scan",
    "entropy",
    "helicoid-check",
    "geodesic-check",
    "mvp-probe",
    "conjecture-sweep",
)


@dataclass
class EndowmentSampler:
    """Explicit endowment list or a seeded uniform box sample.

    Random mode draws the first M-1 consumer rows uniformly from
    [lower, upper] (componentwise over (M-1)*L coordinates); the last
    consumer takes r minus the rest, so samples are resource-feasible.
    """

    mode: str
    values: Optional[list] = None
    count: int = 0
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def sample(self, eco: Economy, seed: int) -> list:
        if self.mode == "explicit":
            return [np.asarray(v, float) for v in self.values]
        rng = np.random.default_rng(seed)
        draws = rng.uniform(self.lower, self.upper, size=(self.count, (eco.M - 1) * eco.L))
        out = []
        for d in draws:
            head = d.reshape(eco.M - 1, eco.L)
            omega = np.vstack([head, eco.r - head.sum(axis=0)])
            out.append(omega)
        return out


@dataclass
class Tolerances:
    tol_minimal: float = TOL_MINIMAL
    max_failure_fraction: float = 0.25
    residual: float = 1e-9

    def __post_init__(self):
        for name in ("tol_minimal", "max_failure_fraction", "residual"):
            if getattr(self, name) <= 0:
                raise ConfigError("must be positive", path=f"tolerances.{name}")


@dataclass
class ChartSection:
    box: Box
    grid: tuple
    base_t: Optional[np.ndarray] = None


@dataclass
class ExperimentConfig:
    scenario: str
    seed: int
    economy: Optional[Economy] = None
    economy_id: str = "economy"
    scan: ScanConfig = field(default_factory=ScanConfig)
    endowments: Optional[EndowmentSampler] = None
    chart: Optional[ChartSection] = None
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    box: Optional[Box] = None
    density: dict = field(default_factory=lambda: {"kind": "uniform"})
    perturbation: dict = field(default_factory=lambda: {"kind": "bump", "amplitude": 1.0})
    eps: tuple = (-0.1, -0.05, 0.05, 0.1)
    helicoids: list = field(default_factory=list)
    hyperplane_count: int = 100
    curve_t: tuple = ()
    tolerances: Tolerances = field(default_factory=Tolerances)
    plot_data: bool = False
    echo: dict = field(default_factory=dict)


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError(f"missing required key {key!r}", path=path or "<root>")
    return obj[key]


def _check_known(obj: dict, known: set, path: str):
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)}", path=path or "<root>")


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path=path)
    return float(value)


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path=path)
    return value


def _as_vector(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"expected a nonempty list of numbers, got {value!r}", path=path)
    return np.array([_as_number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _parse_consumer(obj, path: str):
    if not isinstance(obj, dict):
        raise ConfigError("consumer must be an object", path=path)
    family = _require(obj, "family", path)
    if family == "cobb-douglas":
        _check_known(obj, {"family", "alpha"}, path)
        return CobbDouglas(alpha=_as_vector(_require(obj, "alpha", path), f"{path}.alpha"))
    if family == "ces":
        _check_known(obj, {"family", "a", "rho"}, path)
        return CES(a=_as_vector(_require(obj, "a", path), f"{path}.a"),
                   rho=_as_number(_require(obj, "rho", path), f"{path}.rho"))
    raise ConfigError(f"unknown demand family {family!r}", path=f"{path}.family")


def _parse_economy(obj, path: str):
    _check_known(obj, {"id", "L", "M", "r", "consumers"}, path)
    consumers = _require(obj, "consumers", path)
    if not isinstance(consumers, list):
        raise ConfigError("consumers must be a list", path=f"{path}.consumers")
    eco = Economy(
        L=_as_int(_require(obj, "L", path), f"{path}.L"),
        M=_as_int(_require(obj, "M", path), f"{path}.M"),
        r=_as_vector(_require(obj, "r", path), f"{path}.r"),
        consumers=[_parse_consumer(c, f"{path}.consumers[{i}]") for i, c in enumerate(consumers)],
    )
    return eco, str(obj.get("id", "economy"))


def _parse_box(obj, path: str) -> Box:
    _check_known(obj, {"lower", "upper"}, path)
    return Box(_as_vector(_require(obj, "lower", path), f"{path}.lower"),
               _as_vector(_require(obj, "upper", path), f"{path}.upper"))


def _parse_scan(obj, path: str, default_seed: int) -> ScanConfig:
    known = {"p_log_min", "p_log_max", "cells", "tol_p", "tol_residual",
             "tol_dedupe", "starts", "max_iter", "seed"}
    _check_known(obj, known, path)
    kwargs = {}
    for key in known:
        if key in obj:
            parse = _as_int if key in ("cells", "starts", "max_iter", "seed") else _as_number
            kwargs[key] = parse(obj[key], f"{path}.{key}")
    kwargs.setdefault("seed", default_seed)
    return ScanConfig(**kwargs)


def _parse_quadrature(obj, path: str, default_seed: int) -> QuadratureSpec:
    known = {"method", "nodes", "panels", "mc_samples", "mc_strata", "seed"}
    _check_known(obj, known, path)
    kwargs = {}
    if "method" in obj:
        kwargs["method"] = str(obj["method"])
    for key in ("nodes", "panels", "mc_samples", "mc_strata", "seed"):
        if key in obj:
            kwargs[key] = _as_int(obj[key], f"{path}.{key}")
    kwargs.setdefault("seed", default_seed)
    try:
        return QuadratureSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc), path=path) from exc


def _parse_endowments(obj, path: str, eco: Economy) -> EndowmentSampler:
    mode = _require(obj, "mode", path)
    if mode == "explicit":
        _check_known(obj, {"mode", "values"}, path)
        values = _require(obj, "values", path)
        if not isinstance(values, list) or not values:
            raise ConfigError("values must be a nonempty list", path=f"{path}.values")
        parsed = []
        for i, v in enumerate(values):
            arr = np.asarray(v, float)
            if arr.shape != (eco.M, eco.L):
                raise ConfigError(f"endowment must be {eco.M}x{eco.L}", path=f"{path}.values[{i}]")
            parsed.append(arr)
        return EndowmentSampler(mode="explicit", values=parsed)
    if mode == "random":
        _check_known(obj, {"mode", "count", "lower", "upper"}, path)
        count = _as_int(_require(obj, "count", path), f"{path}.count")
        if count < 1:
            raise ConfigError("count must be >= 1", path=f"{path}.count")
        dim = (eco.M - 1) * eco.L

        def bound(key):
            value = _require(obj, key, path)
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                return np.full(dim, float(value))
            vec = _as_vector(value, f"{path}.{key}")
            if len(vec) != dim:
                raise ConfigError(f"{key} must have length {dim}", path=f"{path}.{key}")
            return vec

        lower, upper = bound("lower"), bound("upper")
        if np.any(lower >= upper):
            raise ConfigError("lower must be < upper componentwise", path=path)
        return EndowmentSampler(mode="random", count=count, lower=lower, upper=upper)
    raise ConfigError(f"unknown endowment mode {mode!r}", path=f"{path}.mode")


def _parse_chart(obj, path: str) -> ChartSection:
    _check_known(obj, {"box", "grid", "base_t"}, path)
    box = _parse_box(_require(obj, "box", path), f"{path}.box")
    grid_raw = _require(obj, "grid", path)
    if isinstance(grid_raw, int):
        grid = (grid_raw,) * box.dim
    else:
        grid = tuple(_as_int(g, f"{path}.grid[{i}]") for i, g in enumerate(grid_raw))
        if len(grid) != box.dim:
            raise ConfigError(f"grid must have {box.dim} entries", path=f"{path}.grid")
    if any(g < 2 for g in grid):
        raise ConfigError("grid needs at least 2 points per axis", path=f"{path}.grid")
    base_t = None
    if "base_t" in obj:
        base_t = _as_vector(obj["base_t"], f"{path}.base_t")
    return ChartSection(box=box, grid=grid, base_t=base_t)


def _parse_helicoid(obj, path: str) -> HelicoidSpec:
    _check_known(obj, {"n", "k", "a", "b"}, path)
    try:
        return HelicoidSpec(
            n=_as_int(_require(obj, "n", path), f"{path}.n"),
            k=_as_int(_require(obj, "k", path), f"{path}.k"),
            a=_as_vector(_require(obj, "a", path), f"{path}.a"),
            b=_as_number(_require(obj, "b", path), f"{path}.b"),
        )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(str(exc), path=path) from exc


_SCENARIO_KEYS = {
    "equilibria": {"economy", "endowments", "scan", "tolerances", "output"},
    "curvature-scan": {"economy", "chart", "tolerances", "output"},
    "entropy": {"economy", "chart", "box", "density", "quadrature", "tolerances", "output"},
    "helicoid-check": {"helicoids", "hyperplanes", "tolerances", "output"},
    "geodesic-check": {"economy", "chart", "curve", "tolerances", "output"},
    "mvp-probe": {"economy", "chart", "box", "perturbation", "eps", "quadrature",
                  "tolerances", "output"},
    "conjecture-sweep": {"economy", "endowments", "scan", "chart", "tolerances", "output"},
}

_SCENARIO_REQUIRED = {
    "equilibria": {"economy", "endowments"},
    "curvature-scan": {"economy", "chart"},
    "entropy": {"economy", "chart", "box"},
    "helicoid-check": {"helicoids"},
    "geodesic-check": {"economy", "chart", "curve"},
    "mvp-probe": {"economy", "chart", "box"},
    "conjecture-sweep": {"economy", "endowments", "chart"},
}


def parse_config(raw: dict, seed_override: int | None = None) -> ExperimentConfig:
    """Validate a parsed JSON object into an ExperimentConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    scenario = _require(raw, "scenario", "")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {list(SCENARIOS)}",
                          path="scenario")
    allowed = {"scenario", "seed"} | _SCENARIO_KEYS[scenario]
    _check_known(raw, allowed, "")
    missing = _SCENARIO_REQUIRED[scenario] - set(raw)
    if missing:
        raise ConfigError(f"scenario {scenario!r} requires key(s) {sorted(missing)}",
                          path="<root>")

    seed = _as_int(raw.get("seed", 0), "seed")
    if seed_override is not None:
        seed = seed_override
    if seed < 0:
        raise ConfigError("seed must be a nonnegative integer", path="seed")

    cfg = ExperimentConfig(scenario=scenario, seed=seed)

    if "economy" in raw:
        try:
            cfg.economy, cfg.economy_id = _parse_economy(raw["economy"], "economy")
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(str(exc), path="economy") from exc
    if "scan" in raw:
        try:
            cfg.scan = _parse_scan(raw["scan"], "scan", seed)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(str(exc), path="scan") from exc
    else:
        cfg.scan = ScanConfig(seed=seed)
    if "endowments" in raw:
        cfg.endowments = _parse_endowments(raw["endowments"], "endowments", cfg.economy)
    if "chart" in raw:
        cfg.chart = _parse_chart(raw["chart"], "chart")
    if "quadrature" in raw:
        cfg.quadrature = _parse_quadrature(raw["quadrature"], "quadrature", seed)
    else:
        cfg.quadrature = QuadratureSpec(seed=seed)
    if "box" in raw:
        cfg.box = _parse_box(raw["box"], "box")
    if "density" in raw:
        obj = raw["density"]
        _check_known(obj, {"kind", "center", "sigma"}, "density")
        kind = _require(obj, "kind", "density")
        if kind not in ("uniform", "gaussian"):
            raise ConfigError(f"unknown density kind {kind!r}", path="density.kind")
        cfg.density = {"kind": kind}
        if kind == "gaussian":
            cfg.density["center"] = _as_vector(_require(obj, "center", "density"), "density.center")
            cfg.density["sigma"] = _as_number(_require(obj, "sigma", "density"), "density.sigma")
            if cfg.density["sigma"] <= 0:
                raise ConfigError("sigma must be positive", path="density.sigma")
    if "perturbation" in raw:
        obj = raw["perturbation"]
        _check_known(obj, {"kind", "amplitude"}, "perturbation")
        if _require(obj, "kind", "perturbation") != "bump":
            raise ConfigError("only 'bump' perturbations are supported", path="perturbation.kind")
        cfg.perturbation = {"kind": "bump",
                            "amplitude": _as_number(obj.get("amplitude", 1.0),
                                                    "perturbation.amplitude")}
    if "eps" in raw:
        eps = _as_vector(raw["eps"], "eps")
        cfg.eps = tuple(float(e) for e in eps)
    if "helicoids" in raw:
        if not isinstance(raw["helicoids"], list) or not raw["helicoids"]:
            raise ConfigError("helicoids must be a nonempty list", path="helicoids")
        cfg.helicoids = [_parse_helicoid(h, f"helicoids[{i}]")
                         for i, h in enumerate(raw["helicoids"])]
    if "hyperplanes" in raw:
        obj = raw["hyperplanes"]
        _check_known(obj, {"count"}, "hyperplanes")
        cfg.hyperplane_count = _as_int(_require(obj, "count", "hyperplanes"), "hyperplanes.count")
        if cfg.hyperplane_count < 0:
            raise ConfigError("count must be >= 0", path="hyperplanes.count")
    if "curve" in raw:
        obj = raw["curve"]
        _check_known(obj, {"t_values"}, "curve")
        cfg.curve_t = tuple(float(t) for t in
                            _as_vector(_require(obj, "t_values", "curve"), "curve.t_values"))
    if "tolerances" in raw:
        obj = raw["tolerances"]
        _check_known(obj, {"tol_minimal", "max_failure_fraction", "residual"}, "tolerances")
        kwargs = {k: _as_number(v, f"tolerances.{k}") for k, v in obj.items()}
        cfg.tolerances = Tolerances(**kwargs)
    if "output" in raw:
        obj = raw["output"]
        _check_known(obj, {"plot_data"}, "output")
        if "plot_data" in obj:
            if not isinstance(obj["plot_data"], bool):
                raise ConfigError("plot_data must be a boolean", path="output.plot_data")
            cfg.plot_data = obj["plot_data"]

    echo = json.loads(json.dumps(raw))  # deep copy of plain JSON data
    echo["seed"] = seed
    cfg.echo = echo
    return cfg


def load_config(path, seed_override: int | None = None) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", path=str(path)) from exc
    return parse_config(raw, seed_override=seed_override)
