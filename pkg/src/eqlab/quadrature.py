"""Tensor-product Gauss-Legendre nodes and stratified Monte Carlo sampling."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadratureSpec:
    """How to integrate over a parameter box.

    method: "auto" picks Gauss-Legendre for dimension <= 4 and stratified
    Monte Carlo above; "gauss" and "mc" force a backend.
    nodes: Gauss-Legendre nodes per axis.
    panels: per-axis subdivision of the box into equal panels (composite
    rule); useful when the integrand has an axis-aligned kink.
    mc_samples: total Monte Carlo budget; mc_strata: strata per axis.
    """

    method: str = "auto"
    nodes: int = 16
    panels: int = 1
    mc_samples: int = 20000
    mc_strata: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("auto", "gauss", "mc"):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if self.nodes < 1 or self.panels < 1 or self.mc_strata < 1:
            raise ValueError("nodes, panels and mc_strata must be >= 1")

    def resolve(self, dim: int) -> str:
        if self.method != "auto":
            return self.method
        return "gauss" if dim <= 4 else "mc"


def gauss_points(lower, upper, nodes: int, panels: int = 1):
    """Tensor-product Gauss-Legendre points and weights on a box.

    Returns (points, weights) with points of shape (num, dim). With
    panels > 1 each axis is split into equal panels and the rule is
    applied per cell (composite Gauss-Legendre).
    """
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    x, w = np.polynomial.legendre.leggauss(nodes)
    axes_pts, axes_wts = [], []
    for lo, hi in zip(lower, upper):
        edges = np.linspace(lo, hi, panels + 1)
        pts = np.concatenate([(x + 1) * 0.5 * (b - a) + a for a, b in zip(edges, edges[1:])])
        wts = np.concatenate([w * 0.5 * (b - a) for a, b in zip(edges, edges[1:])])
        axes_pts.append(pts)
        axes_wts.append(wts)
    points = np.array(list(itertools.product(*axes_pts)))
    weights = np.prod(np.array(list(itertools.product(*axes_wts))), axis=1)
    return points, weights


def stratified_cells(lower, upper, strata: int):
    """Lower/upper corners of the strata grid, in deterministic C order."""
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    dim = len(lower)
    edges = [np.linspace(lower[j], upper[j], strata + 1) for j in range(dim)]
    los, his = [], []
    for idx in itertools.product(range(strata), repeat=dim):
        los.append([edges[j][idx[j]] for j in range(dim)])
        his.append([edges[j][idx[j] + 1] for j in range(dim)])
    return np.array(los), np.array(his)


def stratified_integrate(f, lower, upper, spec: QuadratureSpec):
    """Stratified Monte Carlo of a scalar field over a box.

    One child RNG stream per cell (spawned from the seed in cell order),
    reduced in deterministic cell order. Returns (estimate, standard_error).
    """
    los, his = stratified_cells(lower, upper, spec.mc_strata)
    ncells = len(los)
    per_cell = max(2, spec.mc_samples // ncells)
    streams = np.random.default_rng(spec.seed).spawn(ncells)
    total = 0.0
    var_total = 0.0
    for lo, hi, rng in zip(los, his, streams):
        cell_vol = float(np.prod(hi - lo))
        u = rng.uniform(lo, hi, size=(per_cell, len(lo)))
        vals = np.array([f(ui) for ui in u])
        total += cell_vol * float(np.mean(vals))
        var_total += cell_vol ** 2 * float(np.var(vals, ddof=1)) / per_cell
    return total, float(np.sqrt(var_total))
