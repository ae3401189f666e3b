"""Riemannian volume and differential entropy of chart neighborhoods.

Neighborhoods are axis-aligned boxes in chart parameters. Volumes
integrate sqrt(det g) over the box; the uniform-density entropy is then
exactly log(volume). General densities are given per unit Riemannian
volume and integrated by the same quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from eqlab.errors import DomainError, EqLabError, QuadratureError
from eqlab.geometry import Box, Chart, metric, normal_graph_chart
from eqlab.quadrature import QuadratureSpec, gauss_points, stratified_integrate

NeighborhoodBox = Box


@dataclass(eq=False)
class Density:
    """Probability density on a neighborhood, per unit Riemannian volume.

    ``f=None`` means uniform. A non-uniform density with ``normalized``
    unset is rescaled so it integrates to one over the box.
    """

    f: Optional[Callable] = None
    normalized: bool = False

    @property
    def uniform(self) -> bool:
        return self.f is None


UNIFORM = Density()


def _sqrt_det_g(chart: Chart, u):
    try:
        return metric(chart, u)[1]
    except EqLabError as exc:
        raise QuadratureError(f"degenerate metric inside the box: {exc}", node=u) from exc


def volume(chart: Chart, box: Box, quad: QuadratureSpec | None = None) -> float:
    """Riemannian volume of the box: integral of sqrt(det g).

    Gauss-Legendre tensor quadrature up to dimension 4, seeded stratified
    Monte Carlo above (or as forced by the spec).
    """
    quad = quad or QuadratureSpec()
    if not chart.domain.contains_box(box):
        raise DomainError("box exceeds the chart domain")
    if quad.resolve(box.dim) == "gauss":
        points, weights = gauss_points(box.lower, box.upper, quad.nodes, quad.panels)
        return float(sum(w * _sqrt_det_g(chart, u) for u, w in zip(points, weights)))
    estimate, _ = stratified_integrate(lambda u: _sqrt_det_g(chart, u),
                                       box.lower, box.upper, quad)
    return float(estimate)


def volume_mc(chart: Chart, box: Box, quad: QuadratureSpec | None = None):
    """Stratified Monte Carlo volume with its standard error."""
    quad = quad or QuadratureSpec()
    return stratified_integrate(lambda u: _sqrt_det_g(chart, u), box.lower, box.upper, quad)


def entropy_uniform(chart: Chart, box: Box, quad: QuadratureSpec | None = None) -> float:
    """Differential entropy of the uniform density on the box: log(volume)."""
    return float(np.log(volume(chart, box, quad)))


def entropy_general(chart: Chart, box: Box, density: Density,
                    quad: QuadratureSpec | None = None) -> float:
    """Differential entropy -integral p log p of a density on the box.

    The density is interpreted per unit Riemannian volume. Uniform
    densities reduce to log(volume) with the same quadrature values.
    """
    quad = quad or QuadratureSpec()
    if density.uniform:
        return entropy_uniform(chart, box, quad)
    if quad.resolve(box.dim) != "gauss":
        raise DomainError("general-density entropy is implemented for Gauss quadrature only")
    points, weights = gauss_points(box.lower, box.upper, quad.nodes, quad.panels)
    dvol = np.array([_sqrt_det_g(chart, u) for u in points])
    raw = np.array([float(density.f(u)) for u in points])
    if np.any(raw < 0):
        raise DomainError("density must be nonnegative")
    mass = float(np.sum(weights * raw * dvol))
    if density.normalized:
        if abs(mass - 1.0) > 1e-6:
            raise DomainError(f"density flagged normalized but integrates to {mass!r}")
        p = raw
    else:
        if mass <= 0:
            raise DomainError("density has zero mass on the box")
        p = raw / mass
    plogp = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return float(-np.sum(weights * plogp * dvol))


@dataclass(eq=False)
class MvpProbe:
    """Volumes and uniform entropies of same-boundary normal perturbations."""

    eps: np.ndarray
    volumes: np.ndarray
    entropies: np.ndarray

    @property
    def base_volume(self) -> float:
        return float(self.volumes[self.eps == 0.0][0])

    def quadratic_coefficient(self) -> float:
        """Leading coefficient of the parabola fitted to (eps, V)."""
        return float(np.polyfit(self.eps, self.volumes, 2)[0])


def mvp_probe(chart: Chart, box: Box, psi: Callable, eps_grid,
              quad: QuadratureSpec | None = None) -> MvpProbe:
    """Compare patch volume against normal perturbations Phi + eps*psi*N.

    psi must vanish on the box boundary so all competitors share the
    boundary. eps = 0 is always included. Codimension one only.
    """
    quad = quad or QuadratureSpec()
    eps_values = np.unique(np.append(np.asarray(eps_grid, float), 0.0))
    vols = []
    for eps in eps_values:
        if eps == 0.0:
            vols.append(volume(chart, box, quad))
        else:
            pert = normal_graph_chart(chart, psi, float(eps), ref_point=box.center)
            vols.append(volume(pert, box, quad))
    vols = np.array(vols)
    return MvpProbe(eps=eps_values, volumes=vols, entropies=np.log(vols))
