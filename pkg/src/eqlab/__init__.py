"""Numerical laboratory for equilibrium manifolds of exchange economies.

The package builds equilibrium manifolds of pure exchange economies from
closed-form demand systems (Cobb-Douglas, CES), computes their extrinsic
geometry (induced metric, Gauss map, mean curvature), Riemannian volumes
and differential entropies of neighborhoods, and runs reproducible
experiments probing whether vanishing mean curvature goes together with
uniqueness of the equilibrium price.
"""

__version__ = "0.1.0"

from eqlab.economy import (
    CES,
    CobbDouglas,
    Economy,
    Price,
    ScanConfig,
    aggregate_excess,
    count_equilibria,
    demand,
    find_equilibria,
)
from eqlab.geometry import Box, Chart, mean_curvature, metric, minimality_scan
from eqlab.quadrature import QuadratureSpec

__all__ = [
    "CES",
    "Box",
    "Chart",
    "CobbDouglas",
    "Economy",
    "Price",
    "QuadratureSpec",
    "ScanConfig",
    "aggregate_excess",
    "count_equilibria",
    "demand",
    "find_equilibria",
    "mean_curvature",
    "metric",
    "minimality_scan",
    "__version__",
]
