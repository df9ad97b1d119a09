"""Plasma equilibria with magnetic surfaces that are coordinate surfaces of
orthogonal charts: chart geometry, closed-form solution families, symmetry
transformations and numerical verification."""
from .calculus import ScalarField, VectorField, curl, div, grad
from .coords import Chart, PointUVW, make_builtin_chart
from .report import GridSpec, ResidualReport

__version__ = "0.1.0"

__all__ = ["Chart", "GridSpec", "PointUVW", "ResidualReport", "ScalarField", "VectorField", "curl", "div", "grad",
           "make_builtin_chart", "__version__"]
