"""Closed-form equilibria with magnetic surfaces ``w = const``."""
from .base import (MU0, ConstraintError, EquilibriumError, FluxFunctionPair, MetricConditionError,
                   PotentialSolution, current_from_potential, field_from_potential)
from .extensions import (WindingField, add_polar_component, conjugate_period, glue_jet, glued_cartesian,
                         harmonic_conjugate, radial_ratio_slope, winding_extension)
from .families import (ConformalForceFree, caseA_build, caseB_build, conformal_force_free, elliptic_cylinder_example,
                       ellipsoid_labels, ellipsoid_reference_field, ellipsoid_vacuum, prolate_cartesian_field,
                       prolate_labels, prolate_psi, prolate_theta0, prolate_vacuum, spherical_force_free,
                       spherical_labels)
from .labels import LineLabels, coordinate_labels

__all__ = [
    "MU0", "ConstraintError", "EquilibriumError", "FluxFunctionPair", "MetricConditionError", "PotentialSolution",
    "current_from_potential", "field_from_potential", "WindingField", "add_polar_component", "conjugate_period",
    "glue_jet", "glued_cartesian", "harmonic_conjugate", "radial_ratio_slope", "winding_extension",
    "ConformalForceFree", "elliptic_cylinder_example", "caseA_build", "caseB_build", "conformal_force_free", "ellipsoid_labels",
    "ellipsoid_reference_field", "ellipsoid_vacuum", "prolate_cartesian_field", "prolate_labels", "prolate_psi",
    "prolate_theta0", "prolate_vacuum", "spherical_force_free", "spherical_labels", "LineLabels",
    "coordinate_labels",
]
