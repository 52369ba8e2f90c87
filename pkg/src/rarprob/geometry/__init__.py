"""Exact polyhedral kernel."""

from .polytope import (
    FLOAT_TOL,
    FlowCone,
    GeometryError,
    Polytope,
    VertexRepresentation,
    contains_point,
    from_vertices,
    intersect,
    is_empty,
    lift,
    minkowski_cone,
    project,
    remove_redundancy,
    time_elapse,
    to_vertices,
)
from .rational import Q, to_fraction, to_q

__all__ = [
    "FLOAT_TOL",
    "FlowCone",
    "GeometryError",
    "Polytope",
    "Q",
    "VertexRepresentation",
    "contains_point",
    "from_vertices",
    "intersect",
    "is_empty",
    "lift",
    "minkowski_cone",
    "project",
    "remove_redundancy",
    "time_elapse",
    "to_fraction",
    "to_q",
    "to_vertices",
]
