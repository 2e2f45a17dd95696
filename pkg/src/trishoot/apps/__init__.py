"""Applications built on the query engine: red/blue line pairs, polyhedron
intersection sketches and per-triangle arrangement features."""
from .arrangement import GeneralPositionViolation, arrangement_features
from .lines import LineSet, line_pairs
from .polyhedra import IntersectionSketch, NonManifoldInput, Polyhedron, load_mesh, polyhedra_intersect

__all__ = [
    "GeneralPositionViolation", "arrangement_features", "LineSet", "line_pairs",
    "IntersectionSketch", "NonManifoldInput", "Polyhedron", "load_mesh", "polyhedra_intersect",
]
