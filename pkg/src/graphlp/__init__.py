"""Random-walk boundary values and ℓ^p-cohomology diagnostics on finite windows of infinite graphs."""

__version__ = "0.1.0"

from .graph import (Box, EdgeFlow, Graph, GraphError, ProbabilityMeasure, VertexFunction,  # noqa: E402
                    conjugate_exponent, divergence, dp_norm, edge_pairing, gradient, lp_norm_edges,
                    lp_norm_vertices, mazur_map, vertex_pairing)
from .walk import WalkKernel  # noqa: E402

__all__ = [
    "Box", "EdgeFlow", "Graph", "GraphError", "ProbabilityMeasure", "VertexFunction", "WalkKernel",
    "conjugate_exponent", "divergence", "dp_norm", "edge_pairing", "gradient", "lp_norm_edges",
    "lp_norm_vertices", "mazur_map", "vertex_pairing", "__version__",
]
