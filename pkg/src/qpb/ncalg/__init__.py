"""Exact noncommutative algebra over Q(q^(1/2)): scalars, polynomials, completion, linear algebra."""

from .jsonio import Located, load_located, loads_located, presentation_from_doc, presentation_to_json
from .linalg import Echelon, nullspace, rank, solve_linear
from .poly import Generator, NCPoly, Presentation, word_key
from .rewriting import RewriteSystem, basis, complete, normal_form, star_poly
from .scalar import ONE, ZERO, Scalar, as_scalar
from .tensor import TensorSpace

__all__ = [
    "Echelon", "Generator", "Located", "NCPoly", "ONE", "Presentation", "RewriteSystem", "Scalar",
    "TensorSpace", "ZERO", "as_scalar", "basis", "complete", "load_located", "loads_located", "normal_form",
    "nullspace", "presentation_from_doc", "presentation_to_json", "rank", "solve_linear", "star_poly",
    "word_key",
]
