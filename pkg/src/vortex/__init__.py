"""Exact calculator for free, c-free, cyclic c-free, ordered and indented products.

The symbolic side evaluates mixed moments of noncommutative polynomials in
several families of generators from per-family moment functionals. The
numerical side (:mod:`vortex.experiments`) compares those predictions with
Monte Carlo estimates for unitarily rotated random matrices that fix one or
more vectors.
"""

from __future__ import annotations

from .functionals import (FunctionalPair, FunctionalTriple, MomentFunctional, StateTriple, bernoulli, dirac,
                          functional_from_json, semicircle, spiked_diagonal_triple)
from .parsing import ParseError, parse_polynomial, parse_word
from .products import (MODES, MissingRoleError, OmegaUnitMismatchError, ProductContext, UnregisteredFamilyError,
                       cfree_product_eval, context_from_json, cyclic_cfree_eval, evaluate_mode, free_product_eval,
                       indented_product_eval, ordered_product_eval, second_order_covariance)
from .scalars import format_scalar

__version__ = "0.1.0"

__all__ = [
    "FunctionalPair", "FunctionalTriple", "MomentFunctional", "StateTriple", "bernoulli", "dirac",
    "functional_from_json", "semicircle", "spiked_diagonal_triple", "ParseError", "parse_polynomial",
    "parse_word", "MODES", "MissingRoleError", "OmegaUnitMismatchError", "ProductContext",
    "UnregisteredFamilyError", "cfree_product_eval", "context_from_json", "cyclic_cfree_eval", "evaluate_mode",
    "free_product_eval", "indented_product_eval", "ordered_product_eval", "second_order_covariance",
    "format_scalar",
]
