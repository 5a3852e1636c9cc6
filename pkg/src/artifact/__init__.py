"""Numerical models of Serre functors on residual categories of Fano complete intersections."""

from .ci_lattice import CompleteIntersection, LatticeOperator, verify_identities
from .dimension_calculus import FDim, dimension_report, serre_dims
from .euler_ring import AmbientSpace, KClass, euler_char
from .functor_words import equal_words, evaluate, normalize, parse_word

__all__ = [
    "AmbientSpace",
    "CompleteIntersection",
    "FDim",
    "KClass",
    "LatticeOperator",
    "dimension_report",
    "equal_words",
    "euler_char",
    "evaluate",
    "normalize",
    "parse_word",
    "serre_dims",
    "verify_identities",
]

__version__ = "0.1.0"
