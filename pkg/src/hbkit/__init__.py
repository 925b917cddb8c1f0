"""Numerical toolkit for de Branges-Rovnyak spaces on the upper half-plane."""

from .symbol import (
    SingularPointError,
    SymbolFunction,
    angular_derivative_modulus,
    eval_b,
    eval_b_derivative,
    log_power_outer_symbol,
    s_n,
    spectrum,
    step_outer_symbol,
)
from .kernels import KernelCombination, gram_matrix, hb_inner_product, hb_norm
from .quadrature import QuadratureError, QuadratureSpec
from .weights import weight, weights
from .geometry import CarlesonSquare, DiscreteMeasure, LevelSetOracle, pseudohyperbolic

__version__ = "0.1.0"

__all__ = [
    "SingularPointError",
    "SymbolFunction",
    "angular_derivative_modulus",
    "eval_b",
    "eval_b_derivative",
    "log_power_outer_symbol",
    "s_n",
    "spectrum",
    "step_outer_symbol",
    "KernelCombination",
    "gram_matrix",
    "hb_inner_product",
    "hb_norm",
    "QuadratureError",
    "QuadratureSpec",
    "weight",
    "weights",
    "CarlesonSquare",
    "DiscreteMeasure",
    "LevelSetOracle",
    "pseudohyperbolic",
    "__version__",
]
