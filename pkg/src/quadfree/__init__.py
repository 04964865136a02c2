"""Square-difference-free style sets for intersective quadratics: arithmetic, spectra and iterations."""
from .errors import *  # noqa: F401,F403
from .polycore import AuxiliaryFamily, QuadraticPoly, factor_over_rationals, is_intersective
from .setlab import IntegerSet, greedy_difference_free, is_difference_free

__version__ = "0.1.0"

__all__ = [
    "AuxiliaryFamily",
    "IntegerSet",
    "QuadraticPoly",
    "factor_over_rationals",
    "greedy_difference_free",
    "is_difference_free",
    "is_intersective",
]
