"""Phase unwrapping toolkit."""

from .core import (
    TWO_PI,
    GradientField,
    WeightBounds,
    adaptive_weights,
    congruence,
    forward_gradient,
    gradient_adjoint,
    weighted_energy,
    wrap,
    wrap_grid,
    wrap_scalar,
    wrapped_gradient,
)

__version__ = "0.1.0"

__all__ = [
    "TWO_PI",
    "GradientField",
    "WeightBounds",
    "adaptive_weights",
    "congruence",
    "forward_gradient",
    "gradient_adjoint",
    "weighted_energy",
    "wrap",
    "wrap_grid",
    "wrap_scalar",
    "wrapped_gradient",
]
