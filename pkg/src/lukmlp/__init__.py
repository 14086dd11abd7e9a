"""Multilayer perceptrons inside unit-interval Lukasiewicz arithmetic.

Networks with ReLU1 activations and parameters in [0, 1] are trained with
backpropagation whose every update is a truncated-interval operation, can
be rendered as logic formulas that reproduce the forward pass exactly,
and leave behind axiom-tagged traces that an independent checker replays.
"""

__version__ = "0.1.0"

from . import mv  # noqa: F401
