"""Unit-interval Lukasiewicz arithmetic: the standard MV-algebra on [0, 1].

Truth values are plain Python floats kept inside [0, 1].  Every operation
here is total on that carrier and returns a value back inside it, so the
rest of the package can chain them freely.  ``clamp01`` is the canonical
constructor (it clamps silently); ``strict_unit`` rejects out-of-range
input instead.

Equality of single operation results is judged at ``TOL``; quantities
accumulated over a whole forward/backward pass use ``ACC_TOL``.
"""

from __future__ import annotations

import math
from typing import Iterable

TOL = 1e-9
ACC_TOL = 1e-6


def clamp01(x: float) -> float:
    """Clamp a finite real into [0, 1]."""
    if not math.isfinite(x):
        raise ValueError("non-finite value")
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


def strict_unit(x: float) -> float:
    """Like clamp01 but out-of-range input is an error, not a clamp."""
    if not math.isfinite(x):
        raise ValueError("non-finite value")
    if x < 0.0 or x > 1.0:
        raise ValueError(f"value {x!r} outside [0, 1]")
    return x


def relu1(x: float) -> float:
    """Clipped identity min(1, max(0, x)); the network activation."""
    return clamp01(x)


def oplus(a: float, b: float) -> float:
    """Truncated sum min(1, a + b)."""
    s = a + b
    return 1.0 if s > 1.0 else s


def neg(a: float) -> float:
    """Involutive negation 1 - a."""
    return 1.0 - a


def otimes(a: float, b: float) -> float:
    """Strong conjunction max(0, a + b - 1)."""
    s = a + b - 1.0
    return 0.0 if s < 0.0 else s


def ominus(a: float, b: float) -> float:
    """Truncated difference max(0, a - b)."""
    d = a - b
    return 0.0 if d < 0.0 else d


def join(a: float, b: float) -> float:
    return a if a >= b else b


def meet(a: float, b: float) -> float:
    return a if a <= b else b


def implies(a: float, b: float) -> float:
    """Residual implication min(1, 1 - a + b); equals 1 iff a <= b."""
    v = 1.0 - a + b
    return 1.0 if v > 1.0 else v


def dist(a: float, b: float) -> float:
    """Distance |a - b|; doubles as the training loss."""
    return a - b if a >= b else b - a


def scale(r: float, a: float) -> float:
    """Scalar action r * a (ordinary product, closed on [0, 1])."""
    return r * a


def fold_oplus(values: Iterable[float]) -> float:
    """Left-to-right truncated sum of a sequence; empty folds to 0.

    For nonnegative operands this equals min(1, sum(values)) exactly:
    partial sums are monotone, so clamping early never changes the result.
    """
    acc = 0.0
    for v in values:
        acc = oplus(acc, v)
    return acc


def close(a: float, b: float, tol: float = TOL) -> bool:
    """Tolerance comparison used throughout for unit values."""
    return abs(a - b) <= tol
