"""Extended real numbers [-inf, +inf] with Moreau lower and upper additions.

Values are plain IEEE doubles with NaN forbidden.  ``ExtReal`` is a thin
``float`` subclass used at API boundaries; the arithmetic helpers accept
floats, ``ExtReal`` instances, or numpy arrays alike.
"""

from __future__ import annotations

import math

import numpy as np

INF = math.inf
NEG_INF = -math.inf


class ExtReal(float):
    """A float in [-inf, +inf]; NaN is rejected at construction."""

    __slots__ = ()

    def __new__(cls, value=0.0):
        if isinstance(value, str):
            return parse(value)
        v = float.__new__(cls, value)
        if math.isnan(v):
            raise ValueError("NaN is not an extended real")
        return v

    def __repr__(self) -> str:
        return f"ExtReal({to_text(self)})"

    def __str__(self) -> str:
        return to_text(self)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self)


PLUS_INF = ExtReal(INF)
MINUS_INF = ExtReal(NEG_INF)


def lower_add(a, b):
    """Addition where ``(+inf) + (-inf) = -inf``.

    Works elementwise on arrays.
    """
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        a, b = float(a), float(b)
        if a == NEG_INF or b == NEG_INF:
            return MINUS_INF
        return ExtReal(a + b)
    with np.errstate(invalid="ignore"):
        s = np.add(a, b)
    return np.where(np.isnan(s), NEG_INF, s)


def upper_add(a, b):
    """Addition where ``(+inf) + (-inf) = +inf``.

    Works elementwise on arrays.
    """
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        a, b = float(a), float(b)
        if a == INF or b == INF:
            return PLUS_INF
        return ExtReal(a + b)
    with np.errstate(invalid="ignore"):
        s = np.add(a, b)
    return np.where(np.isnan(s), INF, s)


def negate(a):
    if np.ndim(a) == 0:
        return ExtReal(-float(a))
    return np.negative(a)


def check_array(values) -> np.ndarray:
    """Return ``values`` as a float64 array, raising on NaN."""
    arr = np.asarray(values, dtype=float)
    if np.isnan(arr).any():
        raise ValueError("NaN is not an extended real")
    return arr


def to_text(a) -> str:
    a = float(a)
    if a == INF:
        return "+inf"
    if a == NEG_INF:
        return "-inf"
    if math.isnan(a):
        raise ValueError("NaN is not an extended real")
    # repr of a float round-trips exactly
    return repr(a)


def parse(text) -> ExtReal:
    """Inverse of :func:`to_text`; also accepts plain JSON numbers."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return ExtReal(float(text))
    if not isinstance(text, str):
        raise TypeError(f"cannot read an extended real from {text!r}")
    t = text.strip().lower()
    if t in ("+inf", "inf", "+infinity", "infinity"):
        return PLUS_INF
    if t in ("-inf", "-infinity"):
        return MINUS_INF
    if "nan" in t:
        raise ValueError("NaN is not an extended real")
    return ExtReal(float(t))


def to_json(a):
    """JSON-friendly form: finite values as numbers, infinities as text."""
    a = float(a)
    return a if math.isfinite(a) else to_text(a)
