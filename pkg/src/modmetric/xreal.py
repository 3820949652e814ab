"""Extended nonnegative reals.

Values of a modular live in ``[0, +inf]``. They are represented as ordinary
Python/numpy floats with ``math.inf`` as the top element; the helpers below
pin down the two conventions that IEEE arithmetic gets wrong for our purposes:
``0 * inf == 0`` and no subtraction of two infinities.
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np

INF = math.inf


def check(value: float) -> float:
    """Validate that ``value`` is an extended nonnegative real and return it as float."""
    v = float(value)
    if math.isnan(v) or v < 0:
        raise ValueError(f"not an extended nonnegative real: {value!r}")
    return v


def xmul(a, b):
    """Product with ``0 * inf = 0``. Works elementwise on arrays."""
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        if a == 0 or b == 0:
            return 0.0
        return float(a) * float(b)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore"):
        out = a * b
    return np.where((a == 0) | (b == 0), 0.0, out)


def le(a: float, b: float, tol: float = 0.0) -> bool:
    """``a <= b + tol`` in the extended order (``inf <= inf`` holds)."""
    if b == INF:
        return True
    if a == INF:
        return False
    return a <= b + tol


def close(a: float, b: float, tol: float) -> bool:
    """Equality within ``tol``; two infinities compare equal, never subtracted."""
    if a == INF or b == INF:
        return a == b
    return abs(a - b) <= tol


def encode(value: Any) -> Any:
    """Recursively replace infinities by the token ``"inf"`` for JSON/CSV output."""
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    if isinstance(value, np.ndarray):
        return encode(value.tolist())
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return value


def decode(value: Any) -> Any:
    """Inverse of :func:`encode` for scalars and nested lists."""
    if isinstance(value, list):
        return [decode(v) for v in value]
    if isinstance(value, str) and value in ("inf", "+inf", "Infinity"):
        return INF
    return value


def fmt(value: float) -> str:
    """CSV token for an extended real."""
    v = float(value)
    if math.isinf(v):
        return "inf"
    return repr(v)
