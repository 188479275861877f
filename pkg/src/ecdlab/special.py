"""Exponential integral ``E1(x) = int_x^inf exp(-u)/u du`` for real ``x > 0``."""
from __future__ import annotations

import math

import numpy as np

EULER_GAMMA = 0.57721566490153286061


def e1_series(x: float) -> float:
    """Power series, accurate for ``0 < x <= 1`` (usable up to a few units)."""
    total = 0.0
    term = 1.0
    for k in range(1, 200):
        term *= -x / k
        add = term / k
        total += add
        if abs(add) < 1e-17 * abs(total):
            break
    return -EULER_GAMMA - math.log(x) - total


def e1_continued_fraction(x: float) -> float:
    """Modified Lentz evaluation of the continued fraction, for ``x > 1``."""
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x)


def _e1_scalar(x: float) -> float:
    if not x > 0:
        if x == 0:
            return math.inf
        raise ValueError("E1 is evaluated for x > 0 only")
    if x > 745.0:
        return 0.0
    return e1_series(x) if x <= 1.0 else e1_continued_fraction(x)


def expint_e1(x):
    """``E1(x)`` elementwise; series below 1, continued fraction above."""
    if np.ndim(x) == 0:
        return _e1_scalar(float(x))
    arr = np.asarray(x, dtype=float)
    return np.array([_e1_scalar(v) for v in arr.ravel()]).reshape(arr.shape)


def xe1_argmax() -> float:
    """Maximizer of ``x E1(x)``, i.e. the root of ``E1(x) = exp(-x)``."""
    lo, hi = 0.1, 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _e1_scalar(mid) - math.exp(-mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
