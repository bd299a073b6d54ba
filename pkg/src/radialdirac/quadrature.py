"""Adaptive panel quadrature for real or complex integrands.

Each panel is estimated with a Gauss-Legendre pair (15 and 31 nodes); the
difference drives bisection.  Integrands must accept node arrays.  Piecewise
variants split at supplied breakpoints so polynomial kinks never sit inside
a panel.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss_nodes(n: int, a: float, b: float):
    x, w = _leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def _panel(f, a, b, n_lo=15, n_hi=31):
    x1, w1 = gauss_nodes(n_lo, a, b)
    x2, w2 = gauss_nodes(n_hi, a, b)
    lo = np.sum(w1 * f(x1))
    hi = np.sum(w2 * f(x2))
    return hi, abs(hi - lo)


def adaptive_quad(f, a: float, b: float, atol: float = 1e-9, rtol: float = 1e-10,
                  max_depth: int = 28):
    """Integrate f over [a, b]; returns (value, error_estimate).

    f takes an ndarray of nodes and returns values (real or complex).
    """
    stack = [(float(a), float(b), 0)]
    total = 0.0 + 0.0j
    err_total = 0.0
    # First pass to size the tolerance split.
    rough, _ = _panel(f, a, b)
    scale = max(abs(rough), atol)
    while stack:
        lo, hi, depth = stack.pop()
        val, err = _panel(f, lo, hi)
        if err <= max(atol, rtol * scale) * (hi - lo) / (b - a) or depth >= max_depth:
            total += val
            err_total += err
        else:
            mid = 0.5 * (lo + hi)
            stack.append((lo, mid, depth + 1))
            stack.append((mid, hi, depth + 1))
    if abs(total.imag) == 0.0:
        return total.real, err_total
    return total, err_total


def piecewise_quad(f, breakpoints, atol: float = 1e-9, rtol: float = 1e-10,
                   max_depth: int = 28):
    """adaptive_quad over each [breakpoints[i], breakpoints[i+1]] segment."""
    total = 0.0 + 0.0j
    err = 0.0
    real = True
    for a, b in zip(breakpoints, breakpoints[1:]):
        if b <= a:
            continue
        v, e = adaptive_quad(f, a, b, atol=atol, rtol=rtol, max_depth=max_depth)
        total += v
        err += e
        real = real and not isinstance(v, complex)
    if real:
        return total.real, err
    return total, err
