"""Riccati-Bessel functions z*j_k(z), z*eta_k(z), z*h_k^±(z) for integer
order k >= -1 and complex argument.

eta_k := -y_k (y_k the spherical Bessel function of the second kind), so that

    z*h_k^±(z) = z*eta_k(z) ± i * z*j_k(z),      z*h_0^+(z) = exp(iz).

Half-integer-order Bessel functions have exact finite trigonometric
expansions; those are used above a switch radius, a power series below it.
Values are returned in scaled form (mantissa, log_scale) because the
exp(|Im z|) growth of the Hankel factors overflows double precision long
before the products we build from them do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularArgumentError

_SQRT_PI_HALF = 0.5 * math.sqrt(math.pi)

# Series truncation: double-precision floor.
_SERIES_RTOL = 1e-18
_SERIES_MAX_TERMS = 60


def double_factorial(n: int) -> float:
    """(n)!! with the convention (n)!! = 1 for n <= 0."""
    if n <= 0:
        return 1.0
    out = 1.0
    while n > 0:
        out *= n
        n -= 2
    return out


def switch_radius(order: int) -> float:
    """|z| above which the exact trigonometric expansion is used."""
    return max(6.0, 2.0 * order)


@dataclass
class ScaledValue:
    """A complex value stored as mantissa * exp(log_scale).

    mantissa and log_scale may be scalars or matching ndarrays.  Nonzero
    mantissas are kept within [0.5, 2] in modulus by `normalized`.
    """

    mantissa: np.ndarray | complex
    log_scale: np.ndarray | float

    @property
    def value(self):
        return self.mantissa * np.exp(self.log_scale)

    def normalized(self) -> "ScaledValue":
        m = np.asarray(self.mantissa, dtype=complex)
        s = np.broadcast_to(np.asarray(self.log_scale, dtype=float), m.shape).copy()
        absm = np.abs(m)
        nonzero = absm > 0.0
        # Exact powers of two keep the mantissa bit pattern intact.
        expo = np.zeros_like(s)
        expo[nonzero] = np.round(np.log2(absm[nonzero]))
        factor = np.exp2(expo)
        m = m / factor
        s = s + expo * math.log(2.0)
        s[~nonzero] = 0.0
        if np.ndim(self.mantissa) == 0:
            return ScaledValue(complex(m), float(s))
        return ScaledValue(m, s)


def _scaled_combine(m1, s1, m2, s2, c1=1.0, c2=1.0):
    """c1*m1*exp(s1) + c2*m2*exp(s2) without descaling, as (m, s)."""
    s = np.maximum(s1, s2)
    m = c1 * m1 * np.exp(s1 - s) + c2 * m2 * np.exp(s2 - s)
    return m, s


def _series_zj(nu: int, z: np.ndarray) -> np.ndarray:
    """z*j_nu(z) by power series, any integer nu (meromorphic for nu < 0).

    Only integer powers of z appear, so the result is single-valued.
    """
    w = -0.25 * z * z
    term = (
        _SQRT_PI_HALF
        * z ** (nu + 1)
        * (2.0 ** (-nu) / math.gamma(nu + 1.5))
    )
    total = term.copy() if isinstance(term, np.ndarray) else term
    for ell in range(_SERIES_MAX_TERMS):
        term = term * w / ((ell + 1.0) * (ell + nu + 1.5))
        total = total + term
        if np.all(np.abs(term) <= _SERIES_RTOL * np.abs(total)):
            break
    return total


def _hankel_coeffs(order: int) -> np.ndarray:
    # (order + j)! / (j! (order - j)!) for j = 0..order; just [1] for order -1.
    if order < 0:
        return np.array([1.0])
    return np.array(
        [
            math.factorial(order + jj) / (math.factorial(jj) * math.factorial(order - jj))
            for jj in range(order + 1)
        ]
    )


def _trig_zh(order: int, z: np.ndarray, sign: int):
    """Exact z*h_order^sign(z) = e^{i s (z - order pi/2)} * poly(1/z), scaled."""
    coeffs = _hankel_coeffs(order)
    j = np.arange(len(coeffs))
    si = sign * 1j
    inv2z = 1.0 / (2.0 * z)
    poly = np.zeros_like(z, dtype=complex)
    zj_pow = np.ones_like(z, dtype=complex)
    for jj in range(len(coeffs)):
        poly = poly + (si**jj) * coeffs[jj] * zj_pow
        zj_pow = zj_pow * inv2z
    prefactor = (-si) ** order * np.exp(1j * sign * np.real(z))
    log_scale = -float(sign) * np.imag(z)
    return prefactor * poly, log_scale


def _check_order(order: int) -> int:
    if int(order) != order or order < -1:
        raise ValueError(f"order must be an integer >= -1, got {order!r}")
    return int(order)


def _split_eval(order: int, z, small_fn, large_fn) -> ScaledValue:
    """Evaluate small_fn/large_fn on the |z|-partition around the switch radius."""
    z_arr = np.asarray(z, dtype=complex)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)
    r = switch_radius(order)
    small = np.abs(z_arr) < r
    m = np.empty_like(z_arr)
    s = np.zeros(z_arr.shape)
    if np.any(small):
        ms, ss = small_fn(z_arr[small])
        m[small] = ms
        s[small] = ss
    if np.any(~small):
        ml, sl = large_fn(z_arr[~small])
        m[~small] = ml
        s[~small] = sl
    out = ScaledValue(m, s).normalized()
    if scalar:
        return ScaledValue(complex(out.mantissa[0]), float(out.log_scale[0]))
    return out


def riccati_j(order: int, z) -> ScaledValue:
    """z*j_order(z); entire, defined for every complex z when order >= -1."""
    order = _check_order(order)

    def small(zz):
        return _series_zj(order, zz), np.zeros(zz.shape)

    def large(zz):
        mp, sp = _trig_zh(order, zz, +1)
        mm, sm = _trig_zh(order, zz, -1)
        m, s = _scaled_combine(mp, sp, mm, sm, 0.5 / 1j, -0.5 / 1j)
        return m, s

    return _split_eval(order, z, small, large)


def riccati_eta(order: int, z) -> ScaledValue:
    """z*eta_order(z) = -z*y_order(z); pole of order `order` at z = 0."""
    order = _check_order(order)
    if np.any(np.asarray(z) == 0):
        raise SingularArgumentError("riccati_eta is singular at z = 0")

    def small(zz):
        # eta_k = (-1)^k j_{-k-1}
        return (-1.0) ** order * _series_zj(-order - 1, zz), np.zeros(zz.shape)

    def large(zz):
        mp, sp = _trig_zh(order, zz, +1)
        mm, sm = _trig_zh(order, zz, -1)
        m, s = _scaled_combine(mp, sp, mm, sm, 0.5, 0.5)
        return m, s

    return _split_eval(order, z, small, large)


def riccati_h(order: int, z, sign: int) -> ScaledValue:
    """z*h_order^sign(z) with sign = +1 or -1; z*h^+ ~ e^{i(z - order pi/2)}."""
    order = _check_order(order)
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if np.any(np.asarray(z) == 0):
        raise SingularArgumentError("riccati_h is singular at z = 0")

    def small(zz):
        zj = _series_zj(order, zz)
        zeta = (-1.0) ** order * _series_zj(-order - 1, zz)
        return zeta + sign * 1j * zj, np.zeros(zz.shape)

    def large(zz):
        return _trig_zh(order, zz, sign)

    return _split_eval(order, z, small, large)
