"""Closed-form objects of the unperturbed operator: fundamental solutions,
outgoing/incoming solutions, the free resolvent kernel, the spectral density,
and the jump trace Omega(lam) with its large-lam limit Omega_0 = int v.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bessel import riccati_h, riccati_j, riccati_eta
from .plane import SpectralParam, quasimomentum, quasimomentum_arrays
from .potential import PotentialSpec
from .quadrature import adaptive_quad, gauss_nodes, piecewise_quad


@dataclass
class Solution2:
    """A two-component solution value: vec * exp(log_scale).

    vec is (2,) for scalar use or (2, B) for a batch; log_scale matches.
    """

    x: float
    vec: np.ndarray
    log_scale: np.ndarray | float

    @property
    def value(self):
        return self.vec * np.exp(self.log_scale)


@dataclass
class ResolventKernelValue:
    x: float
    y: float
    block: np.ndarray  # 2x2 complex


def _merge_two(m1, s1, m2, s2):
    """Stack two scaled components on a shared log-scale."""
    s = np.maximum(s1, s2)
    return np.stack((m1 * np.exp(s1 - s), m2 * np.exp(s2 - s))), s


def phi_arrays(kappa: int, k, k0, x: float):
    """Free regular solution phi(x, lam) for arrays k, k0; returns (vec, s)."""
    z = k * x
    j1 = riccati_j(kappa, z)
    j2 = riccati_j(kappa - 1, z)
    pref = k ** (-kappa)
    vec, s = _merge_two(1j * k0 * j1.mantissa, j1.log_scale, j2.mantissa, j2.log_scale)
    return vec * pref, s


def theta_arrays(kappa: int, mass: float, lam, k, x: float):
    """Free singular solution theta(x, lam); entire in lam."""
    z = k * x
    e1 = riccati_eta(kappa, z)
    e2 = riccati_eta(kappa - 1, z)
    pref = k**kappa
    c2 = k / (lam + mass)
    vec, s = _merge_two(e1.mantissa, e1.log_scale, c2 * e2.mantissa, e2.log_scale)
    return vec * pref, s


def psi_arrays(kappa: int, k, k0, x: float, sign: int):
    """Free Jost solutions psi^±(x, lam); outgoing for sign=+1."""
    z = k * x
    h1 = riccati_h(kappa, z, sign)
    h2 = riccati_h(kappa - 1, z, sign)
    pref = (-sign * 1j) * k**kappa
    vec, s = _merge_two(1j * k0 * h1.mantissa, h1.log_scale, h2.mantissa, h2.log_scale)
    return vec * pref, s


def _scalarize(vec, s, x) -> Solution2:
    return Solution2(x=x, vec=vec[:, 0], log_scale=float(np.atleast_1d(s)[0]))


def free_phi(sp: SpectralParam, kappa: int, x: float) -> Solution2:
    """phi(x, lam) ~ x^kappa/(2 kappa - 1)!! (0, 1)^T as x -> 0."""
    if x <= 0:
        raise ValueError("x must be positive")
    vec, s = phi_arrays(kappa, np.atleast_1d(np.asarray(sp.k)), np.atleast_1d(np.asarray(sp.k0)), x)
    return _scalarize(vec, s, x)


def free_theta(sp: SpectralParam, kappa: int, x: float) -> Solution2:
    """theta(x, lam) ~ (2 kappa - 1)!!/x^kappa (1, 0)^T as x -> 0; det(theta, phi) = 1."""
    if x <= 0:
        raise ValueError("x must be positive")
    vec, s = theta_arrays(kappa, sp.mass, np.atleast_1d(np.asarray(sp.lam)),
                          np.atleast_1d(np.asarray(sp.k)), x)
    return _scalarize(vec, s, x)


def free_jost(sp: SpectralParam, kappa: int, x: float, sign: int = +1) -> Solution2:
    """psi^±(x, lam) = (∓ i k)^kappa e^{± i k x} (±k0, 1)^T (1 + o(1)) at infinity."""
    if x <= 0:
        raise ValueError("x must be positive")
    vec, s = psi_arrays(kappa, np.atleast_1d(np.asarray(sp.k)), np.atleast_1d(np.asarray(sp.k0)),
                        x, sign)
    return _scalarize(vec, s, x)


def free_resolvent_kernel(sp: SpectralParam, kappa: int, x: float, y: float) -> ResolventKernelValue:
    """2x2 kernel block of (H0 - lam)^{-1}; equals psi^+(x) phi(y)^T / k0 for
    y < x, the transposed factorization for x < y, and the mean of the
    one-sided limits on the diagonal."""
    if x <= 0 or y <= 0:
        raise ValueError("coordinates must be positive")
    lam, k, k0 = sp.lam, sp.k, sp.k0
    c_minus = k / (lam - sp.mass)   # = i k0
    c_plus = k / (lam + sp.mass)

    def one_sided(xx, yy):
        zh1 = riccati_h(kappa, k * xx, +1)
        zh2 = riccati_h(kappa - 1, k * xx, +1)
        zj1 = riccati_j(kappa, k * yy)
        zj2 = riccati_j(kappa - 1, k * yy)
        b = np.empty((2, 2), dtype=complex)
        b[0, 0] = c_minus * zh1.value * zj1.value
        b[0, 1] = zh1.value * zj2.value
        b[1, 0] = zh2.value * zj1.value
        b[1, 1] = c_plus * zh2.value * zj2.value
        return b

    if y < x:
        block = one_sided(x, y)
    elif x < y:
        block = one_sided(y, x).T
    else:
        a = one_sided(x, x)
        block = 0.5 * (a + a.T)
    return ResolventKernelValue(x=x, y=y, block=block)


def spectral_density(sp: SpectralParam, kappa: int) -> float:
    """rho'(s) = (1/pi) k(s)^{2 kappa + 1} / (s + m) on the continuous spectrum."""
    s = sp.lam
    if s.imag != 0 or abs(s.real) <= sp.mass:
        raise ValueError("spectral density is defined for real |s| > m")
    k = sp.k.real
    return float(k ** (2 * kappa + 1) / (s.real + sp.mass) / np.pi)


def omega(pot: PotentialSpec, lam: float, atol: float = 1e-9) -> float:
    """Jump trace Omega(lam) = int v(y) (k/(lam-m) [ky j_k]^2 + k/(lam+m)
    [ky j_{k-1}]^2) dy for |lam| > m; identically 0 inside the gap."""
    lam = float(lam)
    m = pot.mass
    if abs(lam) < m:
        return 0.0
    sp = quasimomentum(lam, m)  # raises at the branch points
    k = sp.k.real
    c1 = k / (lam - m)
    c2 = k / (lam + m)
    kappa = pot.kappa

    def integrand(ys):
        z = k * ys
        j1 = riccati_j(kappa, z).value.real
        j2 = riccati_j(kappa - 1, z).value.real
        return pot(ys) * (c1 * j1 * j1 + c2 * j2 * j2)

    val, _ = piecewise_quad(integrand, pot.breakpoints, atol=atol)
    return float(val)


def omega_grid(pot: PotentialSpec, lams, oversample: float = 1.2) -> np.ndarray:
    """Omega on a real array with |lam| > m, by fixed Gauss rules sized to the
    oscillation (vectorized over the grid; cross-checked against the adaptive
    scalar omega() in the tests)."""
    lams = np.asarray(lams, dtype=float)
    m = pot.mass
    if np.any(np.abs(lams) <= m):
        raise ValueError("omega_grid needs |lam| > m everywhere")
    k = np.sign(lams) * np.sqrt(lams * lams - m * m)
    c1 = k / (lams - m)
    c2 = k / (lams + m)
    kmax = float(np.max(np.abs(k)))
    kappa = pot.kappa
    total = np.zeros(lams.shape)
    for p in pot.pieces:
        n = int(oversample * kmax * (p.hi - p.lo)) + 30
        x, w = gauss_nodes(n, p.lo, p.hi)
        Z = np.multiply.outer(k, x)
        j1 = riccati_j(kappa, Z).value.real
        j2 = riccati_j(kappa - 1, Z).value.real
        vw = pot(x) * w
        total += ((c1[:, None] * j1 * j1 + c2[:, None] * j2 * j2) * vw[None, :]).sum(axis=1)
    return total


def omega_trace_crosscheck(pot: PotentialSpec, lam: complex, s_max: float = 500.0,
                           atol: float = 1e-7):
    """Both sides of Tr(V R0^2) = (1/pi) int Omega(s)/(s-lam)^2 ds, truncated
    at |s| = s_max; returns the complex pair (left, right).

    Left: iterated quadrature of the spectral-density-weighted regular
    solution.  Right: the same s-integral fed by omega().
    """
    lam = complex(lam)
    if lam.imag == 0:
        raise ValueError("crosscheck requires Im lam != 0")
    m = pot.mass
    kappa = pot.kappa
    gap_edge = m + max(1e-6, 1e-6 * m)

    def left_inner(s: float) -> float:
        sp = quasimomentum(s, m)
        rho = spectral_density(sp, kappa)
        kk = sp.k.real
        ik0 = (s + m) / kk  # = i k0, real on the continuous spectrum

        def fx(xs):
            z = kk * xs
            j1 = riccati_j(kappa, z).value.real
            j2 = riccati_j(kappa - 1, z).value.real
            phi1 = kk ** (-kappa) * ik0 * j1
            phi2 = kk ** (-kappa) * j2
            return pot(xs) * rho * (phi1 * phi1 + phi2 * phi2)

        val, _ = piecewise_quad(fx, pot.breakpoints, atol=atol * 1e-2)
        return val

    def right_inner(s: float) -> float:
        return omega(pot, s) / np.pi

    def outer(inner):
        def f(ss):
            return np.array([inner(float(s)) for s in ss]) / (ss - lam) ** 2

        total = 0.0 + 0.0j
        for a, b in ((gap_edge, s_max), (-s_max, -gap_edge)):
            v, _ = adaptive_quad(f, a, b, atol=atol, rtol=1e-8, max_depth=18)
            total += v
        return total

    return outer(left_inner), outer(right_inner)


def omega_zero(pot: PotentialSpec) -> float:
    """Omega_0 = int_0^gamma v(x) dx, exactly."""
    return pot.integral()
