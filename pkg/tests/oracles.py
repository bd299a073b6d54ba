"""Independent reference implementations used only by the test suite.

Nothing here shares code paths with the production engine beyond the
Riccati-Bessel primitives: the transfer-matrix Jost function uses exact
free-solution matching across constant pieces (no ODE integration), and
rk4_jost_solution is a plain fixed-step classical RK4 at brute resolution.
"""

from __future__ import annotations

import math

import numpy as np

from radialdirac.bessel import double_factorial, riccati_h
from radialdirac.plane import Rim, quasimomentum_arrays


def _psi_pair(kappa, mass, lam, k, x, sign):
    """Free outgoing/incoming solution, descaled, for array lam."""
    z = k * x
    h1 = riccati_h(kappa, z, sign)
    h2 = riccati_h(kappa - 1, z, sign)
    k0 = (lam + mass) / (1j * k)
    pref = (-sign * 1j) * k**kappa
    f1 = pref * 1j * k0 * h1.mantissa * np.exp(h1.log_scale)
    f2 = pref * h2.mantissa * np.exp(h2.log_scale)
    return f1, f2


def transfer_jost(pot, lams, rim: Rim = Rim.BULK):
    """Jost function of a piecewise-CONSTANT potential by matching free
    solutions at the breakpoints; vectorized over the lambda array."""
    for p in pot.pieces:
        if len(p.coeffs) != 1:
            raise ValueError("transfer_jost needs a piecewise-constant potential")
    lams = np.asarray(lams, dtype=complex)
    m = pot.mass
    kappa = pot.kappa
    k, k0 = quasimomentum_arrays(lams, m, rim)
    gamma = pot.gamma
    # known solution at the outer edge: f+ = psi+(. ; lam)
    f1, f2 = _psi_pair(kappa, m, lams, k, gamma, +1)
    a = b = None
    lam_shift = None
    for p in reversed(pot.pieces):
        c = p.coeffs[0]
        lam_shift = lams - c
        # any consistent branch of the shifted quasimomentum works: the
        # matched solution is basis-independent
        ks = np.sqrt(lam_shift * lam_shift - m * m)
        ks = np.where(ks == 0, 1e-30, ks)
        k0s = (lam_shift + m) / (1j * ks)
        p1p, p2p = _psi_pair(kappa, m, lam_shift, ks, p.hi, +1)
        p1m, p2m = _psi_pair(kappa, m, lam_shift, ks, p.hi, -1)
        wron = 2.0 * k0s * ks ** (2 * kappa)
        a = (f1 * p2m - f2 * p1m) / wron
        b = (p1p * f2 - p2p * f1) / wron
        if p.lo > 0:
            q1p, q2p = _psi_pair(kappa, m, lam_shift, ks, p.lo, +1)
            q1m, q2m = _psi_pair(kappa, m, lam_shift, ks, p.lo, -1)
            f1 = a * q1p + b * q1m
            f2 = a * q2p + b * q2m
    # x -> 0 limit on the innermost piece: psi^± contribute ±k0(lam - c0)
    k0s = (lam_shift + m) / (1j * np.sqrt(lam_shift * lam_shift - m * m))
    return (a - b) * k0s


def rk4_jost_solution(pot, lam: complex, mass: float, x_eval: float,
                      steps_per_unit: int = 40000):
    """f^+(x_eval, lam) by fixed-step RK4 on the raw radial system, started
    from the free outgoing solution at gamma.  Independent of the adaptive
    production integrator (different method, stepping, and scaling)."""
    kappa = pot.kappa
    lams = np.array([lam], dtype=complex)
    k, k0 = quasimomentum_arrays(lams, mass)
    g = pot.gamma
    f1, f2 = _psi_pair(kappa, mass, lams, k, g, +1)
    y = np.array([f1[0], f2[0]], dtype=complex)
    scale = 0.0

    def rhs(x, yy):
        v = pot(x)
        return np.array([
            -(kappa / x) * yy[0] + (lam + mass - v) * yy[1],
            -(lam - mass - v) * yy[0] + (kappa / x) * yy[1],
        ])

    cuts = [float(bp) for bp in pot.breakpoints if x_eval < bp < g]
    spans = list(zip([g] + cuts[::-1], cuts[::-1] + [x_eval]))
    for xa, xb in spans:
        n = max(8, int(abs(xb - xa) * steps_per_unit))
        h = (xb - xa) / n
        x = xa
        for _ in range(n):
            k1 = rhs(x, y)
            k2 = rhs(x + h / 2, y + h / 2 * k1)
            k3 = rhs(x + h / 2, y + h / 2 * k2)
            k4 = rhs(x + h, y + h * k3)
            y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            x += h
            mag = max(abs(y[0]), abs(y[1]))
            if mag > 1e100 or (0 < mag < 1e-100):
                y = y / mag
                scale += math.log(mag)
    return y * math.exp(0.0) * np.exp(scale), scale


def rk4_regular_solution(pot, lam: complex, mass: float, x_eval: float,
                         x_start_factor: float = 1e-7, steps_per_unit: int = 40000):
    """Regular solution by fixed-step RK4 from a Frobenius start."""
    kappa = pot.kappa
    g = pot.gamma
    x0 = x_start_factor * g
    y = np.array([0.0, x0**kappa / double_factorial(2 * kappa - 1)], dtype=complex)

    def rhs(x, yy):
        v = pot(x)
        return np.array([
            -(kappa / x) * yy[0] + (lam + mass - v) * yy[1],
            -(lam - mass - v) * yy[0] + (kappa / x) * yy[1],
        ])

    # geometric refinement near the singular origin, then uniform steps
    xs = [x0]
    x = x0
    while x < min(0.05 * g, x_eval):
        x = min(x * 1.01, x_eval)
        xs.append(x)
    if x < x_eval:
        cuts = sorted({float(bp) for bp in pot.breakpoints if x < bp < x_eval} | {x_eval})
        for xb in cuts:
            n = max(8, int((xb - x) * steps_per_unit))
            xs.extend(np.linspace(x, xb, n + 1)[1:])
            x = xb
    for xa, xb in zip(xs, xs[1:]):
        h = xb - xa
        k1 = rhs(xa, y)
        k2 = rhs(xa + h / 2, y + h / 2 * k1)
        k3 = rhs(xa + h / 2, y + h / 2 * k2)
        k4 = rhs(xb, y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def grid_minima_roots(fn_abs, re_range, im_range, n_re, n_im):
    """Local minima of |g| on a dense grid: candidate root list (no polish)."""
    re = np.linspace(*re_range, n_re)
    im = np.linspace(*im_range, n_im)
    R, I = np.meshgrid(re, im, indexing="ij")
    Z = R + 1j * I
    A = fn_abs(Z.ravel()).reshape(Z.shape)
    cands = []
    for i in range(1, n_re - 1):
        for j in range(1, n_im - 1):
            window = A[i - 1:i + 2, j - 1:j + 2]
            if A[i, j] == window.min() and A[i, j] < 0.5 * np.median(A):
                cands.append(Z[i, j])
    return cands
