"""Perturbed solutions and the Jost function.

The outgoing solution f^+ is obtained by integrating the scaled variable
u(x) = e^{-ik(x-gamma)} f^+(x) backward from x = gamma, where the initial
data equals the free outgoing solution exactly (the potential vanishes
beyond its support).  The Jost function comes by two independent routes:

  A. Wronskian  g^+ = det(f^+(x), phi(x))  at x = gamma/2 (exactly
     x-independent; cross-checked at gamma/4), with phi the perturbed
     regular solution integrated forward from a Frobenius start;
  B. g^+ = k0 + int_0^gamma v(y) phi_free(y)^T f^+(y) dy with the *free*
     regular solution, which makes the two routes genuinely independent.

Both are analytic continuations across the continuous spectrum because the
quasimomentum branch is cut only along [-m, m].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import double_factorial
from .errors import (
    InitializationAccuracyError,
    RouteMismatchError,
    ValidityCeilingError,
)
from .freemodel import Solution2, phi_arrays, psi_arrays, theta_arrays
from .odeint import propagate
from .plane import Rim, SpectralParam, quasimomentum, quasimomentum_arrays
from .potential import PotentialSpec
from .quadrature import gauss_nodes

# Pointwise f^+(x) values lose relative accuracy like eps * e^{2|Im k|(gamma-x)},
# hence the conservative default.  Jost-function-only evaluations through the
# Wronskian keep O(eps) relative accuracy at any |Im k| (the contamination mode
# is measured against a function of the same exponential type), so grid paths
# run under a much larger, overflow-limited bound.
DEFAULT_CEILING = 40.0
GRID_CEILING = 600.0

_REG_START_FACTOR = 1e-6
_ROUTE_TOL = 1e-6


@dataclass
class JostSample:
    """g^+(lam) with its star-conjugate, derivative and route diagnostics."""

    lam: complex
    g_plus: complex
    g_minus: complex
    dg_dlambda: complex | None
    route: str
    residual: float


def _ceiling_guard(k, gamma: float, ceiling: float):
    worst = float(np.max(2.0 * np.abs(np.imag(np.atleast_1d(k)))) * gamma)
    if worst > ceiling:
        raise ValidityCeilingError(
            f"2|Im k| gamma = {worst:.3g} exceeds the validity ceiling {ceiling:.3g}"
        )


def _as_batch(sp: SpectralParam):
    return (np.array([sp.lam]), np.array([sp.k]), np.array([sp.k0]))


def jost_solution_batch(pot: PotentialSpec, lam, k, k0, xs, rtol: float = 1e-11,
                        ceiling: float = DEFAULT_CEILING):
    """f^+ at the points xs (each in (0, gamma]) for a lambda batch.

    Returns (vals, scales): vals[n] is (2, B) at xs_sorted_desc[n].  The
    returned order follows xs sorted descending (direction of integration).
    """
    gamma = pot.gamma
    _ceiling_guard(k, gamma, ceiling)
    xs = sorted({float(x) for x in xs}, reverse=True)
    if not xs or xs[0] > gamma or xs[-1] <= 0:
        raise ValueError("evaluation points must lie in (0, gamma]")
    y0, s0 = psi_arrays(pot.kappa, k, k0, gamma, +1)
    shift = 1j * k
    interior = [x for x in xs if x > xs[-1]]
    ys, ss, y_end, s_end = propagate(pot, lam, pot.kappa, pot.mass, shift,
                                     gamma, xs[-1], y0, s0, outputs=interior, rtol=rtol)
    vals = list(ys) + [y_end]
    scales = list(ss) + [s_end]
    out_v, out_s = [], []
    for x, v, s in zip(xs, vals, scales):
        phase = np.exp(1j * np.real(k) * (x - gamma))
        out_v.append(v * phase)
        out_s.append(s - np.imag(k) * (x - gamma))
    return np.array(out_v), np.array(out_s), xs


def regular_solution_batch(pot: PotentialSpec, lam, xs, rtol: float = 1e-11,
                           check: bool = False, start_factor: float = _REG_START_FACTOR):
    """Perturbed regular solution phi at the points xs (ascending order out).

    Forward integration from x0 = start_factor * gamma with the Frobenius
    data x0^kappa/(2 kappa - 1)!! (0, 1)^T.  With check=True a second run
    from x0/2 must agree to 1e-8 in relative terms at the largest point.
    """
    gamma = pot.gamma
    kappa = pot.kappa
    xs = sorted({float(x) for x in xs})
    if not xs or xs[0] <= 0 or xs[-1] > gamma + 1e-12:
        raise ValueError("evaluation points must lie in (0, gamma]")
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    B = lam.shape[0]

    def run(x0):
        y0 = np.zeros((2, B), dtype=complex)
        y0[1] = 1.0
        s0 = np.full(B, kappa * math.log(x0) - math.log(double_factorial(2 * kappa - 1)))
        interior = [x for x in xs if x < xs[-1]]
        ys, ss, y_end, s_end = propagate(pot, lam, kappa, pot.mass, 0.0,
                                         x0, xs[-1], y0, s0, outputs=interior, rtol=rtol)
        return list(ys) + [y_end], list(ss) + [s_end]

    x0 = start_factor * gamma
    vals, scales = run(x0)
    if check:
        vals2, scales2 = run(0.5 * x0)
        a = vals[-1] * np.exp(scales[-1])
        b = vals2[-1] * np.exp(scales2[-1])
        rel = float(np.max(np.abs(a - b) / np.maximum(np.abs(a).max(axis=0), 1e-290)))
        if rel > 1e-8:
            raise InitializationAccuracyError(
                f"regular-solution starts at x0 and x0/2 disagree by {rel:.2e}"
            )
    return np.array(vals), np.array(scales), xs


def backward_free_batch(pot: PotentialSpec, lam, k, k0, xs, which: str,
                        rtol: float = 1e-11):
    """theta-tilde or phi-tilde: backward integration from gamma with exact
    free data; `which` is 'theta' or 'phi'.  Output order: xs descending."""
    gamma = pot.gamma
    kappa = pot.kappa
    xs = sorted({float(x) for x in xs}, reverse=True)
    if not xs or xs[0] > gamma or xs[-1] <= 0:
        raise ValueError("evaluation points must lie in (0, gamma]")
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    if which == "theta":
        y0, s0 = theta_arrays(kappa, pot.mass, lam, k, gamma)
    elif which == "phi":
        y0, s0 = phi_arrays(kappa, k, k0, gamma)
    else:
        raise ValueError("which must be 'theta' or 'phi'")
    interior = [x for x in xs if x > xs[-1]]
    ys, ss, y_end, s_end = propagate(pot, lam, kappa, pot.mass, 0.0,
                                     gamma, xs[-1], y0, s0, outputs=interior, rtol=rtol)
    vals = list(ys) + [y_end]
    scales = list(ss) + [s_end]
    return np.array(vals), np.array(scales), xs


def _solution2_from_batch(vals, scales, xs, x_want) -> Solution2:
    idx = xs.index(float(x_want))
    return Solution2(x=float(x_want), vec=vals[idx][:, 0], log_scale=float(scales[idx][0]))


def jost_solution(pot: PotentialSpec, sp: SpectralParam, x: float,
                  rtol: float = 1e-11, ceiling: float = DEFAULT_CEILING) -> Solution2:
    """Outgoing Jost solution f^+(x, lam), 0 < x <= gamma."""
    lam, k, k0 = _as_batch(sp)
    vals, scales, xs = jost_solution_batch(pot, lam, k, k0, [x], rtol=rtol, ceiling=ceiling)
    return _solution2_from_batch(vals, scales, xs, x)


def regular_solution(pot: PotentialSpec, sp: SpectralParam, x: float,
                     rtol: float = 1e-11, check: bool = True) -> Solution2:
    """Perturbed regular solution, phi ~ x^kappa/(2 kappa-1)!! (0,1)^T at 0."""
    lam, _, _ = _as_batch(sp)
    vals, scales, xs = regular_solution_batch(pot, lam, [x], rtol=rtol, check=check)
    return _solution2_from_batch(vals, scales, xs, x)


def theta_tilde(pot: PotentialSpec, sp: SpectralParam, x: float,
                rtol: float = 1e-11) -> Solution2:
    """Perturbed counterpart of theta: equals free theta for x >= gamma."""
    lam, k, k0 = _as_batch(sp)
    vals, scales, xs = backward_free_batch(pot, lam, k, k0, [x], "theta", rtol=rtol)
    return _solution2_from_batch(vals, scales, xs, x)


def phi_tilde(pot: PotentialSpec, sp: SpectralParam, x: float,
              rtol: float = 1e-11) -> Solution2:
    """Perturbed counterpart of free phi matched at infinity (not regular at 0)."""
    lam, k, k0 = _as_batch(sp)
    vals, scales, xs = backward_free_batch(pot, lam, k, k0, [x], "phi", rtol=rtol)
    return _solution2_from_batch(vals, scales, xs, x)


def _wronskian_g(pot, lam, k, k0, rtol, ceiling, with_check=True):
    """Route A on a batch: g = det(f^+, phi) at gamma/2 (+ gamma/4 check)."""
    gamma = pot.gamma
    xs = [gamma / 2, gamma / 4] if with_check else [gamma / 2]
    fv, fs, fxs = jost_solution_batch(pot, lam, k, k0, xs, rtol=rtol, ceiling=ceiling)
    pv, ps, pxs = regular_solution_batch(pot, lam, xs, rtol=rtol)

    def det_at(x):
        fi = fxs.index(x)
        pi = pxs.index(x)
        d = fv[fi][0] * pv[pi][1] - fv[fi][1] * pv[pi][0]
        return d * np.exp(fs[fi] + ps[pi])

    g_half = det_at(gamma / 2)
    if not with_check:
        return g_half, np.zeros_like(np.real(g_half))
    g_quarter = det_at(gamma / 4)
    rel = np.abs(g_half - g_quarter) / np.maximum(np.abs(g_half), 1e-290)
    return g_half, rel


def _integral_g(pot, lam, k, k0, rtol, ceiling):
    """Route B on a batch: g = k0 + int v (phi_free . f^+)."""
    gamma = pot.gamma
    kappa = pot.kappa
    kmax = float(np.max(np.abs(k)))
    nodes = []
    weights = []
    for p in pot.pieces:
        n = min(320, max(24, int(kmax * (p.hi - p.lo)) + 20))
        for nn in (n, n + 12):
            x, w = gauss_nodes(nn, p.lo, p.hi)
            nodes.append(x)
            weights.append(w)
    all_nodes = sorted({float(x) for grp in nodes for x in grp}, reverse=True)
    fv, fs, fxs = jost_solution_batch(pot, lam, k, k0, all_nodes, rtol=rtol, ceiling=ceiling)
    lookup = {x: i for i, x in enumerate(fxs)}

    def quad(sel):
        total = 0.0
        for grp_x, grp_w in sel:
            pref = pot(grp_x)  # v at nodes
            for x, w, v in zip(grp_x, grp_w, pref):
                i = lookup[float(x)]
                ph_v, ph_s = phi_arrays(kappa, k, k0, float(x))
                f_here = fv[i] * np.exp(fs[i])
                integrand = ph_v[0] * np.exp(ph_s) * f_here[0] + ph_v[1] * np.exp(ph_s) * f_here[1]
                total = total + w * v * integrand
        return total

    rule_a = [(nodes[i], weights[i]) for i in range(0, len(nodes), 2)]
    rule_b = [(nodes[i], weights[i]) for i in range(1, len(nodes), 2)]
    ga = k0 + quad(rule_a)
    gb = k0 + quad(rule_b)
    err = np.abs(ga - gb) / np.maximum(np.abs(gb), 1e-290)
    return gb, err


def jost_function(pot: PotentialSpec, sp: SpectralParam, rtol: float = 1e-11,
                  derivative: bool = True, ceiling: float = DEFAULT_CEILING,
                  route_tol: float = _ROUTE_TOL) -> JostSample:
    """Jost function by both routes, with star-conjugate and Cauchy derivative.

    Raises RouteMismatchError when the Wronskian and integral routes differ
    by more than route_tol in relative terms (an integration breakdown).
    """
    lam, k, k0 = _as_batch(sp)
    gA, x_indep = _wronskian_g(pot, lam, k, k0, rtol, ceiling)
    gB, quad_err = _integral_g(pot, lam, k, k0, rtol, ceiling)
    scale = max(abs(gA[0]), abs(gB[0]), 1e-290)
    mismatch = abs(gA[0] - gB[0]) / scale
    if mismatch > route_tol:
        raise RouteMismatchError(
            f"Jost routes disagree by {mismatch:.2e} at lambda = {sp.lam}"
        )
    residual = float(max(mismatch, x_indep[0], quad_err[0]))

    spc = sp.conjugate()
    lam_c, k_c, k0_c = _as_batch(spc)
    g_conj, _ = _wronskian_g(pot, lam_c, k_c, k0_c, rtol, ceiling, with_check=False)
    g_minus = complex(np.conj(g_conj[0]))

    dg = None
    if derivative:
        dg = jost_derivative(pot, sp, rtol=rtol, ceiling=ceiling)
    return JostSample(lam=sp.lam, g_plus=complex(gA[0]), g_minus=g_minus,
                      dg_dlambda=dg, route="wronskian", residual=residual)


def _derivative_radius(sp: SpectralParam) -> float:
    if sp.mass == 0.0:
        # g is entire for m = 0; any small circle is a valid Cauchy contour.
        return 0.1
    dist = min(abs(sp.lam - sp.mass), abs(sp.lam + sp.mass))
    # The circle must also stay off the cut segment [-m, m] itself.
    if abs(sp.lam.real) <= sp.mass:
        dist = min(dist, 2.0 * abs(sp.lam.imag))
    return min(0.1, dist / 4.0)


def jost_derivative(pot: PotentialSpec, sp: SpectralParam, n_nodes: int = 16,
                    rtol: float = 1e-11, ceiling: float = DEFAULT_CEILING,
                    radius: float | None = None) -> complex:
    """dg^+/dlambda by a Cauchy integral on a small circle (g is analytic
    away from ±m, entire for m = 0).

    At a rim-tagged gap point a circle would straddle the cut, so the
    derivative is taken along the rim by a five-point real stencil instead.
    """
    if sp.rim is not Rim.BULK:
        lam0 = sp.lam.real
        h = min(1e-4, 0.1 * (sp.mass - abs(lam0)))
        pts = np.array([lam0 - 2 * h, lam0 - h, lam0 + h, lam0 + 2 * h], dtype=complex)
        g = jost_function_grid(pot, pts, rim=sp.rim, rtol=min(rtol, 1e-10))
        return complex((g[0] - 8 * g[1] + 8 * g[2] - g[3]) / (12 * h))
    r = radius if radius is not None else _derivative_radius(sp)
    theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    zeta = sp.lam + r * np.exp(1j * theta)
    g = jost_function_grid(pot, zeta, rtol=min(rtol, 1e-10), ceiling=max(ceiling, GRID_CEILING))
    return complex(np.sum(g * np.exp(-1j * theta)) / (n_nodes * r))


def jost_function_grid(pot: PotentialSpec, lams, rim: Rim = Rim.BULK,
                       rtol: float = 1e-9, ceiling: float = GRID_CEILING,
                       chunk: int = 2048) -> np.ndarray:
    """Vectorized route-A Jost function over a lambda array (single rim).

    Contract-grade per-point diagnostics live in jost_function(); this path
    is for contours, grids, and oracles and is validated against the scalar
    route in the test suite.
    """
    lams = np.asarray(lams, dtype=complex).ravel()
    out = np.empty(lams.shape, dtype=complex)
    for i0 in range(0, lams.size, chunk):
        sel = lams[i0:i0 + chunk]
        k, k0 = quasimomentum_arrays(sel, pot.mass, rim)
        g, _ = _wronskian_g(pot, sel, k, k0, rtol, ceiling, with_check=False)
        out[i0:i0 + chunk] = g
    return out


def frak_F(pot: PotentialSpec, lam: complex, rtol: float = 1e-10) -> complex:
    """Entire state function F(lam) = (lam - m) g^+(lam) g^-(lam).

    Real on the real axis; > 0 on the continuous spectrum; its real gap
    zeros are the eigenvalues and anti-bound states.
    """
    lam = complex(lam)
    m = pot.mass
    if m > 0 and lam.imag == 0.0 and abs(lam.real) < m:
        g_up = jost_function_grid(pot, np.array([lam]), rim=Rim.UPPER, rtol=rtol)[0]
        g_lo = jost_function_grid(pot, np.array([lam]), rim=Rim.LOWER, rtol=rtol)[0]
        return (lam - m) * g_up * np.conj(g_lo)
    g = jost_function_grid(pot, np.array([lam]), rtol=rtol)[0]
    g_conj = jost_function_grid(pot, np.array([np.conj(lam)]), rtol=rtol)[0]
    return (lam - m) * g * np.conj(g_conj)


def frak_F_gap_grid(pot: PotentialSpec, lams_real, rtol: float = 1e-10) -> np.ndarray:
    """F on a real grid inside the gap (m > 0), via the two rims; real output."""
    lams = np.asarray(lams_real, dtype=float)
    g_up = jost_function_grid(pot, lams.astype(complex), rim=Rim.UPPER, rtol=rtol)
    g_lo = jost_function_grid(pot, lams.astype(complex), rim=Rim.LOWER, rtol=rtol)
    vals = (lams - pot.mass) * g_up * np.conj(g_lo)
    return vals


def theta_tilde_limit(pot: PotentialSpec, sp: SpectralParam, rtol: float = 1e-11,
                      consistency_tol: float = 1e-4):
    """c_theta(lam) = lim_{x->0} x^kappa theta~_1(x, lam)/(2 kappa - 1)!!.

    Two-point Richardson extrapolation at x in {1e-5, 1e-6} gamma (the limit
    is O(x^2)-accurate); a second pair at {1e-4, 1e-5} gamma must agree.
    """
    return _limit_of(pot, sp, "theta", rtol, consistency_tol)


def phi_tilde_limit(pot: PotentialSpec, sp: SpectralParam, rtol: float = 1e-11,
                    consistency_tol: float = 1e-4):
    """c_phi(lam) = lim_{x->0} x^kappa phi~_1(x, lam)/(2 kappa - 1)!!."""
    return _limit_of(pot, sp, "phi", rtol, consistency_tol)


def _limit_of(pot, sp, which, rtol, consistency_tol):
    gamma = pot.gamma
    kappa = pot.kappa
    lam, k, k0 = _as_batch(sp)
    xs = [1e-4 * gamma, 1e-5 * gamma, 1e-6 * gamma]
    vals, scales, xs_out = backward_free_batch(pot, lam, k, k0, xs, which, rtol=rtol)
    cs = []
    for x, v, s in zip(xs_out, vals, scales):
        logmag = s[0] + kappa * math.log(x) - math.log(double_factorial(2 * kappa - 1))
        cs.append(v[0, 0] * np.exp(logmag))
    c0, c1, c2 = cs  # at 1e-4, 1e-5, 1e-6 gamma
    rich_a = (100.0 * c1 - c0) / 99.0
    rich_b = (100.0 * c2 - c1) / 99.0
    scale = max(abs(rich_b), 1e-12)
    if abs(rich_a - rich_b) / scale > consistency_tol:
        raise InitializationAccuracyError(
            f"x->0 Richardson pairs disagree: {rich_a} vs {rich_b}"
        )
    return complex(rich_b)


def scattering_phase_grid(pot: PotentialSpec, lams_real, rtol: float = 1e-9) -> np.ndarray:
    """Unwrapped scattering phase arg g^+ + pi/2 on an ascending real grid.

    The branch is anchored at the last (largest) grid point to the
    large-lambda limit Omega_0 = int v, so grids should end well inside the
    asymptotic regime.
    """
    lams = np.asarray(lams_real, dtype=float)
    if np.any(np.diff(lams) <= 0):
        raise ValueError("grid must be strictly ascending")
    g = jost_function_grid(pot, lams.astype(complex), rtol=rtol)
    ph = np.unwrap(np.angle(g)) + np.pi / 2
    omega0 = pot.integral()
    shift = 2.0 * np.pi * np.round((omega0 - ph[-1]) / (2.0 * np.pi))
    return ph + shift
