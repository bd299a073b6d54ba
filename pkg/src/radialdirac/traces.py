"""Massless (m = 0) trace formulas: Hadamard reconstruction of the Jost
function from its zeros, the Breit-Wigner sum for the scattering-phase
derivative, the resonance sum for Tr(R - R0), and the internal consistency
of the Krein-type trace integral.

All sums are symmetric-by-modulus truncations: every zero with |z_n| <= r
enters together, matching the conditionally convergent limit the massless
theory prescribes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .jost import jost_function_grid
from .potential import PotentialSpec
from .states import FinderOptions, Kind, State, find_states


@dataclass
class ResonanceSet:
    """Zeros of the massless Jost function with the Hadamard prefactor data.

    sigma is the order of the zero at lam = 0 (1 iff 0 is an eigenvalue) and
    c_kappa the leading coefficient: g(0) for sigma = 0, the slope at 0 for
    sigma = 1.
    """

    states: list
    gamma: float
    sigma: int
    c_kappa: complex

    @property
    def zeros(self) -> np.ndarray:
        zs = []
        for s in self.states:
            if abs(s.location) < 1e-12:
                continue  # the sigma factor carries the origin zero
            zs.extend([s.location] * s.multiplicity)
        return np.array(sorted(zs, key=abs), dtype=complex)

    def summability_partial_sums(self) -> np.ndarray:
        z = self.zeros
        return np.cumsum(np.abs(z.imag) / np.abs(z) ** 2)

    def truncated(self, r: float) -> np.ndarray:
        z = self.zeros
        if z.size == 0:
            return z
        if r > np.abs(z).max() + 1e-12:
            raise ValueError(
                f"truncation radius {r} exceeds the largest located zero; "
                "the set cannot certify coverage"
            )
        return z[np.abs(z) <= r]


def resonance_set(pot: PotentialSpec, region, options: FinderOptions | None = None,
                  origin_step: float = 1e-3) -> ResonanceSet:
    """Build a ResonanceSet by an argument-principle sweep of `region`.

    g(0) and g'(0) come from the symmetric pair g(±h) (g is entire), fixing
    sigma and c_kappa.
    """
    if pot.mass != 0.0:
        raise ValueError("resonance sets are a massless construction")
    states = find_states(pot, region, options)
    h = origin_step
    g_pair = jost_function_grid(pot, np.array([h, -h]), rtol=1e-12)
    g0 = 0.5 * (g_pair[0] + g_pair[1])
    slope = (g_pair[0] - g_pair[1]) / (2 * h)
    if abs(g0) < 1e-8 * max(abs(slope) * pot.gamma, 1e-30):
        sigma, c = 1, slope
    else:
        sigma, c = 0, g0
    return ResonanceSet(states=states, gamma=pot.gamma, sigma=sigma, c_kappa=complex(c))


def hadamard_eval(rs: ResonanceSet, lam: complex, truncation_radius: float) -> complex:
    """g(lam) ~ lam^sigma c e^{i gamma lam} prod_{|z_n| <= r} (1 - lam/z_n)."""
    lam = complex(lam)
    if abs(lam) > truncation_radius / 4:
        raise ValueError("evaluation point must satisfy |lam| <= r/4")
    zs = rs.truncated(truncation_radius)
    prod = np.prod(1.0 - lam / zs) if zs.size else 1.0
    return lam**rs.sigma * rs.c_kappa * np.exp(1j * rs.gamma * lam) * prod


def log_derivative_sum(rs: ResonanceSet, lam: complex, truncation_radius: float) -> complex:
    """g'/g(lam) ~ i gamma + sum_{|z_n| <= r} 1/(lam - z_n) (+ sigma/lam)."""
    lam = complex(lam)
    zs = rs.truncated(truncation_radius)
    total = 1j * rs.gamma + np.sum(1.0 / (lam - zs))
    if rs.sigma:
        total += rs.sigma / lam
    return complex(total)


def phase_derivative_sum(rs: ResonanceSet, lam: float, truncation_radius: float,
                         sign: int = +1) -> float:
    """phi_sc'(lam) ~ gamma + sign * sum Im z_n / |lam - z_n|^2 at real lam."""
    zs = rs.truncated(truncation_radius)
    s = float(np.sum(zs.imag / np.abs(lam - zs) ** 2))
    return rs.gamma + sign * s


def phase_derivative_direct(pot: PotentialSpec, lams: np.ndarray,
                            rtol: float = 1e-11) -> np.ndarray:
    """d/dlam of the unwrapped phase of g^+ on a fine ascending real grid."""
    lams = np.asarray(lams, dtype=float)
    g = jost_function_grid(pot, lams.astype(complex), rtol=rtol)
    ph = np.unwrap(np.angle(g))
    return np.gradient(ph, lams)


def resolve_phase_sign(rs: ResonanceSet, pot: PotentialSpec, probes=None) -> int:
    """Pick the overall sign of the Breit-Wigner sum empirically against the
    direct phase derivative (done once per suite; the convention is then
    applied uniformly)."""
    if probes is None:
        probes = [0.8 * rs.truncated(np.inf).real.max() / 8 + 1.0, 3.0, 5.0]
    r = float(np.abs(rs.zeros).max())
    best, best_err = +1, np.inf
    for sign in (+1, -1):
        errs = []
        for p in probes:
            grid = np.linspace(p - 0.05, p + 0.05, 11)
            direct = phase_derivative_direct(pot, grid)[5]
            s = phase_derivative_sum(rs, p, r, sign=sign)
            errs.append(abs(direct - s) / max(abs(direct), 1e-12))
        err = max(errs)
        if err < best_err:
            best, best_err = sign, err
    return best


def resolvent_trace_sum(rs: ResonanceSet, lam: complex, truncation_radius: float) -> complex:
    """Tr(R - R0)(lam) ~ -i gamma - sum_{|z_n| <= r} 1/(lam - z_n)."""
    lam = complex(lam)
    if lam.imag == 0:
        raise ValueError("the resolvent trace lives off the real axis")
    zs = rs.truncated(truncation_radius)
    total = -1j * rs.gamma - np.sum(1.0 / (lam - zs))
    if rs.sigma:
        total -= rs.sigma / lam
    return complex(total)


@dataclass
class KreinReport:
    value_direct: complex
    value_sum: complex
    rel_difference: float
    decay_margin: float


def krein_trace_check(rs: ResonanceSet, pot: PotentialSpec, f, grid,
                      truncation_radius: float, sign: int = +1) -> KreinReport:
    """Internal consistency of -(1/pi) int f(lam) phi_sc'(lam) dlam.

    Evaluates the integral once with the direct phase derivative and once
    with the Breit-Wigner sum; f must decay across the supplied grid, which
    is checked (decay_margin = max|f| at the ends over max|f|).
    """
    grid = np.asarray(grid, dtype=float)
    fv = np.asarray([f(t) for t in grid], dtype=float)
    fmax = float(np.max(np.abs(fv)))
    decay = max(abs(fv[0]), abs(fv[-1])) / max(fmax, 1e-300)
    if decay > 1e-5:
        raise ValueError(
            f"test function does not decay across the grid (edge/max = {decay:.1e})"
        )
    dphi_direct = phase_derivative_direct(pot, grid)
    dphi_sum = np.array([
        phase_derivative_sum(rs, t, truncation_radius, sign=sign) for t in grid
    ])
    i_direct = -np.trapezoid(fv * dphi_direct, grid) / math.pi
    i_sum = -np.trapezoid(fv * dphi_sum, grid) / math.pi
    rel = abs(i_direct - i_sum) / max(abs(i_direct), 1e-300)
    return KreinReport(value_direct=complex(i_direct), value_sum=complex(i_sum),
                       rel_difference=float(rel), decay_margin=float(decay))


def exponential_type_estimate(pot: PotentialSpec, t_lo: float = 20.0,
                              t_hi: float = 60.0, n: int = 17) -> float:
    """Least-squares slope of ln|g(-it)| over t in [t_lo, t_hi]; approximates
    2 gamma for the massless Jost function (exponential type in the lower
    half-plane)."""
    ts = np.linspace(t_lo, t_hi, n)
    g = jost_function_grid(pot, -1j * ts, rtol=1e-9)
    y = np.log(np.abs(g))
    A = np.column_stack([ts, np.ones_like(ts)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0])
