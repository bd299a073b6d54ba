"""Adaptive Runge-Kutta propagation of the 2x2 radial system.

The first-order system y' = (M(x; lam) - shift*I) y is integrated with the
13-stage Fehlberg 7(8) pair (rational tableau), batched over an array of
spectral parameters with a shared adaptive step.  `shift = i k` removes the
dominant exponential of an outgoing solution; solution magnitude is tracked
per batch column as a separate real log-scale so nothing overflows.

M(x; lam) = [[-kappa/x, lam + m - v(x)], [-(lam - m - v(x)), kappa/x]].
"""

from __future__ import annotations

import math

import numpy as np

from .errors import RadialDiracError

_C = np.array([0, 2 / 27, 1 / 9, 1 / 6, 5 / 12, 1 / 2, 5 / 6, 1 / 6, 2 / 3, 1 / 3, 1, 0, 1])

_A = [
    [],
    [2 / 27],
    [1 / 36, 1 / 12],
    [1 / 24, 0, 1 / 8],
    [5 / 12, 0, -25 / 16, 25 / 16],
    [1 / 20, 0, 0, 1 / 4, 1 / 5],
    [-25 / 108, 0, 0, 125 / 108, -65 / 27, 125 / 54],
    [31 / 300, 0, 0, 0, 61 / 225, -2 / 9, 13 / 900],
    [2, 0, 0, -53 / 6, 704 / 45, -107 / 9, 67 / 90, 3],
    [-91 / 108, 0, 0, 23 / 108, -976 / 135, 311 / 54, -19 / 60, 17 / 6, -1 / 12],
    [2383 / 4100, 0, 0, -341 / 164, 4496 / 1025, -301 / 82, 2133 / 4100, 45 / 82, 45 / 164, 18 / 41],
    [3 / 205, 0, 0, 0, 0, -6 / 41, -3 / 205, -3 / 41, 3 / 41, 6 / 41, 0],
    [-1777 / 4100, 0, 0, -341 / 164, 4496 / 1025, -289 / 82, 2193 / 4100, 51 / 82, 33 / 164, 12 / 41, 0, 1],
]

_B8 = np.array([0, 0, 0, 0, 0, 34 / 105, 9 / 35, 9 / 35, 9 / 280, 9 / 280, 0, 41 / 840, 41 / 840])

# Nonzero (index, coeff) pairs per stage row, precomputed once.
_A_NZ = [[(j, a) for j, a in enumerate(row) if a != 0] for row in _A]
_B8_NZ = [(j, b) for j, b in enumerate(_B8) if b != 0]

_ERR_COEFF = 41 / 840
_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_RENORM_BOUND = 1e120


class StepFailure(RadialDiracError, ArithmeticError):
    """Step size collapsed below the floor without meeting tolerance."""


def _poly_eval(coeffs, x: float) -> float:
    out = 0.0
    for c in reversed(coeffs):
        out = out * x + c
    return out


class _Segment:
    """One smooth span of the potential (or free region) along the path."""

    __slots__ = ("xa", "xb", "coeffs")

    def __init__(self, xa, xb, coeffs):
        self.xa = xa
        self.xb = xb
        self.coeffs = coeffs


def _segments(pot, x_from: float, x_to: float):
    """Split [x_from, x_to] (either direction) at potential breakpoints."""
    lo, hi = (x_from, x_to) if x_from < x_to else (x_to, x_from)
    cuts = [lo, hi]
    if pot is not None:
        for b in pot.breakpoints:
            if lo < b < hi:
                cuts.append(float(b))
    cuts = sorted(set(cuts))
    spans = []
    for a, b in zip(cuts, cuts[1:]):
        mid = 0.5 * (a + b)
        coeffs = (0.0,)
        if pot is not None:
            for p in pot.pieces:
                if p.lo <= mid <= p.hi:
                    coeffs = p.coeffs
                    break
        spans.append((a, b, coeffs))
    if x_from > x_to:
        spans = [(b, a, c) for (a, b, c) in reversed(spans)]
    return spans


def propagate(pot, lam, kappa: int, mass: float, shift, x_from: float, x_to: float,
              y0, s0=None, outputs=(), rtol: float = 1e-11, h0: float | None = None):
    """Integrate y' = (M(x) - shift) y from x_from to x_to.

    lam, shift : (B,) complex arrays (shift may be scalar 0)
    y0         : (2, B) complex initial values (at x_from)
    s0         : (B,) real log-scales (default 0)
    outputs    : x-points strictly between the endpoints to snapshot

    Returns (ys, ss, y_end, s_end) where ys has shape (n_out, 2, B) and the
    snapshots are ordered along the direction of integration.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    B = lam.shape[0]
    shift_arr = np.broadcast_to(np.asarray(shift, dtype=complex), (B,))
    y = np.array(y0, dtype=complex).reshape(2, B).copy()
    s = np.zeros(B) if s0 is None else np.array(s0, dtype=float).reshape(B).copy()

    direction = 1.0 if x_to >= x_from else -1.0
    outs = sorted({float(o) for o in outputs}, reverse=(direction < 0))
    for o in outs:
        if not (min(x_from, x_to) - 1e-15 <= o <= max(x_from, x_to) + 1e-15):
            raise ValueError(f"output point {o} outside the integration span")

    lam_p = lam + mass
    lam_m = lam - mass

    freq = float(np.max(np.abs(lam))) + abs(mass) + float(np.max(np.abs(shift_arr)))
    h_mag = h0 if h0 is not None else min(abs(x_to - x_from), 0.1 / (1.0 + freq))

    snap_y = []
    snap_s = []
    out_idx = 0
    while out_idx < len(outs) and abs(outs[out_idx] - x_from) <= 1e-14 * max(1.0, abs(x_from)):
        snap_y.append(y.copy())
        snap_s.append(s.copy())
        out_idx += 1
    kappa_f = float(kappa)

    for xa, xb, coeffs in _segments(pot, x_from, x_to):
        x = xa
        seg_len = abs(xb - xa)
        h_mag = min(h_mag, seg_len)
        while direction * (xb - x) > 1e-15 * max(1.0, abs(xb)):
            target = xb
            if out_idx < len(outs) and direction * (outs[out_idx] - x) > 0 \
                    and direction * (xb - outs[out_idx]) >= 0:
                target = outs[out_idx]
            h = direction * min(h_mag, abs(target - x))
            # 13 stages
            ks = []
            for i in range(13):
                yi = y
                if _A_NZ[i]:
                    acc = None
                    for j, a in _A_NZ[i]:
                        acc = a * ks[j] if acc is None else acc + a * ks[j]
                    yi = y + h * acc
                xi = x + _C[i] * h
                v = _poly_eval(coeffs, xi)
                a_x = kappa_f / xi
                d0 = (-a_x) * yi[0] + (lam_p - v) * yi[1] - shift_arr * yi[0]
                d1 = -(lam_m - v) * yi[0] + a_x * yi[1] - shift_arr * yi[1]
                ks.append(np.stack((d0, d1)))
            acc = None
            for j, b in _B8_NZ:
                acc = b * ks[j] if acc is None else acc + b * ks[j]
            y_new = y + h * acc
            err = (h * _ERR_COEFF) * (ks[0] + ks[10] - ks[11] - ks[12])

            ymax = np.maximum(np.abs(y).max(axis=0), np.abs(y_new).max(axis=0))
            denom = rtol * np.maximum(ymax, 1e-290)
            errnorm = float(np.max(np.abs(err).max(axis=0) / denom))

            if errnorm <= 1.0 or abs(h) <= 1e-14 * max(1.0, abs(x)):
                x = x + h
                y = y_new
                if errnorm > 0:
                    h_mag = abs(h) * min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * errnorm ** -0.125))
                else:
                    h_mag = abs(h) * _MAX_FACTOR
                colmax = np.abs(y).max(axis=0)
                if np.any(colmax > _RENORM_BOUND) or np.any((colmax > 0) & (colmax < 1.0 / _RENORM_BOUND)):
                    nz = colmax > 0
                    expo = np.zeros(B)
                    expo[nz] = np.round(np.log2(colmax[nz]))
                    factor = np.exp2(expo)
                    y = y / factor
                    s = s + expo * math.log(2.0)
                if out_idx < len(outs) and abs(x - outs[out_idx]) <= 1e-14 * max(1.0, abs(x)):
                    snap_y.append(y.copy())
                    snap_s.append(s.copy())
                    out_idx += 1
            else:
                new_h = abs(h) * max(_MIN_FACTOR, _SAFETY * errnorm ** -0.125)
                if new_h < 1e-15 * max(1.0, abs(x)):
                    raise StepFailure(f"step size underflow at x = {x}")
                h_mag = new_h
    if out_idx != len(outs):
        # Endpoint coincides with the last requested output.
        while out_idx < len(outs) and abs(x_to - outs[out_idx]) <= 1e-12 * max(1.0, abs(x_to)):
            snap_y.append(y.copy())
            snap_s.append(s.copy())
            out_idx += 1
        if out_idx != len(outs):
            raise RadialDiracError("integration failed to hit all requested output points")
    ys = np.array(snap_y) if snap_y else np.zeros((0, 2, B), dtype=complex)
    ss = np.array(snap_s) if snap_s else np.zeros((0, B))
    return ys, ss, y, s
