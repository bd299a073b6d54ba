"""Locating and classifying spectral states.

Complex zeros of the Jost function are isolated by argument-principle
bisection: the winding number of g^+ along each rectangle boundary is read
off from adaptively refined phase continuation (every accepted phase step
stays below pi/2, making the integer exact), cells split until each holds a
single zero, and roots are polished by Newton steps with Cauchy-integral
derivatives.  Real gap zeros (m > 0) are handled separately through the
entire function F, which is real on the gap.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GapClassificationError,
    PhaseContinuationError,
    RadialDiracError,
    WindingMismatchError,
)
from .jost import (
    GRID_CEILING,
    frak_F_gap_grid,
    jost_function_grid,
    theta_tilde_limit,
)
from .plane import Rim, quasimomentum
from .potential import PotentialSpec

_MAX_PHASE_REFINE = 13
_GAP_CLEARANCE = 1e-6


class Kind(enum.Enum):
    EIGENVALUE = "eigenvalue"
    RESONANCE = "resonance"
    ANTI_BOUND = "anti_bound"
    VIRTUAL = "virtual"


@dataclass
class State:
    location: complex
    kind: Kind
    multiplicity: int = 1
    residual: float = 0.0
    rim: Rim | None = None

    def sort_key(self):
        return (self.location.real, self.location.imag)


@dataclass
class ContourCell:
    rectangle: tuple  # (re_lo, re_hi, im_lo, im_hi)
    winding: int = -1
    phase_samples: int = 0
    status: str = "pending"


def _nudge_origin(pts: np.ndarray, mass: float) -> np.ndarray:
    """Keep contour samples off the quasimomentum exclusion disk at 0 (m=0).

    A sub-1e-8 contour deformation cannot change any winding number unless a
    zero sits inside it, which the phase-refinement failure then surfaces.
    """
    if mass == 0.0:
        close = np.abs(pts) < 1e-8
        if np.any(close):
            pts = pts.copy()
            pts[close] = pts[close] + 1e-8 * (1 + 1j)
    return pts


def winding_number(g_of, param_to_point, mass: float, n0: int = 64,
                   max_refine: int = _MAX_PHASE_REFINE):
    """Winding of g along the closed loop t -> param_to_point(t), t in [0,1).

    Refines in parameter space until consecutive phase steps are < pi/2.
    Returns (winding, n_samples).
    """
    ts = np.linspace(0.0, 1.0, n0, endpoint=False)
    vals = g_of(_nudge_origin(param_to_point(ts), mass))
    for _ in range(max_refine):
        args = np.angle(vals)
        steps = np.diff(np.concatenate([args, args[:1]]))
        steps = (steps + np.pi) % (2 * np.pi) - np.pi
        bad = np.abs(steps) >= 0.5 * np.pi
        if not np.any(bad):
            total = float(np.sum(steps))
            w = total / (2 * np.pi)
            wi = int(round(w))
            if abs(w - wi) > 0.25:
                raise PhaseContinuationError(
                    f"phase sum {w:.3f} turns is not close to an integer"
                )
            return wi, ts.size
        idx = np.nonzero(bad)[0]
        t_hi = np.concatenate([ts[1:], [1.0]])
        mid = 0.5 * (ts[idx] + t_hi[idx])
        new_vals = g_of(_nudge_origin(param_to_point(mid), mass))
        ts = np.concatenate([ts, mid])
        order = np.argsort(ts)
        ts = ts[order]
        vals = np.concatenate([vals, new_vals])[order]
    raise PhaseContinuationError(
        f"phase continuation did not settle after {max_refine} refinements "
        f"({ts.size} samples); a zero may sit on or near the contour"
    )


def _rect_param(rect):
    re_lo, re_hi, im_lo, im_hi = rect
    w = re_hi - re_lo
    h = im_hi - im_lo
    per = 2 * (w + h)

    def to_point(ts):
        s = np.asarray(ts) * per
        pts = np.empty(s.shape, dtype=complex)
        m1 = s <= w
        pts[m1] = re_lo + s[m1] + 1j * im_lo
        m2 = (s > w) & (s <= w + h)
        pts[m2] = re_hi + 1j * (im_lo + (s[m2] - w))
        m3 = (s > w + h) & (s <= 2 * w + h)
        pts[m3] = re_hi - (s[m3] - w - h) + 1j * im_hi
        m4 = s > 2 * w + h
        pts[m4] = re_lo + 1j * (im_hi - (s[m4] - 2 * w - h))
        return pts

    return to_point


def _circle_param(center, radius):
    def to_point(ts):
        return center + radius * np.exp(2j * np.pi * np.asarray(ts))

    return to_point


def _validate_region(pot: PotentialSpec, rect):
    re_lo, re_hi, im_lo, im_hi = rect
    if not (re_lo < re_hi and im_lo < im_hi):
        raise ValueError(f"degenerate region {rect}")
    m = pot.mass
    if m > 0:
        crosses_gap = im_lo < _GAP_CLEARANCE and im_hi > -_GAP_CLEARANCE \
            and re_lo < m + _GAP_CLEARANCE and re_hi > -m - _GAP_CLEARANCE
        if crosses_gap:
            raise ValueError(
                "region boundary would touch the gap segment [-m, m]; search "
                "resonances below the axis and use gap_states for the gap"
            )


@dataclass
class FinderOptions:
    rtol: float = 1e-9
    polish_rtol: float = 1e-12
    min_cell: float | None = None      # default: 1e-6 * region diameter
    isolate_size: float = 0.5          # bisect winding-1 cells down to this
    newton_steps: int = 40
    residual_tol: float = 1e-10        # relative to the local scale of g
    verify_roots: bool = True
    n_boundary: int = 64
    derivative_nodes: int = 16


def _local_scale(g_circle_vals) -> float:
    return float(np.median(np.abs(g_circle_vals))) or 1.0


def _cauchy_derivative(g_of, lam: complex, radius: float, n: int):
    theta = 2 * np.pi * np.arange(n) / n
    vals = g_of(lam + radius * np.exp(1j * theta))
    deriv = np.sum(vals * np.exp(-1j * theta)) / (n * radius)
    return complex(deriv), _local_scale(vals)


def _newton_polish(g_of, lam0: complex, radius0: float, opts: FinderOptions):
    """Newton iteration with a fixed-radius Cauchy derivative.

    The derivative circle radius stays moderate: the Cauchy integral is exact
    for any analytic g, while a shrinking circle would divide integration
    noise by the radius.  The residual is |g| at the root over the median |g|
    on the derivative circle (the local scale of g).
    """
    lam = complex(lam0)
    radius = min(max(0.05 * radius0, 1e-4), 0.1)
    scale = 1.0
    for _ in range(opts.newton_steps):
        g = complex(g_of(np.array([lam]))[0])
        dg, scale = _cauchy_derivative(g_of, lam, radius, opts.derivative_nodes)
        if dg == 0:
            break
        step = g / dg
        lam = lam - step
        if abs(step) < 1e-14 * max(1.0, abs(lam)):
            break
    g_final = abs(complex(g_of(np.array([lam]))[0]))
    return lam, g_final / max(scale, 1e-290)


def find_states(pot: PotentialSpec, region, options: FinderOptions | None = None):
    """All zeros of g^+ inside the rectangular region, as classified States.

    region = (re_lo, re_hi, im_lo, im_hi).  Winding numbers are conserved
    across every cell split (asserted); each isolated root is polished and,
    with verify_roots, re-certified by a shrunken contour.
    """
    opts = options or FinderOptions()
    _validate_region(pot, region)
    m = pot.mass

    def g_of(z):
        return jost_function_grid(pot, z, rtol=opts.rtol, ceiling=GRID_CEILING)

    diam = math.hypot(region[1] - region[0], region[3] - region[2])
    min_cell = opts.min_cell if opts.min_cell is not None else 1e-6 * diam

    def cell_winding(rect, n0):
        w, ns = winding_number(g_of, _rect_param(rect), m, n0=n0)
        return w, ns

    root_cells = []
    w0, n0 = cell_winding(region, opts.n_boundary * 4)
    queue = [ContourCell(tuple(region), w0, n0, "pending")]
    while queue:
        cell = queue.pop()
        if cell.winding == 0:
            cell.status = "empty"
            continue
        re_lo, re_hi, im_lo, im_hi = cell.rectangle
        width = re_hi - re_lo
        height = im_hi - im_lo
        small = max(width, height) <= (min_cell if cell.winding > 1 else opts.isolate_size)
        if cell.winding == 1 and small:
            cell.status = "isolated"
            root_cells.append(cell)
            continue
        if cell.winding > 1 and small:
            cell.status = "isolated"  # multiple cluster, confirmed below
            root_cells.append(cell)
            continue
        # bisect the longer side; avoid splitting exactly through origin (m=0)
        if width >= height:
            mid = 0.5 * (re_lo + re_hi)
            if m == 0.0 and abs(mid) < 1e-8 and im_lo < 0 < im_hi:
                mid += 1e-6 * width
            kids = [(re_lo, mid, im_lo, im_hi), (mid, re_hi, im_lo, im_hi)]
        else:
            mid = 0.5 * (im_lo + im_hi)
            if m == 0.0 and abs(mid) < 1e-8 and re_lo < 0 < re_hi:
                mid += 1e-6 * height
            kids = [(re_lo, re_hi, im_lo, mid), (re_lo, re_hi, mid, im_hi)]
        child_cells = []
        total = 0
        for kid in kids:
            w, ns = cell_winding(kid, opts.n_boundary)
            total += w
            child_cells.append(ContourCell(kid, w, ns, "pending"))
        if total != cell.winding:
            # one retry at duplicated boundary resolution
            total = 0
            child_cells = []
            for kid in kids:
                w, ns = cell_winding(kid, opts.n_boundary * 4)
                total += w
                child_cells.append(ContourCell(kid, w, ns, "pending"))
            if total != cell.winding:
                raise WindingMismatchError(
                    f"cell {cell.rectangle} winding {cell.winding} != children sum {total}"
                )
        cell.status = "split"
        queue.extend(child_cells)

    def g_polish(z):
        return jost_function_grid(pot, z, rtol=opts.polish_rtol, ceiling=GRID_CEILING)

    states = []
    for cell in root_cells:
        re_lo, re_hi, im_lo, im_hi = cell.rectangle
        center = complex(0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi))
        radius0 = 0.5 * max(re_hi - re_lo, im_hi - im_lo)
        lam, residual = _newton_polish(g_polish, center, max(radius0, 1e-6), opts)
        mult = cell.winding
        if opts.verify_roots:
            r_check = max(3e-6, 1e-3 * radius0)
            try:
                w_check, _ = winding_number(g_of, _circle_param(lam, r_check), m, n0=32)
            except PhaseContinuationError:
                w_check, _ = winding_number(g_of, _circle_param(lam, 10 * r_check), m, n0=64)
            if w_check < 1:
                raise RadialDiracError(
                    f"polished root {lam} fails the shrunken-contour certificate"
                )
            mult = max(mult, w_check) if cell.winding > 1 else cell.winding
        states.append(_classify_complex_root(pot, lam, mult, residual))
    states.sort(key=State.sort_key)
    return states


def _classify_complex_root(pot, lam: complex, mult: int, residual: float) -> State:
    m = pot.mass
    if lam.imag < -1e-9:
        return State(lam, Kind.RESONANCE, mult, residual)
    if m == 0.0 and abs(lam) < 1e-7:
        return State(lam, Kind.EIGENVALUE, mult, residual, rim=None)
    if lam.imag > 1e-9:
        raise RadialDiracError(
            f"zero of g at {lam} in the open upper half-plane: self-adjointness "
            "forbids this; integration accuracy is suspect"
        )
    # real zero on the continuous spectrum would be an embedded state
    raise RadialDiracError(f"unclassifiable real zero at {lam} on the continuous spectrum")


def gap_states(pot: PotentialSpec, n_grid: int = 2001, delta: float | None = None,
               eps: float = 1e-6, ratio_threshold: float = 10.0,
               rtol: float = 1e-10, check_structure: bool = True):
    """Real zeros of F inside the gap (-m, m), classified as eigenvalues or
    anti-bound states by the two-sided epsilon limit of |g^+|.

    Performs the structural checks: dF/dlam < 0 at every eigenvalue and an
    odd number of anti-bound states between consecutive eigenvalues.
    """
    m = pot.mass
    if m <= 0:
        raise ValueError("gap_states requires m > 0")
    d = delta if delta is not None else 1e-4 * m
    grid = np.linspace(-m + d, m - d, n_grid)
    F = np.real(frak_F_gap_grid(pot, grid, rtol=rtol))

    def F_at(x: float) -> float:
        return float(np.real(frak_F_gap_grid(pot, np.array([x]), rtol=rtol))[0])

    zeros = []
    for i in range(n_grid - 1):
        if F[i] == 0.0:
            zeros.append(float(grid[i]))
        elif F[i] * F[i + 1] < 0:
            a, b, fa = float(grid[i]), float(grid[i + 1]), F[i]
            for _ in range(60):
                c = 0.5 * (a + b)
                fc = F_at(c)
                if fc == 0.0:
                    a = b = c
                    break
                if fa * fc < 0:
                    b = c
                else:
                    a, fa = c, fc
            zeros.append(0.5 * (a + b))

    states = []
    for z in zeros:
        kind = None
        for e in (eps, eps * 0.1, eps * 0.01):
            gu = abs(jost_function_grid(pot, np.array([z + 1j * e]), rtol=rtol)[0])
            gl = abs(jost_function_grid(pot, np.array([z - 1j * e]), rtol=rtol)[0])
            if gu * ratio_threshold < gl:
                kind = Kind.EIGENVALUE
                residual = gu
                break
            if gl * ratio_threshold < gu:
                kind = Kind.ANTI_BOUND
                residual = gl
                break
        if kind is None:
            raise GapClassificationError(
                f"gap zero at {z}: |g| ratios above/below stayed within "
                f"{ratio_threshold}x after epsilon refinement"
            )
        rim = Rim.UPPER if kind is Kind.EIGENVALUE else Rim.LOWER
        states.append(State(complex(z), kind, 1, float(residual), rim=rim))

    if check_structure and states:
        _check_gap_structure(pot, states, rtol)
    return states


def frak_F_entire(pot: PotentialSpec, z, rtol: float = 1e-10):
    """F off the real axis (entire continuation), vectorized."""
    z = np.asarray(z, dtype=complex)
    g = jost_function_grid(pot, z, rtol=rtol)
    g_star = np.conj(jost_function_grid(pot, np.conj(z), rtol=rtol))
    return (z - pot.mass) * g * g_star


def frak_F_derivative(pot: PotentialSpec, lam: float, radius: float | None = None,
                      n: int = 16, rtol: float = 1e-10) -> complex:
    """dF/dlam at a real gap point via a Cauchy circle (F is entire)."""
    m = pot.mass
    r = radius if radius is not None else min(0.05, 0.25 * (m - abs(lam)) + 1e-3)
    theta = 2 * np.pi * np.arange(n) / n
    ring = lam + r * np.exp(1j * theta)
    # keep nodes off the real axis where the rim machinery would be needed
    ring = ring + 1j * 1e-12 * (np.imag(ring) == 0)
    vals = frak_F_entire(pot, ring, rtol=rtol)
    return complex(np.sum(vals * np.exp(-1j * theta)) / (n * r))


def _check_gap_structure(pot, states, rtol):
    eigs = [s for s in states if s.kind is Kind.EIGENVALUE]
    for s in eigs:
        dF = frak_F_derivative(pot, s.location.real, rtol=rtol)
        if dF.real >= 0:
            raise GapClassificationError(
                f"dF/dlam = {dF.real:.3e} >= 0 at eigenvalue {s.location.real}"
            )
    eig_pos = sorted(s.location.real for s in eigs)
    for a, b in zip(eig_pos, eig_pos[1:]):
        n_ab = sum(1 for s in states if s.kind is Kind.ANTI_BOUND
                   and a < s.location.real < b)
        if n_ab % 2 != 1:
            raise GapClassificationError(
                f"{n_ab} anti-bound states between eigenvalues {a} and {b} (odd expected)"
            )


def virtual_indicator(pot: PotentialSpec, endpoint: int, rtol: float = 1e-11) -> float:
    """Indicator c(±m) = lim x^kappa theta~_1(x, ±m)/(2 kappa - 1)!!.

    endpoint = +1 for lam = m, -1 for lam = -m; the limit is taken at
    lam = ±(m - 1e-8), one-sided inside the gap.  The free value is 1;
    a virtual state is declared when |c| < 1e-4.
    """
    m = pot.mass
    if m <= 0:
        raise ValueError("virtual states only exist at the edges of an open gap")
    if endpoint not in (+1, -1):
        raise ValueError("endpoint must be +1 or -1")
    lam = endpoint * (m - 1e-8)
    sp = quasimomentum(lam, m, Rim.UPPER)  # theta~ is even in k: rim-independent
    c = theta_tilde_limit(pot, sp, rtol=rtol)
    if abs(c.imag) > 1e-6 * max(1.0, abs(c)):
        raise RadialDiracError(f"virtual indicator came out non-real: {c}")
    return float(c.real)


VIRTUAL_THRESHOLD = 1e-4


@dataclass
class CountingPoint:
    radius: float
    count: int
    ratio: float  # count / (2 r gamma / pi)


def counting_function(pot: PotentialSpec, radii, rtol: float = 1e-8,
                      ceiling: float = GRID_CEILING):
    """Zero-counting N(r) and its ratio against 2 r gamma / pi.

    m = 0: winding of the entire g^+ along |lam| = r.  m > 0: winding of the
    entire function F along the same circle (which counts each resonance
    pair and every gap state), still reported against 2 r gamma / pi.
    """
    out = []
    m = pot.mass

    def g_of(z):
        return jost_function_grid(pot, z, rtol=rtol, ceiling=ceiling)

    for r in sorted(float(r) for r in radii):
        if m > 0 and abs(r - m) < 1e-3 * m:
            raise ValueError(f"radius {r} too close to the branch points ±{m}")
        fn = g_of if m == 0.0 else (lambda z: frak_F_entire(pot, z, rtol=rtol))
        n0 = int(max(256, 8 * r * pot.gamma))
        w, _ = winding_number(fn, _circle_param(0.0, r), m, n0=n0)
        denom = 2.0 * r * pot.gamma / math.pi
        out.append(CountingPoint(r, w, w / denom))
    return out


def sector_fraction(pot: PotentialSpec, r: float, delta: float = 0.2,
                    inner: float = 0.05, rtol: float = 1e-8) -> float:
    """Fraction of lower-half zeros with |lam| in (inner, r) lying OUTSIDE
    both sectors |arg z| < delta and |arg z - pi| < delta, via wedge winding
    (no root locations needed)."""
    if pot.mass != 0.0:
        raise ValueError("sector concentration is a massless diagnostic here")

    def g_of(z):
        return jost_function_grid(pot, z, rtol=rtol, ceiling=GRID_CEILING)

    a0, a1 = -math.pi + delta, -delta
    arc = abs(a1 - a0)
    per = 2 * (r - inner) + arc * (r + inner)

    def to_point(ts):
        s = np.asarray(ts) * per
        pts = np.empty(s.shape, dtype=complex)
        l1 = r - inner
        l2 = l1 + arc * r
        l3 = l2 + (r - inner)
        m1 = s <= l1
        pts[m1] = (inner + s[m1]) * np.exp(1j * a0)
        m2 = (s > l1) & (s <= l2)
        pts[m2] = r * np.exp(1j * (a0 + (s[m2] - l1) / r))
        m3 = (s > l2) & (s <= l3)
        pts[m3] = (r - (s[m3] - l2)) * np.exp(1j * a1)
        m4 = s > l3
        pts[m4] = inner * np.exp(1j * (a1 - (s[m4] - l3) / inner))
        return pts

    w_wedge, _ = winding_number(g_of, to_point, 0.0, n0=int(max(256, 8 * r * pot.gamma)))
    n0 = int(max(256, 8 * r * pot.gamma))
    w_total, _ = winding_number(g_of, _circle_param(0.0, r), 0.0, n0=n0)
    return w_wedge / max(w_total, 1)
