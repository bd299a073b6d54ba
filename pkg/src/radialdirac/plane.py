"""Cut-plane geometry of the spectral parameter.

The quasimomentum k(lam) = lam*sqrt(1 - m^2/lam^2) (principal square root)
is analytic exactly off the segment [-m, m]; no sheet bookkeeping is needed
anywhere else.  Real points inside the gap carry an explicit rim tag that
selects the limit from above or below.
"""

from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousRimError, BranchPointError

EXCLUSION_RADIUS = 1e-10


class Rim(enum.Enum):
    BULK = "bulk"
    UPPER = "upper_rim"
    LOWER = "lower_rim"


@dataclass(frozen=True)
class SpectralParam:
    """A point lam on the cut plane with cached k(lam), k0(lam) and rim tag."""

    lam: complex
    mass: float
    rim: Rim
    k: complex
    k0: complex

    def conjugate(self) -> "SpectralParam":
        """Star image: conj(lam), with the rim flipped."""
        rim = {Rim.BULK: Rim.BULK, Rim.UPPER: Rim.LOWER, Rim.LOWER: Rim.UPPER}[self.rim]
        return quasimomentum(self.lam.conjugate(), self.mass, rim)


def star(lam: complex) -> complex:
    """The involution lam -> conj(lam); pair with conjugation of values to
    build g^-(lam) = conj(g^+(conj lam))."""
    return complex(lam).conjugate()


def _in_gap(lam: complex, mass: float) -> bool:
    return lam.imag == 0.0 and abs(lam.real) < mass


def quasimomentum(lam: complex, mass: float, rim: Rim = Rim.BULK) -> SpectralParam:
    """Branch-correct (k, k0) at lam, bundled as a SpectralParam.

    k is real-positive on (m, inf), real-negative on (-inf, -m), and lies in
    i*(0, m) on the upper rim of the gap.  k0 = (lam + m)/(i k).  Raises
    BranchPointError within EXCLUSION_RADIUS of ±m and AmbiguousRimError for
    real lam strictly inside the gap without a rim tag.
    """
    lam = complex(lam)
    mass = float(mass)
    if mass < 0:
        raise ValueError("mass must be nonnegative")
    if min(abs(lam - mass), abs(lam + mass)) <= EXCLUSION_RADIUS:
        raise BranchPointError(f"lambda = {lam} too close to a branch point ±{mass}")

    if mass == 0.0:
        if rim is not Rim.BULK:
            raise ValueError("rim tags are meaningless for mass = 0 (empty gap)")
        return SpectralParam(lam=lam, mass=mass, rim=Rim.BULK, k=lam, k0=-1j)

    if rim is Rim.BULK:
        if _in_gap(lam, mass):
            raise AmbiguousRimError(
                f"real lambda = {lam.real} inside the gap (-{mass}, {mass}) needs a rim tag"
            )
        k = lam * cmath.sqrt(1.0 - mass**2 / (lam * lam))
    else:
        if not _in_gap(lam, mass):
            raise ValueError("rim tags are only legal for real lambda strictly inside the gap")
        tau = float(np.sqrt(mass**2 - lam.real**2))
        k = 1j * tau if rim is Rim.UPPER else -1j * tau
    k0 = (lam + mass) / (1j * k)
    return SpectralParam(lam=lam, mass=mass, rim=rim, k=k, k0=k0)


def quasimomentum_arrays(lam: np.ndarray, mass: float, rim: Rim = Rim.BULK):
    """Vectorized (k, k0) for a lambda array.  Bulk points must stay off the
    closed gap; rim-tagged arrays must be real and inside it."""
    lam = np.asarray(lam, dtype=complex)
    if mass == 0.0:
        if np.any(np.abs(lam) <= EXCLUSION_RADIUS):
            raise BranchPointError("lambda array touches the massless branch point 0")
        return lam.copy(), np.full(lam.shape, -1j)
    if np.any(np.minimum(np.abs(lam - mass), np.abs(lam + mass)) <= EXCLUSION_RADIUS):
        raise BranchPointError("lambda array touches a branch point ±m")
    if rim is Rim.BULK:
        on_gap = (lam.imag == 0.0) & (np.abs(lam.real) < mass)
        if np.any(on_gap):
            raise AmbiguousRimError("bulk lambda array intersects the gap; tag a rim")
        k = lam * np.sqrt(1.0 - mass**2 / (lam * lam))
    else:
        if np.any(lam.imag != 0.0) or np.any(np.abs(lam.real) >= mass):
            raise ValueError("rim-tagged lambda array must be real and inside the gap")
        tau = np.sqrt(mass**2 - lam.real**2)
        k = 1j * tau if rim is Rim.UPPER else -1j * tau
    k0 = (lam + mass) / (1j * k)
    return k, k0
