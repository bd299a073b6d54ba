"""Compactly supported piecewise-polynomial potentials on [0, gamma].

Pieces are (lo, hi, coeffs) with coeffs in ascending powers of the absolute
coordinate x, contiguous from 0; v(x) = 0 beyond gamma.  Polynomials only --
no expression language -- so quadrature and ODE breakpoints stay exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

_CONTIG_TOL = 1e-12


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    coeffs: tuple

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or self.hi <= self.lo:
            raise ConfigError(f"piece [{self.lo}, {self.hi}] is not a valid interval")
        if len(self.coeffs) == 0 or not all(np.isfinite(c) for c in self.coeffs):
            raise ConfigError(f"piece [{self.lo}, {self.hi}] has malformed coefficients")

    def __call__(self, x):
        out = 0.0
        for c in reversed(self.coeffs):
            out = out * x + c
        return out

    def integral(self) -> float:
        lo, hi = self.lo, self.hi
        total = 0.0
        for n, c in enumerate(self.coeffs):
            total += c * (hi ** (n + 1) - lo ** (n + 1)) / (n + 1)
        return total


@dataclass(frozen=True)
class PotentialSpec:
    """v on [0, gamma] with angular channel kappa >= 1 and mass >= 0."""

    kappa: int
    mass: float
    pieces: tuple
    name: str = ""

    def __post_init__(self):
        if int(self.kappa) != self.kappa or self.kappa < 1:
            raise ConfigError(f"kappa must be an integer >= 1, got {self.kappa!r}")
        if not np.isfinite(self.mass) or self.mass < 0:
            raise ConfigError(f"mass must be a nonnegative real, got {self.mass!r}")
        if len(self.pieces) == 0:
            raise ConfigError("potential needs at least one piece")
        pieces = tuple(p if isinstance(p, Piece) else Piece(*p) for p in self.pieces)
        object.__setattr__(self, "pieces", pieces)
        if abs(pieces[0].lo) > _CONTIG_TOL:
            raise ConfigError(f"first piece must start at 0, starts at {pieces[0].lo}")
        for a, b in zip(pieces, pieces[1:]):
            if abs(b.lo - a.hi) > _CONTIG_TOL:
                raise ConfigError(
                    f"pieces are not contiguous: [{a.lo}, {a.hi}] then [{b.lo}, {b.hi}]"
                )

    @property
    def gamma(self) -> float:
        return self.pieces[-1].hi

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([self.pieces[0].lo] + [p.hi for p in self.pieces])

    def __call__(self, x):
        """v(x), scalar or array; 0 outside [0, gamma]."""
        x_arr = np.asarray(x, dtype=float)
        out = np.zeros(x_arr.shape)
        for p in self.pieces:
            mask = (x_arr >= p.lo) & (x_arr <= p.hi)
            if np.any(mask):
                out = np.where(mask, p(x_arr), out)
        if x_arr.ndim == 0:
            return float(out)
        return out

    def integral(self) -> float:
        """Exact integral of v over its support."""
        return sum(p.integral() for p in self.pieces)

    def is_continuous(self, tol: float = 1e-12) -> bool:
        """True when v has no jumps at interior breakpoints (endpoints of the
        support may still jump to 0)."""
        for a, b in zip(self.pieces, self.pieces[1:]):
            if abs(a(a.hi) - b(b.lo)) > tol * (1.0 + abs(a(a.hi))):
                return False
        return True

    def is_zero(self) -> bool:
        return all(all(c == 0 for c in p.coeffs) for p in self.pieces)

    @classmethod
    def square_well(cls, height: float, kappa: int, mass: float, width: float = 1.0,
                    name: str = "") -> "PotentialSpec":
        return cls(kappa=kappa, mass=mass, pieces=(Piece(0.0, width, (float(height),)),),
                   name=name or f"square-well h={height}")

    @classmethod
    def tent(cls, peak: float, kappa: int, mass: float, width: float = 1.0,
             name: str = "") -> "PotentialSpec":
        """Continuous tent: 0 at the endpoints, `peak` at width/2."""
        half = width / 2.0
        slope = peak / half
        return cls(
            kappa=kappa,
            mass=mass,
            pieces=(
                Piece(0.0, half, (0.0, slope)),
                Piece(half, width, (2.0 * peak, -slope)),
            ),
            name=name or f"tent peak={peak}",
        )

    @classmethod
    def zero(cls, kappa: int, mass: float, width: float = 1.0) -> "PotentialSpec":
        return cls(kappa=kappa, mass=mass, pieces=(Piece(0.0, width, (0.0,)),), name="zero")

    @classmethod
    def from_dict(cls, data: dict) -> "PotentialSpec":
        for key in ("kappa", "mass", "pieces"):
            if key not in data:
                raise ConfigError(f"potential file is missing the field {key!r}")
        pieces = []
        for i, pd in enumerate(data["pieces"]):
            try:
                if isinstance(pd, dict):
                    piece = Piece(float(pd["lo"]), float(pd["hi"]), tuple(float(c) for c in pd["coeffs"]))
                else:
                    lo, hi, coeffs = pd
                    piece = Piece(float(lo), float(hi), tuple(float(c) for c in coeffs))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"pieces[{i}] is malformed: {exc}") from exc
            pieces.append(piece)
        try:
            kappa = int(data["kappa"])
            mass = float(data["mass"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"kappa/mass malformed: {exc}") from exc
        return cls(kappa=kappa, mass=mass, pieces=tuple(pieces), name=str(data.get("name", "")))


def parse_potential_file(path) -> PotentialSpec:
    """Load a PotentialSpec from a JSON file with fields kappa, mass, pieces
    (each piece: lo, hi, coeffs).  Raises ConfigError with the offending
    field on malformed input."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read potential file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"potential file {path} is not valid JSON: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"potential file {path} must hold a JSON object")
    return PotentialSpec.from_dict(data)
