"""Relativistic spectral mapping, essential bands, and PPW lower bounds.

The zigzag-boundary Dirac spectrum is an exact function of the Dirichlet
Laplacian spectrum of the same region: besides the flat point m*c^2, every
Laplacian eigenvalue lambda contributes the mirror pair

    +- hbar*c*sqrt((m*c/hbar)^2 + lambda),

with multiplicity r*k for a Laplacian multiplicity k (r = 1 in dimension 2,
r = 2 in dimension 3).  Everything in this module is exact algebra on solver
output; no discretization happens here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import oracle

__all__ = [
    "UnitSystem",
    "DiracSpectrum",
    "map_spectrum",
    "essential_bands",
    "ppw_bound",
    "fichera_essential",
    "UnsupportedGeometryError",
    "NEAR_THRESHOLD_RTOL",
    "CLUSTER_RTOL",
]

# Eigenvalues within this relative distance of the band edge cannot be
# classified reliably (truncation + discretization noise); they are reported
# in a separate near-threshold bucket.
NEAR_THRESHOLD_RTOL = 1e-6

# Relative gap below which numerically split eigenvalues are treated as one
# degenerate cluster when assigning multiplicities.
CLUSTER_RTOL = 1e-6


class UnsupportedGeometryError(NotImplementedError):
    """Geometry whose essential spectrum this package does not compute."""


@dataclass(frozen=True)
class UnitSystem:
    """Physical constants (m, c, hbar); hbar defaults to 1."""

    m: float = 0.0
    c: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("mass must be >= 0")
        if self.c <= 0 or self.hbar <= 0:
            raise ValueError("c and hbar must be positive")

    @property
    def rest_energy(self) -> float:
        return self.m * self.c ** 2

    def energy(self, lam: float) -> float:
        """Positive branch hbar*c*sqrt((m*c/hbar)^2 + lambda)."""
        return self.hbar * self.c * math.sqrt((self.m * self.c / self.hbar) ** 2 + lam)

    def to_dict(self) -> dict:
        return {"m": self.m, "c": self.c, "hbar": self.hbar}


@dataclass(frozen=True)
class DiracSpectrum:
    """Essential bands, the flat point m*c^2, and mirror pairs +-lambda_j."""

    dim: int
    units: UnitSystem
    threshold_energy: float                     # bottom of the positive band
    essential_point: float                      # m*c^2, infinitely degenerate
    bands: tuple[tuple[float, float], ...]      # closed bands, +-inf allowed
    discrete: tuple[dict, ...]                  # {energy, laplacian, multiplicity}
    near_threshold: tuple[dict, ...] = ()
    excluded: tuple[dict, ...] = ()
    flags: dict = field(default_factory=dict)

    def positive_energies(self) -> np.ndarray:
        return np.array([d["energy"] for d in self.discrete])

    def mirror_pairs(self) -> list[tuple[float, float, int]]:
        return [(-d["energy"], d["energy"], d["multiplicity"]) for d in self.discrete]

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "units": self.units.to_dict(),
            "threshold_energy": self.threshold_energy,
            "essential_point": self.essential_point,
            "bands": [list(b) for b in self.bands],
            "discrete": [dict(d) for d in self.discrete],
            "near_threshold": [dict(d) for d in self.near_threshold],
            "excluded": [dict(d) for d in self.excluded],
            "flags": dict(self.flags),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def _cluster(values: np.ndarray) -> list[tuple[float, int]]:
    """Group ascending values into (representative, multiplicity) clusters."""
    out: list[tuple[float, int]] = []
    for v in values:
        if out and abs(v - out[-1][0]) <= CLUSTER_RTOL * max(1.0, abs(out[-1][0])):
            rep, k = out[-1]
            out[-1] = ((rep * k + v) / (k + 1), k + 1)
        else:
            out.append((float(v), 1))
    return out


def map_spectrum(eigenvalues: Sequence[float], threshold: float,
                 units: UnitSystem = UnitSystem(), dim: int = 2) -> DiracSpectrum:
    """Map Dirichlet Laplacian eigenvalues to the Dirac spectrum.

    Discrete pairs +-hbar*c*sqrt((mc/hbar)^2 + lambda_j) with multiplicity
    r*k; essential bands (-inf, -e_t] u {m c^2} u [e_t, inf) with
    e_t = hbar*c*sqrt((mc/hbar)^2 + threshold).  Eigenvalues at or above the
    threshold are excluded from the discrete list and flagged; values within
    NEAR_THRESHOLD_RTOL of it land in the near-threshold bucket.
    """
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size and np.any(lam <= 0):
        raise ValueError("Laplacian eigenvalues must be positive")
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    lam = np.sort(lam)
    r = 1 if dim == 2 else 2

    e_t = units.energy(threshold) if math.isfinite(threshold) else math.inf
    discrete: list[dict] = []
    near: list[dict] = []
    excluded: list[dict] = []
    for rep, k in _cluster(lam):
        entry = {"laplacian": rep, "energy": units.energy(rep), "multiplicity": r * k}
        if math.isfinite(threshold) and abs(rep - threshold) <= NEAR_THRESHOLD_RTOL * threshold:
            near.append(entry)
        elif rep >= threshold:
            entry["flag"] = "above_threshold"
            excluded.append(entry)
        else:
            discrete.append(entry)

    bands: tuple[tuple[float, float], ...]
    if math.isfinite(e_t):
        bands = ((-math.inf, -e_t), (e_t, math.inf))
    else:
        bands = ()
    flags = {"essential_point_isolated": True, "multiplicity_factor": r}
    if units.m != 0:
        flags["minus_rest_energy_not_eigenvalue"] = True
    return DiracSpectrum(dim=dim, units=units, threshold_energy=e_t,
                         essential_point=units.rest_energy, bands=bands,
                         discrete=tuple(discrete), near_threshold=tuple(near),
                         excluded=tuple(excluded), flags=flags)


def essential_bands(kind: str, units: UnitSystem = UnitSystem(), *,
                    d: Optional[float] = None,
                    d1: Optional[float] = None, d2: Optional[float] = None,
                    mu1: Optional[float] = None,
                    fiber_inf: Optional[float] = None) -> dict:
    """Band edge e_t per geometry family.

    bent_strip / deformed_strip: e_t = c*sqrt(m^2 c^2 + (pi/d)^2) with d the
    strip width; coupled_strips: the same with d = max(d1, d2); bent_tube /
    locally deformed / compactly twisted tube: via the cross-section principal
    eigenvalue mu1; periodically twisted tube: via inf spec of the fiber
    operator at zero momentum (pass fiber_inf from an assemble_twist_fiber +
    smallest_eigs run).  Curved layers are out of scope here.
    """
    if kind in ("bent_strip", "deformed_strip"):
        if d is None:
            raise ValueError("strip band edge needs the width d")
        lam = (math.pi / d) ** 2
    elif kind == "coupled_strips":
        if d1 is None or d2 is None:
            raise ValueError("coupled strips need d1, d2")
        lam = (math.pi / max(d1, d2)) ** 2
    elif kind in ("bent_tube", "deformed_tube", "twisted_tube_compact"):
        if mu1 is None:
            raise ValueError("tube band edge needs the cross-section mu1")
        lam = mu1
    elif kind == "twisted_tube_periodic":
        if fiber_inf is None:
            raise ValueError("periodic twist needs inf spec of the fiber operator")
        lam = fiber_inf
    elif kind in ("curved_layer", "bulged_layer", "coupled_layers"):
        raise UnsupportedGeometryError(
            f"{kind}: layer essential spectra are not computed by this package")
    else:
        raise ValueError(f"unknown geometry kind {kind!r}")
    e_t = units.energy(lam)
    return {"kind": kind, "threshold_laplacian": lam, "threshold_energy": e_t,
            "bands": [[-math.inf, -e_t], [e_t, math.inf]],
            "essential_point": units.rest_energy}


def ppw_bound(dim: int, N: int, units: UnitSystem = UnitSystem(), *,
              a: Optional[float] = None, mu1: Optional[float] = None) -> float:
    """Payne-Polya-Weinberger lower bound on the first positive eigenvalue.

    dim=2 (strip of halfwidth a):  c*sqrt(m^2 c^2 + 3^(1-N) b2 (pi/2a)^2)
    dim=3 (tube, cross-section principal eigenvalue mu1):
                                   c*sqrt(m^2 c^2 + 3^(1-N) b3 mu1)
    N is the number of discrete pairs (per sign).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if dim == 2:
        if a is None:
            raise ValueError("dim=2 bound needs the halfwidth a")
        lam_part = oracle.ppw_b2() * (math.pi / (2 * a)) ** 2
    elif dim == 3:
        if mu1 is None or not mu1 > 0:
            raise ValueError("dim=3 bound needs mu1 > 0")
        lam_part = oracle.ppw_b3() * mu1
    else:
        raise ValueError("dim must be 2 or 3")
    return units.energy(3.0 ** (1 - N) * lam_part)


def fichera_essential(eps_inf: float, units: UnitSystem = UnitSystem()) -> dict:
    """Essential bands of the octant (Fichera) layer from the 2D edge value.

    The band edge of the three-dimensional octant layer of width pi is set by
    the planar L-shaped strip: e_t = c*sqrt(m^2 c^2 + eps_inf).
    """
    if not 0 < eps_inf <= 1:
        raise ValueError("eps_inf must lie in (0, 1]")
    e_t = units.energy(eps_inf)
    return {"kind": "fichera_layer", "threshold_laplacian": eps_inf,
            "threshold_energy": e_t,
            "bands": [[-math.inf, -e_t], [e_t, math.inf]],
            "essential_point": units.rest_energy}
