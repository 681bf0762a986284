"""Analytic reference spectra and independent weak-coupling oracles.

These routines validate the discretization and the eigensolver, and provide
leading-order predictions that the asymptotic series and the sweeps are
checked against.  Everything here is a pure function of its arguments.

The Bessel evaluation deliberately avoids the solver stack: J_nu is summed
from its ascending power series (exact to double precision below x ~ 12,
which covers every zero we ever request) and the zeros are found by
bracketing plus bisection.  The annulus cross-product roots, which need Y_nu
as well, lean on scipy.special; that path is only ever compared against the
finite-difference solve, never against bessel_zero itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "bessel_j",
    "bessel_zero",
    "ReferenceShape",
    "reference_spectrum",
    "annulus_cross_product_roots",
    "effective_1d_gap",
    "ppw_b2",
    "ppw_b3",
    "disc_eigenbasis",
]

_SERIES_TERMS = 60
_SERIES_XMAX = 16.0


def bessel_j(order: float, x) -> np.ndarray:
    """Bessel J_nu(x) by the ascending series, for |x| <= 16, nu >= 0.

    sum_k (-1)^k / (k! Gamma(k+nu+1)) (x/2)^(2k+nu).  Sixty terms leave the
    truncation error below the round-off of the alternating sum everywhere in
    the supported range.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("series evaluation expects x >= 0")
    if np.any(x > _SERIES_XMAX):
        raise ValueError(f"series evaluation restricted to x <= {_SERIES_XMAX}")
    half = x / 2.0
    # leading term (x/2)^nu / Gamma(nu+1); exact 1 (nu=0) or 0 (nu>0) at x=0
    with np.errstate(divide="ignore"):
        term = np.where(half > 0.0,
                        np.exp(order * np.log(np.where(half > 0.0, half, 1.0))
                               - math.lgamma(order + 1.0)),
                        1.0 if order == 0 else 0.0)
    out = term.copy()
    z2 = half * half
    for k in range(1, _SERIES_TERMS):
        term = term * (-z2) / (k * (k + order))
        out += term
    return out


def _bessel_j_scalar(order: float, x: float) -> float:
    return float(bessel_j(order, np.array([x]))[0])


def bessel_zero(order: float, index: int, tol: float = 1e-13) -> float:
    """index-th positive zero of J_order, to 12+ significant digits.

    Scans the series on a fine grid for sign changes and polishes each
    bracket by bisection (brentq).  Only the first few zeros are supported;
    they all lie below the series validity range.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if index < 1:
        raise ValueError("index must be a positive integer")
    xs = np.linspace(1e-9, _SERIES_XMAX - 0.5, 4000)
    vals = bessel_j(order, xs)
    sign = np.sign(vals)
    crossings = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if len(crossings) < index:
        raise ValueError(
            f"zero #{index} of J_{order} lies beyond the supported range")
    i = crossings[index - 1]
    return float(brentq(lambda t: _bessel_j_scalar(order, t), xs[i], xs[i + 1],
                        xtol=tol, rtol=1e-15))


def ppw_b2() -> float:
    """Payne-Polya-Weinberger constant (j_{0,1}/j_{1,1})^2 ~ 0.3939."""
    return (bessel_zero(0, 1) / bessel_zero(1, 1)) ** 2


def ppw_b3() -> float:
    """Three-dimensional PPW constant (pi/j_{3/2,1})^2 ~ 0.4888."""
    return (math.pi / bessel_zero(1.5, 1)) ** 2


# ---------------------------------------------------------------------------
# reference Dirichlet spectra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReferenceShape:
    """Validation shape: interval(d) | rectangle(a,b) | disc(R) | annulus."""

    kind: str
    d: float = 0.0
    a: float = 0.0
    b: float = 0.0
    R: float = 0.0
    R_in: float = 0.0
    R_out: float = 0.0
    count: int = 1

    def __post_init__(self):
        if self.kind not in ("interval", "rectangle", "disc", "annulus"):
            raise ValueError(f"unknown reference shape {self.kind!r}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.kind == "annulus" and not (0 < self.R_in < self.R_out):
            raise ValueError("annulus needs 0 < R_in < R_out")


def annulus_cross_product_roots(nu: int, R_in: float, R_out: float, count: int) -> list[float]:
    """First ``count`` positive roots k of the Dirichlet cross product.

    J_nu(k R_in) Y_nu(k R_out) - J_nu(k R_out) Y_nu(k R_in) = 0; the annulus
    eigenvalues are k^2.  Bracketed scan + brentq on scipy's Bessel functions.
    """
    from scipy.special import jv, yv

    def f(k):
        return jv(nu, k * R_in) * yv(nu, k * R_out) - jv(nu, k * R_out) * yv(nu, k * R_in)

    dk = math.pi / (R_out - R_in)
    ks = np.linspace(0.05 * dk, (count + 2 + nu) * dk * 1.5, 6000)
    vals = np.array([f(k) for k in ks])
    roots: list[float] = []
    sgn = np.sign(vals)
    for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
        roots.append(float(brentq(f, ks[i], ks[i + 1], xtol=1e-13, rtol=1e-14)))
        if len(roots) >= count:
            break
    if len(roots) < count:
        raise RuntimeError("failed to bracket enough cross-product roots")
    return roots


def reference_spectrum(shape: ReferenceShape) -> np.ndarray:
    """Ascending Dirichlet eigenvalues of a reference shape, multiplicity included."""
    n = shape.count
    if shape.kind == "interval":
        return np.array([(math.pi * k / shape.d) ** 2 for k in range(1, n + 1)])

    if shape.kind == "rectangle":
        mmax = int(math.ceil(math.sqrt(n) + 3)) + 4
        vals = sorted(math.pi ** 2 * (m * m / shape.a ** 2 + k * k / shape.b ** 2)
                      for m in range(1, mmax + 1) for k in range(1, mmax + 1))
        return np.array(vals[:n])

    if shape.kind == "disc":
        vals: list[float] = []
        for nu in range(0, n + 2):
            mult = 1 if nu == 0 else 2
            for idx in range(1, n + 2):
                try:
                    z = bessel_zero(float(nu), idx)
                except ValueError:
                    break
                vals.extend([(z / shape.R) ** 2] * mult)
            else:
                continue
        return np.array(sorted(vals)[:n])

    # annulus
    vals = []
    for nu in range(0, n + 3):
        mult = 1 if nu == 0 else 2
        for k in annulus_cross_product_roots(nu, shape.R_in, shape.R_out, n + 1):
            vals.extend([k * k] * mult)
    return np.array(sorted(vals)[:n])


# ---------------------------------------------------------------------------
# effective one-dimensional weak-coupling oracles
# ---------------------------------------------------------------------------

def effective_1d_gap(kind: str, *, gamma=None, f=None, d: Optional[float] = None,
                     beta: Optional[float] = None) -> dict:
    """Leading-order threshold-gap predictions from the 1D reductions.

    kind='bending': the gap quantity kappa = sqrt((pi/2a)^2 - eps(beta)) has
    leading term beta^2 ||gamma||_{L2}^2 / 8 (halfwidth drops out).

    kind='deformation': reduce the one-sided deformation of a strip of width
    d to the 1D Schroedinger operator with V(x) = -(2 pi^2 / d^3) beta f(x);
    the shallow-well energy -(1/4)(int V)^2 gives
    gap = (pi/d)^2 - eps_1 = beta^2 pi^4 <f>^2 / d^6.  Only valid for an
    attractive mean, <f> > 0.
    """
    if kind == "bending":
        if gamma is None or beta is None:
            raise ValueError("bending oracle needs gamma and beta")
        norm_sq = gamma.l2_norm_sq()
        return {"kind": kind, "kappa": beta ** 2 * norm_sq / 8.0,
                "gamma_l2_sq": norm_sq, "beta": beta}
    if kind == "deformation":
        if f is None or d is None or beta is None:
            raise ValueError("deformation oracle needs f, d and beta")
        mean = f.integral()
        if mean <= 0:
            raise ValueError("deformation oracle requires <f> > 0")
        gap = beta ** 2 * math.pi ** 4 * mean ** 2 / d ** 6
        return {"kind": kind, "gap": gap, "kappa": math.sqrt(gap),
                "f_mean": mean, "beta": beta, "d": d,
                "potential_scale": 2.0 * math.pi ** 2 / d ** 3}
    raise ValueError(f"unknown oracle kind {kind!r}")


# ---------------------------------------------------------------------------
# disc eigenbasis on a polar quadrature grid (for the tube series evaluator)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolarEigenbasis:
    """Cross-section eigendata sampled on a polar quadrature grid.

    mu: eigenvalues (ascending); chi: (n_modes, nr, ntheta) samples,
    normalized so that sum(w * chi^2) = 1 with w the r dr dtheta weights.
    """

    r: np.ndarray
    theta: np.ndarray
    weights: np.ndarray      # (nr, ntheta), includes the r dr dtheta measure
    mu: np.ndarray
    chi: np.ndarray


def disc_eigenbasis(R: float, n_modes: int, nr: int = 48, ntheta: int = 64) -> PolarEigenbasis:
    """Analytic Dirichlet modes of the disc sampled on a polar Gauss grid."""
    # Gauss-Legendre in r on (0, R); trapezoid (periodic, hence spectral) in theta
    xg, wg = np.polynomial.legendre.leggauss(nr)
    r = 0.5 * R * (xg + 1.0)
    wr = 0.5 * R * wg
    theta = np.linspace(0.0, 2 * math.pi, ntheta, endpoint=False)
    wt = 2 * math.pi / ntheta
    W = (r * wr)[:, None] * np.full((1, ntheta), wt)

    modes = []
    for nu in range(0, n_modes + 2):
        for idx in range(1, n_modes + 2):
            try:
                z = bessel_zero(float(nu), idx)
            except ValueError:
                break   # beyond the series range; enough low modes collected
            mu = (z / R) ** 2
            rad = bessel_j(float(nu), z * r / R)
            if nu == 0:
                modes.append((mu, rad[:, None] * np.ones((1, ntheta))))
            else:
                modes.append((mu, rad[:, None] * np.cos(nu * theta)[None, :]))
                modes.append((mu, rad[:, None] * np.sin(nu * theta)[None, :]))
    modes.sort(key=lambda t: t[0])
    mu = np.array([m[0] for m in modes[:n_modes]])
    chi = np.array([m[1] for m in modes[:n_modes]])
    for i in range(len(chi)):
        chi[i] /= math.sqrt(float(np.sum(W * chi[i] ** 2)))
    return PolarEigenbasis(r=r, theta=theta, weights=W, mu=mu, chi=chi)
