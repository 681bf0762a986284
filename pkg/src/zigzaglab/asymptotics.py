"""Weak-coupling series, counting formulas and scaling-law fits.

Pure numerical evaluation (quadrature and algebra); embarrassingly parallel
over modes and sweep points, deterministic.  The series here predict the
threshold-gap quantities that the finite-difference sweeps measure:

* bent strips: kappa = sqrt((pi/2a)^2 - eps(beta)) to second order in the
  bending parameter, transverse-mode sum with exponential s-kernels;
* bent tubes: the analogous expansion with cross-section eigendata;
* one-sided strip deformations: both the book-literal linear-in-<f> gap and
  the standard quadratic-in-<f> reduction, plus the critical-case verdict;
* locally curved / bulged layers: the exponentially small gap exp(2/w(beta));
* laterally coupled strips: the window counting rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import CurvatureProfile
from .oracle import PolarEigenbasis

__all__ = [
    "AsymptoticPrediction",
    "transverse_overlap",
    "bent_strip_series",
    "bent_tube_series",
    "deformed_strip_prediction",
    "layer_weak_coupling",
    "window_count",
    "power_law_fit",
    "Gaussian2D",
    "critical_smoothness_bound",
]

DEFAULT_N_MAX = 20
_QUAD_REL_TOL = 1e-8


@dataclass(frozen=True)
class AsymptoticPrediction:
    kind: str
    value: float
    details: dict = field(default_factory=dict)
    note: str = ""


def transverse_overlap(n: int, a: float) -> float:
    """(chi_n, u chi_1) on (-a, a): -16*a*n / (pi^2 (n^2-1)^2) for even n, 0 odd.

    chi_n(u) = sin(n pi (u+a)/(2a)) / sqrt(a).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if n % 2 == 1:
        return 0.0
    return -16.0 * a * n / (math.pi ** 2 * (n * n - 1) ** 2)


def _gauss_nodes(lo: float, hi: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def _double_kernel_integral(fvals_fn: Callable[[np.ndarray], np.ndarray],
                            lo: float, hi: float, rho: float) -> float:
    """int int f(s) exp(-rho|s-s'|) f(s') ds ds' by tensor Gauss-Legendre.

    The integrand is continuous (the |s-s'| kink is only in the derivative),
    so plain tensor quadrature converges; the node count doubles until the
    value stabilizes to 1e-8 relative.
    """
    prev = None
    m = 32
    while m <= 1024:
        s, w = _gauss_nodes(lo, hi, m)
        f = fvals_fn(s)
        K = np.exp(-rho * np.abs(s[:, None] - s[None, :]))
        val = float((w * f) @ K @ (w * f))
        if prev is not None and abs(val - prev) <= _QUAD_REL_TOL * max(1.0, abs(val)):
            return val
        prev = val
        m *= 2
    return prev


def bent_strip_series(gamma: CurvatureProfile, a: float, beta: float,
                      n_max: int = DEFAULT_N_MAX) -> AsymptoticPrediction:
    """Second-order bending prediction for kappa = sqrt((pi/2a)^2 - eps(beta)).

    kappa = (beta^2/8) { ||gamma||^2
            - (1/2) sum_{n even} (chi_n, u chi_1)^2 rho_n
              int int gamma'(s) exp(-rho_n |s-s'|) gamma'(s') ds ds' }
    with rho_n = (pi/2a) sqrt(n^2-1); odd-n overlaps vanish by parity.
    Closed-form profiles differentiate analytically, tabulated ones by
    centered differences (which fails at non-smooth support edges).
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    base = gamma.with_beta(1.0)
    norm_sq = base.l2_norm_sq()
    lo, hi = base.support
    terms: list[dict] = []
    correction = 0.0
    tail = 0.0
    if hi > lo and norm_sq > 0:
        for n in range(2, n_max + 1):
            ov = transverse_overlap(n, a)
            if ov == 0.0:
                terms.append({"n": n, "term": 0.0})
                continue
            rho_n = (math.pi / (2 * a)) * math.sqrt(n * n - 1.0)
            I_n = _double_kernel_integral(base.derivative, lo, hi, rho_n)
            t = ov * ov * rho_n * I_n
            terms.append({"n": n, "term": t, "rho_n": rho_n, "overlap": ov,
                          "kernel_integral": I_n})
            correction += t
        # tail estimate: overlaps fall like n^-6 and the kernel contributes
        # O(1/rho_n), so the neglected terms are bounded by a geometric-ish
        # remainder of the last computed one
        last = next((t["term"] for t in reversed(terms) if t["term"] != 0.0), 0.0)
        tail = abs(last)
    leading = beta ** 2 / 8.0 * norm_sq
    kappa = beta ** 2 / 8.0 * (norm_sq - 0.5 * correction)
    return AsymptoticPrediction(
        kind="bent_strip", value=kappa,
        details={"leading": leading, "correction_sum": correction,
                 "terms": terms, "gamma_l2_sq": norm_sq, "beta": beta,
                 "a": a, "n_max": n_max, "tail_estimate": tail,
                 "quadrature_rel_tol": _QUAD_REL_TOL},
        note="leading-order (beta^2); remainder O(beta^3)")


def bent_tube_series(gamma: CurvatureProfile, tau: Callable[[np.ndarray], np.ndarray],
                     basis: PolarEigenbasis, beta: float,
                     n_max: int = 6) -> AsymptoticPrediction:
    """Second-order bending prediction for sqrt(mu_1 - eps(beta)) in a tube.

    Uses supplied cross-section eigendata (mu_n, chi_n on a polar quadrature
    grid).  The coupling function r*gamma*tau*sin(theta-alpha) +
    r*gamma'*cos(theta-alpha) splits into cos/sin channels with s-profiles
    P(s) = gamma'*cos(alpha) - gamma*tau*sin(alpha) and
    Q(s) = gamma*tau*cos(alpha) + gamma'*sin(alpha), where the Tang phase
    alpha integrates the torsion (alpha(0) = 0; predictions only depend on
    theta - alpha through the integrals, so the constant is immaterial).
    """
    mu = np.asarray(basis.mu, dtype=float)
    if np.any(np.diff(mu) < -1e-12):
        raise ValueError("cross-section eigenvalues must be ascending")
    if len(mu) < 2:
        raise ValueError("need at least two cross-section modes")
    if np.any(mu[1:] <= mu[0]):
        raise ValueError("mu_n <= mu_1 in the supplied eigendata")
    base = gamma.with_beta(1.0)
    lo, hi = base.support
    norm_sq = base.l2_norm_sq()
    leading = beta ** 2 / 8.0 * norm_sq

    r = basis.r[:, None]
    cosT = np.cos(basis.theta)[None, :]
    sinT = np.sin(basis.theta)[None, :]
    W = basis.weights
    chi1 = basis.chi[0]
    n_use = min(n_max, len(mu) - 1)

    # cross-section channel factors int chi_1 chi_n r {cos,sin}(theta) dy
    c_cos = np.array([float(np.sum(W * chi1 * basis.chi[n] * r * cosT))
                      for n in range(1, n_use + 1)])
    c_sin = np.array([float(np.sum(W * chi1 * basis.chi[n] * r * sinT))
                      for n in range(1, n_use + 1)])

    # s-channel profiles on a fixed fine grid (alpha by trapezoid of tau)
    m = 1024
    s = np.linspace(lo, hi, m)
    ds = (hi - lo) / (m - 1)
    tau_s = np.asarray(tau(s), dtype=float)
    alpha = np.concatenate([[0.0], np.cumsum(0.5 * ds * (tau_s[1:] + tau_s[:-1]))])
    gam = base(s)
    gdot = base.derivative(s)
    P = gdot * np.cos(alpha) - gam * tau_s * np.sin(alpha)
    Q = gam * tau_s * np.cos(alpha) + gdot * np.sin(alpha)

    terms = []
    corr = 0.0
    for j in range(n_use):
        rho = math.sqrt(mu[j + 1] - mu[0])
        K = np.exp(-rho * np.abs(s[:, None] - s[None, :]))
        w = np.full(m, ds); w[0] *= 0.5; w[-1] *= 0.5
        Ipp = float((w * P) @ K @ (w * P))
        Iqq = float((w * Q) @ K @ (w * Q))
        Ipq = float((w * P) @ K @ (w * Q))
        t = rho * (c_cos[j] ** 2 * Ipp + c_sin[j] ** 2 * Iqq
                   + 2.0 * c_cos[j] * c_sin[j] * Ipq)
        terms.append({"n": j + 2, "term": t, "rho": rho,
                      "c_cos": c_cos[j], "c_sin": c_sin[j]})
        corr += t
    value = leading - beta ** 2 / 16.0 * corr
    return AsymptoticPrediction(
        kind="bent_tube", value=value,
        details={"leading": leading, "terms": terms, "mu": mu.tolist(),
                 "beta": beta, "n_max": n_use},
        note="sqrt(mu_1 - eps(beta)) to O(beta^2)")


def critical_smoothness_bound() -> float:
    """Constant 24/(9 + sqrt(117 + 48 pi^2)) ~ 0.7206 in the critical test."""
    return 24.0 / (9.0 + math.sqrt(117.0 + 48.0 * math.pi ** 2))


def deformed_strip_prediction(f: CurvatureProfile, d: float, beta: float) -> AsymptoticPrediction:
    """Gap predictions for the one-sided deformation y < d + beta f(x).

    Returns (i) the book-literal gap beta^2 (pi^4/d^2) <f>, which is
    dimensionally suspect ((pi^4/d^2)<f> is not a squared inverse length);
    (ii) the shallow-well reduction beta^2 pi^4 <f>^2 / d^6; and (iii) for the
    critical case <f> = 0, the existence verdict: a weakly bound pair is
    expected iff ||f'||^2/||f||^2 < 0.7206 pi^2/d^2, with the gap then scaling
    as beta^4.  Numerics adjudicate between (i) and (ii); neither is assumed.
    """
    mean = f.integral()
    norm_sq = f.l2_norm_sq()
    dnorm_sq = f.derivative_l2_norm_sq()
    gap_literal = beta ** 2 * math.pi ** 4 / d ** 2 * mean
    gap_oracle = beta ** 2 * math.pi ** 4 * mean ** 2 / d ** 6
    lo, hi = f.support
    b_half = max(abs(lo), abs(hi))
    details = {
        "f_mean": mean, "f_l2_sq": norm_sq, "fprime_l2_sq": dnorm_sq,
        "beta": beta, "d": d,
        "gap_paper_literal": gap_literal,
        "gap_paper_literal_flag": "dimensionally_suspect",
        "gap_oracle": gap_oracle,
        "support_halflength": b_half,
    }
    tol = 1e-12 * max(1.0, norm_sq)
    if mean < -tol:
        verdict = "empty"
        note = "negative mean deformation: no discrete spectrum expected"
    elif abs(mean) <= tol:
        bound = critical_smoothness_bound() * math.pi ** 2 / d ** 2
        details["critical_bound"] = bound
        details["critical_ratio"] = dnorm_sq / norm_sq if norm_sq > 0 else math.inf
        details["small_support_empty"] = bool(8.0 * b_half < d * math.sqrt(3.0))
        if norm_sq > 0 and dnorm_sq / norm_sq < bound:
            verdict = "critical_exists"
            note = "critical case: weak pair expected, gap scaling beta^4"
        else:
            verdict = "critical_indeterminate"
            note = "critical case: smoothness condition violated, no prediction"
    else:
        verdict = "exists"
        note = "positive mean deformation: one weak pair expected"
    details["verdict"] = verdict
    value = gap_oracle if mean > 0 else 0.0
    return AsymptoticPrediction(kind="deformed_strip", value=value,
                                details=details, note=note)


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gaussian2D:
    """Radial profile f(x) = amplitude * exp(-|x|^2 / (2 width^2)) on R^2."""

    amplitude: float
    width: float

    def __call__(self, x, y):
        rr = (np.asarray(x) ** 2 + np.asarray(y) ** 2) / (2.0 * self.width ** 2)
        return self.amplitude * np.exp(-rr)

    def mean(self) -> float:
        return self.amplitude * 2.0 * math.pi * self.width ** 2

    def laplacian_hat_sq(self, w2: np.ndarray) -> np.ndarray:
        """|fourier of (1/2) Laplacian f|^2 at squared frequency w2.

        Convention f_hat(omega) = (2 pi)^-1 int f exp(-i omega.x) dx, under
        which f_hat = amplitude * width^2 * exp(-width^2 |omega|^2 / 2).
        """
        fhat = self.amplitude * self.width ** 2 * np.exp(-self.width ** 2 * w2 / 2.0)
        return (0.5 * w2 * fhat) ** 2


def _mhat_sq_from_grid(f_grid: np.ndarray, extent: float) -> tuple[np.ndarray, np.ndarray]:
    """Discrete Fourier quadrature of m0 = (1/2) Laplacian f on a square grid.

    Returns (|omega|^2, |m0_hat|^2 * domega) flattened, ready for the mode sum,
    in the same (2 pi)^-1 transform convention as Gaussian2D.
    """
    n = f_grid.shape[0]
    hx = 2.0 * extent / n
    k = 2.0 * math.pi * np.fft.fftfreq(n, d=hx)
    KX, KY = np.meshgrid(k, k, indexing="ij")
    W2 = KX ** 2 + KY ** 2
    fhat = np.fft.fft2(f_grid) * hx * hx / (2.0 * math.pi)
    m0hat_sq = (0.5 * W2 * np.abs(fhat)) ** 2
    dom = (k[1] - k[0]) ** 2
    return W2.ravel(), (m0hat_sq * dom).ravel()


def layer_weak_coupling(f, a: float, beta: float, n_max: int = DEFAULT_N_MAX,
                        grid_n: int = 256, grid_extent: Optional[float] = None) -> AsymptoticPrediction:
    """Weak-coupling w(beta) and gap for locally curved and bulged layers.

    Curved layer (halfwidth a, surface z = beta f(x)):
        w = -beta^2 sum_n (chi_1, u chi_n)^2 (pi/2a)^4 (n^2-1)^2
                 int |m0_hat|^2 / (|omega|^2 + (pi/2a)^2 (n^2-1)) domega,
    with m0 = (1/2) Laplacian f; every term is <= 0.  The gap exp(2/w) is an
    exponential order only; the absolute scale carries an undetermined length
    L, reported here both raw and with the convention L = 2a (flagged).

    Bulged layer of width d = 2a: w = -beta (pi/d^2) <f>, gap exp(2/w).

    f may be a Gaussian2D (semi-analytic transform) or a callable f(x, y)
    sampled on a (grid_n)^2 FFT grid of half-extent grid_extent.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    d = 2.0 * a
    if isinstance(f, Gaussian2D):
        mean = f.mean()
        # radial frequency quadrature; integrand decays like exp(-w^2 width^2)
        wmax = 40.0 / f.width
        w_nodes, w_wts = _gauss_nodes(0.0, wmax, 400)
        w2 = w_nodes ** 2
        mhat_sq_dom = f.laplacian_hat_sq(w2) * (2.0 * math.pi * w_nodes * w_wts)
    else:
        if grid_extent is None:
            raise ValueError("grid_extent required for sampled profiles")
        xs = np.linspace(-grid_extent, grid_extent, grid_n, endpoint=False)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        fg = np.asarray(f(X, Y), dtype=float)
        mean = float(np.sum(fg)) * (xs[1] - xs[0]) ** 2
        w2, mhat_sq_dom = _mhat_sq_from_grid(fg, grid_extent)

    terms = []
    w_curved = 0.0
    if float(np.sum(mhat_sq_dom)) > 0.0:
        for n in range(2, n_max + 1):
            ov = transverse_overlap(n, a)
            if ov == 0.0:
                continue
            pref = ov ** 2 * (math.pi / d) ** 4 * (n * n - 1.0) ** 2
            integ = float(np.sum(mhat_sq_dom / (w2 + (math.pi / d) ** 2 * (n * n - 1.0))))
            t = -beta ** 2 * pref * integ
            terms.append({"n": n, "term": t})
            w_curved += t

    degenerate = w_curved == 0.0
    gap_curved = 0.0 if degenerate else math.exp(2.0 / w_curved)
    details = {
        "w_curved": w_curved, "terms": terms, "degenerate": degenerate,
        "gap_curved_unscaled": gap_curved,
        "gap_curved_scaled": gap_curved / d ** 2,
        "length_scale_convention": "L = 2a (flagged: only the exponential order is theory-backed)",
        "f_mean": mean, "beta": beta, "a": a, "n_max": n_max,
    }
    # bulged layer branch requires an attractive mean
    if mean > 0:
        w_bulged = -beta * math.pi / d ** 2 * mean
        gap_bulged = math.exp(2.0 / w_bulged) if beta > 0 else 0.0
        details["w_bulged"] = w_bulged
        details["gap_bulged"] = gap_bulged
        lam_edge = (math.pi / d) ** 2
        details["lambda1_laplacian_bulged"] = lam_edge - gap_bulged
    elif mean < 0:
        details["bulged_branch"] = "unavailable: <f> <= 0"
    note = "degenerate (f = 0): no prediction" if degenerate and mean == 0 else \
        "exponential weak-coupling order; w to O(beta^2)/O(beta)"
    return AsymptoticPrediction(kind="layer_weak_coupling", value=gap_curved,
                                details=details, note=note)


# ---------------------------------------------------------------------------
# counting and fits
# ---------------------------------------------------------------------------

def window_count(d1: float, d2: float, ell: float) -> dict:
    """Predicted number of window-induced eigenvalues (per sign and total).

    x = (ell/d) sqrt(1 - (1+rho)^-2) with d = max(d1, d2) and rho the width
    ratio; the per-sign count is max{1, floor(x)} + N with N in {0, 1}.
    """
    if d1 <= 0 or d2 <= 0 or ell < 0:
        raise ValueError("widths must be positive, window nonnegative")
    d = max(d1, d2)
    rho = min(d1, d2) / d
    x = (ell / d) * math.sqrt(1.0 - (1.0 + rho) ** -2)
    lo = max(1, math.floor(x))
    return {"x": x, "floor_term": math.floor(x), "per_sign": (lo, lo + 1),
            "total": (2 * lo, 2 * (lo + 1)), "d": d, "rho": rho, "ell": ell}


def power_law_fit(x: Sequence[float], gap: Sequence[float],
                  expected: Optional[float] = None) -> dict:
    """Least-squares slope of log(gap) against log(x) with its standard error.

    Nonpositive gaps (pre-threshold noise / censored points) are excluded and
    reported; at least three valid points are required for an error bar.
    """
    x = np.asarray(x, dtype=float)
    gap = np.asarray(gap, dtype=float)
    if x.shape != gap.shape:
        raise ValueError("x and gap must have the same length")
    valid = gap > 0
    excluded = np.nonzero(~valid)[0].tolist()
    xv, gv = x[valid], gap[valid]
    if len(xv) < 3:
        raise ValueError(f"insufficient data: {len(xv)} positive points "
                         f"(excluded indices {excluded})")
    lx, lg = np.log(xv), np.log(gv)
    n = len(lx)
    mx = lx.mean()
    sxx = float(np.sum((lx - mx) ** 2))
    slope = float(np.sum((lx - mx) * (lg - lg.mean())) / sxx)
    intercept = float(lg.mean() - slope * mx)
    resid = lg - (intercept + slope * lx)
    rss = float(np.sum(resid ** 2))
    se = math.sqrt(rss / (n - 2) / sxx) if n > 2 else 0.0
    out = {"exponent": slope, "half_width": se, "intercept": intercept,
           "coefficient": math.exp(intercept), "n_points": n,
           "excluded": excluded}
    if expected is not None:
        out["expected"] = expected
        out["within"] = abs(slope - expected) <= max(3 * se, 1e-12)
    return out
