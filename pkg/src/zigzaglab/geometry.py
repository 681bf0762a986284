"""Waveguide geometries: curvature profiles, curve reconstruction, domain specs.

All geometry values are immutable after construction; the operations here are
pure functions, so everything is safe to share across threads.

Sign convention: the tangent angle evolves as theta(s) = -integral of gamma,
i.e. a positive constant curvature turns the curve clockwise.  Any consistent
choice leaves the spectra invariant; this one is fixed once here and used by
every caller.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "CurvatureProfile",
    "zero_curvature",
    "constant_curvature",
    "gaussian_bump",
    "ricker_bump",
    "tabulated_curvature",
    "PlanarCurve",
    "reconstruct_curve",
    "InjectivityResult",
    "check_injectivity",
    "BentStrip",
    "DeformedStrip",
    "CoupledStrips",
    "LShape",
    "Cross",
    "LoopStrip",
    "CrossSection2D",
    "TwistedFiber",
    "domain_from_dict",
    "build_domain",
    "CurvilinearDomain",
    "MaskedDomain",
    "FiberDomain",
    "GeometryError",
    "InjectivityError",
]

# Declared support of a Gaussian bump: beyond +-8 widths the tail is below
# 1e-27 of the peak, so clamping to zero there keeps compact-support semantics
# without visibly perturbing any integral.
GAUSSIAN_SUPPORT_WIDTHS = 8.0

LOOP_CLOSURE_RTOL = 1e-8


class GeometryError(ValueError):
    """Invalid geometric input (bad lengths, misaligned samples, ...)."""


class InjectivityError(GeometryError):
    """The strip described by (gamma, a) overlaps itself."""


# ---------------------------------------------------------------------------
# curvature / deformation profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurvatureProfile:
    """Signed curvature gamma(s) (units 1/length), or any 1D profile f(x).

    The profile is ``beta * base(s)`` inside ``support`` and exactly zero
    outside.  ``beta`` is the dimensionless bending/deformation parameter.

    kind is one of "zero", "constant", "gaussian", "ricker", "tabulated".
    Gaussian profiles are ``amplitude * exp(-((s-center)/width)**2)``; the
    ricker (zero-mean) profile is
    ``amplitude * (1 - ((s-center)/width)**2) * exp(-(s-center)**2/(2 width**2))``.
    Tabulated samples are interpolated linearly (second-order consistent with
    the finite-volume scheme) and must be strictly increasing in s.

    Only the closed-form kinds can certify the C^4 smoothness the continuum
    theory assumes; for tabulated data we check boundedness and support only.
    """

    kind: str
    support: tuple[float, float]
    beta: float = 1.0
    value: float = 0.0
    amplitude: float = 0.0
    width: float = 1.0
    center: float = 0.0
    s_nodes: Optional[tuple[float, ...]] = None
    g_values: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "gaussian", "ricker", "tabulated"):
            raise GeometryError(f"unknown profile kind {self.kind!r}")
        lo, hi = self.support
        if not (lo <= hi):
            raise GeometryError("empty profile support")
        if self.kind in ("gaussian", "ricker") and self.width <= 0:
            raise GeometryError("profile width must be positive")
        if self.kind == "tabulated":
            s = np.asarray(self.s_nodes, dtype=float)
            g = np.asarray(self.g_values, dtype=float)
            if s.ndim != 1 or s.size < 2 or s.size != g.size:
                raise GeometryError("tabulated profile needs matching 1D samples")
            if not np.all(np.diff(s) > 0):
                raise GeometryError("tabulated samples must be strictly increasing in s")
            if not np.all(np.isfinite(g)):
                raise GeometryError("tabulated profile must be bounded")

    # -- evaluation ---------------------------------------------------------

    def _base(self, s: np.ndarray) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros_like(s)
        if self.kind == "constant":
            return np.full_like(s, self.value)
        if self.kind == "gaussian":
            z = (s - self.center) / self.width
            return self.amplitude * np.exp(-z * z)
        if self.kind == "ricker":
            z = (s - self.center) / self.width
            return self.amplitude * (1.0 - z * z) * np.exp(-0.5 * z * z)
        sn = np.asarray(self.s_nodes, dtype=float)
        gn = np.asarray(self.g_values, dtype=float)
        return np.interp(s, sn, gn, left=0.0, right=0.0)

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        lo, hi = self.support
        out = self.beta * self._base(s)
        return np.where((s >= lo) & (s <= hi), out, 0.0)

    def derivative(self, s) -> np.ndarray:
        """d(gamma)/ds; analytic for closed forms, centered differences else."""
        s = np.asarray(s, dtype=float)
        lo, hi = self.support
        if self.kind in ("zero", "constant"):
            d = np.zeros_like(s)
        elif self.kind == "gaussian":
            z = (s - self.center) / self.width
            d = self.beta * self.amplitude * np.exp(-z * z) * (-2.0 * z / self.width)
        elif self.kind == "ricker":
            z = (s - self.center) / self.width
            d = (self.beta * self.amplitude * np.exp(-0.5 * z * z)
                 * (z * z - 3.0) * z / self.width)
        else:
            h = min(1e-5, 0.25 * float(np.min(np.diff(np.asarray(self.s_nodes)))))
            d = (self(s + h) - self(s - h)) / (2.0 * h)
            return d  # window already applied by __call__
        return np.where((s >= lo) & (s <= hi), d, 0.0)

    # -- norms / integrals ---------------------------------------------------

    def _quad_grid(self, n: int = 20001) -> tuple[np.ndarray, float]:
        lo, hi = self.support
        if hi <= lo:
            return np.array([lo]), 0.0
        s = np.linspace(lo, hi, n)
        return s, (hi - lo) / (n - 1)

    def integral(self) -> float:
        """Integral of the profile over its support.

        Closed-form kinds integrate analytically (the support-edge tails of
        the gaussian/ricker kinds are below 1e-27 of the peak, so the
        full-line formulas apply); tabulated profiles use the trapezoid rule.
        The ricker profile has exactly zero mean.
        """
        lo, hi = self.support
        if self.kind == "zero" or hi <= lo:
            return 0.0
        if self.kind == "constant":
            return self.beta * self.value * (hi - lo)
        if self.kind == "gaussian":
            return self.beta * self.amplitude * self.width * math.sqrt(math.pi)
        if self.kind == "ricker":
            return 0.0
        s, h = self._quad_grid()
        return float(np.trapezoid(self(s), dx=h))

    def l2_norm_sq(self) -> float:
        lo, hi = self.support
        if self.kind == "zero" or hi <= lo:
            return 0.0
        if self.kind == "constant":
            return (self.beta * self.value) ** 2 * (hi - lo)
        s, h = self._quad_grid()
        return float(np.trapezoid(self(s) ** 2, dx=h))

    def derivative_l2_norm_sq(self) -> float:
        s, h = self._quad_grid()
        return float(np.trapezoid(self.derivative(s) ** 2, dx=h))

    def sup_norm(self) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return abs(self.beta * self.value)
        if self.kind == "tabulated":
            return float(np.max(np.abs(self(np.asarray(self.s_nodes)))))
        s, _ = self._quad_grid(4001)
        return float(np.max(np.abs(self(s))))

    def with_beta(self, beta: float) -> "CurvatureProfile":
        return replace(self, beta=float(beta))

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "support": list(self.support), "beta": self.beta}
        if self.kind == "constant":
            d["value"] = self.value
        elif self.kind == "gaussian":
            d.update(amplitude=self.amplitude, width=self.width, center=self.center)
        elif self.kind == "tabulated":
            d.update(s_nodes=list(self.s_nodes), g_values=list(self.g_values))
        return d

    @staticmethod
    def from_dict(d: dict) -> "CurvatureProfile":
        d = dict(d)
        kind = d.pop("kind")
        support = tuple(d.pop("support"))
        if "s_nodes" in d:
            d["s_nodes"] = tuple(d["s_nodes"])
            d["g_values"] = tuple(d["g_values"])
        return CurvatureProfile(kind=kind, support=support, **d)


def zero_curvature() -> CurvatureProfile:
    return CurvatureProfile(kind="zero", support=(0.0, 0.0))


def constant_curvature(value: float, support: tuple[float, float], beta: float = 1.0) -> CurvatureProfile:
    return CurvatureProfile(kind="constant", support=support, value=value, beta=beta)


def gaussian_bump(amplitude: float, width: float = 1.0, center: float = 0.0,
                  support: Optional[tuple[float, float]] = None, beta: float = 1.0) -> CurvatureProfile:
    if support is None:
        support = (center - GAUSSIAN_SUPPORT_WIDTHS * width,
                   center + GAUSSIAN_SUPPORT_WIDTHS * width)
    return CurvatureProfile(kind="gaussian", support=support, amplitude=amplitude,
                            width=width, center=center, beta=beta)


def ricker_bump(amplitude: float, width: float = 1.0, center: float = 0.0,
                support: Optional[tuple[float, float]] = None, beta: float = 1.0) -> CurvatureProfile:
    """Zero-mean bump (Ricker wavelet), the canonical critical deformation."""
    if support is None:
        support = (center - GAUSSIAN_SUPPORT_WIDTHS * width,
                   center + GAUSSIAN_SUPPORT_WIDTHS * width)
    return CurvatureProfile(kind="ricker", support=support, amplitude=amplitude,
                            width=width, center=center, beta=beta)


def tabulated_curvature(s_nodes: Sequence[float], g_values: Sequence[float],
                        beta: float = 1.0) -> CurvatureProfile:
    s = tuple(float(v) for v in s_nodes)
    return CurvatureProfile(kind="tabulated", support=(s[0], s[-1]), beta=beta,
                            s_nodes=s, g_values=tuple(float(v) for v in g_values))


# ---------------------------------------------------------------------------
# curve reconstruction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlanarCurve:
    """Arc-length sampled curve with tangent angle theta (radians)."""

    s: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    theta: np.ndarray
    step: float

    def endpoint(self) -> tuple[float, float]:
        return float(self.xi[-1]), float(self.eta[-1])


def _cumtrapz0(y: np.ndarray, dx: float) -> np.ndarray:
    out = np.empty_like(y)
    out[0] = 0.0
    np.cumsum(0.5 * dx * (y[1:] + y[:-1]), out=out[1:])
    return out


def reconstruct_curve(gamma: CurvatureProfile, s_range: tuple[float, float], n: int) -> PlanarCurve:
    """Integrate the curvature into a planar curve.

    The curve starts at the origin with zero tangent angle; the accumulated
    turning angle and the coordinates are computed by composite trapezoid
    quadrature, so the error is O(n^-2) for piecewise-smooth curvature.
    """
    lo, hi = float(s_range[0]), float(s_range[1])
    if not hi > lo:
        raise GeometryError("empty arc-length range")
    if n < 2:
        raise GeometryError("need at least two samples")
    if gamma.kind == "tabulated":
        slo, shi = gamma.support
        if lo < slo - 1e-12 or hi > shi + 1e-12:
            raise GeometryError("tabulated profile does not cover the requested range")
    s = np.linspace(lo, hi, n)
    step = (hi - lo) / (n - 1)
    theta = -_cumtrapz0(gamma(s), step)
    xi = _cumtrapz0(np.cos(theta), step)
    eta = _cumtrapz0(np.sin(theta), step)
    return PlanarCurve(s=s, xi=xi, eta=eta, theta=theta, step=step)


# ---------------------------------------------------------------------------
# strip self-intersection check
# ---------------------------------------------------------------------------

class InjectivityResult(enum.Enum):
    ADMISSIBLE = "admissible"
    NECESSARY_VIOLATED = "necessary_violated"
    SELF_INTERSECTION = "self_intersection"


def _segments_intersect_any(P: np.ndarray, Q: np.ndarray, skip_adjacent: bool,
                            wrap: bool = False) -> bool:
    """True if any segment of polyline P properly meets any segment of Q.

    P and Q are (n, 2) arrays of polyline vertices.  When P is Q, segments
    closer than two indices apart are ignored (shared endpoints); with wrap,
    adjacency is taken modulo the segment count (closed rings).
    Vectorized orientation tests; quadratic in the segment count, chunked to
    bound memory.
    """
    a0, a1 = P[:-1], P[1:]
    b0, b1 = Q[:-1], Q[1:]
    na, nb = len(a0), len(b0)

    def cross(o, d, p):
        return d[..., 0] * (p[..., 1] - o[..., 1]) - d[..., 1] * (p[..., 0] - o[..., 0])

    chunk = max(1, int(4e6) // max(nb, 1))
    for i0 in range(0, na, chunk):
        i1 = min(na, i0 + chunk)
        A0 = a0[i0:i1, None, :]
        A1 = a1[i0:i1, None, :]
        dA = A1 - A0
        dB = (b1 - b0)[None, :, :]
        d1 = cross(A0, dA, b0[None, :, :])
        d2 = cross(A0, dA, b1[None, :, :])
        d3 = cross(b0[None, :, :], dB, A0)
        d4 = cross(b0[None, :, :], dB, A1)
        hit = (d1 * d2 < 0) & (d3 * d4 < 0)
        if skip_adjacent:
            ia = np.arange(i0, i1)[:, None]
            ib = np.arange(nb)[None, :]
            gap = np.abs(ia - ib)
            if wrap:
                gap = np.minimum(gap, nb - gap)
            hit &= gap > 1
        if bool(hit.any()):
            return True
    return False


def check_injectivity(gamma: CurvatureProfile, a: float, n: int = 1500,
                      closed: bool = False) -> InjectivityResult:
    """Classify the strip of halfwidth ``a`` around the curve of curvature gamma.

    The necessary condition a*sup|gamma| < 1 is tested first; otherwise the
    curve is reconstructed, both boundary polylines at offset +-a are built,
    and a segment-segment intersection sweep over all non-adjacent pairs
    (including cross pairs between the two boundaries) decides admissibility.
    ``closed`` treats the curve as a loop over its support (adjacency wraps,
    no straight tails are attached).
    """
    if a <= 0:
        raise GeometryError("halfwidth must be positive")
    if a * gamma.sup_norm() >= 1.0:
        return InjectivityResult.NECESSARY_VIOLATED
    lo, hi = gamma.support
    if hi <= lo:  # straight strip
        return InjectivityResult.ADMISSIBLE
    if closed:
        margin = 0.0
    else:
        margin = 4.0 * a + 0.1 * (hi - lo)
        if gamma.kind == "tabulated":
            # pad with exact zeros so the straight arms beyond the support
            # are seen
            s = np.asarray(gamma.s_nodes)
            g = np.asarray(gamma.g_values)
            gamma = tabulated_curvature(
                np.concatenate([[lo - margin], s, [hi + margin]]),
                np.concatenate([[0.0], g, [0.0]]), beta=gamma.beta)
            lo, hi = gamma.support
            margin = 0.0
    curve = reconstruct_curve(gamma, (lo - margin, hi + margin), n)
    nx = -np.sin(curve.theta)
    ny = np.cos(curve.theta)
    upper = np.column_stack([curve.xi + a * nx, curve.eta + a * ny])
    lower = np.column_stack([curve.xi - a * nx, curve.eta - a * ny])
    if (_segments_intersect_any(upper, upper, skip_adjacent=True, wrap=closed)
            or _segments_intersect_any(lower, lower, skip_adjacent=True, wrap=closed)
            or _segments_intersect_any(upper, lower, skip_adjacent=False)):
        return InjectivityResult.SELF_INTERSECTION
    return InjectivityResult.ADMISSIBLE


# ---------------------------------------------------------------------------
# domain specifications
# ---------------------------------------------------------------------------

def _positive(name: str, *vals: float) -> None:
    for v in vals:
        if not v > 0:
            raise GeometryError(f"{name} must be positive")


@dataclass(frozen=True)
class BentStrip:
    gamma: CurvatureProfile
    a: float
    unit: str = "1"
    kind: str = field(default="bent_strip", init=False)

    def __post_init__(self):
        _positive("halfwidth", self.a)
        if self.a * self.gamma.sup_norm() >= 1.0:
            raise GeometryError("a*sup|gamma| >= 1: injectivity necessarily fails")


@dataclass(frozen=True)
class DeformedStrip:
    d: float
    f: CurvatureProfile
    beta: float
    unit: str = "1"
    kind: str = field(default="deformed_strip", init=False)

    def __post_init__(self):
        _positive("width", self.d)
        if self.beta < 0:
            raise GeometryError("deformation parameter must be >= 0")


@dataclass(frozen=True)
class CoupledStrips:
    d1: float
    d2: float
    ell: float
    unit: str = "1"
    kind: str = field(default="coupled_strips", init=False)

    def __post_init__(self):
        _positive("widths", self.d1, self.d2)
        if self.ell < 0:
            raise GeometryError("window width must be >= 0")

    @property
    def d(self) -> float:
        return max(self.d1, self.d2)

    @property
    def D(self) -> float:
        return self.d1 + self.d2

    @property
    def rho(self) -> float:
        return min(self.d1, self.d2) / self.d


@dataclass(frozen=True)
class LShape:
    d: float
    unit: str = "1"
    kind: str = field(default="l_shape", init=False)

    def __post_init__(self):
        _positive("width", self.d)


@dataclass(frozen=True)
class Cross:
    d: float
    unit: str = "1"
    kind: str = field(default="cross", init=False)

    def __post_init__(self):
        _positive("width", self.d)


@dataclass(frozen=True)
class LoopStrip:
    gamma: CurvatureProfile
    a: float
    L: float
    unit: str = "1"
    kind: str = field(default="loop_strip", init=False)

    def __post_init__(self):
        _positive("halfwidth and length", self.a, self.L)
        if self.a * self.gamma.sup_norm() >= 1.0:
            raise GeometryError("a*sup|gamma| >= 1: injectivity necessarily fails")
        turn = self.gamma.integral()
        if min(abs(turn - 2 * math.pi), abs(turn + 2 * math.pi)) > LOOP_CLOSURE_RTOL * 2 * math.pi:
            raise GeometryError(
                f"loop does not close: integral of gamma = {turn:.12g}, expected +-2*pi")


@dataclass(frozen=True)
class CrossSection2D:
    shape: str  # rectangle | disc | ellipse | polygon
    a: float = 0.0       # rectangle half-size / ellipse semi-axis (x)
    b: float = 0.0       # rectangle half-size / ellipse semi-axis (y)
    R: float = 0.0       # disc radius
    vertices: Optional[tuple[tuple[float, float], ...]] = None
    unit: str = "1"
    kind: str = field(default="cross_section", init=False)

    def __post_init__(self):
        if self.shape not in ("rectangle", "disc", "ellipse", "polygon"):
            raise GeometryError(f"unknown cross-section shape {self.shape!r}")
        if self.shape == "rectangle":
            _positive("rectangle half-sizes", self.a, self.b)
        elif self.shape == "disc":
            _positive("disc radius", self.R)
        elif self.shape == "ellipse":
            _positive("ellipse semi-axes", self.a, self.b)
        elif self.shape == "polygon":
            if not self.vertices or len(self.vertices) < 3:
                raise GeometryError("polygon needs at least three vertices")

    def bounding_box(self) -> tuple[float, float, float, float]:
        if self.shape == "rectangle":
            return (-self.a, self.a, -self.b, self.b)
        if self.shape == "disc":
            return (-self.R, self.R, -self.R, self.R)
        if self.shape == "ellipse":
            return (-self.a, self.a, -self.b, self.b)
        vs = np.asarray(self.vertices)
        return (vs[:, 0].min(), vs[:, 0].max(), vs[:, 1].min(), vs[:, 1].max())


@dataclass(frozen=True)
class TwistedFiber:
    M: CrossSection2D
    beta: float  # constant twist rate, 1/length
    unit: str = "1"
    kind: str = field(default="twisted_fiber", init=False)

    def __post_init__(self):
        if self.beta < 0:
            raise GeometryError("twist rate must be >= 0")


_DOMAIN_KINDS = {
    "bent_strip": BentStrip,
    "deformed_strip": DeformedStrip,
    "coupled_strips": CoupledStrips,
    "l_shape": LShape,
    "cross": Cross,
    "loop_strip": LoopStrip,
    "cross_section": CrossSection2D,
    "twisted_fiber": TwistedFiber,
}


def domain_to_dict(spec) -> dict:
    """Serialize any DomainSpec to a plain JSON document with a kind tag."""
    d = {"kind": spec.kind, "unit": spec.unit}
    if isinstance(spec, BentStrip):
        d.update(gamma=spec.gamma.to_dict(), a=spec.a)
    elif isinstance(spec, DeformedStrip):
        d.update(d=spec.d, f=spec.f.to_dict(), beta=spec.beta)
    elif isinstance(spec, CoupledStrips):
        d.update(d1=spec.d1, d2=spec.d2, ell=spec.ell)
    elif isinstance(spec, (LShape, Cross)):
        d.update(d=spec.d)
    elif isinstance(spec, LoopStrip):
        d.update(gamma=spec.gamma.to_dict(), a=spec.a, L=spec.L)
    elif isinstance(spec, CrossSection2D):
        d.update(shape=spec.shape, a=spec.a, b=spec.b, R=spec.R,
                 vertices=None if spec.vertices is None else [list(v) for v in spec.vertices])
    elif isinstance(spec, TwistedFiber):
        d.update(M=domain_to_dict(spec.M), beta=spec.beta)
    else:
        raise GeometryError(f"unknown domain spec {type(spec).__name__}")
    return d


def domain_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _DOMAIN_KINDS:
        raise GeometryError(f"unknown domain kind {kind!r}")
    unit = d.pop("unit", "1")
    if kind in ("bent_strip", "loop_strip"):
        d["gamma"] = CurvatureProfile.from_dict(d["gamma"])
    if kind == "deformed_strip":
        d["f"] = CurvatureProfile.from_dict(d["f"])
    if kind == "cross_section" and d.get("vertices"):
        d["vertices"] = tuple(tuple(v) for v in d["vertices"])
    if kind == "twisted_fiber":
        sub = dict(d["M"]); sub.pop("kind", None)
        if sub.get("vertices"):
            sub["vertices"] = tuple(tuple(v) for v in sub["vertices"])
        sub.pop("unit", None)
        d["M"] = CrossSection2D(**sub)
    return _DOMAIN_KINDS[kind](**d, unit=unit)


def domain_to_json(spec) -> str:
    return json.dumps(domain_to_dict(spec), sort_keys=True)


def domain_from_json(text: str):
    return domain_from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# discretizable domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurvilinearDomain:
    """Strip in (s, u) coordinates with metric sqrt(g) = 1 + u*gamma(s)."""

    gamma: CurvatureProfile
    a: float
    S: float                  # truncation half-length (ignored when periodic)
    periodic: bool = False
    L: float = 0.0            # loop length when periodic
    s_symmetry: Optional[str] = None  # 'even' -> Neumann line at s = 0
    threshold: float = math.inf
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MaskedDomain:
    """Union of axis-aligned boxes with optional slits / symmetry lines.

    boxes: (x0, x1, y0, y1) tuples; their union is the open region.
    slits: (y_line, windows) pairs; nodes on the line outside the open window
           intervals are Dirichlet.
    neumann: subset of {"xmin", "ymin"} marking reflection lines of a
             symmetry-reduced sector.
    top_profile: optional wall height w(x); nodes keep y < w(x), with the wall
             snapped to the nearest grid line (unbiased first-order masking).
    predicate: optional vectorized inside(x, y) for curved cross-sections
             (strict-inside staircase masking).
    """

    boxes: tuple[tuple[float, float, float, float], ...]
    slits: tuple[tuple[float, tuple[tuple[float, float], ...]], ...] = ()
    neumann: tuple[str, ...] = ()
    top_profile: Optional[Callable[[np.ndarray], np.ndarray]] = None
    predicate: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    threshold: float = math.inf
    threshold_width: float = 0.0   # transverse width defining the band edge
    soft_coords: tuple[float, ...] = ()  # truncation edges; may snap to the grid
    curved_boundary: str = "snap"  # "snap": nearest-line mask; "cut": exact legs
    meta: dict = field(default_factory=dict)

    def bounding_box(self) -> tuple[float, float, float, float]:
        bs = np.asarray(self.boxes, dtype=float)
        return (bs[:, 0].min(), bs[:, 1].max(), bs[:, 2].min(), bs[:, 3].max())


@dataclass(frozen=True)
class FiberDomain:
    cross_section: MaskedDomain
    beta: float
    meta: dict = field(default_factory=dict)


def _cross_section_domain(spec: CrossSection2D) -> MaskedDomain:
    x0, x1, y0, y1 = spec.bounding_box()
    if spec.shape == "rectangle":
        return MaskedDomain(boxes=((x0, x1, y0, y1),), meta={"kind": "rectangle"})
    if spec.shape == "disc":
        R = spec.R
        pred = lambda x, y: x * x + y * y < R * R
    elif spec.shape == "ellipse":
        a, b = spec.a, spec.b
        pred = lambda x, y: (x / a) ** 2 + (y / b) ** 2 < 1.0
    else:
        from matplotlib.path import Path
        path = Path(np.asarray(spec.vertices))
        def pred(x, y, _p=path):
            pts = np.column_stack([np.ravel(x), np.ravel(y)])
            return _p.contains_points(pts).reshape(np.shape(x))
    return MaskedDomain(boxes=((x0, x1, y0, y1),), predicate=pred,
                        meta={"kind": spec.shape})


def default_truncation(spec) -> float:
    """Truncation half-length: 30 strip widths beyond the perturbed part.

    Sub-threshold eigenfunctions decay exponentially, so this puts the
    truncation error below the discretization error for order-one gaps;
    near-threshold sweeps must override S explicitly.
    """
    if isinstance(spec, BentStrip):
        lo, hi = spec.gamma.support
        return max(abs(lo), abs(hi)) + 30.0 * 2.0 * spec.a
    if isinstance(spec, DeformedStrip):
        lo, hi = spec.f.support
        return max(abs(lo), abs(hi)) + 30.0 * spec.d
    if isinstance(spec, CoupledStrips):
        return spec.ell / 2.0 + 30.0 * spec.D
    if isinstance(spec, (LShape, Cross)):
        return spec.d + 30.0 * spec.d
    raise GeometryError("no truncation default for this spec")


def build_domain(spec, S: Optional[float] = None, sector: Optional[str] = None,
                 boundary: str = "snap"):
    """Normalize a DomainSpec into a grid description plus its band edge.

    Returns a CurvilinearDomain, MaskedDomain or FiberDomain.  ``sector``
    selects a symmetry-reduced quarter/half domain ('ee', 'eo', 'oe', 'oo';
    the first letter is the x-parity, the second the y-parity; 'e' marks a
    Neumann line, 'o' a Dirichlet line).  Sector reduction is available for
    the cross, for coupled strips (x always; y only when d1 = d2), for the
    deformed strip (x) and for the bent strip (even s).
    """
    if isinstance(spec, BentStrip):
        res = check_injectivity(spec.gamma, spec.a)
        if res is not InjectivityResult.ADMISSIBLE:
            raise InjectivityError(f"bent strip not admissible: {res.value}")
        Sv = default_truncation(spec) if S is None else float(S)
        lo, hi = spec.gamma.support
        if Sv <= max(abs(lo), abs(hi)):
            raise GeometryError("truncation S lies inside the curvature support")
        sym = None
        if sector in ("e", "ee", "even"):
            sym = "even"
        elif sector not in (None,):
            raise GeometryError("bent strip supports only the even-s sector")
        thr = (math.pi / (2 * spec.a)) ** 2
        return CurvilinearDomain(gamma=spec.gamma, a=spec.a, S=Sv, s_symmetry=sym,
                                 threshold=thr, meta={"kind": spec.kind})

    if isinstance(spec, LoopStrip):
        res = check_injectivity(spec.gamma, spec.a, closed=True)
        if res is not InjectivityResult.ADMISSIBLE:
            raise InjectivityError(f"loop strip not admissible: {res.value}")
        # compact closure: no essential band, only the flat Dirac point
        return CurvilinearDomain(gamma=spec.gamma, a=spec.a, S=0.0, periodic=True,
                                 L=spec.L, threshold=math.inf, meta={"kind": spec.kind})

    if isinstance(spec, LShape):
        d = spec.d
        Sv = default_truncation(spec) if S is None else float(S)
        if sector is not None:
            raise GeometryError("the L-shape has no axis-aligned symmetry sector")
        boxes = ((0.0, Sv, 0.0, d), (0.0, d, 0.0, Sv))
        return MaskedDomain(boxes=boxes, threshold=(math.pi / d) ** 2,
                            threshold_width=d, soft_coords=(Sv,),
                            meta={"kind": spec.kind, "S": Sv})

    if isinstance(spec, Cross):
        d = spec.d
        Sv = default_truncation(spec) if S is None else float(S)
        thr = (math.pi / d) ** 2
        if sector is None:
            boxes = ((-Sv, Sv, -d / 2, d / 2), (-d / 2, d / 2, -Sv, Sv))
            return MaskedDomain(boxes=boxes, threshold=thr, threshold_width=d,
                                soft_coords=(-Sv, Sv),
                                meta={"kind": spec.kind, "S": Sv})
        if sector not in ("ee", "eo", "oe", "oo"):
            raise GeometryError(f"unknown sector {sector!r}")
        boxes = ((0.0, Sv, 0.0, d / 2), (0.0, d / 2, 0.0, Sv))
        neu = []
        if sector[0] == "e":
            neu.append("xmin")
        if sector[1] == "e":
            neu.append("ymin")
        # only the doubly-odd sector loses the relaxed half-channel: with any
        # even parity one arm keeps a Neumann-Dirichlet channel of edge (pi/d)^2
        width = d / 2 if sector == "oo" else d
        return MaskedDomain(boxes=boxes, neumann=tuple(neu),
                            threshold=(math.pi / width) ** 2, threshold_width=width,
                            soft_coords=(Sv,),
                            meta={"kind": spec.kind, "S": Sv, "sector": sector})

    if isinstance(spec, CoupledStrips):
        Sv = default_truncation(spec) if S is None else float(S)
        d = spec.d
        thr = (math.pi / d) ** 2
        if spec.ell / 2.0 >= Sv:
            raise GeometryError("window wider than the truncated domain")
        meta = {"kind": spec.kind, "S": Sv, "D": spec.D, "rho": spec.rho,
                "d1": spec.d1, "d2": spec.d2, "ell": spec.ell}
        if sector is None:
            boxes = ((-Sv, Sv, -spec.d2, spec.d1),)
            windows = ((-spec.ell / 2, spec.ell / 2),) if spec.ell > 0 else ()
            return MaskedDomain(boxes=boxes, slits=((0.0, windows),),
                                threshold=thr, threshold_width=d,
                                soft_coords=(-Sv, Sv), meta=meta)
        if sector[0] == "o":
            raise GeometryError("odd-x sector of coupled strips is not supported")
        ysec = sector[1] if len(sector) > 1 else None
        if ysec is not None and abs(spec.d1 - spec.d2) > 1e-12:
            raise GeometryError("y-parity sector requires d1 = d2")
        if ysec == "o":
            # odd in y: the window is invisible, plain half strip
            boxes = ((0.0, Sv, 0.0, spec.d1),)
            return MaskedDomain(boxes=boxes, neumann=("xmin",), threshold=thr,
                                threshold_width=d, soft_coords=(Sv,), meta=meta)
        if ysec == "e":
            boxes = ((0.0, Sv, 0.0, spec.d1),)
            windows = ((-1.0, spec.ell / 2),) if spec.ell > 0 else ()
            return MaskedDomain(boxes=boxes, slits=((0.0, windows),),
                                neumann=("xmin", "ymin"), threshold=thr,
                                threshold_width=d, soft_coords=(Sv,), meta=meta)
        boxes = ((0.0, Sv, -spec.d2, spec.d1),)
        windows = ((-1.0, spec.ell / 2),) if spec.ell > 0 else ()
        return MaskedDomain(boxes=boxes, slits=((0.0, windows),),
                            neumann=("xmin",), threshold=thr, threshold_width=d,
                            soft_coords=(Sv,), meta=meta)

    if isinstance(spec, DeformedStrip):
        Sv = default_truncation(spec) if S is None else float(S)
        lo, hi = spec.f.support
        if Sv <= max(abs(lo), abs(hi)):
            raise GeometryError("truncation S lies inside the deformation support")
        fmax = spec.beta * max(0.0, float(np.max(spec.f(np.linspace(lo, hi, 4001))))) if hi > lo else 0.0
        prof = spec.f
        bscale = spec.beta
        dd = spec.d
        def wall(x, _p=prof, _b=bscale, _d=dd):
            return _d + _b * _p(np.asarray(x, dtype=float))
        meta = {"kind": spec.kind, "S": Sv, "d": spec.d, "beta": spec.beta}
        neu: tuple[str, ...] = ()
        x0 = -Sv
        if sector is not None:
            if sector[0] != "e":
                raise GeometryError("deformed strip supports only the even-x sector")
            neu = ("xmin",)
            x0 = 0.0
        ymax = spec.d + max(0.0, fmax) + spec.d
        boxes = ((x0, Sv, 0.0, ymax),)
        return MaskedDomain(boxes=boxes, neumann=neu, top_profile=wall,
                            threshold=(math.pi / spec.d) ** 2, threshold_width=spec.d,
                            soft_coords=(-Sv, Sv, ymax), curved_boundary=boundary,
                            meta=meta)

    if isinstance(spec, CrossSection2D):
        return _cross_section_domain(spec)

    if isinstance(spec, TwistedFiber):
        return FiberDomain(cross_section=_cross_section_domain(spec.M), beta=spec.beta,
                           meta={"kind": spec.kind})

    raise GeometryError(f"cannot build a domain from {type(spec).__name__}")
