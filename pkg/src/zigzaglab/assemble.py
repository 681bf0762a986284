"""Sparse symmetric discretizations of the Dirichlet Laplacian.

Three families, all producing the generalized pencil A x = lambda B x with A
symmetric positive semidefinite (bitwise-equal symmetric entries) and B a
positive diagonal of mass weights:

* curvilinear strips (s, u) with metric sqrt(g) = 1 + u*gamma(s), as a
  divergence-form finite-volume scheme.  This avoids the unitarily
  transformed effective-potential form, which would need the second
  derivative of gamma and is hostile to tabulated profiles.
* masked Cartesian regions (5-point stencil) for the polygonal geometries,
  slit/window couplings and curved-top deformed strips,
* the twisted-tube fiber operator L + beta^2 D^T D with D a centered
  discretization of the angular derivative.

Assembly is deterministic: COO triplets are accumulated in a fixed order and
canonicalized by sorted CSR conversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .geometry import (CurvatureProfile, CurvilinearDomain, FiberDomain,
                       GeometryError, MaskedDomain)

__all__ = [
    "GridOperator",
    "assemble_curvilinear",
    "assemble_cartesian",
    "assemble_twist_fiber",
    "assemble_interval",
    "assemble_radial",
    "assemble_domain",
    "export_matrix_market",
    "transverse_band_edge",
]


@dataclass(frozen=True)
class GridOperator:
    """Generalized eigenpencil A x = lambda B x on a structured grid.

    A: sparse symmetric stiffness (units 1/length^2); B: positive diagonal
    mass weights (dimensionless); threshold: bottom of the essential band of
    the continuous problem; threshold_discrete: the same band edge for this
    discretization (the transverse eigenvalue of the far-field scheme), used
    so that near-threshold gaps can be measured without the O(h^2) transverse
    bias.  meta carries grid axes and masks for tests and reports.
    """

    A: sp.csr_matrix
    B: np.ndarray
    h: tuple[float, ...]
    threshold: float
    threshold_discrete: float
    shape: tuple[int, ...]
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.A.shape[0]


def transverse_band_edge(width: float, h: float) -> float:
    """Smallest eigenvalue of the 1D 3-point Dirichlet chain spanning width."""
    return (2.0 / h ** 2) * (1.0 - math.cos(math.pi * h / width))


def _canonical_csr(rows, cols, vals, n) -> sp.csr_matrix:
    A = sp.coo_matrix((np.asarray(vals), (np.asarray(rows), np.asarray(cols))),
                      shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def _symmetrize_bitwise(A: sp.csr_matrix) -> sp.csr_matrix:
    # (A + A^T)/2 makes paired entries bitwise equal regardless of the
    # accumulation order during assembly or sparse products.
    S = (A + A.T) * 0.5
    S = S.tocsr()
    S.sum_duplicates()
    S.sort_indices()
    return S


# ---------------------------------------------------------------------------
# curvilinear strips
# ---------------------------------------------------------------------------

def assemble_curvilinear(gamma: CurvatureProfile, a: float, h_s: float, h_u: float,
                         S: float = 0.0, periodic: bool = False, L: float = 0.0,
                         s_symmetry: Optional[str] = None) -> GridOperator:
    """Finite-volume Laplace-Beltrami operator on the (s, u) strip.

    Metric diag((1+u*gamma)^2, 1).  Face fluxes use the arithmetic mean of
    1/sqrt(g) at the adjacent nodes in the s-direction and of sqrt(g) in the
    u-direction; B_i = sqrt(g) at node i.  Dirichlet rows are eliminated at
    u = +-a and (for non-periodic strips) at |s| = S.  Consistency order 2
    for smooth curvature.

    periodic=True closes the strip into a loop of length L (s wraps);
    s_symmetry='even' solves the even-s sector with a Neumann line at s = 0.
    """
    if h_s <= 0 or h_u <= 0:
        raise GeometryError("grid spacings must be positive")
    if a * gamma.sup_norm() >= 1.0:
        raise GeometryError("a*sup|gamma| >= 1: metric degenerates")

    nu_cells = max(2, int(round(2 * a / h_u)))
    h_u = 2 * a / nu_cells
    nu = nu_cells - 1                      # interior u nodes
    u = -a + h_u * np.arange(1, nu + 1)

    if periodic:
        if L <= 0:
            raise GeometryError("loop length must be positive")
        ns = max(3, int(round(L / h_s)))
        h_s = L / ns
        s = h_s * np.arange(ns)
        neumann_line = False
    else:
        if S <= 0:
            raise GeometryError("truncation length must be positive")
        lo, hi = gamma.support
        if hi > lo and S <= max(abs(lo), abs(hi)):
            raise GeometryError("truncation S lies inside the curvature support")
        if s_symmetry == "even":
            ns_cells = max(2, int(round(S / h_s)))
            h_s = S / ns_cells
            ns = ns_cells                  # nodes s = 0 .. S-h_s (s=0 Neumann)
            s = h_s * np.arange(ns)
            neumann_line = True
        elif s_symmetry is None:
            ns_cells = max(2, int(round(2 * S / h_s)))
            h_s = 2 * S / ns_cells
            ns = ns_cells - 1
            s = -S + h_s * np.arange(1, ns + 1)
            neumann_line = False
        else:
            raise GeometryError(f"unsupported s_symmetry {s_symmetry!r}")

    g = 1.0 + u[None, :] * gamma(s)[:, None]       # sqrt(g) on nodes, (ns, nu)
    if np.min(g) <= 0:
        raise GeometryError("metric sqrt(g) <= 0 on the grid")
    inv_g = 1.0 / g

    def idx(i, j):
        return i * nu + j

    n = ns * nu
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    diag = np.zeros(n)

    ii = np.arange(ns)
    jj = np.arange(nu)

    # cell factor: half cells on the reflection line s = 0 of the even sector
    cell = np.ones(ns)
    if neumann_line:
        cell[0] = 0.5

    # s-direction fluxes between (i, j) and (i+1, j); dual faces are never cut
    # by the reflection line, so these always carry full weight
    i_left = ii[:-1] if not periodic else ii
    i_right = i_left + 1 if not periodic else (i_left + 1) % ns
    w = 0.5 * (inv_g[i_left][:, jj] + inv_g[i_right][:, jj]) / h_s ** 2
    r = (idx(i_left[:, None], jj[None, :])).ravel()
    c = (idx(i_right[:, None], jj[None, :])).ravel()
    wv = w.ravel()
    rows += [r, c]
    cols += [c, r]
    vals += [-wv, -wv]
    np.add.at(diag, r, wv)
    np.add.at(diag, c, wv)

    if not periodic:
        # Dirichlet faces at the truncation ends (none at s=0 on the even sector)
        if not neumann_line:
            w0 = 0.5 * (inv_g[0, :] + 1.0 / (1.0 + u * gamma(np.array([s[0] - h_s]))[0])) / h_s ** 2
            np.add.at(diag, idx(0, jj), w0)
        wN = 0.5 * (inv_g[-1, :] + 1.0 / (1.0 + u * gamma(np.array([s[-1] + h_s]))[0])) / h_s ** 2
        np.add.at(diag, idx(ns - 1, jj), wN)

    # u-direction fluxes between (i, j) and (i, j+1); halved on the s=0 line
    w = cell[:, None] * 0.5 * (g[:, :-1] + g[:, 1:]) / h_u ** 2
    r = (idx(ii[:, None], jj[None, :-1])).ravel()
    c = (idx(ii[:, None], jj[None, 1:])).ravel()
    wv = w.ravel()
    rows += [r, c]
    cols += [c, r]
    vals += [-wv, -wv]
    np.add.at(diag, r, wv)
    np.add.at(diag, c, wv)

    # Dirichlet walls at u = -a and u = +a
    g_wall_lo = 1.0 - a * gamma(s)
    g_wall_hi = 1.0 + a * gamma(s)
    np.add.at(diag, idx(ii, 0), cell * 0.5 * (g[:, 0] + g_wall_lo) / h_u ** 2)
    np.add.at(diag, idx(ii, nu - 1), cell * 0.5 * (g[:, nu - 1] + g_wall_hi) / h_u ** 2)

    B = (cell[:, None] * g).ravel()

    rows_all = np.concatenate(rows + [np.arange(n)])
    cols_all = np.concatenate(cols + [np.arange(n)])
    vals_all = np.concatenate(vals + [diag])
    A = _symmetrize_bitwise(_canonical_csr(rows_all, cols_all, vals_all, n))

    thr = (math.pi / (2 * a)) ** 2 if not periodic else math.inf
    thr_d = transverse_band_edge(2 * a, h_u) if not periodic else math.inf
    meta = {"kind": "curvilinear", "s": s, "u": u, "a": a, "S": S,
            "periodic": periodic, "L": L, "s_symmetry": s_symmetry}
    return GridOperator(A=A, B=B, h=(h_s, h_u), threshold=thr,
                        threshold_discrete=thr_d, shape=(ns, nu), meta=meta)


# ---------------------------------------------------------------------------
# masked Cartesian regions
# ---------------------------------------------------------------------------

def _edge_index(x: float, h: float, soft: tuple[float, ...], what: str) -> int:
    t = x / h
    k = round(t)
    if abs(t - k) > 1e-8 * max(1.0, abs(t)):
        if any(abs(x - s) <= 1e-9 * max(1.0, abs(s)) for s in soft):
            return int(k)       # truncation edge: snap to the nearest line
        raise GeometryError(f"{what} at {x} is not aligned with the grid (h={h})")
    return int(k)


def assemble_cartesian(domain: MaskedDomain, h: float) -> GridOperator:
    """Five-point Dirichlet Laplacian on a masked uniform grid.

    The lattice is anchored at the coordinate origin, so every physical edge
    (widths, slit lines, symmetry lines) must sit on a grid line; artificial
    truncation edges listed in ``soft_coords`` snap to the nearest line.
    B carries unit weights (halved on Neumann reflection lines so a sector
    solve reproduces the even part of the full problem exactly).  Slit lines
    keep Dirichlet values on both faces: the nodes on the line outside the
    open window intervals are simply excluded, which removes all coupling
    across the closed part.  A curved top wall w(x) is masked to the nearest
    grid line, an unbiased first-order treatment.  Curved predicates keep
    strictly-inside nodes (staircase).
    """
    if h <= 0:
        raise GeometryError("grid spacing must be positive")
    soft = tuple(domain.soft_coords)
    kboxes = []
    for (bx0, bx1, by0, by1) in domain.boxes:
        kboxes.append((_edge_index(bx0, h, soft, "box edge"),
                       _edge_index(bx1, h, soft, "box edge"),
                       _edge_index(by0, h, soft, "box edge"),
                       _edge_index(by1, h, soft, "box edge")))
    kx_min = min(b[0] for b in kboxes)
    kx_max = max(b[1] for b in kboxes)
    ky_min = min(b[2] for b in kboxes)
    ky_max = max(b[3] for b in kboxes)
    nx = kx_max - kx_min + 1
    ny = ky_max - ky_min + 1
    xs = h * np.arange(kx_min, kx_max + 1)
    ys = h * np.arange(ky_min, ky_max + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    KX, KY = np.meshgrid(np.arange(kx_min, kx_max + 1),
                         np.arange(ky_min, ky_max + 1), indexing="ij")

    neum_x = "xmin" in domain.neumann
    neum_y = "ymin" in domain.neumann
    # integer inclusion: interior strictly between edge indices; Neumann lines
    # keep their nodes
    KXp = np.where(neum_x & (KX == kx_min), KX + 1, KX) if neum_x else KX
    KYp = np.where(neum_y & (KY == ky_min), KY + 1, KY) if neum_y else KY

    keep = np.zeros((nx, ny), dtype=bool)
    for (a0, a1, b0, b1) in kboxes:
        keep |= (KXp > a0) & (KXp < a1) & (KYp > b0) & (KYp < b1)

    if domain.predicate is not None:
        keep &= np.asarray(domain.predicate(X, Y), dtype=bool)

    wall = None
    if domain.top_profile is not None:
        wall = np.asarray(domain.top_profile(xs), dtype=float)
        if domain.curved_boundary == "snap":
            # snap the wall to the nearest grid line (unbiased first-order mask)
            wall_idx = np.round(wall / h).astype(int)
            keep &= (np.arange(ky_min, ky_max + 1)[None, :] < wall_idx[:, None])
        else:
            # exact wall: keep strictly-inside nodes, cut legs handled below
            keep &= (ys[None, :] < wall[:, None] - 1e-12 * h)

    for (yline, windows) in domain.slits:
        j = _edge_index(yline, h, soft, "slit line") - ky_min
        if 0 <= j < ny:
            open_mask = np.zeros(nx, dtype=bool)
            for (wx0, wx1) in windows:
                open_mask |= (xs > wx0 + 1e-12) & (xs < wx1 - 1e-12)
            keep[:, j] &= open_mask

    if not keep.any():
        raise GeometryError("mask is empty at this grid spacing")

    index = -np.ones((nx, ny), dtype=np.int64)
    index[keep] = np.arange(int(keep.sum()))
    n = int(keep.sum())

    # edge weights: 1, halved for edges lying along a Neumann line
    on_xline = KX == kx_min
    on_yline = KY == ky_min

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    diag = np.zeros(n)
    inv_h2 = 1.0 / h ** 2

    def add_edges(di, dj, weight_mask):
        if di:
            a_idx = index[:-1, :][keep[:-1, :] & keep[1:, :]]
            b_idx = index[1:, :][keep[:-1, :] & keep[1:, :]]
            w = weight_mask[:-1, :][keep[:-1, :] & keep[1:, :]]
        else:
            a_idx = index[:, :-1][keep[:, :-1] & keep[:, 1:]]
            b_idx = index[:, 1:][keep[:, :-1] & keep[:, 1:]]
            w = weight_mask[:, :-1][keep[:, :-1] & keep[:, 1:]]
        wv = w * inv_h2
        rows.extend([a_idx, b_idx])
        cols.extend([b_idx, a_idx])
        vals.extend([-wv, -wv])
        np.add.at(diag, a_idx, wv)
        np.add.at(diag, b_idx, wv)

    w_x_edges = np.where(neum_y & on_yline, 0.5, 1.0)      # x-edges along y=y0
    w_y_edges = np.where(neum_x & on_xline, 0.5, 1.0)      # y-edges along x=x0
    add_edges(1, 0, w_x_edges)
    add_edges(0, 1, w_y_edges)

    # Dirichlet contributions: kept node with a missing neighbor
    for di, dj, wmask in ((1, 0, w_x_edges), (0, 1, w_y_edges)):
        if di:
            missing_hi = keep[:-1, :] & ~keep[1:, :]
            np.add.at(diag, index[:-1, :][missing_hi], wmask[:-1, :][missing_hi] * inv_h2)
            np.add.at(diag, index[-1, :][keep[-1, :]], wmask[-1, :][keep[-1, :]] * inv_h2)
            missing_lo = keep[1:, :] & ~keep[:-1, :]
            np.add.at(diag, index[1:, :][missing_lo], wmask[1:, :][missing_lo] * inv_h2)
            first = keep[0, :].copy()
            if neum_x:
                first &= ~on_xline[0, :]
            np.add.at(diag, index[0, :][first], wmask[0, :][first] * inv_h2)
        else:
            missing_hi = keep[:, :-1] & ~keep[:, 1:]
            np.add.at(diag, index[:, :-1][missing_hi], wmask[:, :-1][missing_hi] * inv_h2)
            np.add.at(diag, index[:, -1][keep[:, -1]], wmask[:, -1][keep[:, -1]] * inv_h2)
            missing_lo = keep[:, 1:] & ~keep[:, :-1]
            np.add.at(diag, index[:, 1:][missing_lo], wmask[:, 1:][missing_lo] * inv_h2)
            first = keep[:, 0].copy()
            if neum_y:
                first &= ~on_yline[:, 0]
            np.add.at(diag, index[:, 0][first], wmask[:, 0][first] * inv_h2)

    if wall is not None and domain.curved_boundary == "cut":
        # exact-wall Dirichlet legs: replace the unit leg of every wall-cut
        # edge by its true length (theta*h), a diagonal-only correction that
        # keeps A symmetric (Gibou-style linear boundary treatment)
        theta_min = 1e-3
        jj_all = np.arange(ky_min, ky_max + 1)
        # vertical cuts: top inside node under the wall of its own column
        jt = np.ceil(wall / h - 1e-12).astype(int) - 1 - ky_min
        ii_v = np.nonzero((jt >= 0) & (jt < ny - 1))[0]
        ok = keep[ii_v, jt[ii_v]] & ~keep[ii_v, jt[ii_v] + 1]
        ii_v = ii_v[ok]
        if len(ii_v):
            th = (wall[ii_v] - ys[jt[ii_v]]) / h
            th = np.clip(th, theta_min, 1.0)
            np.add.at(diag, index[ii_v, jt[ii_v]],
                      w_y_edges[ii_v, jt[ii_v]] * (1.0 / th - 1.0) * inv_h2)
        # horizontal cuts: neighbor column's wall dips below this node
        for di in (1, -1):
            src = np.arange(max(0, -di), nx - max(0, di))
            ngb = src + di
            Wsrc = wall[src][:, None]
            Wngb = wall[ngb][:, None]
            Yj = ys[None, :]
            cut = (keep[src, :] & ~keep[ngb, :]
                   & (Yj >= Wngb - 1e-12 * h) & (Yj < Wsrc - 1e-12 * h))
            si, sj = np.nonzero(cut)
            if len(si):
                t = (Wsrc[si, 0] - ys[sj]) / np.maximum(Wsrc[si, 0] - Wngb[si, 0], 1e-300)
                t = np.clip(t, theta_min, 1.0)
                np.add.at(diag, index[src[si], sj],
                          w_x_edges[src[si], sj] * (1.0 / t - 1.0) * inv_h2)

    bw = np.ones((nx, ny))
    if neum_x:
        bw[0, :] *= 0.5
    if neum_y:
        bw[:, 0] *= 0.5
    B = bw[keep]

    rows_all = np.concatenate(rows + [np.arange(n)])
    cols_all = np.concatenate(cols + [np.arange(n)])
    vals_all = np.concatenate(vals + [diag])
    A = _symmetrize_bitwise(_canonical_csr(rows_all, cols_all, vals_all, n))

    thr = domain.threshold
    thr_d = (transverse_band_edge(domain.threshold_width, h)
             if math.isfinite(thr) and domain.threshold_width > 0 else thr)
    meta = dict(domain.meta)
    meta.update({"xs": xs, "ys": ys, "keep": keep, "index": index,
                 "neumann": domain.neumann})
    return GridOperator(A=A, B=B, h=(h, h), threshold=thr, threshold_discrete=thr_d,
                        shape=(nx, ny), meta=meta)


# ---------------------------------------------------------------------------
# twisted-tube fiber operator
# ---------------------------------------------------------------------------

def assemble_twist_fiber(cross_section: MaskedDomain, beta: float, h: float) -> GridOperator:
    """Fiber operator h(0) = -Laplace_D^M + beta^2 (x2 d3 - x3 d2)^T (...)

    L is the 5-point Dirichlet Laplacian on the masked cross-section M and D
    a centered-difference discretization of the angular derivative
    x2 d/dx3 - x3 d/dx2 in the cross-section plane; assembling the twist term
    as D^T D keeps it symmetric positive semidefinite by construction.
    """
    if beta < 0:
        raise GeometryError("twist rate must be >= 0")
    base = assemble_cartesian(cross_section, h)
    if beta == 0.0:
        return GridOperator(A=base.A, B=base.B, h=base.h, threshold=base.threshold,
                            threshold_discrete=base.threshold_discrete,
                            shape=base.shape, meta={**base.meta, "beta": 0.0})
    keep = base.meta["keep"]
    index = base.meta["index"]
    xs, ys = base.meta["xs"], base.meta["ys"]
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    n = base.n
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []

    def stencil(sel_from, sel_to, coeff):
        r = index[sel_from]
        c = index[sel_to]
        rows.append(r)
        cols.append(c)
        vals.append(coeff)

    inv2h = 1.0 / (2.0 * h)
    # + x2 * du/dx3 (y-direction neighbors), coefficient +-x/(2h)
    m = keep[:, :-1] & keep[:, 1:]
    stencil(np.pad(m, ((0, 0), (0, 1))), np.pad(m, ((0, 0), (1, 0))),
            (X[:, :-1][m]) * inv2h)
    stencil(np.pad(m, ((0, 0), (1, 0))), np.pad(m, ((0, 0), (0, 1))),
            -(X[:, 1:][m]) * inv2h)
    # - x3 * du/dx2 (x-direction neighbors), coefficient -+y/(2h)
    m = keep[:-1, :] & keep[1:, :]
    stencil(np.pad(m, ((0, 1), (0, 0))), np.pad(m, ((1, 0), (0, 0))),
            -(Y[:-1, :][m]) * inv2h)
    stencil(np.pad(m, ((1, 0), (0, 0))), np.pad(m, ((0, 1), (0, 0))),
            (Y[1:, :][m]) * inv2h)

    D = _canonical_csr(np.concatenate(rows), np.concatenate(cols),
                       np.concatenate(vals), n)
    T = (D.T @ D).tocsr()
    A = _symmetrize_bitwise((base.A + beta * beta * T).tocsr())
    return GridOperator(A=A, B=base.B, h=base.h, threshold=base.threshold,
                        threshold_discrete=base.threshold_discrete,
                        shape=base.shape, meta={**base.meta, "beta": beta})


# ---------------------------------------------------------------------------
# one-dimensional reference operators
# ---------------------------------------------------------------------------

def assemble_interval(d: float, h: float) -> GridOperator:
    """Three-point Dirichlet chain on (0, d)."""
    ncell = max(2, int(round(d / h)))
    h = d / ncell
    n = ncell - 1
    main = np.full(n, 2.0 / h ** 2)
    off = np.full(n - 1, -1.0 / h ** 2)
    A = sp.diags([off, main, off], [-1, 0, 1], format="csr")
    A.sort_indices()
    return GridOperator(A=A, B=np.ones(n), h=(h,), threshold=math.inf,
                        threshold_discrete=math.inf, shape=(n,),
                        meta={"kind": "interval", "d": d})


def assemble_radial(R_outer: float, nu: int, n_cells: int, R_inner: float = 0.0) -> GridOperator:
    """Radial finite-volume operator for the disc/annulus angular mode nu.

    Solving -(r u')' + (nu^2/r) u = lambda r u with Dirichlet at the outer
    (and inner, if present) radius.  For the disc the center cell carries the
    exact zero-flux face at r = 0; modes with nu >= 1 vanish there and the
    center node is dropped.
    """
    if not R_outer > R_inner >= 0:
        raise GeometryError("need R_outer > R_inner >= 0")
    h = (R_outer - R_inner) / n_cells
    if R_inner > 0 or nu > 0:
        r = R_inner + h * np.arange(1, n_cells)        # interior nodes
        face_lo = r[0] - 0.5 * h                       # Dirichlet wall face
    else:
        r = h * np.arange(0, n_cells)                  # include the center node
        face_lo = 0.0                                  # zero-area face at r = 0
    n = len(r)
    # face radii: [inner wall, midpoints, outer wall], all at node midpoints
    faces = np.concatenate([[face_lo], 0.5 * (r[:-1] + r[1:]), [r[-1] + 0.5 * h]])
    w = faces / h ** 2
    diag = w[:-1] + w[1:]
    off = -w[1:-1]
    A = sp.diags([off, diag, off], [-1, 0, 1], format="csr")
    if nu > 0:
        A = (A + sp.diags(nu * nu / r)).tocsr()
    A.sort_indices()
    B = r.copy()
    if R_inner == 0.0 and nu == 0:
        B[0] = h / 8.0          # exact cell mass of the center control volume
    return GridOperator(A=A, B=B, h=(h,), threshold=math.inf,
                        threshold_discrete=math.inf, shape=(n,),
                        meta={"kind": "radial", "nu": nu, "R_inner": R_inner,
                              "R_outer": R_outer})


# ---------------------------------------------------------------------------
# dispatch + export
# ---------------------------------------------------------------------------

def assemble_domain(domain, h: float, h_s: Optional[float] = None) -> GridOperator:
    """Assemble whichever discretizable domain build_domain produced."""
    if isinstance(domain, CurvilinearDomain):
        hs = h if h_s is None else h_s
        return assemble_curvilinear(domain.gamma, domain.a, hs, h, S=domain.S,
                                    periodic=domain.periodic, L=domain.L,
                                    s_symmetry=domain.s_symmetry)
    if isinstance(domain, MaskedDomain):
        return assemble_cartesian(domain, h)
    if isinstance(domain, FiberDomain):
        return assemble_twist_fiber(domain.cross_section, domain.beta, h)
    raise GeometryError(f"cannot assemble {type(domain).__name__}")


def export_matrix_market(op: GridOperator, prefix: str) -> tuple[str, str]:
    """Write A and B in Matrix Market coordinate format for external checks."""
    from scipy.io import mmwrite

    a_path = f"{prefix}_A.mtx"
    b_path = f"{prefix}_B.mtx"
    mmwrite(a_path, op.A.tocoo(), symmetry="symmetric")
    mmwrite(b_path, sp.coo_matrix(sp.diags(op.B)), symmetry="symmetric")
    return a_path, b_path
