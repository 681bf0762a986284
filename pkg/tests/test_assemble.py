import math

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from zigzaglab import assemble as asm
from zigzaglab import eigensolve as es
from zigzaglab import geometry as geo
from zigzaglab import oracle


def rectangle_domain(a=math.pi, b=math.pi):
    return geo.MaskedDomain(boxes=((0.0, a, 0.0, b),))


def all_test_operators():
    ops = [
        asm.assemble_curvilinear(geo.gaussian_bump(0.5, 1.0, 0.0), 1.0,
                                 1 / 8, 1 / 8, S=12.0),
        asm.assemble_curvilinear(geo.constant_curvature(1.0, (0.0, 2 * math.pi)),
                                 0.5, 2 * math.pi / 64, 1 / 16,
                                 periodic=True, L=2 * math.pi),
        asm.assemble_cartesian(geo.build_domain(geo.LShape(d=math.pi), S=8.0),
                               math.pi / 16),
        asm.assemble_cartesian(geo.build_domain(
            geo.CoupledStrips(d1=1.0, d2=1.0, ell=1.0), S=8.0), 1 / 8),
        asm.assemble_twist_fiber(geo.build_domain(
            geo.CrossSection2D(shape="ellipse", a=1.0, b=0.5)), 1.0, 1 / 16),
        asm.assemble_cartesian(geo.build_domain(
            geo.DeformedStrip(d=math.pi, f=geo.gaussian_bump(1.0, 1.0, 0.0),
                              beta=0.3), S=10.0, boundary="cut"), math.pi / 16),
    ]
    return ops


@pytest.mark.parametrize("idx", range(6))
def test_exact_symmetry(idx):
    op = all_test_operators()[idx]
    diff = abs(op.A - op.A.T)
    assert diff.nnz == 0 or diff.max() == 0.0
    assert np.all(op.B > 0)


@pytest.mark.parametrize("idx", range(6))
def test_positive_semidefinite(idx):
    op = all_test_operators()[idx]
    norm = spla.norm(op.A, np.inf)
    assert es.count_below(op, -1e-12 * norm) == 0


def test_zero_curvature_matches_cartesian_five_point():
    # gamma = 0 must reduce the curvilinear scheme to the plain 5-point pencil
    S, a, h = 4.0, 1.0, 1 / 8
    op1 = asm.assemble_curvilinear(geo.zero_curvature(), a, h, h, S=S)
    dom = geo.MaskedDomain(boxes=((-S, S, -a, a),))
    op2 = asm.assemble_cartesian(dom, h)
    assert op1.A.shape == op2.A.shape
    diff = abs(op1.A - op2.A)
    assert diff.max() < 1e-12 / h ** 2
    np.testing.assert_allclose(op1.B, op2.B)


def test_straight_strip_truncation_above_band_edge():
    op = asm.assemble_curvilinear(geo.zero_curvature(), 1.0, 1 / 32, 1 / 32, S=30.0)
    lam = es.smallest_eigs(op, 1).eigenvalues[0]
    assert lam >= (math.pi / 2) ** 2


def test_reflection_commutation_symmetric_bump():
    op = asm.assemble_curvilinear(geo.gaussian_bump(0.5, 1.0, 0.0), 1.0,
                                  1 / 8, 1 / 8, S=10.0)
    ns, nu = op.shape
    idx = np.arange(ns * nu).reshape(ns, nu)
    perm = idx[::-1, :].ravel()
    P = sp.csr_matrix((np.ones(ns * nu), (np.arange(ns * nu), perm)))
    diff = abs(P @ op.A @ P.T - op.A)
    assert diff.nnz == 0 or diff.max() == 0.0


def test_bent_strip_bound_state_exists_and_matches_dense():
    prof = geo.gaussian_bump(1.0, 1.0, 0.0, beta=0.5)
    op = asm.assemble_curvilinear(prof, 1.0, 1 / 32, 1 / 32, S=40.0)
    lam = es.smallest_eigs(op, 1).eigenvalues[0]
    assert lam < (math.pi / 2) ** 2
    # independent dense-matrix route on a coarse grid
    coarse = asm.assemble_curvilinear(prof, 1.0, 1 / 6, 1 / 6, S=14.0)
    dense = np.sort(np.linalg.eigvalsh(
        np.diag(1.0 / np.sqrt(coarse.B)) @ coarse.A.toarray()
        @ np.diag(1.0 / np.sqrt(coarse.B))))[0]
    sparse = es.smallest_eigs(coarse, 1).eigenvalues[0]
    assert sparse == pytest.approx(dense, rel=1e-10)
    assert dense < (math.pi / 2) ** 2


def test_rectangle_first_eigenvalue():
    op = asm.assemble_cartesian(rectangle_domain(), math.pi / 64)
    lam = es.smallest_eigs(op, 1).eigenvalues[0]
    assert abs(lam - 2.0) / 2.0 < 0.003


def test_closed_window_decouples():
    dom = geo.build_domain(geo.CoupledStrips(d1=1.0, d2=1.0, ell=0.0), S=6.0)
    op = asm.assemble_cartesian(dom, 1 / 8)
    ncomp, _ = sp.csgraph.connected_components(op.A, directed=False)
    assert ncomp == 2


def test_window_spans_expected_open_nodes():
    ell, h = 3.0, 1 / 32
    dom = geo.build_domain(geo.CoupledStrips(d1=1.0, d2=1.0, ell=ell), S=8.0)
    op = asm.assemble_cartesian(dom, h)
    keep = op.meta["keep"]
    ys = op.meta["ys"]
    j = int(np.argmin(np.abs(ys)))
    # open node columns strictly inside the window of round(ell/h) cells
    assert int(keep[:, j].sum()) == round(ell / h) - 1


def test_lshape_coarse_bracket():
    dom = geo.build_domain(geo.LShape(d=math.pi), S=30.0)
    op = asm.assemble_cartesian(dom, math.pi / 64)
    lam = es.smallest_eigs(op, 1).eigenvalues[0]
    assert 0.9 < lam < 1.0


def test_twist_zero_is_plain_laplacian():
    dom = geo.build_domain(geo.CrossSection2D(shape="disc", R=1.0))
    base = asm.assemble_cartesian(dom, 1 / 24)
    fib = asm.assemble_twist_fiber(dom, 0.0, 1 / 24)
    assert abs(fib.A - base.A).nnz == 0


def test_twist_disc_ground_state_radial():
    dom = geo.build_domain(geo.CrossSection2D(shape="disc", R=1.0))
    lam0 = es.smallest_eigs(asm.assemble_twist_fiber(dom, 0.0, 1 / 32), 1).eigenvalues[0]
    lam1 = es.smallest_eigs(asm.assemble_twist_fiber(dom, 0.7, 1 / 32), 1).eigenvalues[0]
    # the radial mode is annihilated by the angular derivative up to
    # discretization; the twist shift must be far below the masking error
    mask_err = abs(lam0 - oracle.bessel_zero(0, 1) ** 2)
    assert 0.0 <= lam1 - lam0 < 0.05 * mask_err


def test_twist_ellipse_strictly_raised():
    dom = geo.build_domain(geo.CrossSection2D(shape="ellipse", a=1.0, b=0.5))
    shifts = []
    for h in (1 / 24, 1 / 48):
        lam0 = es.smallest_eigs(asm.assemble_twist_fiber(dom, 0.0, h), 1).eigenvalues[0]
        lam1 = es.smallest_eigs(asm.assemble_twist_fiber(dom, 1.0, h), 1).eigenvalues[0]
        shifts.append(lam1 - lam0)
    est = abs(shifts[1] - shifts[0])
    assert shifts[1] > 10 * est


def test_refinement_order_two():
    errs = []
    for div in (16, 32):
        op = asm.assemble_cartesian(rectangle_domain(), math.pi / div)
        errs.append(abs(es.smallest_eigs(op, 1).eigenvalues[0] - 2.0))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)


def test_window_monotone_in_ell():
    h, S = 1 / 16, 10.0
    ops = [asm.assemble_cartesian(
        geo.build_domain(geo.CoupledStrips(d1=1.0, d2=1.0, ell=ell), S=S), h)
        for ell in (1.0, 2.0)]
    v1 = es.smallest_eigs(ops[0], 2).eigenvalues
    v2 = es.smallest_eigs(ops[1], 2).eigenvalues
    assert np.all(v2 <= v1 + 1e-10)


def test_deformed_strip_zero_beta_is_straight():
    f = geo.gaussian_bump(1.0, 1.0, 0.0)
    dom0 = geo.build_domain(geo.DeformedStrip(d=math.pi, f=f, beta=0.0), S=10.0)
    op0 = asm.assemble_cartesian(dom0, math.pi / 16)
    lam = es.smallest_eigs(op0, 1).eigenvalues[0]
    assert lam >= op0.threshold_discrete - 1e-10


def test_threshold_discrete_below_continuous():
    op = asm.assemble_curvilinear(geo.zero_curvature(), 1.0, 1 / 16, 1 / 16, S=10.0)
    assert op.threshold_discrete < op.threshold
    assert op.threshold_discrete == pytest.approx(
        asm.transverse_band_edge(2.0, 1 / 16))


def test_matrix_market_export(tmp_path):
    from scipy.io import mmread

    op = asm.assemble_interval(1.0, 1 / 16)
    pa, pb = asm.export_matrix_market(op, str(tmp_path / "iv"))
    A = mmread(pa).tocsr()
    B = mmread(pb).tocsr()
    assert abs(A - op.A).nnz == 0
    np.testing.assert_allclose(B.diagonal(), op.B)


def test_misaligned_physical_edge_rejected():
    dom = geo.MaskedDomain(boxes=((0.0, 1.0, 0.0, 1.0),))
    with pytest.raises(geo.GeometryError):
        asm.assemble_cartesian(dom, 0.3)


def test_radial_disc_second_order():
    exact = oracle.bessel_zero(0, 1) ** 2
    errs = []
    for n in (32, 64):
        op = asm.assemble_radial(1.0, 0, n)
        errs.append(abs(es.smallest_eigs(op, 1).eigenvalues[0] - exact))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)
