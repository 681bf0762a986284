"""Self-contained validation suite behind the `validate` CLI command.

Each check returns (name, passed, detail).  The suite cross-checks the
discretization and solver stack against the analytic oracles and the exact
structural invariants (symmetry, positive semidefiniteness, inertia
consistency, convergence order).  `corrupt=True` flips one off-diagonal
stiffness entry before the symmetry check and is used as a negative control
by the tests.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse.linalg as spla

from . import assemble as asm
from . import dirac
from . import eigensolve as es
from . import geometry as geo
from . import oracle

__all__ = ["run_suite"]


def _check_bessel() -> tuple[bool, str]:
    worst = 0.0
    for order, index in ((0.0, 1), (0.0, 2), (1.0, 1), (1.5, 1), (2.0, 1)):
        z = oracle.bessel_zero(order, index)
        worst = max(worst, abs(float(oracle.bessel_j(order, np.array([z]))[0])))
    b2, b3 = oracle.ppw_b2(), oracle.ppw_b3()
    ok = worst < 1e-10 and abs(b2 - 0.3939) < 5e-4 and abs(b3 - 0.4888) < 5e-4
    return ok, f"max |J(z)| = {worst:.2e}, b2 = {b2:.5f}, b3 = {b3:.5f}"


def _check_reference_shapes() -> tuple[bool, str]:
    msgs = []
    ok = True
    # rectangle pi x pi on a coarse grid, dense solve
    dom = geo.MaskedDomain(boxes=((0.0, math.pi, 0.0, math.pi),))
    op = asm.assemble_cartesian(dom, math.pi / 24)
    got = es.smallest_eigs(op, 4).eigenvalues
    ref = oracle.reference_spectrum(oracle.ReferenceShape(kind="rectangle",
                                                          a=math.pi, b=math.pi, count=4))
    err = float(np.max(np.abs(got - ref) / ref))
    ok &= err < 0.01
    msgs.append(f"rectangle err {err:.2e}")
    # interval
    op = asm.assemble_interval(2.0, 2.0 / 64)
    got = es.smallest_eigs(op, 2).eigenvalues
    ref = oracle.reference_spectrum(oracle.ReferenceShape(kind="interval", d=2.0, count=2))
    err = float(np.max(np.abs(got - ref) / ref))
    ok &= err < 0.005
    msgs.append(f"interval err {err:.2e}")
    # disc (radial scheme, first two modes of nu = 0)
    op = asm.assemble_radial(1.0, 0, 96)
    got = es.smallest_eigs(op, 1).eigenvalues
    err = abs(got[0] - oracle.bessel_zero(0, 1) ** 2) / got[0]
    ok &= err < 0.005
    msgs.append(f"disc err {err:.2e}")
    # annulus via the periodic loop strip
    prof = geo.constant_curvature(1.0, (0.0, 2 * math.pi))
    op = asm.assemble_curvilinear(prof, 0.5, 2 * math.pi / 128, 1 / 32,
                                  periodic=True, L=2 * math.pi)
    got = es.smallest_eigs(op, 1).eigenvalues
    ref = oracle.reference_spectrum(oracle.ReferenceShape(kind="annulus",
                                                          R_in=0.5, R_out=1.5, count=1))
    err = abs(got[0] - ref[0]) / ref[0]
    ok &= err < 0.005
    msgs.append(f"annulus err {err:.2e}")
    return ok, "; ".join(msgs)


def _check_symmetry(corrupt: bool) -> tuple[bool, str]:
    prof = geo.gaussian_bump(0.4, 1.0, 0.0)
    op = asm.assemble_curvilinear(prof, 1.0, 1 / 8, 1 / 8, S=12.0)
    A = op.A.tolil()
    if corrupt:
        A[0, 1] = A[0, 1] + 1e-3   # test hook: break one entry
    A = A.tocsr()
    asym = abs(A - A.T)
    worst = asym.max() if asym.nnz else 0.0
    return worst == 0.0, f"max |A - A^T| = {worst:.3e}"


def _check_psd() -> tuple[bool, str]:
    prof = geo.gaussian_bump(0.5, 1.0, 0.0)
    op = asm.assemble_curvilinear(prof, 1.0, 1 / 8, 1 / 8, S=12.0)
    norm = spla.norm(op.A, np.inf)
    neg = es.count_below(op, -1e-12 * norm)
    return neg == 0, f"negative pivots below -1e-12||A||: {neg}"


def _check_refinement_order() -> tuple[bool, str]:
    dom = geo.MaskedDomain(boxes=((0.0, math.pi, 0.0, math.pi),))
    errs = []
    for div in (12, 24, 48):
        op = asm.assemble_cartesian(dom, math.pi / div)
        lam = es.smallest_eigs(op, 1).eigenvalues[0]
        errs.append(abs(lam - 2.0))
    p1 = math.log2(errs[0] / errs[1])
    p2 = math.log2(errs[1] / errs[2])
    ok = abs(p1 - 2.0) < 0.4 and abs(p2 - 2.0) < 0.4
    return ok, f"observed orders {p1:.2f}, {p2:.2f}"


def _check_inertia_agreement() -> tuple[bool, str]:
    dom = geo.MaskedDomain(boxes=((0.0, math.pi, 0.0, math.pi),))
    op = asm.assemble_cartesian(dom, math.pi / 24)
    n6 = es.count_below(op, 6.0)
    n1 = es.count_below(op, 1.0)
    vals = es.smallest_eigs(op, 5).eigenvalues
    ok = (n6 == int((vals < 6.0).sum()) == 3) and n1 == 0
    mono = es.count_below(op, 9.0) >= n6 >= n1
    return ok and mono, f"count(6) = {n6}, count(1) = {n1}, monotone: {mono}"


def _check_curve_convergence() -> tuple[bool, str]:
    # quarter turn: the closed circle is exact by discrete trigonometric
    # orthogonality, so a partial arc is needed to expose the trapezoid order
    prof = geo.constant_curvature(1.0, (0.0, 2.0))
    errs = []
    for n in (250, 500, 1000):
        c = geo.reconstruct_curve(prof, (0.0, math.pi / 2), n)
        x, y = c.endpoint()
        errs.append(math.hypot(x - 1.0, y + 1.0))
    f1, f2 = errs[0] / errs[1], errs[1] / errs[2]
    ok = f1 >= 3.5 and f2 >= 3.5
    return ok, f"error reduction factors {f1:.2f}, {f2:.2f}"


def _check_mapping_algebra() -> tuple[bool, str]:
    u1 = dirac.UnitSystem(m=1.0, c=1.0, hbar=1.0)
    s = dirac.map_spectrum([3.0], threshold=9.0, units=u1)
    mirror_ok = s.mirror_pairs()[0][0] == -s.mirror_pairs()[0][1]
    two_ok = abs(s.discrete[0]["energy"] - 2.0) < 1e-14
    u2 = dirac.UnitSystem(m=0.5, c=1.0, hbar=1.0)
    scale = dirac.UnitSystem(m=1.0, c=1.0, hbar=2.0)
    hbar_ok = abs(scale.energy(3.0) - 2.0 * u2.energy(3.0)) < 1e-14
    ok = mirror_ok and two_ok and hbar_ok
    return ok, f"mirror {mirror_ok}, sqrt(3+1)=2 {two_ok}, hbar scaling {hbar_ok}"


def run_suite(corrupt: bool = False) -> list[dict]:
    """Run every oracle/invariant check; returns [{name, passed, detail}]."""
    checks = [
        ("bessel_zeros", lambda: _check_bessel()),
        ("reference_spectra_vs_fd", lambda: _check_reference_shapes()),
        ("stiffness_symmetry", lambda: _check_symmetry(corrupt)),
        ("positive_semidefinite", lambda: _check_psd()),
        ("refinement_order", lambda: _check_refinement_order()),
        ("inertia_vs_eigensolve", lambda: _check_inertia_agreement()),
        ("curve_reconstruction_order", lambda: _check_curve_convergence()),
        ("spectral_mapping_algebra", lambda: _check_mapping_algebra()),
    ]
    results = []
    for name, fn in checks:
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append({"name": name, "passed": bool(passed), "detail": detail})
    return results
