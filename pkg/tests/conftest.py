import math
import time

import numpy as np
import pytest

from zigzaglab import assemble as asm
from zigzaglab import asymptotics as asym
from zigzaglab import eigensolve as es
from zigzaglab import geometry as geo


@pytest.fixture(scope="session")
def lshape_run():
    """L-shaped strip of width pi: three-grid solve plus pair count."""
    t0 = time.time()
    dom = geo.build_domain(geo.LShape(d=math.pi), S=30.0)
    results = []
    for div in (64, 128, 256):
        op = asm.assemble_cartesian(dom, math.pi / div)
        results.append(es.smallest_eigs(op, 1, tol=5e-4))
    ex = es.extrapolate(*results)
    elapsed = time.time() - t0
    # observed pair count from the second grid (cheap, bandwidth-limited)
    op = asm.assemble_cartesian(dom, math.pi / 128)
    pair = es.smallest_eigs(op, 2)
    n_pairs = int((pair.eigenvalues < op.threshold_discrete).sum())
    return {"eps1": float(ex.extrapolated["values"][0]),
            "orders": ex.extrapolated["observed_order"],
            "levels": [float(r.eigenvalues[0]) for r in results],
            "elapsed": elapsed, "pairs": n_pairs,
            "threshold": op.threshold}


@pytest.fixture(scope="session")
def cross_run():
    """Crossed strips of width pi: even-even and odd-odd sector triples."""
    t0 = time.time()
    out = {}
    for sector in ("ee", "oo"):
        dom = geo.build_domain(geo.Cross(d=math.pi), S=30.0, sector=sector)
        results = []
        for div in (64, 128, 256):
            op = asm.assemble_cartesian(dom, math.pi / div)
            results.append(es.smallest_eigs(op, 1, tol=5e-4))
        ex = es.extrapolate(*results)
        out[sector] = {"value": float(ex.extrapolated["values"][0]),
                       "levels": [float(r.eigenvalues[0]) for r in results],
                       "orders": ex.extrapolated["observed_order"],
                       "threshold": op.threshold}
    out["elapsed"] = time.time() - t0
    # observed pair count (even-even sector holds the only bound state)
    dom = geo.build_domain(geo.Cross(d=math.pi), S=30.0, sector="ee")
    op = asm.assemble_cartesian(dom, math.pi / 128)
    pair = es.smallest_eigs(op, 2)
    out["pairs"] = int((pair.eigenvalues < op.threshold_discrete).sum())
    return out


@pytest.fixture(scope="session")
def bent_sweep():
    """Gaussian bend, fixed grid and truncation across the whole sweep.

    A common S keeps the numerical floor a smooth function of beta, so the
    series deviation dominates the trend; S is sized for the smallest beta.
    """
    gam = geo.gaussian_bump(1.0, 1.0, 0.0)
    a = 1.0
    S = 900.0
    betas = (0.5, 0.4, 0.3, 0.25, 0.2)
    rows = []
    t0 = time.time()
    for beta in betas:
        pred = asym.bent_strip_series(gam, a, beta, n_max=20)
        op = asm.assemble_curvilinear(gam.with_beta(beta), a, 1 / 16, 1 / 32,
                                      S=S, s_symmetry="even")
        sigma = op.threshold_discrete - 2.0 * pred.value ** 2
        r = es.smallest_eigs(op, 2, sigma=sigma)
        gap = op.threshold_discrete - r.eigenvalues[0]
        kappa = math.sqrt(max(gap, 0.0))
        n_below = int((r.eigenvalues < op.threshold_discrete).sum())
        rows.append({"beta": beta, "kappa": kappa, "pred": pred.value,
                     "gap": gap, "n_below": n_below,
                     "lambda1": float(r.eigenvalues[0]),
                     "threshold": op.threshold})
    return {"rows": rows, "a": a, "elapsed": time.time() - t0}
