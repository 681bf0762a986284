import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zigzaglab import asymptotics as asym
from zigzaglab import geometry as geo
from zigzaglab import oracle


def test_transverse_overlap_closed_form():
    # quadrature oracle on int u chi_1 chi_n du over (-a, a)
    for a in (1.0, 0.7):
        u = np.linspace(-a, a, 40001)
        chi1 = np.sin(math.pi * (u + a) / (2 * a)) / math.sqrt(a)
        for n in (2, 3, 4, 6):
            chin = np.sin(n * math.pi * (u + a) / (2 * a)) / math.sqrt(a)
            quad = np.trapezoid(u * chi1 * chin, u)
            assert asym.transverse_overlap(n, a) == pytest.approx(quad, abs=1e-10)
    assert asym.transverse_overlap(2, 1.0) == pytest.approx(-32.0 / (9 * math.pi ** 2),
                                                            rel=1e-12)
    assert asym.transverse_overlap(2, 1.0) == pytest.approx(-0.360250, abs=5e-6)
    assert asym.transverse_overlap(3, 1.0) == 0.0
    assert asym.transverse_overlap(5, 1.0) == 0.0


def test_bent_strip_series_structure():
    gam = geo.gaussian_bump(1.0, 1.0, 0.0)
    p = asym.bent_strip_series(gam, 1.0, 0.3, n_max=12)
    # correction subtracts squares times positive weights
    assert 0.0 < p.value <= p.details["leading"]
    terms = [t["term"] for t in p.details["terms"]]
    assert all(t >= 0.0 for t in terms)
    nonzero = [t for t in terms if t > 0]
    assert nonzero == sorted(nonzero, reverse=True)   # magnitudes decreasing
    with pytest.raises(ValueError):
        asym.bent_strip_series(gam, 1.0, 0.3, n_max=1)


def test_bent_strip_series_invariances():
    gam = geo.gaussian_bump(1.0, 1.0, 0.0)
    shifted = geo.gaussian_bump(1.0, 1.0, 3.0)
    flipped = geo.gaussian_bump(-1.0, 1.0, 0.0)
    v0 = asym.bent_strip_series(gam, 1.0, 0.3).value
    assert asym.bent_strip_series(shifted, 1.0, 0.3).value == pytest.approx(v0, rel=1e-7)
    assert asym.bent_strip_series(flipped, 1.0, 0.3).value == pytest.approx(v0, rel=1e-12)
    # beta^2 scaling is exact algebra
    assert asym.bent_strip_series(gam, 1.0, 0.6).value == pytest.approx(4 * v0, rel=1e-12)


def test_bent_strip_series_nmax_monotone():
    gam = geo.gaussian_bump(1.0, 1.0, 0.0)
    vals = [asym.bent_strip_series(gam, 1.0, 0.3, n_max=n).value
            for n in (2, 4, 8, 16)]
    assert all(vals[i + 1] <= vals[i] + 1e-15 for i in range(len(vals) - 1))


def test_bent_tube_series_disc():
    basis = oracle.disc_eigenbasis(1.0, 8, nr=40, ntheta=48)
    gam = geo.gaussian_bump(1.0, 1.0, 0.0)
    tau0 = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    p = asym.bent_tube_series(gam, tau0, basis, 0.1, n_max=6)
    # leading term matches the strip algebra; correction smaller than leading
    assert p.details["leading"] == pytest.approx(0.01 / 8 * math.sqrt(math.pi / 2), rel=1e-6)
    assert 0.0 < p.value <= p.details["leading"]
    assert abs(p.details["leading"] - p.value) < p.details["leading"]
    # with zero torsion, purely radial modes drop out by angular orthogonality
    for t in p.details["terms"]:
        mu_n = p.details["mu"][t["n"] - 1]
        # radial modes of the disc are the nu=0 Bessel levels
        if abs(mu_n - oracle.bessel_zero(0, 2) ** 2) < 1e-6:
            assert abs(t["term"]) < 1e-12
    # beta = 0 gives zero prediction
    assert asym.bent_tube_series(gam, tau0, basis, 0.0).value == 0.0


def test_bent_tube_series_rejects_bad_order():
    basis = oracle.disc_eigenbasis(1.0, 4, nr=24, ntheta=32)
    import dataclasses

    scrambled = dataclasses.replace(basis, mu=np.array([5.78, 5.78, 5.78, 5.78]))
    gam = geo.gaussian_bump(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        asym.bent_tube_series(gam, lambda s: 0 * np.asarray(s), scrambled, 0.1)


def test_critical_constant():
    c = asym.critical_smoothness_bound()
    assert c == pytest.approx(24.0 / (9.0 + math.sqrt(117.0 + 48.0 * math.pi ** 2)),
                              rel=1e-15)
    assert c == pytest.approx(0.7206, abs=2e-4)


def test_deformed_strip_predictions():
    f = geo.gaussian_bump(1.0 / math.sqrt(math.pi), 1.0, 0.0)   # mean 1
    p = asym.deformed_strip_prediction(f, math.pi, 0.1)
    assert p.details["gap_oracle"] == pytest.approx(0.01 / math.pi ** 2, rel=1e-6)
    assert p.details["gap_paper_literal"] == pytest.approx(
        0.01 * math.pi ** 4 / math.pi ** 2, rel=1e-6)
    assert p.details["gap_paper_literal_flag"] == "dimensionally_suspect"
    assert p.details["verdict"] == "exists"
    # beta = 0: both gaps vanish
    p0 = asym.deformed_strip_prediction(f, math.pi, 0.0)
    assert p0.details["gap_oracle"] == 0.0 and p0.details["gap_paper_literal"] == 0.0


def test_deformed_strip_negative_mean_empty():
    f = geo.gaussian_bump(-1.0, 1.0, 0.0)
    p = asym.deformed_strip_prediction(f, math.pi, 0.2)
    assert p.details["verdict"] == "empty"


def test_deformed_strip_critical_verdicts():
    smooth = geo.ricker_bump(1.0, 2.5, 0.0)     # ratio 0.4 < bound
    p = asym.deformed_strip_prediction(smooth, math.pi, 0.1)
    assert p.details["verdict"] == "critical_exists"
    assert p.details["critical_ratio"] == pytest.approx(2.5 / 2.5 ** 2, rel=1e-6)
    sharp = geo.ricker_bump(1.0, 0.9, 0.0)      # ratio 3.09 > bound
    p = asym.deformed_strip_prediction(sharp, math.pi, 0.1)
    assert p.details["verdict"] == "critical_indeterminate"


def test_layer_weak_coupling_bulged():
    g = asym.Gaussian2D(amplitude=1.0 / (2 * math.pi), width=1.0)   # mean 1
    p = asym.layer_weak_coupling(g, a=math.pi / 2, beta=0.1)
    assert p.details["f_mean"] == pytest.approx(1.0, rel=1e-12)
    assert p.details["w_bulged"] == pytest.approx(-0.1 * math.pi / math.pi ** 2,
                                                  rel=1e-12)
    # gap = exp(2/w) = exp(-20 pi)
    assert p.details["gap_bulged"] == pytest.approx(math.exp(-20 * math.pi),
                                                    rel=1e-9)


def test_layer_weak_coupling_curved_properties():
    g = asym.Gaussian2D(amplitude=0.8, width=1.2)
    p = asym.layer_weak_coupling(g, a=0.5, beta=0.2)
    assert all(t["term"] <= 0.0 for t in p.details["terms"])
    assert p.details["w_curved"] < 0.0
    assert 0.0 < p.details["gap_curved_unscaled"] < 1.0
    # beta^2 scaling of w is exact
    p2 = asym.layer_weak_coupling(g, a=0.5, beta=0.4)
    assert p2.details["w_curved"] == pytest.approx(4 * p.details["w_curved"],
                                                   rel=1e-12)


def test_layer_weak_coupling_degenerate():
    g = asym.Gaussian2D(amplitude=0.0, width=1.0)
    p = asym.layer_weak_coupling(g, a=0.5, beta=0.3)
    assert p.details["degenerate"] is True


def test_layer_fft_path_matches_analytic():
    g = asym.Gaussian2D(amplitude=0.8, width=1.2)
    p1 = asym.layer_weak_coupling(g, a=0.5, beta=0.2)
    p2 = asym.layer_weak_coupling(lambda x, y: g(x, y), a=0.5, beta=0.2,
                                  grid_n=512, grid_extent=14.0)
    assert p2.details["w_curved"] == pytest.approx(p1.details["w_curved"], rel=1e-3)


def test_window_count_values():
    wc = asym.window_count(1.0, 1.0, 3.0)
    assert wc["floor_term"] == 2 and wc["per_sign"] == (2, 3)
    assert wc["total"] == (4, 6)
    assert asym.window_count(1.0, 1.0, 1e-9)["per_sign"] == (1, 2)
    # very asymmetric: sqrt(1 - (1+rho)^-2) -> 0
    assert asym.window_count(1.0, 1e-6, 5.0)["per_sign"] == (1, 2)


@settings(max_examples=40, deadline=None)
@given(ell1=st.floats(min_value=0.01, max_value=20.0),
       ell2=st.floats(min_value=0.01, max_value=20.0))
def test_window_count_monotone(ell1, ell2):
    lo, hi = sorted((ell1, ell2))
    a = asym.window_count(1.0, 0.7, lo)["per_sign"]
    b = asym.window_count(1.0, 0.7, hi)["per_sign"]
    assert b[0] >= a[0] and b[1] >= a[1]


def test_power_law_fit_exact():
    x = np.array([0.05, 0.1, 0.15, 0.2])
    out = asym.power_law_fit(x, 3 * x ** 4)
    assert out["exponent"] == pytest.approx(4.0, abs=1e-10)
    assert out["half_width"] <= 1e-10
    assert out["coefficient"] == pytest.approx(3.0, rel=1e-9)


def test_power_law_fit_perturbed():
    x = np.linspace(0.05, 0.2, 6)
    out = asym.power_law_fit(x, x ** 4 * (1 + x))
    assert 4.0 < out["exponent"] < 4.3


def test_power_law_fit_errors_and_exclusion():
    with pytest.raises(ValueError):
        asym.power_law_fit([0.1, 0.2], [1.0, 2.0])
    out = asym.power_law_fit([0.1, 0.2, 0.3, 0.4, 0.5],
                             [-1e-9, 1.6e-3, 8.1e-3, 2.56e-2, 6.25e-2])
    assert out["excluded"] == [0]
    assert out["n_points"] == 4
