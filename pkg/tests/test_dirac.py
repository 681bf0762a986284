import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zigzaglab import dirac


def test_massless_mapping():
    s = dirac.map_spectrum([1.0], threshold=4.0, units=dirac.UnitSystem(m=0.0))
    assert s.discrete[0]["energy"] == pytest.approx(1.0, abs=1e-15)
    assert s.mirror_pairs()[0][0] == -1.0


def test_massive_mapping():
    s = dirac.map_spectrum([3.0], threshold=9.0,
                           units=dirac.UnitSystem(m=1.0, c=1.0))
    assert s.discrete[0]["energy"] == pytest.approx(2.0, abs=1e-14)
    assert s.flags["minus_rest_energy_not_eigenvalue"] is True


def test_multiplicity_factor_dimension():
    s2 = dirac.map_spectrum([1.0], threshold=4.0, dim=2)
    s3 = dirac.map_spectrum([1.0], threshold=4.0, dim=3)
    assert s2.discrete[0]["multiplicity"] == 1
    assert s3.discrete[0]["multiplicity"] == 2


def test_degenerate_cluster_multiplicity():
    s = dirac.map_spectrum([5.0, 5.0 * (1 + 1e-9)], threshold=9.0, dim=3)
    assert len(s.discrete) == 1
    assert s.discrete[0]["multiplicity"] == 4   # r * k = 2 * 2


def test_near_threshold_and_excluded():
    s = dirac.map_spectrum([1.0, 4.0 * (1 - 1e-8), 4.5], threshold=4.0)
    assert len(s.discrete) == 1
    assert len(s.near_threshold) == 1
    assert len(s.excluded) == 1
    assert s.excluded[0]["flag"] == "above_threshold"


def test_mapping_rejects_nonpositive():
    with pytest.raises(ValueError):
        dirac.map_spectrum([0.0], threshold=1.0)
    with pytest.raises(ValueError):
        dirac.map_spectrum([-1.0], threshold=1.0)


@settings(max_examples=40, deadline=None)
@given(lam=st.lists(st.floats(min_value=1e-3, max_value=50.0), min_size=1,
                    max_size=6),
       m=st.floats(min_value=0.0, max_value=3.0))
def test_mapping_properties(lam, m):
    units = dirac.UnitSystem(m=m, c=1.0)
    s = dirac.map_spectrum(lam, threshold=100.0, units=units)
    energies = s.positive_energies()
    # mirror exactness and ordering
    for lo, hi, _ in s.mirror_pairs():
        assert lo == -hi
    assert np.all(np.diff(energies) >= 0)
    # monotone in lambda and in m (positive branch), threshold above rest energy
    assert s.threshold_energy >= units.rest_energy
    heavier = dirac.UnitSystem(m=m + 0.5, c=1.0)
    s2 = dirac.map_spectrum(lam, threshold=100.0, units=heavier)
    assert np.all(s2.positive_energies() >= energies - 1e-12)


def test_hbar_scaling_identity():
    lam = 2.7
    e_hbar2 = dirac.UnitSystem(m=1.0, c=1.0, hbar=2.0).energy(lam)
    e_half_mass = dirac.UnitSystem(m=0.5, c=1.0, hbar=1.0).energy(lam)
    assert e_hbar2 == pytest.approx(2.0 * e_half_mass, rel=1e-15)


def test_monotone_in_lambda():
    u = dirac.UnitSystem(m=1.0)
    assert u.energy(2.0) < u.energy(2.0000001)


def test_essential_bands_strip():
    out = dirac.essential_bands("bent_strip", dirac.UnitSystem(m=0.0), d=math.pi)
    assert out["threshold_energy"] == pytest.approx(1.0)
    out = dirac.essential_bands("coupled_strips", dirac.UnitSystem(m=0.0),
                                d1=1.0, d2=2.0)
    assert out["threshold_laplacian"] == pytest.approx((math.pi / 2.0) ** 2)


def test_essential_bands_fiber_and_tube():
    out = dirac.essential_bands("twisted_tube_periodic", fiber_inf=6.1)
    assert out["threshold_energy"] == pytest.approx(math.sqrt(6.1))
    out = dirac.essential_bands("bent_tube", mu1=5.783)
    assert out["threshold_laplacian"] == 5.783


def test_layers_out_of_scope():
    with pytest.raises(dirac.UnsupportedGeometryError):
        dirac.essential_bands("curved_layer", d=1.0)


def test_ppw_bound_values():
    b = dirac.ppw_bound(2, 1, dirac.UnitSystem(m=0.0), a=0.5)
    assert b == pytest.approx(1.9717, abs=6e-4)     # sqrt(b2 * pi^2)
    b3 = dirac.ppw_bound(3, 1, dirac.UnitSystem(m=0.0), mu1=5.78319)
    assert b3 == pytest.approx(1.6813, abs=1e-3)    # sqrt(b3 * j01^2)


def test_ppw_bound_pair_count_algebra():
    u = dirac.UnitSystem(m=1.5, c=1.0)
    b1 = dirac.ppw_bound(2, 1, u, a=0.5)
    b2 = dirac.ppw_bound(2, 2, u, a=0.5)
    rest_sq = u.rest_energy ** 2
    assert (b2 ** 2 - rest_sq) == pytest.approx((b1 ** 2 - rest_sq) / 3.0,
                                                rel=1e-12)


def test_fichera_essential():
    out = dirac.fichera_essential(0.9291, dirac.UnitSystem(m=0.0))
    assert out["threshold_energy"] == pytest.approx(0.9639, abs=2e-4)
    assert dirac.fichera_essential(1.0)["threshold_energy"] == pytest.approx(1.0)
    out = dirac.fichera_essential(0.93, dirac.UnitSystem(m=2.0, c=1.0))
    assert out["threshold_energy"] == pytest.approx(math.sqrt(4.93), rel=1e-12)
    assert out["threshold_energy"] == pytest.approx(2.2204, abs=1e-4)


def test_spectrum_serializes_with_units():
    s = dirac.map_spectrum([1.0, 2.0], threshold=9.0,
                           units=dirac.UnitSystem(m=1.0, c=2.0, hbar=1.0))
    doc = json.loads(s.to_json())
    assert doc["units"] == {"m": 1.0, "c": 2.0, "hbar": 1.0}
    assert doc["essential_point"] == pytest.approx(4.0)


def test_loop_spectrum_all_discrete():
    s = dirac.map_spectrum([1.0, 2.0, 3.0], threshold=math.inf)
    assert len(s.discrete) == 3
    assert s.bands == ()
