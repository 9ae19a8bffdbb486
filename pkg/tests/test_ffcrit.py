import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from ffgain.core import DomainError, wavelength
from ffgain.ffcrit import (FF_PHASE_LIMIT, approximation_ratio, criteria_table, d_ff_fourth_order,
                           d_ff_mil, d_ff_revised, d_ff_uno, d_fraunhofer, delta_phi_max,
                           path_difference, path_difference_exact, phase_budget, phase_error,
                           phase_total)

from conftest import D_F, D_P

LAM = wavelength(170e9)
size = st.floats(1e-4, 1.0)
lam_s = st.floats(1e-4, 0.3)

# published far-field distances at 170 GHz, centimeters
TABLE_I = {
    "P-P": (58.3, 58.3, 233.3, 116.7),
    "F-F": (8.1, 8.1, 32.3, 16.2),
    "P-F": (58.3, 33.2, 109.8, 66.4),
}


def _row(D1, D2):
    return (d_fraunhofer(max(D1, D2), LAM), d_ff_mil(D1, D2, LAM)[0], d_ff_uno(D1, D2, LAM),
            d_ff_revised(D1, D2, LAM))


@pytest.mark.parametrize("pair,dims", [("P-P", (D_P, D_P)), ("F-F", (D_F, D_F)), ("P-F", (D_P, D_F))])
def test_table_one_cells(pair, dims):
    got = np.array(_row(*dims)) * 100
    np.testing.assert_allclose(got, TABLE_I[pair], atol=0.05)


def test_table_one_unrounded_oracle():
    # independent high-precision evaluation with c = 299792458 m/s
    np.testing.assert_allclose(np.array(_row(D_P, D_P)) * 100,
                               [58.331886, 58.331886, 233.32754, 116.66377], rtol=1e-7)
    np.testing.assert_allclose(np.array(_row(D_P, D_F)) * 100,
                               [58.331886, 33.206265, 109.83415, 66.41253], rtol=1e-7)
    np.testing.assert_allclose(np.array(_row(D_F, D_F)) * 100,
                               [8.0806448, 8.0806448, 32.322579, 16.16129], rtol=1e-7)


def test_fraunhofer_examples():
    assert d_fraunhofer(LAM, LAM) == pytest.approx(2 * LAM, rel=1e-15)
    with pytest.raises(DomainError):
        d_fraunhofer(0.0, LAM)
    with pytest.raises(DomainError):
        d_fraunhofer(0.01, -1.0)


def test_fourth_order_examples():
    assert d_ff_fourth_order(0.02, 0.0, LAM) == pytest.approx(d_fraunhofer(0.02, LAM), rel=1e-15)
    assert d_ff_fourth_order(0.02, 0.02, LAM) == pytest.approx(2 * math.sqrt(2) * 0.02 ** 2 / LAM, rel=1e-15)
    assert d_ff_fourth_order(22.67e-3, 8.45e-3, LAM) == pytest.approx(0.588454, rel=1e-5)
    assert d_ff_fourth_order(D_P, D_F, LAM) == pytest.approx(0.588889, rel=1e-5)


def test_revised_degenerate_receiver():
    assert d_ff_revised(0.02, 0.0, LAM) == d_fraunhofer(0.02, LAM)
    with pytest.raises(DomainError):
        d_ff_revised(0.0, 0.0, LAM)


def test_mil_applicability():
    dist, ok = d_ff_mil(D_P, D_P, LAM)
    assert ok and dist == pytest.approx(d_fraunhofer(D_P, LAM), rel=1e-15)
    assert d_ff_mil(D_P, D_F, LAM)[1]
    assert d_ff_mil(1.0, 0.05, LAM)[1] is False


def test_path_and_phase_examples():
    assert path_difference(22.67e-3, 1.0) == pytest.approx(64.2411e-6, rel=1e-5)
    assert path_difference(0.0, 1.0) == 0.0
    assert phase_error(LAM / 16, LAM) == pytest.approx(math.pi / 8, rel=1e-15)
    assert phase_error(0.0, LAM) == 0.0
    assert phase_error(64.24e-6, 1.76348e-3) == pytest.approx(0.228883, rel=1e-5)
    with pytest.raises(DomainError):
        path_difference(0.01, 0.0)
    with pytest.raises(DomainError):
        phase_error(1e-5, 0.0)


def test_phase_total_single_aperture():
    assert phase_total(D_P, 0.0, LAM, 1.0) == pytest.approx(phase_error(path_difference(D_P, 1.0), LAM))


def test_threshold_identities():
    d_rev = d_ff_revised(D_P, D_F, LAM)
    assert delta_phi_max(D_P, D_F, LAM, d_rev) == pytest.approx(math.pi / 8, rel=1e-12)
    d4 = d_ff_fourth_order(D_P, D_F, LAM)
    assert phase_total(D_P, D_F, LAM, d4) == pytest.approx(math.pi / 8, rel=1e-12)


def test_delta_phi_max_examples():
    # midpoints of the three P-P clusters and of the 70-73 cm P-F cluster
    deg = [math.degrees(delta_phi_max(D_P, D_P, LAM, d)) for d in (1.015, 1.215, 1.615)]
    np.testing.assert_allclose(deg, [25.861, 21.604, 16.253], atol=1e-3)
    assert math.degrees(delta_phi_max(D_P, D_F, LAM, 0.715)) == pytest.approx(20.899, abs=1e-3)


def test_approximation_ratio_examples():
    assert approximation_ratio(0.01, 0.01) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert approximation_ratio(0.01, 0.0) == 1.0
    assert approximation_ratio(22.67e-3, 8.45e-3) == pytest.approx(1.128099, rel=1e-6)
    with pytest.raises(DomainError):
        approximation_ratio(0.0, 0.0)


def test_exact_path_difference_matches_binomial_far_out():
    D = 0.02
    for d in (1.0, 10.0, 100.0):
        exact = path_difference_exact(D, d)
        assert exact == pytest.approx(math.sqrt(d * d + (D / 2) ** 2) - d, rel=1e-6)
        assert exact == pytest.approx(path_difference(D, d), rel=(D / d) ** 2)


def test_phase_budget():
    b = phase_budget(D_P, D_P, LAM, 1.0)
    assert b.delta_r_max == pytest.approx(2 * b.delta_r)
    assert b.satisfies_ff is False
    assert phase_budget(D_P, D_P, LAM, d_ff_revised(D_P, D_P, LAM)).satisfies_ff
    assert b.delta_phi_max >= b.phi_total / math.sqrt(2) * (1 - 1e-12)


def test_criteria_table_keys():
    t = criteria_table(D_P, D_F, LAM)
    assert set(t) >= {"d_ff", "d_ff_mil", "d_ff_uno", "d_ff_rev", "mil_applicable", "d_ff_fourth_order"}


@given(size, size, lam_s)
def test_ordering_of_criteria(a, b, lam):
    mil = d_ff_mil(a, b, lam)[0]
    four = d_ff_fourth_order(a, b, lam)
    rev = d_ff_revised(a, b, lam)
    uno = d_ff_uno(a, b, lam)
    tol = 1e-12
    assert mil <= four * (1 + tol)
    assert four <= rev * (1 + tol)
    assert rev <= uno * (1 + tol)
    assert mil == pytest.approx(rev / 2, rel=1e-15)


@given(size, size)
def test_ratio_bounds(a, b):
    r = approximation_ratio(a, b)
    assert 1 - 1e-15 <= r <= math.sqrt(2) * (1 + 1e-15)


@given(size, size, lam_s, st.floats(0.1, 10.0))
def test_distances_scale_inverse_with_wavelength(a, b, lam, k):
    for fn in (d_ff_fourth_order, d_ff_revised, d_ff_uno):
        assert fn(a, b, lam * k) == pytest.approx(fn(a, b, lam) / k, rel=1e-12)


@given(size, size, lam_s, st.floats(0.01, 100.0), st.floats(0.1, 10.0))
def test_phases_scale_inverse_with_distance(a, b, lam, d, k):
    assert delta_phi_max(a, b, lam, d * k) == pytest.approx(delta_phi_max(a, b, lam, d) / k, rel=1e-12)
    assert phase_total(a, b, lam, d * k) == pytest.approx(phase_total(a, b, lam, d) / k, rel=1e-12)


@given(size, size, lam_s, st.floats(0.01, 100.0))
def test_symmetry(a, b, lam, d):
    assume(a != b)
    for fn in (d_ff_fourth_order, d_ff_revised, d_ff_uno):
        assert fn(a, b, lam) == fn(b, a, lam)
    assert d_ff_mil(a, b, lam) == d_ff_mil(b, a, lam)
    assert approximation_ratio(a, b) == approximation_ratio(b, a)
    assert delta_phi_max(a, b, lam, d) == delta_phi_max(b, a, lam, d)


@given(size, lam_s, st.floats(0.01, 100.0))
def test_equal_apertures_phase_identity(D, lam, d):
    b = phase_budget(D, D, lam, d)
    assert b.delta_phi_max == pytest.approx(b.phi_total * math.sqrt(2), rel=1e-12)
    assert b.phi_error >= 0 and b.delta_r >= 0
    assert b.satisfies_ff == (d >= d_ff_revised(D, D, lam) * (1 - 1e-9)) or abs(b.delta_phi_max - FF_PHASE_LIMIT) < 1e-9
