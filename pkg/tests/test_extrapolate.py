import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from ffgain.core import ApertureAntenna, Cluster, FrequencyGrid, SweepTrace, ValidationError
from ffgain.extrapolate import (ExtrapolationFit, InverseDistanceRegressor, RankDeficientError,
                                SpanRatioWarning, StitchGapError, deembedded_db,
                                extrapolate_campaign, extrapolated_three_antenna,
                                fit_inverse_distance, smoothing_window, span_ratio, stitch_clusters)
from ffgain.linksim import CouplingModel, asymptotic_gain_product_db, synthesize_campaign, true_gains_db

from conftest import D_P

GRID = FrequencyGrid(150e9, 170e9, 3)


def _trace_from_db(gp_db, d, grid=GRID, segment=0):
    """Trace whose de-embedded gain product is ``gp_db(d)`` (dB) at every frequency."""
    d = np.asarray(d, dtype=float)
    lam = grid.wavelengths
    y = np.broadcast_to(np.asarray(gp_db(d), dtype=float)[:, None], (len(d), grid.count))
    s21_db = y - 20 * np.log10(4 * np.pi * d[:, None] / lam[None, :])
    return SweepTrace(("A", "B"), 0, 10 ** (s21_db / 20), d, grid, segment=segment)


def _segments(shift_db=0.0):
    f = lambda d: 50 - 0.02 / d + 0.003 / d ** 2
    a = _trace_from_db(f, np.linspace(0.35, 0.85, 101))
    b = _trace_from_db(lambda d: f(d) + shift_db, np.linspace(0.80, 1.30, 101), segment=1)
    c = _trace_from_db(f, np.linspace(1.25, 1.75, 101), segment=2)
    return a, b, c


def test_stitch_consistent_segments():
    a, b, _ = _segments()
    s = stitch_clusters([a, b])
    assert len(s.distances) == 101 + 101 - 11
    np.testing.assert_allclose(deembedded_db(s), deembedded_db(_trace_from_db(
        lambda d: 50 - 0.02 / d + 0.003 / d ** 2, s.distances)), atol=1e-9)


def test_stitch_removes_constant_step():
    a, b, c = _segments(shift_db=0.2)
    s = stitch_clusters([a, b, c])
    ref = _trace_from_db(lambda d: 50 - 0.02 / d + 0.003 / d ** 2, s.distances)
    assert np.max(np.abs(deembedded_db(s) - deembedded_db(ref))) < 0.005


def test_stitch_span_ratio_three_segments():
    s = stitch_clusters(_segments())
    assert span_ratio(s.distances) == pytest.approx(5.0, rel=1e-12)


def test_stitch_gap_is_reported():
    a, _, c = _segments()
    with pytest.raises(StitchGapError) as exc:
        stitch_clusters([a, c])
    lo, hi = exc.value.interval
    assert lo == pytest.approx(0.85) and hi == pytest.approx(1.25)


def test_stitch_is_order_independent():
    a, b, c = _segments(shift_db=0.13)
    ref = deembedded_db(stitch_clusters([a, b, c]))
    for order in ([c, a, b], [b, c, a], [c, b, a]):
        np.testing.assert_allclose(deembedded_db(stitch_clusters(order)), ref, atol=1e-9)


def test_fit_pure_friis():
    t = _trace_from_db(lambda d: np.full_like(d, 47.3), np.linspace(0.35, 1.75, 141))
    fit = fit_inverse_distance(t, order=2)
    np.testing.assert_allclose(fit.asymptote_gain_product_db, 47.3, atol=1e-9)
    np.testing.assert_allclose(fit.coefficients[1:], 0.0, atol=1e-8)


def test_fit_constructed_polynomial():
    t = _trace_from_db(lambda d: 50 - 0.02 / d, np.linspace(0.35, 1.75, 141))
    fit = fit_inverse_distance(t, order=2)
    np.testing.assert_allclose(fit.coefficients[0], 50.0, atol=1e-6)
    np.testing.assert_allclose(fit.coefficients[1], -0.02, atol=1e-6)
    assert fit.span_ratio == pytest.approx(5.0)
    assert np.all(fit.rms_residual_db >= 0)


def test_rank_deficient_design():
    with pytest.raises(RankDeficientError):
        InverseDistanceRegressor(order=2, min_span_ratio=0).fit(np.full(6, 1.0), np.ones(6))


def test_span_ratio_warning():
    d = np.linspace(1.0, 1.5, 20)
    with pytest.warns(SpanRatioWarning):
        InverseDistanceRegressor(order=1).fit(d, 3 + 1 / d)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        InverseDistanceRegressor(order=1).fit(np.linspace(1.0, 4.0, 20), np.ones(20))


def test_regressor_is_a_sklearn_estimator():
    reg = InverseDistanceRegressor(order=3, window=1)
    assert clone(reg).get_params() == {"order": 3, "window": 1, "min_span_ratio": 3.0}
    d = np.linspace(0.5, 2.5, 40)
    y = 10 + 0.5 / d - 0.1 / d ** 2
    reg.fit(d[:, None], y)
    np.testing.assert_allclose(reg.predict(d[:, None]), y, atol=1e-10)
    assert reg.score(d[:, None], y) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        InverseDistanceRegressor(order=7).fit(d, y)
    with pytest.raises(ValidationError):
        InverseDistanceRegressor().fit(d, y[:-1])


def test_smoothing_window_counts_points_per_period():
    assert smoothing_window(2e-4, 0.9516e-3) == 5
    assert smoothing_window(5e-3, 0.9516e-3) == 1


def test_smoothing_suppresses_ripple():
    d = np.arange(0.35, 1.75 + 1e-9, 2e-4)
    period = 0.95e-3
    y = 40 - 0.01 / d + 0.05 * np.sin(2 * np.pi * d / period)
    w = smoothing_window(2e-4, period)
    raw = InverseDistanceRegressor(order=2).fit(d, y)
    smooth = InverseDistanceRegressor(order=2, window=w).fit(d, y)
    assert abs(smooth.intercept_ - 40) < abs(raw.intercept_ - 40) + 1e-12
    assert abs(smooth.intercept_ - 40) < 0.005


def test_extrapolated_three_antenna_sensitivity():
    f = np.array([1.0])
    base = {("A", "B"): 50.0, ("A", "C"): 45.0, ("B", "C"): 44.0}

    def fits(bump=0.0):
        return [ExtrapolationFit(p, np.zeros(3), np.array([v + (bump if p == ("A", "B") else 0)]),
                                 np.zeros(1), 5.0, f) for p, v in base.items()]

    g0 = extrapolated_three_antenna(fits(), order=("A", "B", "C"))
    np.testing.assert_allclose([g0["A"][0], g0["B"][0], g0["C"][0]], [25.5, 24.5, 19.5], atol=1e-12)
    g1 = extrapolated_three_antenna(fits(0.06), order=("A", "B", "C"))
    np.testing.assert_allclose([g1[k][0] - g0[k][0] for k in "ABC"], [0.03, 0.03, -0.03], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0), st.integers(0, 1000))
def test_fit_scale_equivariance(s, seed):
    rng = np.random.default_rng(seed)
    d = np.linspace(0.35, 1.75, 60)
    y = 30 - 0.05 / d + 0.01 / d ** 2 + rng.normal(0, 0.01, d.size)
    a = InverseDistanceRegressor(order=2).fit(d, y).coef_
    b = InverseDistanceRegressor(order=2).fit(d * s, y).coef_
    np.testing.assert_allclose(b, a * np.array([1, s, s * s]), rtol=1e-7, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000))
def test_higher_order_never_fits_worse(seed):
    rng = np.random.default_rng(seed)
    d = np.linspace(0.35, 1.75, 50)
    y = 30 - 0.05 / d + rng.normal(0, 0.02, d.size)
    res = [InverseDistanceRegressor(order=k).fit(d, y).rms_residual_ for k in range(1, 5)]
    assert all(r2 <= r1 + 1e-12 for r1, r2 in zip(res, res[1:]))


def test_oracle_asymptote_within_tolerance():
    p = ApertureAntenna.from_diagonal("A", D_P)
    q = ApertureAntenna.from_diagonal("B", D_P)
    r = ApertureAntenna.from_diagonal("C", 8.441e-3)
    grid = FrequencyGrid(160e9, 170e9, 2)
    segs = [Cluster(lo, 5e-3, 101) for lo in (0.35, 0.80, 1.25)]
    camp = synthesize_campaign((p, q, r), {("A", "B"): segs, ("A", "C"): segs, ("B", "C"): segs},
                               grid, CouplingModel())
    sol, fits = extrapolate_campaign(camp, order=2)
    for fit in fits:
        a1, a2 = camp.antenna(fit.pair[0]), camp.antenna(fit.pair[1])
        oracle = [asymptotic_gain_product_db(a1, a2, f) for f in grid.frequencies]
        np.testing.assert_allclose(fit.asymptote_gain_product_db, oracle, atol=0.05)
        assert fit.span_ratio == pytest.approx(5.0)
    truth = true_gains_db(camp.antennas, grid)
    for k in camp.ids:
        np.testing.assert_allclose(sol.gain_db[k], truth[k], atol=0.05)
        assert np.all(np.isnan(sol.sigma_f[k]))
