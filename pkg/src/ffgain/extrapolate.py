"""Extrapolation cross-check: fit the de-embedded link gain in powers of 1/d.

After removing free-space spreading, the apparent gain product of a pair
behaves like ``a0 + a1/d + a2/d^2 + ...`` in dB; the constant term is the
infinite-distance gain product. Wide sweeps are usually acquired as several
overlapping segments, which are stitched first.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.ndimage import uniform_filter1d
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .core import (GainSolution, NumericalError, SolveMethod, SweepTrace, ValidationError,
                   pair_label)
from .solver import PairGainProduct, PathLossMode, solve_three_antenna

MIN_SPAN_RATIO = 3.0
_DISTANCE_ATOL = 1e-9


class StitchGapError(ValidationError):
    def __init__(self, lo, hi, message=None):
        self.interval = (lo, hi)
        super().__init__(message or f"segments do not overlap: gap between {lo:.6g} m and {hi:.6g} m")


class RankDeficientError(NumericalError):
    pass


class SpanRatioWarning(UserWarning):
    pass


def _power_db(trace: SweepTrace):
    with np.errstate(divide="ignore"):
        return 20 * np.log10(trace.s21)


def stitch_clusters(segments: Sequence[SweepTrace], min_overlap=2) -> SweepTrace:
    """Join overlapping distance segments of one pair into a single trace.

    Segments are ordered by starting distance, so input order does not
    matter. Each segment after the first gets a per-frequency dB offset,
    the least-squares (mean) difference to the already stitched data on
    the shared distances; shared points are then averaged in dB.
    """
    segments = sorted(segments, key=lambda t: (t.distances[0], t.distances[-1]))
    if not segments:
        raise ValidationError("nothing to stitch")
    base = segments[0]
    for s in segments[1:]:
        if s.pair != base.pair:
            raise ValidationError(f"cannot stitch {pair_label(s.pair)} onto {pair_label(base.pair)}")
        if s.grid != base.grid:
            raise ValidationError("segments have different frequency grids")

    dist = base.distances.copy()
    acc = _power_db(base)
    weight = np.ones(len(dist))
    for seg in segments[1:]:
        y = _power_db(seg)
        idx_new, idx_old = _match(seg.distances, dist)
        if len(idx_new) < min_overlap:
            lo = dist[-1]
            hi = seg.distances[0]
            if hi <= lo:
                raise StitchGapError(lo, hi, f"segments starting at {seg.distances[0]:.6g} m overlap "
                                     f"by {len(idx_new)} shared points, need {min_overlap}")
            raise StitchGapError(lo, hi)
        offset = np.mean(acc[idx_old] - y[idx_new], axis=0)
        y = y + offset
        acc[idx_old] = (acc[idx_old] * weight[idx_old, None] + y[idx_new]) / (weight[idx_old, None] + 1)
        weight[idx_old] += 1
        fresh = np.setdiff1d(np.arange(len(seg.distances)), idx_new)
        dist = np.concatenate([dist, seg.distances[fresh]])
        acc = np.concatenate([acc, y[fresh]])
        weight = np.concatenate([weight, np.ones(len(fresh))])
        order = np.argsort(dist, kind="stable")
        dist, acc, weight = dist[order], acc[order], weight[order]
    return SweepTrace(base.pair, base.run_index, 10 ** (acc / 20), dist, base.grid,
                      segment=0, cluster=None)


def _match(new, old):
    """Indices of distances present in both sorted arrays (within 1 nm)."""
    pos = np.searchsorted(old, new)
    idx_new, idx_old = [], []
    for i, (p, d) in enumerate(zip(pos, new)):
        for q in (p - 1, p):
            if 0 <= q < len(old) and abs(old[q] - d) <= _DISTANCE_ATOL:
                idx_new.append(i)
                idx_old.append(q)
                break
    return np.array(idx_new, dtype=int), np.array(idx_old, dtype=int)


def span_ratio(distances) -> float:
    d = np.asarray(distances, dtype=float)
    return float(d.max() / d.min())


class InverseDistanceRegressor(RegressorMixin, BaseEstimator):
    """Least-squares fit of ``y(d) = a0 + a1/d + ... + aK/d^K``.

    ``X`` holds distances (shape ``(n,)`` or ``(n, 1)``), ``y`` one or more
    dB columns with free-space loss already removed. ``coef_`` has shape
    ``(order + 1,)`` or ``(order + 1, n_outputs)``; ``intercept_`` is ``a0``.

    Parameters
    ----------
    order : int
        Highest power of 1/d, 1 to 4.
    window : int
        Boxcar length (points) used to smooth ``y`` and ``1/d`` before
        fitting; 1 disables smoothing.
    min_span_ratio : float
        Below this d_max/d_min a :class:`SpanRatioWarning` is emitted.
    """

    def __init__(self, order=2, window=1, min_span_ratio=MIN_SPAN_RATIO):
        self.order = order
        self.window = window
        self.min_span_ratio = min_span_ratio

    def _design(self, inv_d):
        return np.vander(inv_d, self.order + 1, increasing=True)

    def fit(self, X, y, sample_weight=None):
        if int(self.order) != self.order or not 0 <= self.order <= 4:
            raise ValidationError(f"order must be an integer in 0..4, got {self.order}")
        if int(self.window) != self.window or self.window < 1:
            raise ValidationError("window must be a positive integer")
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        try:
            X, y = check_X_y(X, y, multi_output=True, y_numeric=True)
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        if X.shape[1] != 1:
            raise ValidationError("X must hold a single distance column")
        d = X[:, 0]
        if np.any(d <= 0):
            raise ValidationError("distances must be positive")
        n = len(d)
        if n < self.order + 2:
            raise ValidationError(f"need at least {self.order + 2} points for order {self.order}, got {n}")
        self.span_ratio_ = span_ratio(d)
        if self.span_ratio_ < self.min_span_ratio:
            warnings.warn(f"distance span ratio {self.span_ratio_:.2f} is below "
                          f"{self.min_span_ratio:g}; the extrapolation is weakly conditioned",
                          SpanRatioWarning, stacklevel=2)
        single = y.ndim == 1
        Y = y[:, None] if single else y
        inv_d = 1.0 / d
        w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        if w.shape != (n,) or np.any(w < 0):
            raise ValidationError("sample_weight must be non-negative with one entry per point")
        if self.window > 1:
            if self.window > n:
                raise ValidationError("smoothing window longer than the data")
            inv_d = uniform_filter1d(inv_d, self.window, mode="nearest")
            Y = uniform_filter1d(Y, self.window, axis=0, mode="nearest")
        A = self._design(inv_d)
        sw = np.sqrt(w)
        # scale columns so the rank test is not fooled by 1/d^K magnitudes
        scale = np.linalg.norm(A * sw[:, None], axis=0)
        if np.any(scale == 0):
            raise RankDeficientError("design matrix has an all-zero column")
        coef, _, rank, _ = np.linalg.lstsq(A * sw[:, None] / scale, Y * sw[:, None], rcond=None)
        if rank < self.order + 1:
            raise RankDeficientError(
                f"design matrix rank {rank} < {self.order + 1}; distances too few or degenerate")
        coef = coef / scale[:, None]
        resid = Y - A @ coef
        self.coef_ = coef[:, 0] if single else coef
        self.intercept_ = self.coef_[0]
        self.rms_residual_ = np.sqrt(np.average(resid ** 2, axis=0, weights=w if w.sum() > 0 else None))
        if single:
            self.rms_residual_ = float(self.rms_residual_[0])
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = check_array(X, ensure_2d=False)
        if X.ndim == 2 and X.shape[1] != 1:
            raise ValidationError("X must hold a single distance column")
        d = X.ravel()
        return self._design(1.0 / d) @ self.coef_


@dataclass(frozen=True, eq=False)
class ExtrapolationFit:
    pair: tuple[str, str]
    coefficients: np.ndarray
    asymptote_gain_product_db: np.ndarray
    rms_residual_db: np.ndarray
    span_ratio: float
    frequencies: np.ndarray


def deembedded_db(trace: SweepTrace, wavelengths=None):
    """|S21|^2 in dB plus free-space loss 20 log10(4 pi d / lambda): apparent gain product."""
    lam = trace.grid.wavelengths if wavelengths is None else np.broadcast_to(
        np.asarray(wavelengths, dtype=float), (trace.grid.count,))
    return _power_db(trace) + 20 * np.log10(4 * np.pi * trace.distances[:, None] / lam[None, :])


def smoothing_window(step, ripple_period) -> int:
    """Boxcar length in points covering one ripple period."""
    return max(1, int(round(ripple_period / step)))


def fit_inverse_distance(trace: SweepTrace, wavelengths=None, order=2, window=1,
                         sample_weight=None) -> ExtrapolationFit:
    """Fit every frequency column of a (stitched) trace in powers of 1/d."""
    y = deembedded_db(trace, wavelengths)
    if not np.all(np.isfinite(y)):
        raise ValidationError(f"trace {pair_label(trace.pair)} has zero magnitudes")
    reg = InverseDistanceRegressor(order=order, window=window)
    reg.fit(trace.distances, y, sample_weight=sample_weight)
    return ExtrapolationFit(trace.pair, reg.coef_, reg.coef_[0], np.atleast_1d(reg.rms_residual_),
                            reg.span_ratio_, trace.grid.frequencies)


def extrapolated_three_antenna(fits: Sequence[ExtrapolationFit], order=None) -> dict:
    """Per-antenna gains (dB) from the three fitted asymptotes."""
    products = [PairGainProduct(f.pair, 10 ** (np.asarray(f.asymptote_gain_product_db) / 10), 1.0)
                for f in fits]
    gains = solve_three_antenna(products, PathLossMode.EXACT, order=order)
    return {i: 10 * np.log10(g) for i, g in gains.items()}


def extrapolate_campaign(campaign, order=2, window=1):
    """Average runs, stitch segments and fit each pair; returns ``(GainSolution, fits)``."""
    from .stats import average_runs

    fits = []
    for pair in campaign.pairs:
        segs = []
        for s in campaign.segments:
            avg = average_runs(campaign.runs(pair, s))
            segs.append(SweepTrace(pair, 0, np.sqrt(avg.power), avg.distances, campaign.grid, segment=s))
        stitched = stitch_clusters(segs) if len(segs) > 1 else segs[0]
        fits.append(fit_inverse_distance(stitched, order=order, window=window))
    gains = extrapolated_three_antenna(fits, order=campaign.ids)
    nan = {i: np.full(campaign.grid.count, np.nan) for i in campaign.ids}
    sol = GainSolution(campaign.grid.frequencies, gains, nan, SolveMethod.EXTRAPOLATION, ids=campaign.ids)
    return sol, fits


@dataclass(frozen=True)
class MethodComparison:
    antenna_id: str
    ccm_offset_db: float
    extrapolation_offset_db: float
    method_difference_db: float


def compare_methods(ccm: GainSolution, extrapolated: GainSolution, reference_db: dict):
    """Mean absolute offset of each method from a reference gain, per antenna.

    ``reference_db`` maps antenna id to reference gain (dB) on the same
    frequency grid, e.g. the analytic aperture gains of a synthetic campaign.
    """
    if not np.array_equal(ccm.frequencies, extrapolated.frequencies):
        raise ValidationError("the two solutions use different frequency grids")
    out = []
    for i in ccm.ids:
        if i not in extrapolated.gain_db or i not in reference_db:
            raise ValidationError(f"antenna {i!r} missing from one of the solutions")
        g1 = np.asarray(ccm.gain_db[i])
        g2 = np.asarray(extrapolated.gain_db[i])
        ref = np.asarray(reference_db[i])
        out.append(MethodComparison(i, float(np.nanmean(np.abs(g1 - ref))),
                                    float(np.nanmean(np.abs(g2 - ref))),
                                    float(np.nanmean(np.abs(g1 - g2)))))
    return out
