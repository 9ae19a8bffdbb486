"""Repetition averaging, per-point gains and per-frequency deviation.

The reduction runs in three steps:

1. average the N repetition runs of every pair at each (m, f) point
   (``DatasetA``),
2. solve the three-antenna equations independently at every point
   (``DatasetB``),
3. take the standard deviation of each antenna's gain across the M points of
   the cluster at every frequency (``sigma_f``).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import (Campaign, GainSolution, MissingPairError, SolveMethod, SweepTrace,
                   ValidationError, pair_key, pair_label)
from .solver import PairGainProduct, PathLossMode, solve_three_antenna


class AverageDomain(str, enum.Enum):
    LINEAR = "linear"
    DB = "db"


class StdKind(str, enum.Enum):
    POPULATION = "population"
    SAMPLE = "sample"  # 1/(M-1)


@dataclass(frozen=True, eq=False)
class RunAverage:
    pair: tuple[str, str]
    power: np.ndarray
    distances: np.ndarray
    run_count: int


@dataclass(frozen=True, eq=False)
class DatasetA:
    """Run-averaged |S21|^2 (linear) per pair on the [m, f] grid."""

    slices: Mapping[tuple[str, str], RunAverage]
    frequencies: np.ndarray

    @property
    def run_count(self) -> int:
        return next(iter(self.slices.values())).run_count


@dataclass(frozen=True, eq=False)
class DatasetB:
    """Per-point gains in dB, ``[m, f]`` per antenna; NaN marks a gap."""

    gain_db: Mapping[str, np.ndarray]
    frequencies: np.ndarray

    @property
    def gaps(self) -> dict:
        return {i: ~np.isfinite(g) for i, g in self.gain_db.items()}


def average_runs(traces: Sequence[SweepTrace], domain=AverageDomain.LINEAR) -> RunAverage:
    """Mean of |S21|^2 over repetition runs of one pair.

    With ``domain="db"`` the runs are averaged in dB and converted back.
    """
    domain = AverageDomain(domain)
    traces = list(traces)
    if not traces:
        raise ValidationError("no runs to average")
    first = traces[0]
    for t in traces[1:]:
        if t.pair != first.pair:
            raise ValidationError(
                f"cannot average runs of different pairs {pair_label(first.pair)} and {pair_label(t.pair)}")
        if t.shape != first.shape:
            raise ValidationError(
                f"run {t.run_index} of {pair_label(t.pair)} has shape {t.shape}, expected {first.shape}")
        if not np.array_equal(t.distances, first.distances):
            raise ValidationError(f"run {t.run_index} of {pair_label(t.pair)} has different distances")
    stack = np.stack([t.power for t in traces])
    if domain is AverageDomain.LINEAR:
        mean = stack.mean(axis=0)
    else:
        with np.errstate(divide="ignore"):
            mean = 10 ** (np.mean(10 * np.log10(stack), axis=0) / 10)
    return RunAverage(first.pair, mean, first.distances, len(traces))


def dataset_a(campaign: Campaign, domain=AverageDomain.LINEAR, segment=None) -> DatasetA:
    slices = {}
    for pair in campaign.pairs:
        slices[pair] = average_runs(campaign.runs(pair, segment), domain)
    return DatasetA(slices, campaign.grid.frequencies)


def per_point_gains(data: DatasetA, wavelengths, mode=PathLossMode.EXACT, order=None) -> DatasetB:
    """Three-antenna gains at every (m, f) point; failures become NaN gaps."""
    lam = np.asarray(wavelengths, dtype=float)
    products = []
    for pair, sl in data.slices.items():
        if sl.power.shape[1] != lam.shape[-1]:
            raise ValidationError("wavelength count does not match the frequency axis")
        products.append(PairGainProduct.from_s21(pair, sl.power, sl.distances, lam))
    ids = sorted({i for p in data.slices for i in p})
    if len(ids) != 3:
        raise ValidationError(f"need a complete triangle of pairs, got {[pair_label(p) for p in data.slices]}")
    for key in (pair_key(ids[0], ids[1]), pair_key(ids[0], ids[2]), pair_key(ids[1], ids[2])):
        if key not in data.slices:
            raise MissingPairError(key)
    m = {sl.power.shape[0] for sl in data.slices.values()}
    if len(m) != 1:
        raise ValidationError("pairs have different numbers of measurement points")
    with np.errstate(divide="ignore", invalid="ignore"):
        gains = solve_three_antenna(products, mode, order=order, on_invalid="mask")
        gains_db = {i: 10 * np.log10(np.atleast_2d(g)) for i, g in gains.items()}
    return DatasetB(gains_db, data.frequencies)


def sigma_f(data: DatasetB, std=StdKind.POPULATION) -> dict:
    """Standard deviation over measurement points at each frequency, per antenna.

    Population form (divide by M) by default. Frequencies with fewer than two
    valid points come out as NaN.
    """
    ddof = 0 if StdKind(std) is StdKind.POPULATION else 1
    out = {}
    for i, g in data.gain_db.items():
        valid = np.isfinite(g)
        count = valid.sum(axis=0)
        filled = np.where(valid, g, 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = filled.sum(axis=0) / count
            sq = np.where(valid, (g - mean) ** 2, 0.0).sum(axis=0)
            s = np.sqrt(sq / (count - ddof))
        out[i] = np.where(count >= 2, s, np.nan)
    return out


def mean_gain_db(data: DatasetB) -> dict:
    out = {}
    for i, g in data.gain_db.items():
        valid = np.isfinite(g)
        with np.errstate(invalid="ignore"):
            out[i] = np.where(valid, g, 0.0).sum(axis=0) / valid.sum(axis=0)
    return out


def reduce_campaign(campaign: Campaign, mode=PathLossMode.EXACT, domain=AverageDomain.LINEAR,
                    std=StdKind.POPULATION, segment=None):
    """Full reduction of one campaign; returns ``(GainSolution, DatasetA, DatasetB)``."""
    a = dataset_a(campaign, domain, segment)
    b = per_point_gains(a, campaign.grid.wavelengths, mode, order=campaign.ids)
    sol = GainSolution(campaign.grid.frequencies, mean_gain_db(b), sigma_f(b, std),
                       SolveMethod.CCM, ids=campaign.ids)
    return sol, a, b


def gain_noise_std(sigma_db: float, runs: int) -> float:
    """Predicted per-point gain noise for independent per-pair dB noise.

    Each gain is half of (+P_xy + P_xz - P_yz), so the variance is 3/4 of one
    pair's run-averaged variance.
    """
    return np.sqrt(3.0) / 2.0 * sigma_db / np.sqrt(runs)


def _ripple_gains(amplitude, distances, ids, ripple_period):
    slices = {}
    for pair, d in distances.items():
        d = np.asarray(d, dtype=float)
        # Friis spreading at unit wavelength and unit gains, times the ripple
        power = (10 ** (amplitude * np.sin(2 * np.pi * d / ripple_period) / 10) / (4 * np.pi * d) ** 2)[:, None]
        slices[pair_key(*pair)] = RunAverage(pair_key(*pair), power, d, 1)
    return per_point_gains(DatasetA(slices, np.zeros(1)), np.ones(1), order=ids)


def tune_ripple_amplitude(target_db, distances: Mapping, ids, ripple_period,
                          noise_std_db=0.0, amplitudes=None):
    """Ripple amplitude (dB) whose predicted mean sigma_f is closest to ``target_db``.

    Brute-force scan of ``amplitudes`` (default 0 to 0.5 dB in 1e-4 dB
    steps). For each candidate the ripple-only per-point gains are pushed
    through :func:`per_point_gains` and :func:`sigma_f` and combined in
    quadrature with the predicted noise deviation.
    """
    if amplitudes is None:
        amplitudes = np.arange(0.0, 0.5, 1e-4)
    amplitudes = np.asarray(amplitudes, dtype=float)
    best, best_err = None, np.inf
    for amp in amplitudes:
        b = _ripple_gains(amp, distances, ids, ripple_period)
        ripple = np.array([s[0] for s in sigma_f(b).values()])
        predicted = np.mean(np.sqrt(ripple ** 2 + noise_std_db ** 2))
        err = abs(predicted - target_db)
        if err < best_err:
            best, best_err = round(float(amp), 12), err
    return best


class ThreeAntennaGain(BaseEstimator):
    """Estimator wrapper around the campaign reduction.

    ``fit`` takes a :class:`~ffgain.core.Campaign` and sets ``gain_db_``,
    ``sigma_f_``, ``dataset_a_``, ``dataset_b_`` and ``solution_``.
    ``transform`` returns the per-point gains of another campaign.
    """

    def __init__(self, mode="exact_pl", average_domain="linear", std="population", segment=None):
        self.mode = mode
        self.average_domain = average_domain
        self.std = std
        self.segment = segment

    def _validate_params(self):
        try:
            PathLossMode(self.mode)
            AverageDomain(self.average_domain)
            StdKind(self.std)
        except ValueError as exc:
            raise ValidationError(str(exc)) from None

    def fit(self, X: Campaign, y=None):
        self._validate_params()
        if not isinstance(X, Campaign):
            raise ValidationError("ThreeAntennaGain.fit expects a Campaign")
        sol, a, b = reduce_campaign(X, self.mode, self.average_domain, self.std, self.segment)
        self.solution_ = sol
        self.dataset_a_ = a
        self.dataset_b_ = b
        self.gain_db_ = dict(sol.gain_db)
        self.sigma_f_ = dict(sol.sigma_f)
        self.antenna_ids_ = X.ids
        return self

    def transform(self, X: Campaign) -> DatasetB:
        check_is_fitted(self)
        a = dataset_a(X, self.average_domain, self.segment)
        return per_point_gains(a, X.grid.wavelengths, self.mode, order=X.ids)

    def fit_transform(self, X, y=None):
        return self.fit(X).dataset_b_
