"""Shared domain types and unit conventions.

Power quantities are linear everywhere inside the package; dB only appears
at I/O and reporting boundaries. Distances are aperture-to-aperture in
meters, frequencies in Hz.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


class FFGainError(Exception):
    """Base class for all errors raised by ffgain."""


class ValidationError(FFGainError, ValueError):
    """Invalid input, configuration or file content (CLI exit code 1)."""


class DomainError(ValidationError):
    """Argument outside the mathematical domain of a formula."""


class MissingPairError(ValidationError):
    def __init__(self, pair, message=None):
        self.pair = pair
        super().__init__(message or f"missing antenna pair {pair_label(pair)}")


class NumericalError(FFGainError, ArithmeticError):
    """Numerical failure (CLI exit code 2)."""


def speed_of_light() -> float:
    """Speed of light in vacuum, m/s."""
    return SPEED_OF_LIGHT


def wavelength(frequency_hz):
    f = np.asarray(frequency_hz, dtype=float)
    if np.any(f <= 0):
        raise DomainError("frequency must be positive")
    lam = SPEED_OF_LIGHT / f
    return float(lam) if lam.ndim == 0 else lam


def to_db(power_linear):
    return 10.0 * np.log10(power_linear)


def from_db(power_db):
    return 10.0 ** (np.asarray(power_db, dtype=float) / 10.0)


def pair_key(a: str, b: str) -> tuple[str, str]:
    """Canonical (sorted) key for an unordered antenna pair."""
    if a == b:
        raise ValidationError(f"pair needs two distinct antennas, got {a!r} twice")
    return (a, b) if a < b else (b, a)


def pair_label(pair) -> str:
    return "-".join(pair)


class AntennaKind(str, enum.Enum):
    RECTANGULAR_HORN = "rectangular_horn"
    OPEN_WAVEGUIDE = "open_waveguide"


@dataclass(frozen=True)
class ApertureAntenna:
    """Rectangular aperture; for open waveguides the inner dimensions."""

    id: str
    aperture_width: float
    aperture_height: float
    kind: AntennaKind = AntennaKind.RECTANGULAR_HORN

    def __post_init__(self):
        if not self.id:
            raise ValidationError("antenna id must be non-empty")
        if not (self.aperture_width > 0 and self.aperture_height > 0):
            raise ValidationError(
                f"antenna {self.id!r}: aperture dimensions must be positive")
        object.__setattr__(self, "kind", AntennaKind(self.kind))

    @property
    def diagonal(self) -> float:
        return math.hypot(self.aperture_width, self.aperture_height)

    @property
    def area(self) -> float:
        return self.aperture_width * self.aperture_height

    @classmethod
    def from_diagonal(cls, id, diagonal, aspect=4 / 3, kind=AntennaKind.RECTANGULAR_HORN):
        """Build an aperture with a given diagonal and width/height ratio."""
        if diagonal <= 0 or aspect <= 0:
            raise ValidationError("diagonal and aspect must be positive")
        height = diagonal / math.sqrt(1.0 + aspect * aspect)
        return cls(id, aspect * height, height, kind)


@dataclass(frozen=True)
class FrequencyGrid:
    start_hz: float
    stop_hz: float
    count: int

    def __post_init__(self):
        if not self.start_hz > 0:
            raise ValidationError("grid start frequency must be positive")
        if not self.start_hz < self.stop_hz:
            raise ValidationError("grid start must be below stop")
        if int(self.count) != self.count or self.count < 2:
            raise ValidationError("grid needs at least 2 points")
        object.__setattr__(self, "count", int(self.count))

    @property
    def frequencies(self) -> np.ndarray:
        return np.linspace(self.start_hz, self.stop_hz, self.count)

    @property
    def wavelengths(self) -> np.ndarray:
        return SPEED_OF_LIGHT / self.frequencies

    @property
    def center_hz(self) -> float:
        return 0.5 * (self.start_hz + self.stop_hz)


@dataclass(frozen=True)
class Cluster:
    """Contiguous distance window; distance_m = start + pair_offset + m * step."""

    start_distance: float
    step: float
    count: int
    pair_offset: float = 0.0

    def __post_init__(self):
        if not self.step > 0:
            raise ValidationError("cluster step must be positive")
        if int(self.count) != self.count or self.count < 2:
            raise ValidationError("cluster needs at least 2 points")
        object.__setattr__(self, "count", int(self.count))
        if not self.start_distance + self.pair_offset > 0:
            raise ValidationError("cluster distances must be positive")

    @property
    def distances(self) -> np.ndarray:
        return self.start_distance + self.pair_offset + self.step * np.arange(self.count)

    @property
    def first(self) -> float:
        return self.start_distance + self.pair_offset

    @property
    def last(self) -> float:
        return self.first + self.step * (self.count - 1)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.first + self.last)

    def with_offset(self, offset: float) -> "Cluster":
        return Cluster(self.start_distance, self.step, self.count, offset)


@dataclass(frozen=True, eq=False)
class SweepTrace:
    """One pair's |S21| over (distance index m, frequency index f) for one run.

    ``s21`` holds linear magnitudes |S21| (not squared); ``phase`` is
    optional and in radians.
    """

    pair: tuple[str, str]
    run_index: int
    s21: np.ndarray
    distances: np.ndarray
    grid: FrequencyGrid
    phase: np.ndarray | None = None
    segment: int = 0
    cluster: Cluster | None = None

    def __post_init__(self):
        object.__setattr__(self, "pair", pair_key(*self.pair))
        s21 = np.array(self.s21, dtype=float)
        d = np.array(self.distances, dtype=float)
        if s21.ndim != 2:
            raise ValidationError("s21 must be a 2-D [distance, frequency] array")
        if d.ndim != 1 or d.shape[0] != s21.shape[0]:
            raise ValidationError(
                f"{len(d)} distances for {s21.shape[0]} s21 rows in {pair_label(self.pair)}")
        if s21.shape[1] != self.grid.count:
            raise ValidationError(
                f"s21 has {s21.shape[1]} frequency columns, grid has {self.grid.count}")
        if np.any(~np.isfinite(s21)) or np.any(s21 < 0):
            raise ValidationError("s21 magnitudes must be finite and non-negative")
        if np.any(d <= 0) or np.any(np.diff(d) <= 0):
            raise ValidationError("distances must be positive and strictly increasing")
        if self.run_index < 0 or self.segment < 0:
            raise ValidationError("run and segment indices must be non-negative")
        if self.cluster is not None and self.cluster.count != len(d):
            raise ValidationError("cluster count does not match number of distances")
        s21.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "s21", s21)
        object.__setattr__(self, "distances", d)
        if self.phase is not None:
            ph = np.array(self.phase, dtype=float)
            if ph.shape != s21.shape:
                raise ValidationError("phase shape must match s21")
            ph.flags.writeable = False
            object.__setattr__(self, "phase", ph)

    @property
    def power(self) -> np.ndarray:
        """|S21|^2, linear."""
        return self.s21 ** 2

    @property
    def shape(self) -> tuple[int, int]:
        return self.s21.shape

    def __eq__(self, other):
        if not isinstance(other, SweepTrace):
            return NotImplemented
        same_phase = (self.phase is None and other.phase is None) or (
            self.phase is not None and other.phase is not None
            and np.array_equal(self.phase, other.phase))
        return (self.pair == other.pair and self.run_index == other.run_index
                and self.segment == other.segment and self.grid == other.grid
                and self.cluster == other.cluster and same_phase
                and np.array_equal(self.s21, other.s21)
                and np.array_equal(self.distances, other.distances))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Campaign:
    """Three antennas and their three pairwise sweeps."""

    antennas: tuple[ApertureAntenna, ApertureAntenna, ApertureAntenna]
    traces: Mapping[tuple[str, str], Sequence[SweepTrace]]
    grid: FrequencyGrid

    def __post_init__(self):
        antennas = tuple(self.antennas)
        if len(antennas) != 3:
            raise ValidationError(f"a campaign needs exactly three antennas, got {len(antennas)}")
        ids = [a.id for a in antennas]
        if len(set(ids)) != 3:
            raise ValidationError(f"antenna ids must be unique: {ids}")
        traces = {}
        for key, runs in self.traces.items():
            k = pair_key(*key)
            if k in traces:
                raise ValidationError(f"pair {pair_label(k)} given twice")
            traces[k] = tuple(sorted(runs, key=lambda t: (t.segment, t.run_index)))
        expected = [pair_key(ids[0], ids[1]), pair_key(ids[0], ids[2]), pair_key(ids[1], ids[2])]
        for k in traces:
            if k not in expected:
                raise ValidationError(f"pair {pair_label(k)} does not belong to antennas {ids}")
        for k in expected:
            if k not in traces or not traces[k]:
                raise MissingPairError(k)
        layout = None
        for k in expected:
            this = []
            for t in traces[k]:
                if t.pair != k:
                    raise ValidationError(f"trace for {pair_label(t.pair)} filed under {pair_label(k)}")
                if t.grid != self.grid:
                    raise ValidationError(f"trace grid of {pair_label(k)} differs from campaign grid")
                this.append((t.segment, t.run_index, t.shape))
            if len(set((s, r) for s, r, _ in this)) != len(this):
                raise ValidationError(f"duplicate run index in {pair_label(k)}")
            if layout is None:
                layout = this
            elif this != layout:
                raise ValidationError(
                    f"pair {pair_label(k)} differs in run count or sweep shape from {pair_label(expected[0])}")
        object.__setattr__(self, "antennas", antennas)
        object.__setattr__(self, "traces", traces)

    @property
    def ids(self) -> tuple[str, str, str]:
        return tuple(a.id for a in self.antennas)

    @property
    def pairs(self) -> list[tuple[str, str]]:
        a, b, c = self.ids
        return [pair_key(a, b), pair_key(a, c), pair_key(b, c)]

    def antenna(self, id: str) -> ApertureAntenna:
        for a in self.antennas:
            if a.id == id:
                return a
        raise KeyError(id)

    @property
    def segments(self) -> list[int]:
        return sorted({t.segment for t in self.traces[self.pairs[0]]})

    def runs(self, pair, segment=None) -> list[SweepTrace]:
        runs = self.traces[pair_key(*pair)]
        if segment is None:
            segs = {t.segment for t in runs}
            if len(segs) > 1:
                raise ValidationError(
                    "campaign has several distance segments; pick one or stitch them")
            return list(runs)
        return [t for t in runs if t.segment == segment]

    @property
    def run_count(self) -> int:
        return len(self.runs(self.pairs[0], self.segments[0]))

    def __eq__(self, other):
        if not isinstance(other, Campaign):
            return NotImplemented
        return (self.antennas == other.antennas and self.grid == other.grid
                and self.traces.keys() == other.traces.keys()
                and all(list(self.traces[k]) == list(other.traces[k]) for k in self.traces))

    __hash__ = None


class SolveMethod(str, enum.Enum):
    CCM = "ccm"
    EXTRAPOLATION = "extrapolation"


@dataclass(frozen=True, eq=False)
class GainSolution:
    """Per-antenna realized gain (dB) and deviation per frequency."""

    frequencies: np.ndarray
    gain_db: Mapping[str, np.ndarray]
    sigma_f: Mapping[str, np.ndarray]
    method: SolveMethod = SolveMethod.CCM
    ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        ids = tuple(self.ids) or tuple(self.gain_db)
        if set(ids) != set(self.gain_db) or set(ids) != set(self.sigma_f):
            raise ValidationError("gain and sigma must cover the same antennas")
        for i in ids:
            g = np.asarray(self.gain_db[i], dtype=float)
            s = np.asarray(self.sigma_f[i], dtype=float)
            if g.shape != f.shape or s.shape != f.shape:
                raise ValidationError(f"antenna {i!r}: arrays must match the frequency count")
            if np.any(s[np.isfinite(s)] < 0):
                raise ValidationError("sigma_f must be non-negative")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "method", SolveMethod(self.method))
