"""Campaign configuration: a TOML document validated by pydantic models.

Lengths and frequencies may carry a unit suffix (``"22.679 mm"``,
``"170 GHz"``); bare numbers are SI (meters, Hz). Everything is normalized
to SI at load time. Unknown keys are rejected at every level.
"""
from __future__ import annotations

import math
import re
from decimal import Decimal
import sys
from importlib import resources
from pathlib import Path
from typing import Annotated, Any, Optional

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator
from pydantic import ValidationError as _PydanticError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import (AntennaKind, ApertureAntenna, Cluster, FrequencyGrid, ValidationError,
                   pair_key, wavelength)
from .linksim import CouplingModel
from .solver import PathLossMode
from .stats import AverageDomain, StdKind

PRESETS = ("config1", "config2", "config3")

# decimal exponents, so "5.0646 mm" gives the double nearest 0.0050646
_UNITS = {
    "length": {"m": 0, "cm": -2, "mm": -3, "um": -6},
    "frequency": {"hz": 0, "khz": 3, "mhz": 6, "ghz": 9, "thz": 12},
}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)\s*$")


def parse_quantity(value, dimension: str) -> float:
    """``"3 cm"`` -> 0.03; plain numbers pass through as SI."""
    if isinstance(value, bool):
        raise ValueError(f"expected a {dimension}, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"expected a {dimension}, got {value!r}")
    m = _QUANTITY.match(value)
    if not m:
        raise ValueError(f"cannot read {dimension} {value!r}")
    number, unit = m.groups()
    if not unit:
        return float(number)
    exponent = _UNITS[dimension].get(unit.lower())
    if exponent is None:
        raise ValueError(f"unknown {dimension} unit {unit!r} in {value!r}")
    return float(Decimal(number).scaleb(exponent))


Length = Annotated[float, BeforeValidator(lambda v: parse_quantity(v, "length"))]
Frequency = Annotated[float, BeforeValidator(lambda v: parse_quantity(v, "frequency"))]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelSpec(_Strict):
    label: str
    width: Length = Field(gt=0)
    height: Length = Field(gt=0)
    kind: AntennaKind = AntennaKind.RECTANGULAR_HORN


class AntennaSpec(_Strict):
    model: str


class GridSpec(_Strict):
    start: Frequency = Field(gt=0)
    stop: Frequency = Field(gt=0)
    count: int = Field(ge=2)

    @model_validator(mode="after")
    def _order(self):
        if not self.start < self.stop:
            raise ValueError("grid start must be below stop")
        return self


class ClusterSpec(_Strict):
    starts: list[Length] = Field(min_length=1)
    step: Length = Field(gt=0)
    count: int = Field(ge=2)


class SolverSpec(_Strict):
    mode: PathLossMode = PathLossMode.EXACT


class StatsSpec(_Strict):
    average_domain: AverageDomain = AverageDomain.LINEAR
    std: StdKind = StdKind.POPULATION


class SimulatorSpec(_Strict):
    kernel: str = "aperture"
    aperture_field: str = "uniform"
    method: str = "reduced"
    quadrature_points_per_wavelength: float = 2.0
    include_ripple: bool = False
    ripple_amplitude_db: float = Field(0.05, ge=0)
    ripple_period: Optional[Length] = None
    target_sigma_f_db: Optional[float] = Field(None, gt=0)
    noise_sigma_db: float = Field(0.1, ge=0)
    runs: int = Field(6, ge=1)
    seed: int = 1


class ExtrapolationSpec(_Strict):
    order: int = Field(2, ge=1, le=4)
    segments: list[tuple[Length, Length]] = Field(min_length=1)
    step: Length = Field(gt=0)
    smoothing: bool = True


class ReportSpec(_Strict):
    frequency: Frequency = Field(170e9, gt=0)


class CampaignConfig(_Strict):
    name: str = "campaign"
    models: dict[str, ModelSpec]
    antennas: dict[str, AntennaSpec]
    grid: GridSpec
    clusters: ClusterSpec
    offsets: dict[str, Length] = {}
    solver: SolverSpec = SolverSpec()
    stats: StatsSpec = StatsSpec()
    simulator: SimulatorSpec = SimulatorSpec()
    extrapolation: ExtrapolationSpec
    report: ReportSpec = ReportSpec()

    @model_validator(mode="after")
    def _references(self):
        if len(self.antennas) != 3:
            raise ValueError(f"exactly three antennas are required, got {len(self.antennas)}")
        for aid, spec in self.antennas.items():
            if spec.model not in self.models:
                raise ValueError(f"antenna {aid!r} references unknown model {spec.model!r}")
        labels = [m.label for m in self.models.values()]
        if len(set(labels)) != len(labels):
            raise ValueError("model labels must be unique")
        for key in self.offsets:
            parts = key.split("-")
            if len(parts) != 2 or not set(parts) <= set(labels):
                raise ValueError(f"offset key {key!r} must be 'X-Y' with model labels from {labels}")
        seen = {}
        for key in self.offsets:
            k = tuple(sorted(key.split("-")))
            if k in seen:
                raise ValueError(f"offsets {seen[k]!r} and {key!r} describe the same pair")
            seen[k] = key
        # fail fast on the derived objects too
        self.coupling_model()
        self.extrapolation_segments()
        return self

    # -- derived domain objects

    def model_for(self, antenna_id: str) -> ModelSpec:
        return self.models[self.antennas[antenna_id].model]

    def antenna_objects(self) -> tuple[ApertureAntenna, ...]:
        out = []
        for aid, spec in self.antennas.items():
            m = self.models[spec.model]
            out.append(ApertureAntenna(aid, m.width, m.height, m.kind))
        return tuple(out)

    def frequency_grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.grid.start, self.grid.stop, self.grid.count)

    def offset(self, label_a: str, label_b: str) -> float:
        for key, value in self.offsets.items():
            if sorted(key.split("-")) == sorted((label_a, label_b)):
                return value
        return 0.0

    def pairs(self) -> list[tuple[str, str]]:
        a, b, c = self.antennas
        return [pair_key(a, b), pair_key(a, c), pair_key(b, c)]

    def pair_offset(self, pair) -> float:
        return self.offset(self.model_for(pair[0]).label, self.model_for(pair[1]).label)

    def pair_models(self, pair) -> str:
        """``"P to F"`` style label of a pair's model combination."""
        la, lb = self.model_for(pair[0]).label, self.model_for(pair[1]).label
        order = [m.label for m in self.models.values()]
        la, lb = sorted((la, lb), key=order.index)
        return f"{la} to {lb}"

    def cluster_table(self) -> dict:
        """``{pair: [Cluster per configured start]}`` with per-pair offsets applied."""
        c = self.clusters
        return {p: [Cluster(s, c.step, c.count, self.pair_offset(p)) for s in c.starts]
                for p in self.pairs()}

    def extrapolation_segments(self) -> dict:
        e = self.extrapolation
        out = {}
        for p in self.pairs():
            segs = []
            for lo, hi in e.segments:
                n = int(round((hi - lo) / e.step)) + 1
                if n < 2 or not math.isclose(lo + (n - 1) * e.step, hi, rel_tol=0, abs_tol=1e-9):
                    raise ValidationError(f"segment {lo}-{hi} m is not a whole number of {e.step} m steps")
                segs.append(Cluster(lo, e.step, n, self.pair_offset(p)))
            out[p] = segs
        return out

    def coupling_model(self, seed=None) -> CouplingModel:
        s = self.simulator
        return CouplingModel(aperture_field=s.aperture_field,
                             quadrature_points_per_wavelength=s.quadrature_points_per_wavelength,
                             include_ripple=s.include_ripple,
                             ripple_amplitude_db=s.ripple_amplitude_db,
                             ripple_period=s.ripple_period,
                             noise_sigma_db=s.noise_sigma_db,
                             seed=s.seed if seed is None else int(seed),
                             kernel=s.kernel, method=s.method)

    def ripple_period(self) -> float:
        return self.simulator.ripple_period or wavelength(self.frequency_grid().center_hz) / 2


# ---------------------------------------------------------------- loading

def _set_path(doc: dict, dotted: str, value):
    keys = dotted.split(".")
    if not all(keys):
        raise ValidationError(f"bad override key {dotted!r}")
    node = doc
    for k in keys[:-1]:
        nxt = node.setdefault(k, {})
        if not isinstance(nxt, dict):
            raise ValidationError(f"override {dotted!r}: {k!r} is not a table")
        node = nxt
    node[keys[-1]] = value


def parse_override(text: str):
    """``"a.b=value"`` -> ``("a.b", value)``; the value is read as a TOML literal, else a string."""
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ValidationError(f"override {text!r} is not key=value")
    raw = raw.strip()
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key.strip(), value


def _format_errors(exc: _PydanticError) -> str:
    parts = []
    for e in exc.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return "invalid configuration: " + "; ".join(parts)


def load_document(source=None) -> dict:
    """Raw TOML dict from a preset name, a path, or the default preset."""
    if source is None:
        source = "config1"
    source = str(source)
    if source in PRESETS:
        text = resources.files("ffgain.presets").joinpath(f"{source}.toml").read_text(encoding="utf-8")
    else:
        path = Path(source)
        if not path.is_file():
            raise ValidationError(f"config {source!r} is neither a file nor one of {', '.join(PRESETS)}")
        text = path.read_text(encoding="utf-8")
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"config {source}: {exc}") from None


def build_config(doc: dict, overrides=()) -> CampaignConfig:
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        _set_path(doc, key, value)
    try:
        return CampaignConfig.model_validate(doc)
    except _PydanticError as exc:
        raise ValidationError(_format_errors(exc)) from None
    except ValidationError:
        raise
    except ValueError as exc:  # pragma: no cover - pydantic wraps these
        raise ValidationError(str(exc)) from None


def load_config(source=None, overrides=()) -> CampaignConfig:
    return build_config(load_document(source), overrides)


def config_dict(cfg: CampaignConfig) -> dict[str, Any]:
    return cfg.model_dump(mode="json")
