"""Two-aperture coupling oracle and synthetic campaign generator.

The coupling between two boresight-aligned planar apertures a distance ``d``
apart is the scalar reaction integral

    c = 1 / (lambda sqrt(Q1 Q2)) * int int f1 f2 exp(-j k R) / R dA1 dA2,
    R = sqrt(d^2 + (x1 - x2)^2 + (y1 - y2)^2),

with ``Q_i = int |f_i|^2 dA``. As ``d`` grows, ``|c|^2 (4 pi d / lambda)^2``
tends to ``G1 G2`` with ``G = 4 pi |int f|^2 / (lambda^2 Q)``, which is
``4 pi A / lambda^2`` for a uniform field. No paraxial approximation is made,
so the gap between ``c`` and Friis is the finite-distance coupling error the
far-field criteria are meant to bound. Horn flare phase error is not
modelled.

Two quadratures are available. ``direct`` sums the 4-D integral over
Gauss-Legendre tensor grids on both apertures. ``reduced`` (the default)
uses the fact that the kernel only depends on ``x1 - x2`` and ``y1 - y2``:
integrating over the difference coordinates with the aperture
cross-correlation as weight leaves a 2-D integral, evaluated with the same
Gauss-Legendre rules split at the correlation's breakpoints. The two agree to
rounding error.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .core import (SPEED_OF_LIGHT, ApertureAntenna, Campaign, Cluster, DomainError, FrequencyGrid,
                   NumericalError, SweepTrace, ValidationError, pair_key, wavelength)
from .ffcrit import d_ff_revised

MIN_POINTS_PER_WAVELENGTH = 2.0
_MIN_NODES = 4
_INNER_NODES = 24


class QuadratureError(NumericalError):
    def __init__(self, density, required=MIN_POINTS_PER_WAVELENGTH):
        self.density = density
        self.required = required
        super().__init__(
            f"quadrature density {density} points/wavelength is under-resolved; "
            f"at least {required} required")


@dataclass(frozen=True)
class CouplingModel:
    aperture_field: str = "uniform"
    quadrature_points_per_wavelength: float = 2.0
    include_ripple: bool = False
    ripple_amplitude_db: float = 0.05
    ripple_period: float | None = None
    noise_sigma_db: float = 0.0
    seed: int = 0
    kernel: str = "aperture"
    method: str = "reduced"

    def __post_init__(self):
        if self.aperture_field not in ("uniform", "cosine_taper"):
            raise ValidationError(f"unknown aperture field {self.aperture_field!r}")
        if self.kernel not in ("aperture", "friis"):
            raise ValidationError(f"unknown coupling kernel {self.kernel!r}")
        if self.method not in ("reduced", "direct"):
            raise ValidationError(f"unknown quadrature method {self.method!r}")
        if self.noise_sigma_db < 0 or self.ripple_amplitude_db < 0:
            raise ValidationError("noise and ripple amplitudes must be non-negative")
        if self.ripple_period is not None and not self.ripple_period > 0:
            raise ValidationError("ripple period must be positive")


def _threads() -> int:
    raw = os.environ.get("FFGAIN_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValidationError(f"FFGAIN_THREADS must be an integer, got {raw!r}") from None
        return max(1, n)
    return os.cpu_count() or 1


def _gauss(n, lo, hi):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return half * x + 0.5 * (hi + lo), half * w


def _node_count(length, lam, density):
    return max(_MIN_NODES, int(math.ceil(density * length / lam)))


def _check_density(model):
    if model.quadrature_points_per_wavelength < MIN_POINTS_PER_WAVELENGTH:
        raise QuadratureError(model.quadrature_points_per_wavelength)


def _taper(x, width, field):
    if field == "cosine_taper":
        return np.cos(np.pi * x / width)
    return np.ones_like(x)


def aperture_efficiency(field: str) -> float:
    """|int f|^2 / (A int |f|^2), by quadrature over a unit aperture."""
    x, w = _gauss(64, -0.5, 0.5)
    f = _taper(x, 1.0, field)
    return float(np.sum(w * f) ** 2 / np.sum(w * f * f))


def analytic_gain(antenna: ApertureAntenna, frequency_hz, aperture_field="uniform"):
    """Directive gain 4 pi A_eff / lambda^2 of the modelled aperture (linear)."""
    lam = wavelength(frequency_hz)
    return 4 * np.pi * antenna.area * aperture_efficiency(aperture_field) / np.square(lam)


def _aperture_nodes(a: ApertureAntenna, lam, density, field):
    nx = _node_count(a.aperture_width, lam, density)
    ny = _node_count(a.aperture_height, lam, density)
    x, wx = _gauss(nx, -a.aperture_width / 2, a.aperture_width / 2)
    y, wy = _gauss(ny, -a.aperture_height / 2, a.aperture_height / 2)
    wx = wx * _taper(x, a.aperture_width, field)
    X, Y = np.meshgrid(x, y, indexing="ij")
    return X.ravel(), Y.ravel(), np.outer(wx, wy).ravel()


def _norm(a: ApertureAntenna, field):
    """Q = int |f|^2 dA."""
    x, w = _gauss(64, -a.aperture_width / 2, a.aperture_width / 2)
    return float(np.sum(w * _taper(x, a.aperture_width, field) ** 2)) * a.aperture_height


def _correlation_nodes(w1, w2, lam, density, field):
    """Nodes u and weights W(u) * C(u), C(u) = int f1(x) f2(x - u) dx."""
    inner = abs(w1 - w2) / 2
    outer = (w1 + w2) / 2
    edges = [-outer, -inner, inner, outer] if inner > 0 else [-outer, 0.0, outer]
    us, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        u, w = _gauss(_node_count(hi - lo, lam, density), lo, hi)
        us.append(u)
        ws.append(w)
    u = np.concatenate(us)
    w = np.concatenate(ws)
    lo = np.maximum(-w1 / 2, u - w2 / 2)
    hi = np.minimum(w1 / 2, u + w2 / 2)
    if field == "uniform":
        corr = hi - lo
    else:
        t, tw = np.polynomial.legendre.leggauss(_INNER_NODES)
        half = 0.5 * (hi - lo)[:, None]
        x = half * t + 0.5 * (hi + lo)[:, None]
        corr = np.sum(half * tw * _taper(x, w1, field) * _taper(x - u[:, None], w2, field), axis=1)
    return u, w * corr


def _integral_reduced(a1, a2, distances, freqs, model):
    lam_min = wavelength(np.max(freqs))
    dens = model.quadrature_points_per_wavelength
    u, cu = _correlation_nodes(a1.aperture_width, a2.aperture_width, lam_min, dens,
                               model.aperture_field)
    v, cv = _correlation_nodes(a1.aperture_height, a2.aperture_height, lam_min, dens, "uniform")
    rho2 = (u[:, None] ** 2 + v[None, :] ** 2).ravel()
    weights = np.outer(cu, cv).ravel()
    k = 2 * np.pi * np.asarray(freqs) / SPEED_OF_LIGHT
    out = np.empty((len(distances), len(freqs)), dtype=complex)
    for i, d in enumerate(distances):
        R = np.sqrt(d * d + rho2)
        # exp(-jkR) = exp(-jkd) exp(-jk(R - d)); R - d in rationalised form keeps phase accurate
        excess = rho2 / (R + d)
        kern = np.exp(-1j * np.outer(k, excess)) * (weights / R)
        out[i] = kern.sum(axis=1) * np.exp(-1j * k * d)
    return out


def _integral_direct(a1, a2, distances, freqs, model):
    lam_min = wavelength(np.max(freqs))
    dens = model.quadrature_points_per_wavelength
    x1, y1, w1 = _aperture_nodes(a1, lam_min, dens, model.aperture_field)
    x2, y2, w2 = _aperture_nodes(a2, lam_min, dens, model.aperture_field)
    rho2 = (x1[:, None] - x2[None, :]) ** 2 + (y1[:, None] - y2[None, :]) ** 2
    k = 2 * np.pi * np.asarray(freqs) / SPEED_OF_LIGHT
    out = np.empty((len(distances), len(freqs)), dtype=complex)
    for i, d in enumerate(distances):
        R = np.sqrt(d * d + rho2)
        excess = rho2 / (R + d)
        for j, kj in enumerate(k):
            out[i, j] = w1 @ (np.exp(-1j * kj * excess) / R) @ w2 * np.exp(-1j * kj * d)
    return out


def coupling_matrix(a1: ApertureAntenna, a2: ApertureAntenna, distances, frequencies,
                    model: CouplingModel = CouplingModel()) -> np.ndarray:
    """Complex coupling coefficients on a (distance, frequency) grid, noiseless."""
    d = np.atleast_1d(np.asarray(distances, dtype=float))
    f = np.atleast_1d(np.asarray(frequencies, dtype=float))
    if np.any(~(d > 0)):
        raise DomainError("distances must be positive")
    if np.any(~(f > 0)):
        raise DomainError("frequencies must be positive")
    lam = wavelength(f)
    if model.kernel == "friis":
        g = np.sqrt(analytic_gain(a1, f, model.aperture_field) * analytic_gain(a2, f, model.aperture_field))
        k = 2 * np.pi / lam
        return g * lam / (4 * np.pi * d[:, None]) * np.exp(-1j * k * d[:, None])
    _check_density(model)
    if model.method == "direct":
        integral = _integral_direct(a1, a2, d, f, model)
    else:
        integral = _integral_reduced(a1, a2, d, f, model)
    q = math.sqrt(_norm(a1, model.aperture_field) * _norm(a2, model.aperture_field))
    return integral / (lam * q)


def aperture_coupling(a1: ApertureAntenna, a2: ApertureAntenna, d: float, f: float,
                      model: CouplingModel = CouplingModel()) -> complex:
    """Complex coupling coefficient of two apertures at distance ``d`` and frequency ``f``."""
    return complex(coupling_matrix(a1, a2, [d], [f], model)[0, 0])


def gain_product_db(a1, a2, d, f, model=CouplingModel()):
    """Apparent gain product |c|^2 (4 pi d / lambda)^2 in dB."""
    c = coupling_matrix(a1, a2, np.atleast_1d(d), np.atleast_1d(f), model)
    lam = wavelength(np.atleast_1d(f))
    d = np.atleast_1d(np.asarray(d, dtype=float))
    out = 10 * np.log10(np.abs(c) ** 2 * (4 * np.pi * d[:, None] / lam) ** 2)
    return float(out[0, 0]) if out.size == 1 else out


def analytic_gain_product_db(a1, a2, f, aperture_field="uniform"):
    return 10 * np.log10(analytic_gain(a1, f, aperture_field) * analytic_gain(a2, f, aperture_field))


def gain_product_error_db(a1, a2, d, f, model=CouplingModel()):
    """Apparent minus asymptotic gain product (dB); negative in the near zone."""
    return gain_product_db(a1, a2, d, f, model) - analytic_gain_product_db(a1, a2, f, model.aperture_field)


def asymptotic_gain_product_db(a1, a2, f, model=CouplingModel(), factor=100.0):
    """Gain product evaluated by the oracle itself far out, at ``factor * d_ff_revised``."""
    d = factor * d_ff_revised(a1.diagonal, a2.diagonal, wavelength(f))
    return gain_product_db(a1, a2, d, f, model)


def ray_length(d, dx, dy):
    """Exact point-to-point distance used by the coupling kernel."""
    return math.sqrt(d * d + dx * dx + dy * dy)


def ripple_db(distances, model: CouplingModel, grid: FrequencyGrid):
    """Standing-wave ripple in dB versus distance (zero if disabled)."""
    d = np.asarray(distances, dtype=float)
    if not model.include_ripple:
        return np.zeros_like(d)
    period = model.ripple_period or wavelength(grid.center_hz) / 2
    return model.ripple_amplitude_db * np.sin(2 * np.pi * d / period)


def _noiseless(args):
    a1, a2, distances, freqs, model = args
    return coupling_matrix(a1, a2, distances, freqs, model)


def synthesize_campaign(antennas: Sequence[ApertureAntenna],
                        clusters: Mapping[tuple[str, str], Cluster | Sequence[Cluster]],
                        grid: FrequencyGrid, model: CouplingModel = CouplingModel(),
                        runs: int = 1, stream: int = 0) -> Campaign:
    """Synthetic three-pair campaign from the coupling oracle.

    ``clusters`` maps each pair to one :class:`Cluster`, or to a list of
    clusters which become distance segments (for extrapolation sweeps).
    Noise is Gaussian in dB on |S21|^2, drawn independently per run from a
    generator seeded by ``(seed, stream, pair index, segment, run)``, so the
    output does not depend on thread count or evaluation order. Give
    campaigns that should carry independent noise distinct ``stream`` values.
    """
    if runs < 1:
        raise ValidationError("runs must be at least 1")
    if stream < 0:
        raise ValidationError("stream must be non-negative")
    antennas = tuple(antennas)
    if len(antennas) != 3:
        raise ValidationError("a campaign needs exactly three antennas")
    by_id = {a.id: a for a in antennas}
    ids = [a.id for a in antennas]
    pairs = [pair_key(ids[0], ids[1]), pair_key(ids[0], ids[2]), pair_key(ids[1], ids[2])]
    norm = {pair_key(*k): v for k, v in clusters.items()}
    freqs = grid.frequencies

    jobs = []
    for p_index, pair in enumerate(pairs):
        if pair not in norm:
            raise ValidationError(f"no cluster for pair {'-'.join(pair)}")
        segs = norm[pair]
        segs = [segs] if isinstance(segs, Cluster) else list(segs)
        for s_index, cl in enumerate(segs):
            d = cl.distances
            # chunk over distance so the pool has work to share
            for chunk in np.array_split(np.arange(len(d)), max(1, min(len(d), 8))):
                jobs.append((p_index, pair, s_index, cl, chunk,
                             (by_id[pair[0]], by_id[pair[1]], d[chunk], freqs, model)))

    n_threads = _threads()
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(_noiseless, [j[-1] for j in jobs]))
    else:
        results = [_noiseless(j[-1]) for j in jobs]

    assembled = {}
    for job, res in zip(jobs, results):
        p_index, pair, s_index, cl, chunk, _ = job
        key = (p_index, pair, s_index)
        if key not in assembled:
            assembled[key] = (cl, np.empty((cl.count, len(freqs)), dtype=complex))
        assembled[key][1][chunk] = res

    traces = {p: [] for p in pairs}
    for (p_index, pair, s_index), (cl, c) in sorted(assembled.items(), key=lambda kv: kv[0][::2]):
        d = cl.distances
        base_db = 20 * np.log10(np.abs(c)) + ripple_db(d, model, grid)[:, None]
        phase = np.angle(c)
        for r in range(runs):
            rng = np.random.default_rng([model.seed, stream, p_index, s_index, r])
            noise = rng.normal(0.0, model.noise_sigma_db, size=c.shape) if model.noise_sigma_db else 0.0
            mag = 10 ** ((base_db + noise) / 20)
            if not np.all(np.isfinite(mag)):
                raise NumericalError(f"non-finite coupling for pair {'-'.join(pair)}")
            traces[pair].append(SweepTrace(pair, r, mag, d, grid, phase=phase,
                                           segment=s_index, cluster=cl))
    return Campaign(antennas, traces, grid)


def true_gains_db(antennas, grid: FrequencyGrid, model: CouplingModel = CouplingModel()):
    """Asymptotic gain of each antenna over the grid (dB): the synthesis ground truth."""
    return {a.id: 10 * np.log10(analytic_gain(a, grid.frequencies, model.aperture_field))
            for a in antennas}


def with_seed(model: CouplingModel, seed: int) -> CouplingModel:
    return replace(model, seed=int(seed))
