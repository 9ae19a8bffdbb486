"""Far-field distance criteria and phase-error budgets for aperture pairs.

All distances in meters, phases in radians. Every two-aperture criterion is
symmetric in its two diagonals. The single-aperture Fraunhofer distance
treats the partner as a point receiver; the other criteria account for both
apertures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError

FF_PHASE_LIMIT = math.pi / 8


def _positive(name, value):
    v = np.asarray(value, dtype=float)
    if np.any(~(v > 0)):
        raise DomainError(f"{name} must be positive, got {value!r}")


def _apertures(D1, D2):
    a = np.asarray(D1, dtype=float)
    b = np.asarray(D2, dtype=float)
    if np.any(a < 0) or np.any(b < 0):
        raise DomainError("aperture dimensions must be non-negative")
    if np.any((a == 0) & (b == 0)):
        raise DomainError("at least one aperture must be non-zero")
    return a, b


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def d_fraunhofer(D, lam):
    """Classical Fraunhofer distance 2 D^2 / lambda."""
    _positive("D", D)
    _positive("lambda", lam)
    return _out(2.0 * np.square(D) / lam)


def d_ff_fourth_order(D1, D2, lam):
    """Distance where the RSS phase error of both apertures reaches pi/8."""
    _positive("lambda", lam)
    a, b = _apertures(D1, D2)
    return _out(2.0 / lam * np.sqrt(a ** 4 + b ** 4))


def d_ff_revised(D1, D2, lam):
    """Two-aperture far-field distance 2 (D1^2 + D2^2) / lambda."""
    _positive("lambda", lam)
    a, b = _apertures(D1, D2)
    return _out(2.0 * (a * a + b * b) / lam)


def d_ff_uno(D1, D2, lam):
    """Horn-to-horn criterion 2 (D1 + D2)^2 / lambda."""
    _positive("lambda", lam)
    a, b = _apertures(D1, D2)
    return _out(2.0 * (a + b) ** 2 / lam)


def d_ff_mil(D1, D2, lam):
    """MIL-STD style criterion (D1^2 + D2^2) / lambda.

    Returns ``(distance, applicable)``. The formula is only claimed for the
    case where the smaller aperture exceeds a tenth of the larger one; the
    flag is advisory and never raises.
    """
    _positive("lambda", lam)
    a, b = _apertures(D1, D2)
    dist = (a * a + b * b) / lam
    applicable = np.minimum(a, b) > np.maximum(a, b) / 10.0
    if np.ndim(applicable) == 0:
        applicable = bool(applicable)
    return _out(dist), applicable


def path_difference(D, d):
    """Center-to-edge path difference D^2 / (8 d) (first-order binomial)."""
    _positive("d", d)
    D = np.asarray(D, dtype=float)
    if np.any(D < 0):
        raise DomainError("D must be non-negative")
    return _out(D * D / (8.0 * np.asarray(d, dtype=float)))


def path_difference_exact(D, d):
    """Exact edge-minus-center path, sqrt(d^2 + (D/2)^2) - d."""
    _positive("d", d)
    D = np.asarray(D, dtype=float)
    h = D / 2.0
    # rationalised form avoids cancellation for d >> D
    return _out(h * h / (np.sqrt(np.square(d) + h * h) + d))


def phase_error(delta_r, lam):
    _positive("lambda", lam)
    return _out(2.0 * np.pi * np.asarray(delta_r, dtype=float) / lam)


def phase_total(D1, D2, lam, d):
    """Root-sum-square of the two single-aperture phase errors."""
    _positive("lambda", lam)
    _positive("d", d)
    a, b = _apertures(D1, D2)
    p1 = phase_error(path_difference(a, d), lam)
    p2 = phase_error(path_difference(b, d), lam)
    return _out(np.hypot(p1, p2))


def delta_phi_max(D1, D2, lam, d):
    """Worst-case (linear sum) edge-to-edge phase deviation of the link."""
    _positive("lambda", lam)
    _positive("d", d)
    a, b = _apertures(D1, D2)
    return _out(np.pi * (a * a + b * b) / (4.0 * lam * np.asarray(d, dtype=float)))


def approximation_ratio(D1, D2):
    """d_ff_revised / d_ff_fourth_order; lies in [1, sqrt(2)]."""
    a, b = _apertures(D1, D2)
    a2, b2 = a * a, b * b
    return _out((a2 + b2) / np.hypot(a2, b2))


@dataclass(frozen=True)
class PhaseBudget:
    delta_r: float
    phi_error: float
    phi_total: float
    delta_r_max: float
    delta_phi_max: float

    @property
    def satisfies_ff(self) -> bool:
        return self.delta_phi_max <= FF_PHASE_LIMIT * (1 + 1e-12)


def phase_budget(D1, D2, lam, d) -> PhaseBudget:
    """Phase budget of a link; ``delta_r``/``phi_error`` refer to aperture 1."""
    dr = path_difference(D1, d)
    return PhaseBudget(
        delta_r=dr,
        phi_error=phase_error(dr, lam),
        phi_total=phase_total(D1, D2, lam, d),
        delta_r_max=path_difference(D1, d) + path_difference(D2, d),
        delta_phi_max=delta_phi_max(D1, D2, lam, d),
    )


CRITERIA = ("d_ff", "d_ff_mil", "d_ff_uno", "d_ff_rev")


def criteria_table(D1, D2, lam) -> dict:
    """All four distances of a pair, keyed by ``CRITERIA`` names.

    ``d_ff`` is the classical formula applied to the larger aperture.
    """
    mil, applicable = d_ff_mil(D1, D2, lam)
    return {
        "d_ff": d_fraunhofer(max(D1, D2), lam),
        "d_ff_mil": mil,
        "d_ff_uno": d_ff_uno(D1, D2, lam),
        "d_ff_rev": d_ff_revised(D1, D2, lam),
        "mil_applicable": applicable,
        "d_ff_fourth_order": d_ff_fourth_order(D1, D2, lam),
    }
