"""Friis forward model and the three-antenna gain solution.

Each (distance, frequency) point is solved independently. In dB the three
pair equations are

    P_AB = G_A + G_B,   P_AC = G_A + G_C,   P_BC = G_B + G_C

with ``P_xy = |S21,xy|^2 (dB) + PL(d_xy)``. ``exact_pl`` uses each pair's
own distance in the path loss; ``averaged_pl`` replaces every per-pair path
loss by the path loss of the mean of the three distances.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import DomainError, MissingPairError, ValidationError, pair_key, pair_label


class PathLossMode(str, enum.Enum):
    EXACT = "exact_pl"
    AVERAGED = "averaged_pl"


def _check_positive(**kw):
    for name, v in kw.items():
        if np.any(~(np.asarray(v, dtype=float) > 0)):
            raise DomainError(f"{name} must be positive")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def friis_s21(gt_linear, gr_linear, lam, d):
    """|S21|^2 = Gt Gr (lambda / (4 pi d))^2."""
    _check_positive(gt_linear=gt_linear, gr_linear=gr_linear, lam=lam, d=d)
    return _out(np.asarray(gt_linear) * gr_linear * (np.asarray(lam) / (4 * np.pi * np.asarray(d))) ** 2)


def path_loss(d, lam):
    """Free-space spreading (4 pi d / lambda)^2, linear."""
    _check_positive(d=d, lam=lam)
    return _out((4 * np.pi * np.asarray(d, dtype=float) / lam) ** 2)


def path_loss_db(d, lam):
    return _out(20.0 * np.log10(4 * np.pi * np.asarray(d, dtype=float) / lam))


def pair_gain_product(s21_sq_linear, d, lam):
    """Gain product of a pair from its measured |S21|^2: the inverse of :func:`friis_s21`."""
    _check_positive(s21_sq_linear=s21_sq_linear, d=d, lam=lam)
    return _out(np.asarray(s21_sq_linear, dtype=float) * path_loss(d, lam))


def averaged_path_loss_db(d_ab, d_ac, d_bc, lam):
    """Path loss (dB) of the arithmetic mean of the three pair distances."""
    _check_positive(d_ab=d_ab, d_ac=d_ac, d_bc=d_bc, lam=lam)
    mean_d = (np.asarray(d_ab, dtype=float) + d_ac + d_bc) / 3.0
    return path_loss_db(mean_d, lam)


def mean_of_path_losses_db(d_ab, d_ac, d_bc, lam):
    """Mean of the per-pair dB path losses; comparison helper only."""
    return _out((path_loss_db(d_ab, lam) + path_loss_db(d_ac, lam) + path_loss_db(d_bc, lam)) / 3.0)


@dataclass(frozen=True, eq=False)
class PairGainProduct:
    """Measured gain product of one pair, computed with that pair's own distance.

    ``value_linear`` is a scalar or an ``[m, f]`` array; ``distance`` a scalar
    or an ``[m]`` array (one distance per row).
    """

    pair: tuple[str, str]
    value_linear: np.ndarray
    distance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pair", pair_key(*self.pair))
        v = np.asarray(self.value_linear, dtype=float)
        d = np.asarray(self.distance, dtype=float)
        if np.any(~(d > 0)):
            raise DomainError(f"pair {pair_label(self.pair)}: distances must be positive")
        object.__setattr__(self, "value_linear", v)
        object.__setattr__(self, "distance", d)

    @classmethod
    def from_s21(cls, pair, s21_sq_linear, distance, lam):
        """Gain product from |S21|^2 without rejecting non-positive points."""
        s = np.asarray(s21_sq_linear, dtype=float)
        d = np.asarray(distance, dtype=float)
        if s.ndim == 2 and d.ndim == 1:
            d_b = d[:, None]
        else:
            d_b = d
        return cls(pair, s * (4 * np.pi * d_b / lam) ** 2, d)

    def _distance_column(self):
        d = self.distance
        if self.value_linear.ndim == 2 and d.ndim == 1:
            return d[:, None]
        return d


_SYSTEM = np.array([[1.0, 1.0, 0.0],
                    [1.0, 0.0, 1.0],
                    [0.0, 1.0, 1.0]])


def _triangle(products: Sequence[PairGainProduct]):
    products = list(products)
    seen = {}
    for p in products:
        if p.pair in seen:
            raise ValidationError(f"pair {pair_label(p.pair)} given twice")
        seen[p.pair] = p
    ids = sorted({i for p in products for i in p.pair})
    if len(ids) != 3:
        raise ValidationError(f"three-antenna solution needs exactly three antennas, got {ids}")
    for key in (pair_key(ids[0], ids[1]), pair_key(ids[0], ids[2]), pair_key(ids[1], ids[2])):
        if key not in seen:
            raise MissingPairError(key)
    return ids, seen


def solve_three_antenna(products, mode=PathLossMode.EXACT, order=None, on_invalid="raise"):
    """Per-antenna linear gains from three pair gain products.

    Parameters
    ----------
    products : iterable of PairGainProduct
        One per pair of a complete triangle over three antenna ids.
    mode : {"exact_pl", "averaged_pl"}
    order : sequence of str, optional
        Antenna ids in the order to report; defaults to sorted ids.
    on_invalid : {"raise", "mask"}
        Non-positive or non-finite products raise a :class:`ValidationError`
        naming the pair, or become NaN gaps in the output.

    Returns
    -------
    dict mapping antenna id to linear gain (scalar or array).
    """
    mode = PathLossMode(mode)
    ids, by_pair = _triangle(products)
    if order is not None:
        if sorted(order) != ids:
            raise ValidationError(f"order {list(order)} does not match antennas {ids}")
        ids = list(order)
    a, b, c = ids
    keys = [pair_key(a, b), pair_key(a, c), pair_key(b, c)]
    prods = [by_pair[k] for k in keys]

    values = []
    if mode is PathLossMode.AVERAGED:
        mean_d = sum(p._distance_column() for p in prods) / 3.0
    for k, p in zip(keys, prods):
        v = p.value_linear
        if mode is PathLossMode.AVERAGED:
            # swap the pair's own path loss for the mean-distance one
            v = v * (mean_d / p._distance_column()) ** 2
        bad = ~(np.isfinite(v) & (v > 0))
        if np.any(bad):
            if on_invalid == "raise":
                raise ValidationError(f"non-positive gain product for pair {pair_label(k)}")
            v = np.where(bad, np.nan, v)
        values.append(v)
    values = np.broadcast_arrays(*values)
    with np.errstate(invalid="ignore"):
        p_db = np.stack([10.0 * np.log10(v) for v in values])
    g_db = np.tensordot(np.linalg.inv(_SYSTEM), p_db, axes=1)
    gains = 10.0 ** (g_db / 10.0)
    return {i: _out(g) for i, g in zip(ids, gains)}


def solve_sqrt_ratio(products: Mapping | Sequence, order=None):
    """Closed form G_A = sqrt(P_AB P_AC / P_BC), exact path loss only.

    Algebraically identical to :func:`solve_three_antenna`; kept as an
    independent cross-check.
    """
    ids, by_pair = _triangle(products)
    if order is not None:
        ids = list(order)
    out = {}
    for i in ids:
        j, k = [x for x in ids if x != i]
        pij = by_pair[pair_key(i, j)].value_linear
        pik = by_pair[pair_key(i, k)].value_linear
        pjk = by_pair[pair_key(j, k)].value_linear
        out[i] = _out(np.sqrt(pij * pik / pjk))
    return out


def averaged_pl_bound_db(d_ab, d_ac, d_bc, lam):
    """Upper bound on |averaged_pl - exact_pl| per antenna, in dB.

    The averaged-mode error of antenna A is
    0.5 * (PL(mean d) - PL_AB - PL_AC + PL_BC); since PL(mean d) lies between
    the smallest and largest per-pair loss, its magnitude never exceeds the
    spread max(PL_xy) - min(PL_xy).
    """
    pls = np.stack(np.broadcast_arrays(path_loss_db(d_ab, lam), path_loss_db(d_ac, lam),
                                       path_loss_db(d_bc, lam)))
    return _out(pls.max(axis=0) - pls.min(axis=0))
