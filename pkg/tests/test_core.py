import numpy as np
import pytest
from hypothesis import given, strategies as st

from ffgain.core import (ApertureAntenna, Campaign, Cluster, DomainError, FrequencyGrid,
                         GainSolution, MissingPairError, SweepTrace, ValidationError, from_db,
                         pair_key, speed_of_light, to_db, wavelength)

pos = st.floats(1e-4, 1.0, allow_nan=False)


def test_speed_of_light_is_the_defined_constant():
    assert speed_of_light() == 299792458


def test_wavelength_examples():
    # c / f evaluated independently
    assert wavelength(170e9) == pytest.approx(1.763485047e-3, rel=1e-9)
    assert wavelength(299792458 / 0.002) == pytest.approx(0.002, rel=1e-15)
    np.testing.assert_allclose(wavelength(np.array([1e9, 2e9])), [0.299792458, 0.149896229])


def test_wavelength_rejects_non_positive():
    with pytest.raises(DomainError):
        wavelength(0.0)


def test_db_conversions_are_inverse():
    x = np.array([1e-6, 0.5, 1.0, 316.23])
    np.testing.assert_allclose(from_db(to_db(x)), x, rtol=1e-14)


def test_pair_key_is_canonical():
    assert pair_key("B", "A") == pair_key("A", "B") == ("A", "B")
    with pytest.raises(ValidationError):
        pair_key("A", "A")


def test_antenna_diagonal_and_aspect():
    a = ApertureAntenna.from_diagonal("P", 22.679e-3)
    assert a.diagonal == pytest.approx(22.679e-3, rel=1e-14)
    assert a.aperture_width / a.aperture_height == pytest.approx(4 / 3, rel=1e-14)
    with pytest.raises(ValidationError):
        ApertureAntenna("X", 0.0, 1e-3)
    with pytest.raises(ValidationError):
        ApertureAntenna("", 1e-3, 1e-3)


@given(pos, pos, st.floats(1.0001, 3.0))
def test_diagonal_monotone_in_each_dimension(w, h, k):
    a = ApertureAntenna("a", w, h)
    assert ApertureAntenna("a", w * k, h).diagonal > a.diagonal
    assert ApertureAntenna("a", w, h * k).diagonal > a.diagonal


def test_frequency_grid_invariants():
    g = FrequencyGrid(145e9, 170e9, 667)
    f = g.frequencies
    assert f[0] == 145e9 and f[-1] == 170e9 and len(f) == 667
    np.testing.assert_allclose(np.diff(f), (170e9 - 145e9) / 666, rtol=1e-9)
    for bad in [(170e9, 145e9, 5), (145e9, 170e9, 1), (0.0, 1e9, 3)]:
        with pytest.raises(ValidationError):
            FrequencyGrid(*bad)


def test_cluster_distances_and_offset():
    c = Cluster(1.0, 2e-4, 151, 0.028)
    d = c.distances
    assert d[0] == pytest.approx(1.028) and d[-1] == pytest.approx(1.058)
    assert c.midpoint == pytest.approx(1.043)
    with pytest.raises(ValidationError):
        Cluster(1.0, 0.0, 3)
    with pytest.raises(ValidationError):
        Cluster(0.01, 1e-3, 3, -0.02)


def _trace(pair=("A", "B"), run=0, m=3, grid=None, segment=0):
    grid = grid or FrequencyGrid(1e9, 2e9, 2)
    return SweepTrace(pair, run, np.full((m, grid.count), 0.1), np.arange(1, m + 1) * 0.5, grid,
                      segment=segment)


def test_sweep_trace_validation():
    g = FrequencyGrid(1e9, 2e9, 2)
    with pytest.raises(ValidationError):
        SweepTrace(("A", "B"), 0, -np.ones((2, 2)), [1.0, 2.0], g)
    with pytest.raises(ValidationError):
        SweepTrace(("A", "B"), 0, np.ones((2, 2)), [2.0, 1.0], g)
    with pytest.raises(ValidationError):
        SweepTrace(("A", "B"), 0, np.ones((2, 3)), [1.0, 2.0], g)
    with pytest.raises(ValidationError):
        SweepTrace(("A", "B"), 0, np.ones((3, 2)), [1.0, 2.0], g)


def test_sweep_trace_is_immutable_and_canonical():
    t = _trace(pair=("B", "A"))
    assert t.pair == ("A", "B")
    with pytest.raises(ValueError):
        t.s21[0, 0] = 1.0
    np.testing.assert_allclose(t.power, 0.01)


def test_campaign_requires_every_pair():
    ants = [ApertureAntenna(i, 1e-2, 1e-2) for i in "ABC"]
    g = FrequencyGrid(1e9, 2e9, 2)
    traces = {("A", "B"): [_trace(("A", "B"))], ("A", "C"): [_trace(("A", "C"))]}
    with pytest.raises(MissingPairError) as exc:
        Campaign(ants, traces, g)
    assert exc.value.pair == ("B", "C")
    assert "B-C" in str(exc.value)


def test_campaign_requires_consistent_shapes():
    ants = [ApertureAntenna(i, 1e-2, 1e-2) for i in "ABC"]
    g = FrequencyGrid(1e9, 2e9, 2)
    traces = {("A", "B"): [_trace(("A", "B"))], ("A", "C"): [_trace(("A", "C"))],
              ("B", "C"): [_trace(("B", "C"), m=4)]}
    with pytest.raises(ValidationError):
        Campaign(ants, traces, g)
    traces[("B", "C")] = [_trace(("B", "C")), _trace(("B", "C"), run=1)]
    with pytest.raises(ValidationError):
        Campaign(ants, traces, g)


def test_campaign_accessors():
    ants = [ApertureAntenna(i, 1e-2, 1e-2) for i in "ABC"]
    g = FrequencyGrid(1e9, 2e9, 2)
    traces = {p: [_trace(p, r) for r in (1, 0)] for p in [("A", "B"), ("A", "C"), ("B", "C")]}
    c = Campaign(ants, traces, g)
    assert c.ids == ("A", "B", "C")
    assert c.run_count == 2
    assert [t.run_index for t in c.runs(("B", "A"))] == [0, 1]


def test_gain_solution_validation():
    f = np.array([1e9, 2e9])
    GainSolution(f, {"A": [1.0, 2.0]}, {"A": [0.0, 0.1]})
    with pytest.raises(ValidationError):
        GainSolution(f, {"A": [1.0]}, {"A": [0.0]})
    with pytest.raises(ValidationError):
        GainSolution(f, {"A": [1.0, 2.0]}, {"A": [0.0, -0.1]})
