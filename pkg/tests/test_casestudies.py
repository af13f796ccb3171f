import math

import numpy as np
import pytest

from regobs.casestudies import (
    MEMBERSHIP_NOTE,
    axis_index_limits,
    corollary_41_predicate,
    corollary_42_predicate,
    corollary_43_predicate,
    counterexample_1d,
    multiplicity_condition_29,
    rational_detect,
    tan_condition,
)
from regobs.errors import GeometryError, PredicateError
from regobs.geometry import rectangle, unit_square
from regobs.observability import rank_test
from regobs.sensors import SymmetricProfile, TableProfile, filament, output_row, pointwise, zone
from regobs.spectral import build_basis


@pytest.mark.parametrize("x,frac", [(0.5, (1, 2)), (4.0, (4, 1)), (2 / 3, (2, 3)), (355 / 113, (355, 113)),
                                    (0.0, (0, 1)), (-0.75, (-3, 4))])
def test_rational_detect_finds_fractions(x, frac):
    w = rational_detect(x)
    assert w.is_rational and w.detected == frac


@pytest.mark.parametrize("x", [math.sqrt(2), math.pi, math.e, 2 ** 0.25])
def test_rational_detect_rejects_irrationals(x):
    assert not rational_detect(x, q_max=1000).is_rational


def test_rational_detect_respects_bound():
    assert not rational_detect(1 / 1001, q_max=1000).is_rational
    assert rational_detect(1 / 1001, q_max=2000).detected == (1, 1001)
    with pytest.raises(ValueError):
        rational_detect(0.5, q_max=0)


def test_tan_condition_instance():
    lhs, rhs, equal = tan_condition(6, 4, 0.25)
    assert lhs == pytest.approx(0.0, abs=1e-12)
    assert rhs == pytest.approx(4.0, abs=1e-12)
    assert not equal


def test_tan_condition_trivial_equality():
    assert tan_condition(3, 3, 0.17)[2]


def test_pointwise_screen_examples():
    sq = unit_square()
    v = corollary_42_predicate((0.5, 0.5), sq, 10)
    assert not v.candidate
    assert v.failing[0] == [2, 4, 6, 8, 10] and v.failing[1] == [2, 4, 6, 8, 10]
    assert MEMBERSHIP_NOTE in v.notes
    g = corollary_42_predicate((math.sqrt(2) / 2, math.sqrt(2) / 2), sq, 10)
    assert g.candidate and g.failing == {}
    t = corollary_42_predicate((1 / 3, 0.4), sq, (6, 4))
    assert t.failing == {0: [3, 6]}
    with pytest.raises(GeometryError):
        corollary_42_predicate((1.0, 0.5), sq)


def test_pointwise_screen_matches_zero_columns():
    B = build_basis(unit_square(), 25)
    p = (0.5, 0.3123)
    row = output_row(pointwise(p), B)
    lim = axis_index_limits(B)
    v = corollary_42_predicate(p, unit_square(), lim)
    zero_i = sorted({B.mode_label(k)[0] for k in range(B.N) if abs(row[k]) < 1e-12})
    assert zero_i == v.failing[0]


def test_zone_screen_examples():
    sq = unit_square()
    centred = zone(rectangle((0.4, 0.6), (0.4, 0.6)), SymmetricProfile(("cosine", "cosine")))
    v = corollary_41_predicate(centred, sq, 10)
    assert not v.candidate and v.failing[0] == [2, 4, 6, 8, 10]
    # the rank test sees the same blind mode
    rep = rank_test([centred], build_basis(sq, 6))
    blind = {m for g in rep.failing_groups for m in g.modes}
    assert (2, 2) in blind

    c = math.sqrt(2) / 2
    generic = zone(rectangle((c - 0.0371, c + 0.0371), (c - 0.0371, c + 0.0371)))
    assert corollary_41_predicate(generic, sq, 10).candidate


def test_zone_screen_on_region_edge():
    region = rectangle((0.2, 0.8), (0.2, 0.8))
    s = zone(rectangle((0.15, 0.25), (0.45, 0.55)))
    v = corollary_41_predicate(s, region, 5)
    assert not v.candidate and v.failing[0][0] == 1


def test_zone_screen_preconditions():
    tab = TableProfile(([0.4, 0.6], [0.4, 0.6]), np.ones((2, 2)))
    with pytest.raises(PredicateError):
        corollary_41_predicate(zone(rectangle((0.4, 0.6), (0.4, 0.6)), tab), unit_square())
    with pytest.raises(PredicateError):
        corollary_41_predicate(pointwise((0.5, 0.5)), unit_square())


def test_filament_screen_centre_segment():
    seg = filament([(0.5, 0.25), (0.5, 0.75)])
    v = corollary_43_predicate(seg, unit_square(), 10)
    assert not v.candidate
    assert v.failing[0] == [2, 4, 6, 8, 10]
    B = build_basis(unit_square(), 25)
    row = output_row(seg, B)
    for k in range(B.N):
        i, j = B.mode_label(k)
        if i % 2 == 0 or j % 2 == 0:
            assert abs(row[k]) < 1e-10


def test_filament_screen_generic_segment():
    c = math.sqrt(2) / 2
    seg = filament([(c, 0.2), (c, 0.9)])
    v = corollary_43_predicate(seg, unit_square(), 10)
    assert v.candidate
    B = build_basis(unit_square(), 25)
    lim = axis_index_limits(B)
    row = output_row(seg, B)
    assert np.all(np.abs(row) > 1e-6)
    assert max(lim) <= 10


def test_filament_screen_rejects_asymmetric():
    zigzag = filament([(0.1, 0.1), (0.3, 0.4), (0.45, 0.2), (0.8, 0.7)])
    with pytest.raises(PredicateError):
        corollary_43_predicate(zigzag, unit_square())
    with pytest.raises(PredicateError):
        corollary_43_predicate(pointwise((0.2, 0.3)), unit_square())


def test_multiplicity_condition_examples():
    sq = multiplicity_condition_29(unit_square())
    assert sq["witness"].detected == (1, 1) and sq["observed_r"] > 1
    thin = multiplicity_condition_29(rectangle((0.0, 2 / 3), (0.0, 1 / 3)))
    assert thin["witness"].detected == (4, 1)
    irr = multiplicity_condition_29(rectangle((0.0, 1.0), (0.0, 2 ** -0.25)), q_max=100)
    assert not irr["witness"].is_rational
    assert irr["predicts_simple_spectrum"] and irr["observed_r"] == 1
    half = multiplicity_condition_29(rectangle((0.0, 1.0), (0.0, 1 / math.sqrt(2))), N=40)
    # squared ratio 2 is rational; i^2 + 2 j^2 collides at (1, 4) and (5, 2)
    assert half["witness"].detected == (2, 1) and half["observed_r"] == 2


def test_multiplicity_condition_needs_2d():
    from regobs.geometry import unit_interval

    with pytest.raises(GeometryError):
        multiplicity_condition_29(unit_interval())


@pytest.fixture(scope="module")
def default_report():
    return counterexample_1d()


def test_counterexample_global_part(default_report):
    g = default_report.global_report
    assert not g.strategic
    modes = sorted(m for grp in g.failing_groups for m in grp.modes)
    assert modes == list(range(2, 21, 2))
    assert max(g.witness_sup) < 1e-8


def test_counterexample_index_sets(default_report):
    assert default_report.even_J == [4, 8, 12, 16, 20]
    assert default_report.numeric_blind == list(range(2, 21, 2))
    assert any("differs" in n for n in default_report.notes)


def test_counterexample_tables(default_report):
    row = default_report.tan_table[0]
    assert (row["i0"], row["j0"], row["equal"]) == (6, 4, False)
    assert default_report.cross_products[0]["value"] == pytest.approx(-4 / (5 * math.pi), abs=1e-10)


def test_counterexample_candidates_are_regionally_blind(default_report):
    # phi_4 and phi_6 are antisymmetric about b = 1/2 on [1/4, 3/4]; their
    # regional parts give no output
    for cand in default_report.candidate_states:
        assert cand["region_norm"] == pytest.approx(math.sqrt(0.5))
        assert cand["output_sup"] < 1e-12
        assert not cand["regionally_visible"]


def test_counterexample_regional_gramian_is_singular(default_report):
    r = default_report.regional_report
    assert not r.strategic
    assert r.witnesses and max(r.witness_sup) < 1e-8


def test_counterexample_off_centre_sensor_is_regionally_strategic():
    rep = counterexample_1d(alpha=0.25, b=0.5 + 1 / (10 * math.pi), N=20, N_region=4)
    assert rep.regional_report.strategic


def test_counterexample_verdicts_equal_raw_tests():
    from regobs.geometry import interval, unit_interval
    from regobs.observability import gramian_test

    rep = counterexample_1d(alpha=0.3, b=0.4, N=12, N_region=3)
    B = build_basis(unit_interval(), 12)
    R = build_basis(interval(0.3, 0.7), 3)
    assert rep.global_report.strategic == rank_test([pointwise(0.4)], B).strategic
    assert rep.regional_report.strategic == gramian_test([pointwise(0.4)], B, R, 1.0).strategic


@pytest.mark.parametrize("alpha,b", [(0.6, 0.5), (0.0, 0.5), (0.2, 1.0)])
def test_counterexample_bounds(alpha, b):
    with pytest.raises(GeometryError):
        counterexample_1d(alpha=alpha, b=b)
