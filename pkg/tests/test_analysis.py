from __future__ import annotations

from fractions import Fraction
from math import comb

import pytest
from hypothesis import assume, given, strategies as st

from rankone.analysis import (
    INCONCLUSIVE,
    POSITIVE,
    ZERO,
    Vector,
    WitnessAnomaly,
    certify_v_alpha_lower,
    heights_rule,
    joint_profile,
    multiplicative_profile,
    normalize_vector,
    verify_zero_range,
    verify_zero_window,
    witness_pair_search,
)
from rankone.builders import build_example41
from rankone.core import (
    LevelSet,
    MeasureBound,
    Stage,
    measure_at_resolution,
    push_to_column,
    resolve_depth,
)

from conftest import brute_count, hk_tail_spec, level_sets, small_specs


def test_vector_standard_form():
    assert Vector((1, 2)).d == 2
    for bad in ((), (0, 1), (2, 1), (1, 1)):
        with pytest.raises(ValueError):
            Vector(bad)


@pytest.mark.parametrize("raw, want", [((1, 2), (1, 2)), ((-2, 1, 3), (2, 3, 5)), ((-1, 1), (1, 2))])
def test_normalize_vector(raw, want):
    v, desc = normalize_vector(raw)
    assert v.components == want and desc


def test_normalize_rejects_repeats():
    with pytest.raises(ValueError):
        normalize_vector((1, 1))
    with pytest.raises(ValueError):
        normalize_vector((0, 3))


def test_example41_profile_at_heights(I0):
    spec = build_example41((1, 2))
    ns = [spec.height(m) for m in range(3)]
    for val in joint_profile(spec, I0, Vector((1, 2)), ns).values():
        assert val.lower >= Fraction(1, 3)


def test_profile_at_zero(hk):
    A = LevelSet(1, (0, 2))
    mu = A.measure(hk)
    assert joint_profile(hk, A, Vector((1, 2)), [0]).values() == [MeasureBound.exact(mu)]
    assert multiplicative_profile(hk, A, Vector((1, 2)), [0]).values() == [MeasureBound.exact(mu ** 2)]


def test_example42_joint_zero_then_multiplicative(e42, I0):
    v = Vector((1, 2))
    assert all(b == MeasureBound.exact(0)
               for b in joint_profile(e42, I0, v, range(1, 257)).values())
    ns = [e42.height(m) for m in range(5)]
    for b in multiplicative_profile(e42, I0, v, ns).values():
        assert b.lower >= Fraction(1, 16)


def test_hk_pairwise(hk, I0):
    ns = [hk.height(m) for m in range(6)]
    assert all(b.lower >= Fraction(1, 2) for b in joint_profile(hk, I0, Vector((1,)), ns).values())


def test_profile_rejects_unsorted(hk, I0):
    with pytest.raises(ValueError):
        joint_profile(hk, I0, Vector((1,)), [3, 2])


def test_verify_zero_window_example42(e42, I0):
    vd = verify_zero_window(e42, I0, Vector((1, 2)), 3)
    assert vd.kind == ZERO and vd.windows == [(256, 4096)] and vd.citation


def test_verify_zero_window_finds_counterexample(I0):
    spec = build_example41((1, 2))
    vd = verify_zero_window(spec, I0, Vector((1, 2)), 2)
    assert vd.kind == INCONCLUSIVE
    assert vd.counterexample is not None and vd.counterexample <= spec.height(2)
    m = vd.counterexample
    assert measure_at_resolution(spec, I0, [m, 2 * m]).lower > 0


def test_verify_zero_window_index(e42, I0):
    with pytest.raises(ValueError):
        verify_zero_window(e42, I0, Vector((1, 2)), 0)


def test_verify_zero_budget(e42, I0):
    vd = verify_zero_window(e42, I0, Vector((1, 2)), 4, budget=10)
    assert vd.kind == INCONCLUSIVE and vd.counterexample is None and vd.note


@given(small_specs(), st.data())
def test_zero_window_agrees_with_profile(spec, data):
    A = data.draw(level_sets(spec, max_column=1))
    v = Vector(tuple(sorted(data.draw(st.sets(st.integers(1, 3), min_size=1, max_size=2)))))
    hi = data.draw(st.integers(1, 40))
    chk = verify_zero_range(spec, A, v, 0, hi)
    vals = joint_profile(spec, A, v, range(1, hi + 1)).values()
    first = next((m for m, b in zip(range(1, hi + 1), vals) if b.lower > 0), None)
    assert all(b.resolved for b in vals)
    assert chk.counterexample == first


@given(small_specs(), st.data())
def test_joint_equals_multiplicative_for_one_component(spec, data):
    A = data.draw(level_sets(spec))
    k = data.draw(st.integers(1, 3))
    ns = sorted(data.draw(st.sets(st.integers(0, 30), min_size=1, max_size=4)))
    v = Vector((k,))
    assert joint_profile(spec, A, v, ns).values() == multiplicative_profile(spec, A, v, ns).values()


@given(small_specs(), st.data())
def test_monotone_in_the_set(spec, data):
    B = data.draw(level_sets(spec))
    sub = data.draw(st.lists(st.sampled_from(B.heights), min_size=1, unique=True))
    A = LevelSet(B.column, tuple(sub))
    v = Vector(tuple(sorted(data.draw(st.sets(st.integers(1, 4), min_size=1, max_size=3)))))
    ns = sorted(data.draw(st.sets(st.integers(0, 40), min_size=1, max_size=4)))
    for a, b in zip(joint_profile(spec, A, v, ns).values(), joint_profile(spec, B, v, ns).values()):
        assert a.value <= b.value


@given(small_specs(), st.data())
def test_normalization_identity(spec, data):
    A = data.draw(level_sets(spec, max_column=1))
    raw = data.draw(st.lists(st.integers(-3, 3).filter(bool), min_size=2, max_size=3, unique=True))
    assume(min(raw) < 0)
    n = data.draw(st.integers(1, 6))
    w, _ = normalize_vector(raw)
    right = measure_at_resolution(spec, A, [wi * n for wi in w])
    # left side on the descendants of A at a depth resolving the normalized shifts:
    # x with x + v_i n in D for all i, reindexed so the smallest shift lands on 0
    N = resolve_depth(spec, A, [wi * n for wi in w]).depth
    D = push_to_column(spec, A, N).heights
    left = brute_count(D, [vi * n for vi in raw]) * spec.width(N)
    assert right.value == left


def test_witness_hk(hk, I0):
    series = [(hk.height(k), measure_at_resolution(hk, I0, [hk.height(k)])) for k in range(5)]
    w = witness_pair_search(hk, I0, series, 2, 0)
    assert w.bound == Fraction(1, 10)
    assert w.n > w.m and w.value.lower >= Fraction(1, 10)


def test_witness_degenerate_window(hk, I0):
    series = [(4, measure_at_resolution(hk, I0, [4]))]
    w = witness_pair_search(hk, I0, series, 0, 0)
    assert w.n == w.m == 0 and w.value == series[0][1]


def test_witness_precondition(e42, I0):
    series = [(m, measure_at_resolution(e42, I0, [m])) for m in range(1, 6)]
    with pytest.raises(ValueError, match="precondition"):
        witness_pair_search(e42, I0, series, 2, 0)
    with pytest.raises(ValueError):
        witness_pair_search(e42, I0, series[:3], 2, 0)


def test_witness_example41(I0):
    spec = build_example41((1, 2))
    series = [(spec.height(k), measure_at_resolution(spec, I0, [spec.height(k)])) for k in range(5)]
    w = witness_pair_search(spec, I0, series, 2, 0)
    assert w.value.lower >= w.bound
    direct = measure_at_resolution(spec, I0, [series[w.m][0], series[w.n][0]])
    assert direct == w.value


@st.composite
def stacked_specs(draw):
    # copies stacked without gaps except above the last one, so h_k-overlaps stay large
    head = []
    for _ in range(draw(st.integers(1, 3))):
        r = draw(st.integers(2, 3))
        head.append(Stage(r, (0,) * (r - 1) + (draw(st.integers(0, 5)),)))
    return hk_tail_spec(head)


@given(stacked_specs(), st.data())
def test_pigeonhole_witness_property(spec, data):
    A = data.draw(level_sets(spec, max_column=1))
    M = data.draw(st.integers(1, 2))
    N = A.column
    series = [(spec.height(k), measure_at_resolution(spec, A, [spec.height(k)]))
              for k in range(N + 2 * M + 1)]
    mu = A.measure(spec)
    assume(all(p.lower >= mu / M for _, p in series[N:]))
    try:
        w = witness_pair_search(spec, A, series, M, N)
    except WitnessAnomaly:  # pragma: no cover - would refute the pigeonhole bound
        pytest.fail("pigeonhole bound not met")
    assert w.bound == mu / comb(2 * M + 1, 2) and w.value.lower >= w.bound


def test_certify_example41():
    spec = build_example41((1, 2))
    vd = certify_v_alpha_lower(spec, Vector((1, 2)), heights_rule, 4, columns=[0, 1, 2])
    assert vd.kind == POSITIVE and vd.bound >= Fraction(1, 3)


def test_certify_hk(hk):
    vd = certify_v_alpha_lower(hk, Vector((1,)), heights_rule, 4)
    assert vd.kind == POSITIVE and vd.bound >= Fraction(1, 2)


def test_certify_rejects_constant_rule(hk):
    with pytest.raises(ValueError):
        certify_v_alpha_lower(hk, Vector((1,)), lambda spec, m: 0, 3)


def test_certify_zero_is_inconclusive(e42):
    vd = certify_v_alpha_lower(e42, Vector((1, 2)), lambda spec, m: m + 1, 2, columns=[0])
    assert vd.kind == INCONCLUSIVE and vd.bound == 0
