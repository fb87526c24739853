"""Acceptance criteria, one test each.  Every test prints a single
``CRITERION <k>: PASS|FAIL - <summary>`` line (visible under ``pytest -v``)."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations, product
from math import prod

import pytest

from rankone.analysis import ZERO, Vector, verify_zero_range, verify_zero_window, witness_pair_search
from rankone.builders import (
    build_cor74,
    build_example41,
    build_example42,
    build_example43,
    build_fact62,
    build_hk_skyscraper,
    build_prop64_adaptive,
    build_thm72,
    build_thm73,
    in_delta,
)
from rankone.core import (
    Level,
    LevelSet,
    MeasureBound,
    Stage,
    descendants,
    intersection_measure,
    measure_at_resolution,
    push_to_column,
    resolve_depth,
)
from rankone.oracle import DEFAULT_HEIGHT_BUDGET, oracle_intersection
from rankone.vectors import decide_le_m, decide_le_p

from conftest import brute_measure, hk_tail_spec

I0 = LevelSet(0, (0,))


@pytest.fixture
def report(capsys):
    def emit(k: int, ok: bool, summary: str) -> None:
        with capsys.disabled():
            print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'} - {summary}")
        assert ok, summary
    return emit


def test_criterion_01_four_copy_zero_windows(report):
    spec = build_example42()
    v = Vector((1, 2))
    head = verify_zero_range(spec, I0, v, 0, 1)
    kinds = [verify_zero_window(spec, I0, v, n).kind for n in (1, 2, 3, 4)]
    ok = head.zero and kinds == [ZERO] * 4
    report(1, ok, f"mu(I ∩ T^m I ∩ T^2m I) = 0 for all m in [1, {spec.height(4)}]; windows {kinds}")


def test_criterion_02_four_copy_pairwise(report):
    spec = build_example42()
    mu = I0.measure(spec)
    worst = None
    ok = True
    for n in range(6):
        h = spec.height(n)
        a = measure_at_resolution(spec, I0, [h])
        b = measure_at_resolution(spec, I0, [2 * h])
        ok &= a.resolved and b.resolved and a.value >= mu / 4 and b.value >= mu / 4
        ok &= (a * b).value >= mu ** 2 / 16
        worst = min(a.value, b.value) if worst is None else min(worst, a.value, b.value)
    report(2, ok, f"min pairwise overlap over n=0..5 is {worst} >= 1/4")


def test_criterion_03_tailored_pattern_bound(report):
    failures = []
    checked = 0
    for v in ((1, 2), (1, 2, 3), (2, 5)):
        spec = build_example41(v)
        bound_ratio = Fraction(1, len(v) + 1)
        for n in range(6):
            shifts = [vi * spec.height(n) for vi in v]
            for c in range(min(n, 2) + 1):
                for j in range(spec.height(c)):
                    I = LevelSet(c, (j,))
                    val = measure_at_resolution(spec, I, shifts)
                    checked += 1
                    if not (val.resolved and val.value >= bound_ratio * I.measure(spec)):
                        failures.append((v, n, c, j, str(val)))
    report(3, not failures,
           f"{checked} (v, stage, level) cases meet mu(I)/(d+1); failures {failures[:3]}")


def test_criterion_04_skyscraper_overlap(report):
    spec = build_hk_skyscraper()
    ok = True
    cases = 0
    for n in range(9):
        h = spec.height(n)
        for c in range(min(n, 2) + 1):
            for j in range(spec.height(c)):
                I = LevelSet(c, (j,))
                val = measure_at_resolution(spec, I, [h])
                ok &= val.resolved and val.value >= I.measure(spec) / 2
                cases += 1
    report(4, ok, f"mu(I ∩ T^h_n I) >= mu(I)/2 for n <= 8 on {cases} level cases")


def test_criterion_05_adaptive_skyscraper(report):
    a = lambda k: k * k
    b = lambda k: 2 ** k
    spec = build_prop64_adaptive(a, b, horizon=8)
    limit = spec.height(8)
    ok = True
    k = 1
    while a(k) + b(k) <= limit:
        joint = measure_at_resolution(spec, I0, [a(k), a(k) + b(k)])
        triple = prod((measure_at_resolution(spec, I0, [x]) for x in (a(k), b(k), a(k) + b(k))),
                      start=MeasureBound.exact(1))
        ok &= joint == MeasureBound.exact(0) and triple == MeasureBound.exact(0)
        k += 1
    report(5, ok and k > 2, f"joint and triple product exactly 0 for k = 1..{k - 1} (h_8 = {limit})")


def test_criterion_06_witness(report):
    spec = build_hk_skyscraper()
    series = [(spec.height(k), measure_at_resolution(spec, I0, [spec.height(k)])) for k in range(5)]
    w = witness_pair_search(spec, I0, series, 2, 0)
    direct = measure_at_resolution(spec, I0, [series[w.m][0], series[w.n][0]])
    ok = w.bound == Fraction(1, 10) and w.value.lower >= w.bound and direct == w.value
    report(6, ok, f"pair (n={w.n}, m={w.m}) has triple measure {w.value} >= 1/10")


def test_criterion_07_tailored_product_bound(report):
    spec = build_thm72((1, 2))
    ok = True
    vals = []
    for m in range(6):
        h = spec.height(m)
        p = measure_at_resolution(spec, I0, [h]) * measure_at_resolution(spec, I0, [2 * h])
        ok &= p.resolved and p.value >= Fraction(1, 9)
        vals.append(str(p))
    report(7, ok, f"products at n = h_0..h_5: {vals} >= 1/9")


def test_criterion_08_orders(report):
    V = lambda *xs: Vector(xs)
    ok = decide_le_p(V(1, 2), V(1, 2, 3))[0]
    ok &= not decide_le_p(V(1, 2), V(1, 3))[0]
    m_ok, wit = decide_le_m(V(1, 2), V(1, 3))
    ok &= m_ok and wit.check(V(1, 2), V(1, 3))
    vs = [Vector(c) for d in (1, 2, 3) for c in combinations(range(1, 7), d)]
    pairs = 0
    for v, w in product(vs, vs):
        p, wp = decide_le_p(v, w)
        if p:
            m, wm = decide_le_m(v, w)
            ok &= m and wp.check(v, w) and wm.check(v, w)
        pairs += 1
    report(8, ok, f"fixed cases hold; le_p => le_m over {pairs} standard-form pairs")


def _battery():
    return [build_hk_skyscraper(), build_example42(), build_example41((1, 2)),
            build_example41((2, 5)), build_example43((1, 2)), build_thm72((1, 2)),
            build_thm73((1, 2, 3)), build_fact62(3),
            build_prop64_adaptive(lambda k: k * k, lambda k: 2 ** k, 8),
            build_cor74([(1, 2), (1, 3)])]


def test_criterion_09_oracle(report):
    rng = random.Random(2024)
    cases = 0
    mismatches = []
    for spec in _battery():
        depths = [N for N in range(6) if spec.height(N) <= DEFAULT_HEIGHT_BUDGET]
        cap = spec.height(min(3, depths[-1]))
        for c in range(4):
            Ns = [N for N in depths if N >= c]
            if not Ns:
                continue
            h = spec.height(c)
            levels = list(range(h)) if h <= 12 else sorted(rng.sample(range(h), 12))
            for j in levels:
                for _ in range(3):
                    A = LevelSet(c, (j,) if rng.random() < 0.7 else
                                 tuple(rng.sample(range(h), min(h, 3))))
                    N = rng.choice(Ns)
                    shifts = [rng.randint(0, cap) for _ in range(rng.randint(1, 3))]
                    core = intersection_measure(spec, A, shifts, N)
                    orc = oracle_intersection(spec, A, shifts, N)
                    cases += 1
                    if core != orc:
                        mismatches.append((spec.name, A, shifts, N, str(core), str(orc)))
    report(9, cases >= 500 and not mismatches,
           f"{cases} cases across {len(_battery())} builders, {len(mismatches)} mismatches")


def test_criterion_10_properties(report):
    rng = random.Random(7)
    ok = True
    checks = 0
    for trial in range(40):
        head = []
        for _ in range(3):
            r = rng.randint(2, 4)
            head.append(Stage(r, tuple(rng.randint(0, 3) for _ in range(r))))
        spec = hk_tail_spec(head)
        # height recurrence
        for n in range(6):
            s = spec.stage(n)
            ok &= spec.height(n + 1) == s.r * spec.height(n) + sum(s.spacers)
        # cardinality and measure conservation
        c = rng.randint(0, 2)
        N = c + rng.randint(0, 3)
        j = rng.randrange(spec.height(c))
        xs = descendants(spec, Level(c, j), N).materialize()
        ok &= len(set(xs)) == len(xs) == prod(spec.stage(m).r for m in range(c, N))
        ok &= spec.width(N) * len(xs) == spec.width(c)
        # depth stability and agreement with plain counting
        A = LevelSet(c, (j,))
        shifts = [rng.randint(0, 2 * spec.height(3)) for _ in range(rng.randint(1, 3))]
        d = resolve_depth(spec, A, shifts).depth
        base = intersection_measure(spec, A, shifts, d)
        ok &= base.resolved and intersection_measure(spec, A, shifts, d + 1) == base
        ok &= base.value == brute_measure(spec, A, shifts, d)
        # positivity iff difference-set membership (prod r <= 10^3), every n up to h_3
        if prod(s.r for s in head) <= 1000:
            J = LevelSet(0, (0,))
            h3 = spec.height(3)
            D = push_to_column(spec, J, resolve_depth(spec, J, [h3]).depth).heights
            diffs = {y - x for x in D for y in D}
            for n in range(1, h3 + 1):
                ok &= (measure_at_resolution(spec, J, [n]).lower > 0) == (n in diffs)
        checks += 1
    # unique signed representation under 4x growth
    for trial in range(20):
        extra = [rng.randint(2, 5) for _ in range(6)]
        sky = build_hk_skyscraper(lambda n, h, e=extra: e[n % len(e)] * h)
        hs = sky.heights(6)
        ok &= all(b >= 4 * a for a, b in zip(hs, hs[1:]))
        sums = [sum(e * h for e, h in zip(eps, hs)) for eps in product((-1, 0, 1), repeat=len(hs))]
        ok &= len(set(sums)) == len(sums)
        ok &= all(in_delta(s, hs) for s in sums)
    report(10, ok, f"{checks} random specs + 20 skyscrapers satisfy recurrence, conservation, "
                   "stability, difference-set positivity and unique representation")
