"""Stage generators for the constructions studied here.

Every builder returns a :class:`ConstructionSpec` driven by a pure rule
``(n, heights) -> Stage``; parameters are recorded in ``spec.params`` so the
CLI can rebuild the same spec from JSON.
"""

from __future__ import annotations

from fractions import Fraction
from math import ceil
from typing import Any, Callable, Sequence

from .analysis import Vector, joint_profile
from .core import (
    ConstructionSpec,
    LevelSet,
    MeasureBound,
    Stage,
    intersection_measure,
    resolve_depth,
)

PatternRule = Callable[[int], bool]
GrowthRule = Callable[[int, int, int], int]   # (m, H_m, h_m) -> minimum h_{m+1}
SequenceRule = Callable[[int], int]


def _as_vector(v: Vector | Sequence[int]) -> Vector:
    return v if isinstance(v, Vector) else Vector(tuple(v))


def pattern_spacers(v: Vector, h: int) -> list[int]:
    """Spacers above the first ``d`` subcolumns so the copies start at ``0, v1*h, ..., vd*h``."""
    prev = 0
    out = []
    for vi in v:
        out.append((vi - prev - 1) * h)
        prev = vi
    return out


def every_stage(n: int) -> bool:
    return True


def build_example41(v: Vector | Sequence[int], pattern: PatternRule = every_stage,
                    tail_factor: int | None = None, filler_factor: int = 4) -> ConstructionSpec:
    """``d+1`` copies at relative heights ``v_i h_n`` on pattern stages, an
    ``r=2`` filler with ``filler_factor*h_n`` spacers elsewhere."""
    v = _as_vector(v)
    tail = v[-1] + 1 if tail_factor is None else tail_factor

    def rule(n: int, hs: tuple[int, ...]) -> Stage:
        h = hs[n]
        if pattern(n):
            return Stage(v.d + 1, (*pattern_spacers(v, h), tail * h))
        return Stage(2, (0, filler_factor * h))

    spec = ConstructionSpec(rule=rule, name="example41",
                            params={"v": list(v), "tail_factor": tail,
                                    "filler_factor": filler_factor})
    spec.metadata["guarantee"] = "pattern offsets {0, v_i h_n} recur at every pattern stage"
    return spec


def build_example42() -> ConstructionSpec:
    def rule(n: int, hs: tuple[int, ...]) -> Stage:
        h = hs[n]
        return Stage(4, (0, 3 * h, h, 8 * h))

    spec = ConstructionSpec(rule=rule, name="example42", params={})
    spec.metadata["guarantee"] = "bases {0, 1, 5, 7} h_n at every stage"
    return spec


def example43_constants(v: Vector) -> tuple[int, int]:
    """``(M, k)``: gap multiplier between subcolumn pairs and the tail multiplier."""
    d, v1, vd = v.d, v[0], v[-1]
    if Fraction(vd, v1) < d:
        raise ValueError(f"v={v} violates v_d/v_1 >= d: {vd}/{v1} < {d}")
    b1 = Fraction(vd, v1) * (vd + 1) * vd
    b2 = Fraction(d * (vd + 1) * v1, vd - v1 * (d - 1))
    M = ceil(max(b1, b2))
    # last block balances everything stacked below it
    k = 2 * d + sum(vi - 1 for vi in v) + (d - 1) * M
    return M, k


def build_example43(v: Vector | Sequence[int]) -> ConstructionSpec:
    """``2d`` subcolumns; ``(v_i - 1) h_n`` above subcolumn ``2i-1``, ``M h_n``
    above subcolumn ``2i`` and ``k h_n`` above the last one."""
    v = _as_vector(v)
    M, k = example43_constants(v)

    def rule(n: int, hs: tuple[int, ...]) -> Stage:
        h = hs[n]
        sp = []
        for i, vi in enumerate(v, start=1):
            sp.append((vi - 1) * h)
            sp.append((M if i < v.d else k) * h)
        return Stage(2 * v.d, tuple(sp))

    spec = ConstructionSpec(rule=rule, name="example43", params={"v": list(v)})
    spec.metadata.update({"M": M, "k": k})
    return spec


def build_hk_skyscraper(c_rule: Callable[[int, int], int] | None = None,
                        name: str = "hk_skyscraper",
                        params: dict[str, Any] | None = None) -> ConstructionSpec:
    """Two halves, ``c_n`` spacers on the right one; default ``c_n = 2 h_n``."""
    c_rule = c_rule or (lambda n, h: 2 * h)

    def rule(n: int, hs: tuple[int, ...]) -> Stage:
        c = c_rule(n, hs[n])
        if c < 0:
            raise ValueError(f"c_{n} = {c} is negative")
        return Stage(2, (0, c))

    spec = ConstructionSpec(rule=rule, name=name, params=params or {})
    spec.metadata["guarantee"] = "halves at offsets {0, h_n} at every stage"
    return spec


# ---------------------------------------------------------------------------
# adaptive skyscraper avoiding {a_k}, {b_k}

def signed_digits(z: int, heights: Sequence[int]) -> tuple[int, ...] | None:
    """Digits ``e_i in {-1, 0, 1}`` with ``z = sum e_i h_i``, or None.

    Greedy from the top; exact when each height exceeds twice the sum of the
    ones below (true under ``h_{i+1} >= 4 h_i``).
    """
    below = [0]
    for h in heights:
        below.append(below[-1] + h)
    digits = [0] * len(heights)
    for i in range(len(heights) - 1, -1, -1):
        if abs(z) > below[i]:
            e = 1 if z > 0 else -1
            digits[i] = e
            z -= e * heights[i]
    return tuple(digits) if z == 0 else None


def in_delta(z: int, heights: Sequence[int]) -> bool:
    return signed_digits(z, heights) is not None


def _terms_upto(seq: SequenceRule, limit: int) -> list[tuple[int, int]]:
    """``(k, seq(k))`` for ``k >= 1`` while ``seq(k) <= limit``."""
    out = []
    k = 1
    prev = 0
    while True:
        try:
            val = int(seq(k))
        except Exception as exc:
            raise ValueError(f"sequence not evaluable at k={k}: {exc}") from exc
        if val <= prev:
            raise ValueError(f"sequence must be positive and strictly increasing (k={k})")
        if val > limit:
            return out
        out.append((k, val))
        prev = val
        k += 1


def build_prop64_adaptive(a: SequenceRule, b: SequenceRule, horizon: int,
                          params: dict[str, Any] | None = None) -> ConstructionSpec:
    """Skyscraper whose spacer counts keep, for each ``k``, at most two of
    ``a_k, b_k, a_k + b_k`` in the difference set of the base level.

    Stage ``n`` picks ``c_n`` starting at ``3 h_n``: if exactly one of
    ``a_k, b_k`` is already a signed sum of ``h_0..h_n``, the other one must
    stay out once ``h_{n+1}`` joins.  Past ``horizon`` the rule keeps
    producing plain ``c_n = 3 h_n`` stages so deeper columns stay available
    for resolving large shifts; those stages only add signed sums larger than
    ``h_horizon``, so memberships below it are final.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    _terms_upto(a, 1)
    _terms_upto(b, 1)

    def rule(n: int, hs: tuple[int, ...]) -> Stage:
        h = hs[n]
        if n >= horizon:
            return Stage(2, (0, 3 * h))
        reach = sum(hs)
        a_terms = dict(_terms_upto(a, reach))
        b_terms = dict(_terms_upto(b, reach))
        targets = set()
        for k in set(a_terms) | set(b_terms):
            ia = k in a_terms and in_delta(a_terms[k], hs)
            ib = k in b_terms and in_delta(b_terms[k], hs)
            if ia and not ib:
                targets.add(int(b(k)))
            elif ib and not ia:
                targets.add(int(a(k)))
        c = 3 * h
        while True:
            nxt = hs + (2 * h + c,)
            if not any(in_delta(t, nxt) for t in targets):
                return Stage(2, (0, c))
            c += 1

    spec = ConstructionSpec(rule=rule, name="prop64_adaptive",
                            params=dict(params or {}, horizon=horizon))
    spec.metadata["horizon"] = horizon
    return spec


def build_fact62(k: int, period: int = 2, filler: bool = True,
                 filler_factor: int = 4) -> ConstructionSpec:
    """``k`` copies stacked with no spacers on stages ``n % period == 0``;
    ``r=2`` filler with ``filler_factor*h_n`` spacers on the others."""
    if k < 2:
        raise ValueError("k must be >= 2")

    def rule(n: int, hs: tuple[int, ...]) -> Stage:
        if not filler or n % period == 0:
            return Stage(k, (0,) * k)
        return Stage(2, (0, filler_factor * hs[n]))

    return ConstructionSpec(rule=rule, name="fact62_kcut",
                            params={"k": k, "period": period, "filler": filler,
                                    "filler_factor": filler_factor})


def default_growth(m: int, H: int, h: int) -> int:
    return (m + 1) * H


def _pattern_stage(offsets_rel: Sequence[int], h: int, target: int) -> Stage:
    """Copies at ``offsets_rel[j] * h`` plus a tail making ``h_{m+1} >= target``."""
    sp = [(offsets_rel[j + 1] - offsets_rel[j] - 1) * h for j in range(len(offsets_rel) - 1)]
    base = (offsets_rel[-1] + 1) * h
    return Stage(len(offsets_rel), (*sp, max(0, target - base)))


def build_thm72(v: Vector | Sequence[int], growth: GrowthRule = default_growth,
                name: str = "thm72") -> ConstructionSpec:
    """``d+1`` copies at ``{0, v_1 h_m, ..., v_d h_m}``; tail spacers give
    ``h_{m+1} >= growth(m, H_m, h_m)`` with ``H_m = sum_{k<=m} sum_i v_i h_k``."""
    v = _as_vector(v)
    rel = (0, *v)
    vsum = sum(v)

    def rule(m: int, hs: tuple[int, ...]) -> Stage:
        H = vsum * sum(hs)
        return _pattern_stage(rel, hs[m], growth(m, H, hs[m]))

    spec = ConstructionSpec(rule=rule, name=name, params={"v": list(v)})
    spec.metadata["guarantee"] = "offsets {0, v_i h_m} at every stage"
    return spec


def thm73_offsets(v: Vector) -> tuple[int, ...]:
    """Relative copy heights ``(v_d - v_{d-j})`` for ``j = 0..d`` (with ``v_0 = 0``)."""
    full = (0, *v)
    d = v.d
    return tuple(full[d] - full[d - j] for j in range(d + 1))


def build_thm73(v: Vector | Sequence[int], growth: GrowthRule = default_growth,
                offset_pattern: Sequence[int] | None = None,
                check_stages: int = 4) -> ConstructionSpec:
    """Copies at ``thm73_offsets(v) * h_m`` (or ``offset_pattern``).

    After building, the joint intersection of the base level along
    ``n = h_m`` for ``m < check_stages`` is computed.  If any value is zero the
    pattern does not witness v-positivity and the ``{0, v_i h_m}`` layout is
    used instead; ``spec.metadata`` records which.
    """
    v = _as_vector(v)
    rel = tuple(offset_pattern) if offset_pattern is not None else thm73_offsets(v)
    if rel[0] != 0 or any(b <= a for a, b in zip(rel, rel[1:])):
        raise ValueError(f"offset pattern {rel} must start at 0 and increase")
    vsum = sum(v)

    def make(pattern: tuple[int, ...]) -> ConstructionSpec:
        def rule(m: int, hs: tuple[int, ...]) -> Stage:
            H = vsum * sum(hs)
            return _pattern_stage(pattern, hs[m], growth(m, H, hs[m]))
        return ConstructionSpec(rule=rule, name="thm73",
                                params={"v": list(v), "offset_pattern": list(rel)})

    spec = make(rel)
    I = LevelSet(0, (0,))
    ns = [spec.height(m) for m in range(check_stages)]
    series = joint_profile(spec, I, v, ns)
    observed = [str(e.value) for e in series.entries]
    if all(e.value.lower > 0 for e in series.entries):
        spec.metadata.update({"pattern": "reversed-gaps", "offsets": list(rel),
                              "profile": observed,
                              "guarantee": "pattern recurs at every stage"})
        return spec
    fallback = make((0, *v))
    fallback.metadata.update({
        "pattern": "thm72-fallback", "offsets": [0, *v],
        "rejected_offsets": list(rel), "rejected_profile": observed,
        "profile": [str(e.value) for e in joint_profile(fallback, I, v, ns).entries],
        "guarantee": "pattern recurs at every stage"})
    return fallback


# ---------------------------------------------------------------------------
# family of vectors scheduled along prime powers

def prime_power_base(m: int) -> int | None:
    """``p`` if ``m = p^i`` with ``i >= 1``, else None."""
    if m < 2:
        return None
    p = 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            return p if m == 1 else None
        p += 1
    return m


def _primes():
    n = 2
    while True:
        if prime_power_base(n) == n:
            yield n
        n += 1


def cor74_schedule(family: Sequence[Vector], upto: int) -> dict[int, int]:
    """Stage index -> family index for prime-power stages ``<= upto``.

    The j-th prime (0-based) serves vector ``j mod len(family)``.
    """
    prime_index: dict[int, int] = {}
    gen = _primes()
    while not prime_index or max(prime_index) < upto:
        p = next(gen)
        prime_index[p] = len(prime_index)
    out = {}
    for m in range(upto + 1):
        p = prime_power_base(m)
        if p is not None:
            out[m] = prime_index[p] % len(family)
    return out


def build_cor74(family: Sequence[Vector | Sequence[int]],
                growth: GrowthRule = default_growth) -> ConstructionSpec:
    """Stage ``m = p^i`` uses the ``{0, V_j h_m}`` pattern of the vector
    assigned to ``p``; other stages are ``r=2`` fillers.  Tails give
    ``h_{m+1} >= growth(m, H_m, h_m)``, ``H_m`` summing every family component."""
    fam = [_as_vector(v) for v in family]
    if not fam:
        raise ValueError("family must be non-empty")
    total = sum(sum(v) for v in fam)

    def rule(m: int, hs: tuple[int, ...]) -> Stage:
        H = total * sum(hs)
        target = growth(m, H, hs[m])
        sched = cor74_schedule(fam, m)
        if m in sched:
            return _pattern_stage((0, *fam[sched[m]]), hs[m], target)
        return _pattern_stage((0, 1), hs[m], target)

    spec = ConstructionSpec(rule=rule, name="cor74",
                            params={"family": [list(v) for v in fam]})
    spec.metadata["schedule"] = "stage p^i uses the vector of prime p (family order, cycling)"
    return spec


def cyclic_extension_measure(spec: ConstructionSpec, A: LevelSet, n: int, k: int,
                             depth: int | None = None) -> MeasureBound:
    """``mu'(A ∩ T'^n A)`` for the ``k``-point cyclic extension, ``A`` inside one copy.

    ``T'^n`` moves copy ``i`` to copy ``i + n mod k`` and acts as ``S^{n // k}``
    on coordinates when ``k`` divides ``n``; otherwise the images are disjoint.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < 0:
        raise ValueError("n must be non-negative")
    if n % k:
        return MeasureBound.exact(0)
    shifts = [n // k]
    N = resolve_depth(spec, A, shifts).depth if depth is None else depth
    return intersection_measure(spec, A, shifts, N)
