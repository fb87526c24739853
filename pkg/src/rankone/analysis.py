"""Intersection profiles, zero-window verification and lower-bound certificates."""

from __future__ import annotations

from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Iterable, Sequence

from .core import (
    DEFAULT_CARDINALITY_BUDGET,
    DEFAULT_DEPTH_CAP,
    DEFAULT_NODE_BUDGET,
    ConstructionSpec,
    LevelSet,
    MeasureBound,
    ResourceError,
    intersection_measure,
    push_to_column,
    resolve_depth,
)

POSITIVE = "positive-witnessed"
ZERO = "zero-on-window"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Vector:
    components: tuple[int, ...]

    def __post_init__(self) -> None:
        cs = tuple(int(c) for c in self.components)
        if not cs:
            raise ValueError("vector must have at least one component")
        if cs[0] < 1 or any(b <= a for a, b in zip(cs, cs[1:])):
            raise ValueError(
                f"{cs} is not in standard form (positive, strictly increasing)")
        object.__setattr__(self, "components", cs)

    @property
    def d(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int) -> int:
        return self.components[i]

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.components)) + ")"


def normalize_vector(raw: Sequence[int]) -> tuple[Vector, str]:
    """Reduce a vector of distinct nonzero integers to standard form.

    With ``v1`` the most negative component, the joint intersection along
    ``v`` equals the one along ``(v_j - v1 for j != 1) + (-v1,)``.
    """
    vals = [int(x) for x in raw]
    if not vals:
        raise ValueError("empty vector")
    if 0 in vals:
        raise ValueError("components must be nonzero")
    if len(set(vals)) != len(vals):
        raise ValueError(
            f"{tuple(vals)} has repeated components; redundant vectors are not "
            "in standard form and need separate treatment")
    if min(vals) > 0:
        return Vector(tuple(sorted(vals))), "already positive; sorted"
    v1 = min(vals)
    rest = list(vals)
    rest.remove(v1)
    w = [x - v1 for x in rest] + [-v1]
    if len(set(w)) != len(w):
        raise ValueError(f"reduction of {tuple(vals)} produced repeated components {w}")
    desc = (f"shifted by {-v1} (most negative component {v1}): "
            f"{tuple(vals)} -> {tuple(sorted(w))}")
    return Vector(tuple(sorted(w))), desc


@dataclass(frozen=True)
class SeriesEntry:
    n: int
    value: MeasureBound
    depth: int
    note: str = ""


@dataclass
class MeasureSeries:
    mode: str
    vector: Vector
    entries: list[SeriesEntry] = field(default_factory=list)

    def values(self) -> list[MeasureBound]:
        return [e.value for e in self.entries]

    @property
    def all_resolved(self) -> bool:
        return all(e.value.resolved and not e.note for e in self.entries)


def _entry(spec, A, shifts, n, depth_cap, node_budget) -> SeriesEntry:
    res = resolve_depth(spec, A, shifts, depth_cap)
    try:
        val = intersection_measure(spec, A, shifts, res.depth, node_budget)
    except ResourceError as exc:
        return SeriesEntry(n, MeasureBound(0, A.measure(spec)), res.depth, f"resource: {exc}")
    note = "" if res.resolved else "depth cap reached"
    return SeriesEntry(n, val, res.depth, note)


def _check_ns(ns: Sequence[int]) -> list[int]:
    ns = [int(n) for n in ns]
    if any(n < 0 for n in ns):
        raise ValueError("n must be non-negative")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("ns must be strictly increasing")
    return ns


def _parallel(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, items))


def joint_profile(spec: ConstructionSpec, A: LevelSet, v: Vector, ns: Sequence[int],
                  depth_cap: int = DEFAULT_DEPTH_CAP,
                  node_budget: int = DEFAULT_NODE_BUDGET,
                  threads: int = 1) -> MeasureSeries:
    ns = _check_ns(ns)
    entries = _parallel(
        lambda n: _entry(spec, A, [vi * n for vi in v], n, depth_cap, node_budget),
        ns, threads)
    return MeasureSeries("joint", v, entries)


def multiplicative_profile(spec: ConstructionSpec, A: LevelSet, v: Vector,
                           ns: Sequence[int],
                           depth_cap: int = DEFAULT_DEPTH_CAP,
                           node_budget: int = DEFAULT_NODE_BUDGET,
                           threads: int = 1) -> MeasureSeries:
    ns = _check_ns(ns)

    def one(n: int) -> SeriesEntry:
        parts = [_entry(spec, A, [vi * n], n, depth_cap, node_budget) for vi in v]
        val = MeasureBound.exact(1)
        for p in parts:
            val = val * p.value
        note = "; ".join(p.note for p in parts if p.note)
        return SeriesEntry(n, val, max(p.depth for p in parts), note)

    return MeasureSeries("multiplicative", v, _parallel(one, ns, threads))


@dataclass
class TypeVerdict:
    kind: str
    bound: Fraction | None = None
    witnesses: list[int] = field(default_factory=list)
    windows: list[tuple[int, int]] = field(default_factory=list)
    counterexample: int | None = None
    evidence: str = ""
    citation: str = ""
    note: str = ""


@dataclass(frozen=True)
class RangeCheck:
    zero: bool
    counterexample: int | None
    depth: int


def verify_zero_range(spec: ConstructionSpec, A: LevelSet, v: Vector, lo: int, hi: int,
                      depth_cap: int = DEFAULT_DEPTH_CAP,
                      budget: int = DEFAULT_CARDINALITY_BUDGET) -> RangeCheck:
    """Check ``mu(A ∩ T^{v1 m}A ∩ ... ∩ T^{vd m}A) == 0`` for every ``m`` in ``(lo, hi]``.

    Works on the materialized descendants at a depth where every shift up to
    ``v_d * hi`` is resolved, scanning only pairs ``(x, x + v1*m)`` inside D.
    Raises :class:`ResourceError` when the depth cap or budget is hit.
    """
    if lo < 0 or hi <= lo:
        raise ValueError(f"empty window ({lo}, {hi}]")
    res = resolve_depth(spec, A, [v[-1] * hi], depth_cap)
    if not res.resolved:
        raise ResourceError(f"window ({lo}, {hi}] not resolved by depth {res.depth}")
    D = push_to_column(spec, A, res.depth, budget).heights
    members = set(D)
    v1 = v[0]
    rest = v.components[1:]
    best: int | None = None
    for idx, x in enumerate(D):
        start = bisect_right(D, x + v1 * lo, lo=idx)
        stop = bisect_right(D, x + v1 * hi, lo=start)
        for j in range(start, stop):
            gap = D[j] - x
            if gap % v1:
                continue
            m = gap // v1
            if best is not None and m >= best:
                continue
            if all(x + vi * m in members for vi in rest):
                best = m
    return RangeCheck(best is None, best, res.depth)


def verify_zero_window(spec: ConstructionSpec, A: LevelSet, v: Vector, n: int,
                       depth_cap: int = DEFAULT_DEPTH_CAP,
                       budget: int = DEFAULT_CARDINALITY_BUDGET) -> TypeVerdict:
    """Exhaustively verify the joint intersection vanishes for ``m`` in ``(h_{n-1}, h_n]``."""
    if n < 1:
        raise ValueError("window index must be >= 1")
    lo, hi = spec.height(n - 1), spec.height(n)
    try:
        chk = verify_zero_range(spec, A, v, lo, hi, depth_cap, budget)
    except ResourceError as exc:
        return TypeVerdict(INCONCLUSIVE, note=str(exc))
    if chk.zero:
        return TypeVerdict(
            ZERO, bound=Fraction(0), windows=[(lo, hi)],
            evidence=f"exhaustive over m in ({lo}, {hi}] at depth {chk.depth}",
            citation="v-zero type for all columns lifts to v-zero type (theorem, not computed)")
    return TypeVerdict(INCONCLUSIVE, counterexample=chk.counterexample,
                       evidence=f"nonzero joint intersection at m={chk.counterexample}")


@dataclass(frozen=True)
class WitnessPair:
    n: int
    m: int
    value: MeasureBound
    bound: Fraction


class WitnessAnomaly(AssertionError):
    """No pair met the pigeonhole bound although the precondition held."""


def witness_pair_search(spec: ConstructionSpec, A: LevelSet,
                        series: Sequence[tuple[int, MeasureBound | Fraction]],
                        M: int, N: int,
                        depth_cap: int = DEFAULT_DEPTH_CAP,
                        node_budget: int = DEFAULT_NODE_BUDGET) -> WitnessPair:
    """Find ``n > m`` in ``[N, N + 2M]`` with a large triple intersection.

    ``series[k] = (a_k, mu(A ∩ T^{a_k} A))``.  If every pairwise value in the
    window is at least ``mu(A)/M``, inclusion-exclusion forces some pair to
    reach ``mu(A)/C(2M+1, 2)``.
    """
    if M < 0 or N < 0:
        raise ValueError("M and N must be non-negative")
    if N + 2 * M >= len(series):
        raise ValueError(f"series has {len(series)} terms, window needs {N + 2 * M + 1}")
    mu = A.measure(spec)
    window = range(N, N + 2 * M + 1)

    def low(x):
        return x.lower if isinstance(x, MeasureBound) else Fraction(x)

    if M == 0:
        a, p = series[N]
        val = intersection_measure(spec, A, [a], resolve_depth(spec, A, [a], depth_cap).depth,
                                   node_budget)
        return WitnessPair(N, N, val, Fraction(0))
    for k in window:
        if low(series[k][1]) < mu / M:
            raise ValueError(
                f"precondition fails at k={k}: {series[k][1]} < mu(A)/{M} = {mu / M}")
    bound = mu / comb(2 * M + 1, 2)
    best: WitnessPair | None = None
    for m in window:
        for n in window:
            if n <= m:
                continue
            shifts = [series[m][0], series[n][0]]
            val = intersection_measure(
                spec, A, shifts, resolve_depth(spec, A, shifts, depth_cap).depth, node_budget)
            if best is None or val.lower > best.value.lower:
                best = WitnessPair(n, m, val, bound)
    if best is None or best.value.lower < bound:
        raise WitnessAnomaly(
            f"no pair in window [{N}, {N + 2 * M}] reaches {bound}; best {best}")
    return best


SubsequenceRule = Callable[[ConstructionSpec, int], int]


def heights_rule(spec: ConstructionSpec, m: int) -> int:
    return spec.height(m)


def certify_v_alpha_lower(spec: ConstructionSpec, v: Vector, rule: SubsequenceRule, M: int,
                          columns: Iterable[int] | None = None,
                          stages: Iterable[int] | None = None,
                          depth_cap: int = DEFAULT_DEPTH_CAP,
                          node_budget: int = DEFAULT_NODE_BUDGET) -> TypeVerdict:
    """Minimal ratio ``mu(I ∩ T^{v1 n}I ∩ ...)/mu(I)`` over levels and ``n = rule(m)``.

    Every level ``I`` of each column ``c`` in ``columns`` (default ``0..M``) is
    tested at each stage ``m`` in ``stages`` (default ``0..M``) with ``m >= c``.
    """
    ms = list(range(M + 1)) if stages is None else sorted(stages)
    ns = [rule(spec, m) for m in ms]
    if any(n <= 0 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("subsequence rule must give strictly increasing positive n")
    cols = list(range(M + 1)) if columns is None else list(columns)
    ratio: Fraction | None = None
    for m, n in zip(ms, ns):
        shifts = [vi * n for vi in v]
        for c in cols:
            if c > m:
                continue
            for h in range(spec.height(c)):
                I = LevelSet(c, (h,))
                res = resolve_depth(spec, I, shifts, depth_cap)
                if not res.resolved:
                    return TypeVerdict(INCONCLUSIVE, witnesses=ns,
                                       note=f"level {h} of C_{c} unresolved at n={n}")
                try:
                    val = intersection_measure(spec, I, shifts, res.depth, node_budget)
                except ResourceError as exc:
                    return TypeVerdict(INCONCLUSIVE, witnesses=ns, note=str(exc))
                r = val.value / I.measure(spec)
                ratio = r if ratio is None else min(ratio, r)
    if ratio is None:
        return TypeVerdict(INCONCLUSIVE, witnesses=ns, note="no level tested")
    guarantee = spec.metadata.get("guarantee", "")
    if ratio == 0:
        return TypeVerdict(INCONCLUSIVE, bound=ratio, witnesses=ns,
                           note="some level has zero joint intersection along the rule")
    return TypeVerdict(
        POSITIVE, bound=ratio, witnesses=ns,
        evidence=f"min ratio over levels of columns {cols} at stages {ms}",
        citation="uniform bound on levels along a fixed subsequence lifts to all sets",
        note=guarantee)
