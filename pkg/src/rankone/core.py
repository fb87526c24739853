"""Columns, descendants and exact intersection measures for rank-one
cutting-and-stacking constructions.

A construction starts from a single level of width ``initial_width``.  Stage
``n`` cuts column ``C_n`` into ``r`` equal subcolumns, puts ``spacers[i]`` new
levels on top of subcolumn ``i`` and stacks left under right.  Heights are
Python ints and widths are :class:`fractions.Fraction`, so every measure below
is exact.
"""

from __future__ import annotations

import threading
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod
from typing import Any, Callable, Iterable, Sequence

DEFAULT_CARDINALITY_BUDGET = 2**20
DEFAULT_DEPTH_CAP = 48
DEFAULT_NODE_BUDGET = 5_000_000


class SpecIncompleteError(LookupError):
    """The construction cannot produce a requested stage."""


class ResourceError(RuntimeError):
    """A cardinality or work budget was exceeded."""


@dataclass(frozen=True)
class Stage:
    r: int
    spacers: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "spacers", tuple(int(s) for s in self.spacers))
        if self.r < 2:
            raise ValueError(f"cut count must be >= 2, got {self.r}")
        if len(self.spacers) != self.r:
            raise ValueError(
                f"expected {self.r} spacer counts, got {len(self.spacers)}")
        if any(s < 0 for s in self.spacers):
            raise ValueError(f"spacer counts must be non-negative: {self.spacers}")

    def offsets(self, h: int) -> tuple[int, ...]:
        """Base heights of the ``r`` copies of a height-``h`` column after stacking."""
        out = []
        acc = 0
        for i in range(self.r):
            out.append(acc)
            acc += h + self.spacers[i]
        return tuple(out)

    def next_height(self, h: int) -> int:
        return self.r * h + sum(self.spacers)


# rule(n, heights) -> Stage, where heights == (h_0, ..., h_n)
StageRule = Callable[[int, tuple[int, ...]], Stage]


class ConstructionSpec:
    """A cutting-and-stacking recipe.

    Either ``stages`` (a finite explicit list) or ``rule`` (a deterministic
    function of the stage index and the heights computed so far) must be
    given.  Stages are produced lazily and memoized; the memo is the only
    mutable state and is guarded by a lock.
    """

    def __init__(
        self,
        stages: Sequence[Stage] | None = None,
        rule: StageRule | None = None,
        initial_width: Fraction | int | str = 1,
        name: str = "custom",
        params: dict[str, Any] | None = None,
    ) -> None:
        if (stages is None) == (rule is None):
            raise ValueError("give exactly one of stages= or rule=")
        self.initial_width = Fraction(initial_width)
        if self.initial_width <= 0:
            raise ValueError("initial_width must be positive")
        self.name = name
        self.params = dict(params or {})
        self.metadata: dict[str, Any] = {}
        self._explicit = tuple(stages) if stages is not None else None
        self._rule = rule
        self._stages: list[Stage] = []
        self._heights: list[int] = [1]
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"ConstructionSpec(name={self.name!r}, params={self.params!r})"

    @property
    def is_finite(self) -> bool:
        return self._explicit is not None

    def _extend(self, n: int) -> None:
        # make stages 0..n-1 available
        with self._lock:
            while len(self._stages) < n:
                m = len(self._stages)
                if self._explicit is not None:
                    if m >= len(self._explicit):
                        raise SpecIncompleteError(
                            f"{self.name}: only {len(self._explicit)} stages defined, "
                            f"stage {m} requested")
                    st = self._explicit[m]
                else:
                    try:
                        st = self._rule(m, tuple(self._heights))
                    except (SpecIncompleteError, ResourceError):
                        raise
                    except Exception as exc:
                        raise SpecIncompleteError(
                            f"{self.name}: generator failed at stage {m}: {exc}") from exc
                    if not isinstance(st, Stage):
                        raise SpecIncompleteError(
                            f"{self.name}: generator returned {type(st).__name__} at stage {m}")
                self._heights.append(st.next_height(self._heights[-1]))
                self._stages.append(st)

    def stage(self, n: int) -> Stage:
        if n < 0:
            raise ValueError("stage index must be >= 0")
        self._extend(n + 1)
        return self._stages[n]

    def height(self, n: int) -> int:
        if n < 0:
            raise ValueError("column index must be >= 0")
        self._extend(n)
        return self._heights[n]

    def heights(self, n: int) -> tuple[int, ...]:
        """``(h_0, ..., h_n)``."""
        self._extend(n)
        return tuple(self._heights[: n + 1])

    def width(self, n: int) -> Fraction:
        self._extend(n)
        return self.initial_width / prod(s.r for s in self._stages[:n])

    def offsets(self, n: int) -> tuple[int, ...]:
        """Base offsets of the copies of ``C_n`` inside ``C_{n+1}``."""
        return self.stage(n).offsets(self.height(n))


@dataclass(frozen=True)
class ColumnStats:
    n: int
    height: int
    level_width: Fraction
    total_measure: Fraction


def column_stats(spec: ConstructionSpec, n: int) -> ColumnStats:
    h = spec.height(n)
    w = spec.width(n)
    return ColumnStats(n, h, w, h * w)


@dataclass(frozen=True)
class Level:
    column: int
    height_index: int


@dataclass(frozen=True)
class LevelSet:
    column: int
    heights: tuple[int, ...]

    def __post_init__(self) -> None:
        hs = tuple(sorted(set(int(h) for h in self.heights)))
        if hs and hs[0] < 0:
            raise ValueError("heights must be non-negative")
        object.__setattr__(self, "heights", hs)

    @classmethod
    def of_level(cls, level: Level) -> LevelSet:
        return cls(level.column, (level.height_index,))

    @classmethod
    def whole_column(cls, spec: ConstructionSpec, n: int) -> LevelSet:
        return cls(n, tuple(range(spec.height(n))))

    def check(self, spec: ConstructionSpec) -> None:
        if self.heights and self.heights[-1] >= spec.height(self.column):
            raise ValueError(
                f"height {self.heights[-1]} outside column {self.column} "
                f"of height {spec.height(self.column)}")

    def measure(self, spec: ConstructionSpec) -> Fraction:
        return len(self.heights) * spec.width(self.column)


def base_set(level: Level | LevelSet) -> LevelSet:
    return LevelSet.of_level(level) if isinstance(level, Level) else level


@dataclass(frozen=True)
class MeasureBound:
    lower: Fraction
    upper: Fraction

    def __post_init__(self) -> None:
        lo, hi = Fraction(self.lower), Fraction(self.upper)
        if not 0 <= lo <= hi:
            raise ValueError(f"invalid bound [{lo}, {hi}]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def exact(cls, value: Fraction | int) -> MeasureBound:
        return cls(Fraction(value), Fraction(value))

    @property
    def resolved(self) -> bool:
        return self.lower == self.upper

    @property
    def value(self) -> Fraction:
        if not self.resolved:
            raise ValueError(f"unresolved bound [{self.lower}, {self.upper}]")
        return self.lower

    def __mul__(self, other: MeasureBound) -> MeasureBound:
        return MeasureBound(self.lower * other.lower, self.upper * other.upper)

    def __str__(self) -> str:
        if self.resolved:
            return str(self.lower)
        return f"[{self.lower}, {self.upper}]"


@dataclass(frozen=True)
class DescendantSet:
    source: Level
    target_column: int
    base: int
    stage_offsets: tuple[tuple[int, ...], ...] = field(default=())

    @property
    def cardinality(self) -> int:
        return prod(len(o) for o in self.stage_offsets)

    @property
    def max_element(self) -> int:
        return self.base + sum(o[-1] for o in self.stage_offsets)

    def materialize(self, budget: int = DEFAULT_CARDINALITY_BUDGET) -> list[int]:
        return _sumset([self.base], self.stage_offsets, budget)


def _sumset(start: Sequence[int], stage_offsets: Iterable[Sequence[int]],
            budget: int) -> list[int]:
    stage_offsets = list(stage_offsets)
    size = len(start) * prod(len(o) for o in stage_offsets)
    if size > budget:
        raise ResourceError(f"materializing {size} descendants exceeds budget {budget}")
    cur = list(start)
    for offs in stage_offsets:
        # each offset step exceeds the span of cur, so the result stays sorted
        cur = [o + x for o in offs for x in cur]
    return cur


def descendants(spec: ConstructionSpec, level: Level, N: int) -> DescendantSet:
    if N < level.column:
        raise ValueError(f"target column {N} precedes source column {level.column}")
    if not 0 <= level.height_index < spec.height(level.column):
        raise ValueError(f"{level} is not a level of column {level.column}")
    offs = tuple(spec.offsets(m) for m in range(level.column, N))
    return DescendantSet(level, N, level.height_index, offs)


def materialize(d: DescendantSet, budget: int = DEFAULT_CARDINALITY_BUDGET) -> list[int]:
    return d.materialize(budget)


def push_to_column(spec: ConstructionSpec, A: LevelSet, N: int,
                   budget: int = DEFAULT_CARDINALITY_BUDGET) -> LevelSet:
    if N < A.column:
        raise ValueError(f"target column {N} precedes column {A.column}")
    A.check(spec)
    if N == A.column:
        return A
    offs = [spec.offsets(m) for m in range(A.column, N)]
    # levels of A are disjoint, so their descendant sets are too
    heights = sorted(_sumset(A.heights, offs, budget))
    return LevelSet(N, tuple(heights))


# ---------------------------------------------------------------------------
# counting kernels
#
# D = B + O_c + ... + O_{N-1} with every element uniquely represented, so the
# number of x in D with x + k_i in D for all i equals the number of digit
# tuples realizing the differences k_i.  _TupleCounter walks the stages from
# the top, pruning with the span of the stages below.


class _TupleCounter:
    def __init__(self, bottom: Sequence[int], stages: Sequence[Sequence[int]],
                 node_budget: int) -> None:
        self.bottom = list(bottom)
        self.bottom_set = set(bottom)
        self.stages = [list(o) for o in stages]
        # span[t] = max spread of the sumset formed by bottom and stages[:t]
        span = [self.bottom[-1] - self.bottom[0]]
        for o in self.stages:
            span.append(span[-1] + o[-1] - o[0])
        self.span = span
        self.memo: dict[tuple[int, tuple[int, ...]], int] = {}
        self.nodes = 0
        self.node_budget = node_budget

    def count(self, shifts: tuple[int, ...]) -> int:
        if any(abs(k) > self.span[-1] for k in shifts):
            return 0
        return self._count(len(self.stages), shifts)

    def _count(self, t: int, rem: tuple[int, ...]) -> int:
        if t == 0:
            bs = self.bottom_set
            return sum(1 for b in self.bottom if all(b + k in bs for k in rem))
        key = (t, rem)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.nodes += 1
        if self.nodes > self.node_budget:
            raise ResourceError(f"counting kernel exceeded {self.node_budget} nodes")
        offs = self.stages[t - 1]
        below = self.span[t - 1]
        total = 0
        for o0 in offs:
            choices: list[list[int]] = []
            for k in rem:
                lo = bisect_left(offs, o0 + k - below)
                hi = bisect_right(offs, o0 + k + below)
                if lo == hi:
                    break
                choices.append([k - (o - o0) for o in offs[lo:hi]])
            else:
                total += self._product(t - 1, choices, 0, ())
        self.memo[key] = total
        return total

    def _product(self, t: int, choices: list[list[int]], i: int,
                 acc: tuple[int, ...]) -> int:
        if i == len(choices):
            return self._count(t, acc)
        return sum(self._product(t, choices, i + 1, acc + (c,)) for c in choices[i])


def _count_above(bottom: Sequence[int], stages: Sequence[Sequence[int]],
                 threshold: int) -> int:
    """Number of elements of bottom + stages strictly greater than ``threshold``."""
    mins = [bottom[0]]
    maxs = [bottom[-1]]
    for o in stages:
        mins.append(mins[-1] + o[0])
        maxs.append(maxs[-1] + o[-1])
    sizes = [len(bottom)]
    for o in stages:
        sizes.append(sizes[-1] * len(o))

    def rec(t: int, thr: int) -> int:
        # elements of the partial sumset of level t that exceed thr
        if thr < mins[t]:
            return sizes[t]
        if thr >= maxs[t]:
            return 0
        if t == 0:
            return len(bottom) - bisect_right(bottom, thr)
        return sum(rec(t - 1, thr - o) for o in stages[t - 1])

    return rec(len(stages), threshold)


def _shift_key(shifts: Iterable[int]) -> tuple[int, ...]:
    ks = []
    for k in shifts:
        k = int(k)
        if k < 0:
            raise ValueError(f"negative shift {k}; normalize the vector first")
        ks.append(k)
    if not ks:
        raise ValueError("shifts must be non-empty")
    return tuple(sorted(set(k for k in ks if k)))


def intersection_measure(
    spec: ConstructionSpec,
    A: LevelSet,
    shifts: Sequence[int],
    N: int,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> MeasureBound:
    """Exact enclosure of ``mu(A ∩ T^k1 A ∩ ... ∩ T^kj A)`` read off column ``N``.

    A descendant ``x`` of ``A`` counts when ``x + k`` is a descendant for every
    shift ``k``.  Descendants with ``x + max(shifts) > h_N - 1`` are not yet
    resolved at depth ``N`` and widen the upper bound by one level each.
    """
    if N < A.column:
        raise ValueError(f"depth {N} precedes column {A.column}")
    A.check(spec)
    ks = _shift_key(shifts)
    if not A.heights:
        return MeasureBound.exact(0)
    w = spec.width(N)
    if not ks:
        return MeasureBound.exact(A.measure(spec))
    stages = [spec.offsets(m) for m in range(A.column, N)]
    hN = spec.height(N)
    K = ks[-1]
    hits = _TupleCounter(A.heights, stages, node_budget).count(ks)
    unresolved = _count_above(A.heights, stages, hN - 1 - K)
    return MeasureBound(hits * w, (hits + unresolved) * w)


@dataclass(frozen=True)
class Resolution:
    depth: int
    resolved: bool


def max_descendant(spec: ConstructionSpec, A: LevelSet, N: int) -> int:
    return A.heights[-1] + sum(spec.offsets(m)[-1] for m in range(A.column, N))


def resolve_depth(spec: ConstructionSpec, A: LevelSet, shifts: Sequence[int],
                  depth_cap: int = DEFAULT_DEPTH_CAP) -> Resolution:
    """Smallest depth at which every descendant of ``A`` can be moved by all shifts."""
    ks = _shift_key(shifts)
    K = ks[-1] if ks else 0
    if not A.heights:
        return Resolution(A.column, True)
    top = A.heights[-1]
    N = A.column
    while True:
        if top + K <= spec.height(N) - 1:
            return Resolution(N, True)
        if N >= depth_cap:
            return Resolution(N, False)
        top += spec.offsets(N)[-1]
        N += 1


def measure_at_resolution(spec: ConstructionSpec, A: LevelSet, shifts: Sequence[int],
                          depth_cap: int = DEFAULT_DEPTH_CAP,
                          node_budget: int = DEFAULT_NODE_BUDGET) -> MeasureBound:
    res = resolve_depth(spec, A, shifts, depth_cap)
    return intersection_measure(spec, A, shifts, res.depth, node_budget)
