"""Brute-force recomputation of intersection measures.

Cuts and stacks actual real intervals, lays column ``C_N`` out height-major
(level ``i`` occupies ``[i*w_N, (i+1)*w_N)``), and intersects unions of
intervals exactly.  Shares no code with the descendant path in :mod:`core`
beyond reading the stage list.
"""

from __future__ import annotations

import threading
import weakref
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import ConstructionSpec, LevelSet, MeasureBound, ResourceError

DEFAULT_HEIGHT_BUDGET = 2**17

Interval = tuple[Fraction, Fraction]


def _normalize(intervals: Sequence[Interval]) -> list[Interval]:
    out: list[Interval] = []
    for a, b in sorted(i for i in intervals if i[0] < i[1]):
        if out and a <= out[-1][1]:
            if b > out[-1][1]:
                out[-1] = (out[-1][0], b)
        else:
            out.append((a, b))
    return out


def _intersect(xs: Sequence[Interval], ys: Sequence[Interval]) -> list[Interval]:
    out = []
    i = j = 0
    while i < len(xs) and j < len(ys):
        a = max(xs[i][0], ys[j][0])
        b = min(xs[i][1], ys[j][1])
        if a < b:
            out.append((a, b))
        if xs[i][1] < ys[j][1]:
            i += 1
        else:
            j += 1
    return out


def _subtract(xs: Sequence[Interval], ys: Sequence[Interval]) -> list[Interval]:
    out = []
    for a, b in xs:
        cur = a
        for c, d in ys:
            if d <= cur or c >= b:
                continue
            if c > cur:
                out.append((cur, c))
            cur = max(cur, d)
        if cur < b:
            out.append((cur, b))
    return out


def _length(xs: Sequence[Interval]) -> Fraction:
    return sum((b - a for a, b in xs), Fraction(0))


@dataclass(frozen=True)
class IntervalMap:
    """Piecewise translation: each piece is ``(source interval, displacement)``."""

    column: int
    pieces: tuple[tuple[Interval, Fraction], ...]
    total: Fraction

    @property
    def domain(self) -> list[Interval]:
        return _normalize([src for src, _ in self.pieces])

    def compose(self, other: IntervalMap) -> IntervalMap:
        """``other`` after ``self``."""
        pieces = []
        for (a, b), d in self.pieces:
            for (c, e), d2 in other.pieces:
                lo, hi = max(a, c - d), min(b, e - d)
                if lo < hi:
                    pieces.append(((lo, hi), d + d2))
        return IntervalMap(self.column, tuple(sorted(pieces)), self.total)

    def power(self, k: int) -> IntervalMap:
        if k < 0:
            raise ValueError("only forward powers are supported")
        result = IntervalMap(self.column, (((Fraction(0), self.total), Fraction(0)),),
                             self.total)
        base = self
        while k:
            if k & 1:
                result = result.compose(base)
            base = base.compose(base)
            k >>= 1
        return result

    def preimage(self, target: Sequence[Interval]) -> list[Interval]:
        out = []
        for (a, b), d in self.pieces:
            for c, e in target:
                lo, hi = max(a, c - d), min(b, e - d)
                if lo < hi:
                    out.append((lo, hi))
        return _normalize(out)


class _Realization:
    """Physical levels of every column up to ``N``."""

    def __init__(self, spec: ConstructionSpec, N: int) -> None:
        width = spec.initial_width
        frontier = width
        columns = [[Fraction(0)]]
        widths = [width]
        for n in range(N):
            st = spec.stage(n)
            col = columns[-1]
            sub = width / st.r
            nxt: list[Fraction] = []
            for i in range(st.r):
                nxt.extend(a + i * sub for a in col)
                for _ in range(st.spacers[i]):
                    nxt.append(frontier)
                    frontier += sub
            columns.append(nxt)
            width = sub
            widths.append(width)
        self.columns = columns
        self.widths = widths

    def parents(self, c: int, N: int) -> list[int]:
        """For each level of ``C_N``, the height of the ``C_c`` level containing it, or -1."""
        starts = self.columns[c]
        order = sorted(range(len(starts)), key=starts.__getitem__)
        sorted_starts = [starts[i] for i in order]
        wc = self.widths[c]
        out = []
        for y in self.columns[N]:
            j = bisect_right(sorted_starts, y) - 1
            if j >= 0 and y < sorted_starts[j] + wc:
                out.append(order[j])
            else:
                out.append(-1)
        return out


# per-spec memo: {N: realization} and {(c, N): parents}
_cache: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()
_parents_cache: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()
_lock = threading.Lock()


def _realization(spec: ConstructionSpec, N: int, budget: int) -> _Realization:
    if spec.height(N) > budget:
        raise ResourceError(f"h_{N} = {spec.height(N)} exceeds oracle budget {budget}")
    with _lock:
        per_spec = _cache.setdefault(spec, {})
        real = per_spec.get(N)
        if real is None:
            real = per_spec[N] = _Realization(spec, N)
        return real


def realize(spec: ConstructionSpec, N: int,
            budget: int = DEFAULT_HEIGHT_BUDGET) -> IntervalMap:
    """The column map ``T_{C_N}`` in height-major layout: translate by ``w_N``
    on everything but the top level."""
    if spec.height(N) > budget:
        raise ResourceError(f"h_{N} = {spec.height(N)} exceeds oracle budget {budget}")
    w = spec.width(N)
    total = spec.height(N) * w
    top = total - w
    pieces = (((Fraction(0), top), w),) if top > 0 else ()
    return IntervalMap(N, pieces, total)


def embed(spec: ConstructionSpec, A: LevelSet, N: int,
          budget: int = DEFAULT_HEIGHT_BUDGET) -> list[Interval]:
    """The set ``A`` as intervals in the height-major layout of ``C_N``."""
    real = _realization(spec, N, budget)
    with _lock:
        per_spec = _parents_cache.setdefault(spec, {})
        par = per_spec.get((A.column, N))
        if par is None:
            par = per_spec[(A.column, N)] = real.parents(A.column, N)
    wanted = set(A.heights)
    w = real.widths[N]
    return _normalize([(i * w, (i + 1) * w) for i, p in enumerate(par) if p in wanted])


def oracle_intersection(spec: ConstructionSpec, A: LevelSet, shifts: Sequence[int],
                        N: int, budget: int = DEFAULT_HEIGHT_BUDGET) -> MeasureBound:
    if N < A.column:
        raise ValueError(f"depth {N} precedes column {A.column}")
    if not shifts:
        raise ValueError("shifts must be non-empty")
    if any(k < 0 for k in shifts):
        raise ValueError("shifts must be non-negative")
    T = realize(spec, N, budget)
    a_int = embed(spec, A, N, budget)
    K = max(shifts)
    dom_K = T.power(K).domain
    region = _intersect(a_int, dom_K)
    for k in sorted(set(shifts)):
        region = _intersect(region, T.power(k).preimage(a_int))
    lower = _length(region)
    unresolved = _length(_subtract(a_int, dom_K))
    return MeasureBound(lower, lower + unresolved)
