from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import settings, strategies as st

from rankone.builders import build_example42, build_hk_skyscraper
from rankone.core import ConstructionSpec, LevelSet, Stage

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def hk():
    return build_hk_skyscraper()


@pytest.fixture
def e42():
    return build_example42()


@pytest.fixture
def I0():
    return LevelSet(0, (0,))


def hk_tail_spec(head: list[Stage], name: str = "random") -> ConstructionSpec:
    """Explicit head stages followed by skyscraper stages, so shifts always resolve."""
    head = list(head)

    def rule(n, hs):
        if n < len(head):
            return head[n]
        return Stage(2, (0, 2 * hs[n]))

    return ConstructionSpec(rule=rule, name=name)


@st.composite
def stages(draw, max_r: int = 3, max_spacer: int = 4) -> Stage:
    r = draw(st.integers(2, max_r))
    sp = draw(st.lists(st.integers(0, max_spacer), min_size=r, max_size=r))
    return Stage(r, tuple(sp))


@st.composite
def small_specs(draw, n_head: int = 3) -> ConstructionSpec:
    head = draw(st.lists(stages(), min_size=1, max_size=n_head))
    return hk_tail_spec(head)


@st.composite
def level_sets(draw, spec: ConstructionSpec, max_column: int = 2) -> LevelSet:
    c = draw(st.integers(0, max_column))
    h = spec.height(c)
    hs = draw(st.lists(st.integers(0, h - 1), min_size=1, max_size=min(h, 4)))
    return LevelSet(c, tuple(hs))


def brute_count(D, shifts) -> int:
    """Number of x in D with x + k in D for every k (plain set lookups)."""
    s = set(D)
    return sum(1 for x in D if all(x + k in s for k in shifts))


def brute_measure(spec, A, shifts, N) -> Fraction:
    offs = [spec.offsets(m) for m in range(A.column, N)]
    D = list(A.heights)
    for o in offs:
        D = [x + a for a in o for x in D]
    return brute_count(D, shifts) * spec.width(N)
