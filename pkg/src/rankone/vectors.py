"""Decision procedures for the orders ``<=_p`` and ``<=_m`` between vectors.

Both relations ask for a positive ratio ``lam = n/m`` such that every
``lam * v_i`` is an admissible combination of components of ``w``.  Once the
combination for ``v_1`` is fixed the ratio is forced, so the searches below
are finite and exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .analysis import Vector

LE_P = "le_p"
LE_M = "le_m"


@dataclass(frozen=True)
class OrderWitness:
    """Integers ``n, m, c`` and index data with ``n*v_i`` matched exactly.

    ``le_p``: ``n*v_i == m*w[assignment[i]] - c``.
    ``le_m``: ``n*v_i == m*sum(w[j] for j in plus[i]) - m*sum(w[j] for j in minus[i])``.
    Indices are 0-based.
    """

    relation: str
    n: int
    m: int
    c: int = 0
    assignment: tuple[int, ...] = ()
    plus: tuple[tuple[int, ...], ...] = ()
    minus: tuple[tuple[int, ...], ...] = ()

    def check(self, v: Vector, w: Vector) -> bool:
        if self.n <= 0 or self.m <= 0:
            return False
        if self.relation == LE_P:
            if len(self.assignment) != v.d or len(set(self.assignment)) != v.d:
                return False
            return all(self.n * vi == self.m * w[j] - self.c
                       for vi, j in zip(v, self.assignment))
        if len(self.plus) != v.d or len(self.minus) != v.d:
            return False
        for vi, I, J in zip(v, self.plus, self.minus):
            if set(I) & set(J):
                return False
            if self.n * vi != self.m * (sum(w[j] for j in I) - sum(w[j] for j in J)):
                return False
        return True


def decide_le_p(v: Vector, w: Vector) -> tuple[bool, OrderWitness | None]:
    """Is ``{n*v_i}`` a subset of ``{m*w_j - c}`` with ``c in {0} ∪ {m*w_i}``?"""
    if v.d > w.d:
        return False, None
    found: list[tuple[int, int, int, OrderWitness]] = []
    for base in (None, *range(w.d)):
        shift = 0 if base is None else w[base]
        targets = {w[j] - shift: j for j in range(w.d) if w[j] - shift > 0}
        for p in sorted(targets):
            lam = Fraction(p, v[0])
            assign = []
            for vi in v:
                j = targets.get(lam * vi)
                if j is None:
                    break
                assign.append(j)
            else:
                n, m = lam.numerator, lam.denominator
                c = m * shift
                wit = OrderWitness(LE_P, n, m, c, tuple(assign))
                found.append((m, n, c, wit))
    if not found:
        return False, None
    return True, min(found, key=lambda t: t[:3])[3]


def signed_subset_sums(w: Vector) -> dict[int, tuple[tuple[int, ...], tuple[int, ...]]]:
    """Each value ``sum e_j w_j`` (``e_j in {-1,0,1}``) with one (plus, minus) realization."""
    out: dict[int, tuple[tuple[int, ...], tuple[int, ...]]] = {}
    for eps in product((0, 1, -1), repeat=w.d):
        s = sum(e * wj for e, wj in zip(eps, w))
        if s not in out:
            plus = tuple(j for j, e in enumerate(eps) if e == 1)
            minus = tuple(j for j, e in enumerate(eps) if e == -1)
            out[s] = (plus, minus)
    return out


def decide_le_m(v: Vector, w: Vector) -> tuple[bool, OrderWitness | None]:
    """Is every ``n*v_i`` a signed subset sum of ``m*w``?"""
    S = signed_subset_sums(w)
    for s in sorted(x for x in S if x > 0):
        lam = Fraction(s, v[0])
        reps = []
        for vi in v:
            t = lam * vi
            if t.denominator != 1 or int(t) not in S:
                break
            reps.append(S[int(t)])
        else:
            wit = OrderWitness(LE_M, lam.numerator, lam.denominator,
                               plus=tuple(r[0] for r in reps),
                               minus=tuple(r[1] for r in reps))
            return True, wit
    return False, None
