"""Forward interval-relation algebra.

Temporal relations between pairs of intervals that are in canonical order
(earlier start first; on equal starts, earlier end first).  Restricting Allen's
thirteen relations to canonically ordered pairs leaves seven:

======  =============  =========================================
symbol  name           endpoint condition (first i, second j)
======  =============  =========================================
b       before         i.end < j.start
m       meets          i.end == j.start
o       overlaps       i.start < j.start < i.end < j.end
s       starts         i.start == j.start and i.end < j.end
c       contains       i.start < j.start and j.end < i.end
f       finished-by    i.start < j.start and i.end == j.end
eq      equals         i.start == j.start and i.end == j.end
======  =============  =========================================

Composition answers: given the relation of (i, j) and of (j, k), which
relations of (i, k) are realizable by actual timestamps?  The 7x7 table of
answers below is frozen as bitmask constants; ``brute_force_compose``
re-derives any cell from first principles by enumerating integer endpoint
placements and is kept as the table's oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Iterator, Optional, Sequence, Tuple

from .errors import ClassCountMismatch, DegenerateInterval, EmptyRelationSet, OrderViolation

__all__ = [
    "BaseRelation",
    "RelationSet",
    "CompositionClass",
    "FULL_SET",
    "EMPTY_SET",
    "relation_of",
    "compose",
    "compose_sets",
    "intersect",
    "brute_force_compose",
    "enumerate_composition_classes",
    "classify_constraint",
]


class BaseRelation(IntEnum):
    """The seven forward relations, in canonical order."""

    BEFORE = 0
    MEETS = 1
    OVERLAPS = 2
    STARTS = 3
    CONTAINS = 4
    FINISHED_BY = 5
    EQUALS = 6

    @property
    def symbol(self) -> str:
        return _SYMBOLS[self.value]


_SYMBOLS = ("b", "m", "o", "s", "c", "f", "eq")
_SYMBOL_TO_RELATION = {sym: BaseRelation(i) for i, sym in enumerate(_SYMBOLS)}


@dataclass(frozen=True)
class RelationSet:
    """An immutable set of forward relations, encoded as a 7-bit mask.

    Bit ``i`` corresponds to the relation with canonical index ``i``, which
    makes the integer encoding itself canonical and serialization bit-exact.
    """

    bits: int

    def __post_init__(self) -> None:
        if not 0 <= self.bits <= 0x7F:
            raise ValueError(f"relation bits out of range: {self.bits}")

    @classmethod
    def of(cls, *relations: BaseRelation) -> "RelationSet":
        bits = 0
        for rel in relations:
            bits |= 1 << BaseRelation(rel).value
        return cls(bits)

    @classmethod
    def from_text(cls, text: str) -> "RelationSet":
        """Parse the comma-joined form, e.g. ``"b,m,o"``; "" is the empty set."""
        text = text.strip()
        if not text:
            return EMPTY_SET
        bits = 0
        for token in text.split(","):
            token = token.strip()
            if token not in _SYMBOL_TO_RELATION:
                raise ValueError(f"unknown relation symbol: {token!r}")
            bits |= 1 << _SYMBOL_TO_RELATION[token].value
        return cls(bits)

    def text(self) -> str:
        """Comma-joined symbols in canonical order."""
        return ",".join(rel.symbol for rel in self)

    @property
    def members(self) -> Tuple[BaseRelation, ...]:
        return tuple(iter(self))

    def index_of(self, rel: BaseRelation) -> int:
        """Position of ``rel`` among the members in canonical order."""
        if rel not in self:
            raise ValueError(f"{rel.symbol} not in {{{self.text()}}}")
        return bin(self.bits & ((1 << rel.value) - 1)).count("1")

    def __contains__(self, rel: BaseRelation) -> bool:
        return bool(self.bits >> BaseRelation(rel).value & 1)

    def __iter__(self) -> Iterator[BaseRelation]:
        for i in range(7):
            if self.bits >> i & 1:
                yield BaseRelation(i)

    def __len__(self) -> int:
        return bin(self.bits).count("1")

    def __bool__(self) -> bool:
        return self.bits != 0

    def __and__(self, other: "RelationSet") -> "RelationSet":
        return RelationSet(self.bits & other.bits)

    def __or__(self, other: "RelationSet") -> "RelationSet":
        return RelationSet(self.bits | other.bits)

    def __repr__(self) -> str:
        return f"RelationSet({{{self.text()}}})"


FULL_SET = RelationSet(0x7F)
EMPTY_SET = RelationSet(0)


def relation_of(first: Sequence[float], second: Sequence[float]) -> BaseRelation:
    """Relation between two canonically ordered ``(start, end)`` pairs.

    Raises :class:`DegenerateInterval` when either interval has start >= end
    and :class:`OrderViolation` when the pair is not canonically ordered.
    """
    s1, e1 = first
    s2, e2 = second
    if not (s1 < e1) or not (s2 < e2):
        raise DegenerateInterval(f"degenerate interval in pair {first!r}, {second!r}")
    if not (s1 < s2 or (s1 == s2 and e1 <= e2)):
        raise OrderViolation(f"pair not in canonical order: {first!r}, {second!r}")
    if e1 < s2:
        return BaseRelation.BEFORE
    if e1 == s2:
        return BaseRelation.MEETS
    if s1 == s2:
        return BaseRelation.EQUALS if e1 == e2 else BaseRelation.STARTS
    # distinct starts and the intervals share interior points
    if e1 < e2:
        return BaseRelation.OVERLAPS
    if e1 == e2:
        return BaseRelation.FINISHED_BY
    return BaseRelation.CONTAINS


# Composition table, frozen from the endpoint-enumeration oracle below.
# _COMPOSE_BITS[r1][r2] is the bitmask of relations realizable between
# (i, k) when (i, j) stands in r1 and (j, k) stands in r2.
_COMPOSE_BITS = (
    (1, 1, 1, 1, 1, 1, 1),  # b
    (1, 1, 1, 2, 1, 1, 2),  # m
    (1, 1, 7, 4, 55, 7, 4),  # o
    (1, 1, 7, 8, 55, 7, 8),  # s
    (55, 52, 52, 52, 16, 16, 16),  # c
    (1, 2, 4, 4, 16, 32, 32),  # f
    (1, 2, 4, 8, 16, 32, 64),  # eq
)


def compose(r1: BaseRelation, r2: BaseRelation) -> RelationSet:
    """Composition of two base relations (frozen table lookup)."""
    return RelationSet(_COMPOSE_BITS[BaseRelation(r1).value][BaseRelation(r2).value])


def compose_sets(set1: RelationSet, set2: RelationSet) -> RelationSet:
    """Composition lifted to sets: the union of member-pair compositions."""
    if not set1 or not set2:
        raise EmptyRelationSet("compose_sets requires non-empty operands")
    bits = 0
    for r1 in set1:
        row = _COMPOSE_BITS[r1.value]
        for r2 in set2:
            bits |= row[r2.value]
    return RelationSet(bits)


def intersect(set1: RelationSet, set2: RelationSet) -> RelationSet:
    """Set intersection; may legitimately be empty."""
    return set1 & set2


_ORACLE_WINDOW = 8  # three intervals need at most 6 distinct endpoint values


def _canonical_le(a: Tuple[int, int], b: Tuple[int, int]) -> bool:
    return a[0] < b[0] or (a[0] == b[0] and a[1] <= b[1])


@lru_cache(maxsize=1)
def _brute_force_table() -> Tuple[Tuple[int, ...], ...]:
    """Derive all 49 composition cells by enumerating integer endpoints."""
    intervals = list(combinations(range(_ORACLE_WINDOW + 1), 2))
    table = [[0] * 7 for _ in range(7)]
    for iv1 in intervals:
        for iv2 in intervals:
            if not _canonical_le(iv1, iv2):
                continue
            r12 = relation_of(iv1, iv2)
            for iv3 in intervals:
                if not _canonical_le(iv2, iv3):
                    continue
                r13 = relation_of(iv1, iv3)
                table[r12.value][relation_of(iv2, iv3).value] |= 1 << r13.value
    return tuple(tuple(row) for row in table)


def brute_force_compose(r1: BaseRelation, r2: BaseRelation) -> RelationSet:
    """Oracle for :func:`compose`: enumerate witnesses instead of looking up.

    Every realizable relation between three intervals is witnessed with at
    most six distinct endpoint values, so an integer grid of width 8 is
    exhaustive.
    """
    return RelationSet(_brute_force_table()[BaseRelation(r1).value][BaseRelation(r2).value])


@dataclass(frozen=True)
class CompositionClass:
    """One of the 11 relation sets reachable as an interval-relation constraint."""

    index: int  # 1..11
    members: RelationSet

    @property
    def cardinality(self) -> int:
        return len(self.members)


@lru_cache(maxsize=1)
def enumerate_composition_classes() -> Tuple[CompositionClass, ...]:
    """The closure of the 49 pairwise compositions, plus the full set.

    Exactly 11 distinct sets arise: the 7 singletons (indices 1..7 in
    canonical relation order) and 4 composites (indices 8..11, ordered by
    cardinality then bitmask), the last of which is the full set.  The family
    is closed under non-empty intersection.
    """
    distinct = {FULL_SET.bits}
    for r1 in BaseRelation:
        for r2 in BaseRelation:
            distinct.add(compose(r1, r2).bits)
    if len(distinct) != 11:
        raise ClassCountMismatch(f"expected 11 composition classes, found {len(distinct)}")

    singles = sorted(b for b in distinct if bin(b).count("1") == 1)
    multis = sorted(
        (b for b in distinct if bin(b).count("1") > 1),
        key=lambda b: (bin(b).count("1"), b),
    )
    ordered = singles + multis
    if len(singles) != 7 or ordered[-1] != FULL_SET.bits:
        raise ClassCountMismatch("composition classes lack the 7 singletons or the full set")
    for b1 in distinct:
        for b2 in distinct:
            meet = b1 & b2
            if meet and meet not in distinct:
                raise ClassCountMismatch("composition classes not closed under intersection")
    return tuple(
        CompositionClass(index=i + 1, members=RelationSet(bits))
        for i, bits in enumerate(ordered)
    )


def classify_constraint(constraint: RelationSet) -> Optional[int]:
    """Class index (1..11) of a constraint set, or None if it is not a class."""
    if not constraint:
        raise EmptyRelationSet("cannot classify an empty constraint")
    for cls in enumerate_composition_classes():
        if cls.members.bits == constraint.bits:
            return cls.index
    return None
