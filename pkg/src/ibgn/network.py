"""Interval networks: timestamped instances, derived relations, constraints.

An *instance* is a canonically ordered sequence of action intervals.  Viewed
pairwise it induces a complete network of forward relations; padded positions
(the null action, used to bring instances to a common length) carry no
temporal information and their relations are null.

``compute_constraint`` implements the interval-relation constraint: the set
of relations a node pair may take given everything already fixed between and
around it.  Pairs of adjacent nodes are unconstrained; for the rest the
constraint is the intersection, over every intermediate node, of the
composition of the flanking entries.  Resolving pairs in ascending order of
the later node and descending order of the earlier node guarantees every
entry a product needs has already been resolved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from .algebra import BaseRelation, FULL_SET, RelationSet, compose_sets, relation_of
from .errors import EmptyConstraint, InstanceTooLong

__all__ = [
    "NULL_ACTION",
    "Interval",
    "Instance",
    "IntervalNetwork",
    "ConsistencyReport",
    "StructureMask",
    "instance_to_network",
    "check_consistency",
    "compute_constraint",
    "scan_link_constraints",
    "pad_nulls",
]

NULL_ACTION = 0


@dataclass(frozen=True)
class Interval:
    """One atomic action occurrence: vocabulary id (0 = null) plus extent."""

    action: int
    start: float
    end: float

    @classmethod
    def null(cls) -> "Interval":
        return cls(NULL_ACTION, math.inf, math.inf)

    @property
    def is_null(self) -> bool:
        return self.action == NULL_ACTION

    @property
    def times(self) -> Tuple[float, float]:
        return (self.start, self.end)


def _canonical_key(iv: Interval) -> Tuple[float, float]:
    return (iv.start, iv.end)


@dataclass(frozen=True)
class Instance:
    """A labeled activity observation: intervals in canonical order."""

    label: Optional[str]
    intervals: Tuple[Interval, ...]

    def __len__(self) -> int:
        return len(self.intervals)

    @property
    def observed_length(self) -> int:
        """Number of non-null intervals (nulls only ever pad the rear)."""
        return sum(1 for iv in self.intervals if not iv.is_null)

    def is_canonical(self) -> bool:
        keys = [_canonical_key(iv) for iv in self.intervals]
        return all(keys[i] <= keys[i + 1] for i in range(len(keys) - 1))

    def canonicalized(self) -> "Instance":
        ordered = tuple(sorted(self.intervals, key=_canonical_key))
        return replace(self, intervals=ordered)


@dataclass
class IntervalNetwork:
    """Node actions plus relations on whichever pairs carry one.

    ``relations`` maps ``(i, j)`` with ``i < j`` to a base relation; pairs
    that are absent are null — either a padded endpoint or an unobserved
    (non-link) pair of a generated network.
    """

    actions: Tuple[int, ...]
    relations: Dict[Tuple[int, int], BaseRelation] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.actions)

    def relation(self, i: int, j: int) -> Optional[BaseRelation]:
        if not 0 <= i < j < self.size:
            raise IndexError(f"node pair out of range: ({i}, {j})")
        return self.relations.get((i, j))


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    violations: Tuple[Tuple[int, int, int], ...]


@dataclass(frozen=True)
class StructureMask:
    """The set of node pairs whose relation the model observes ("links")."""

    links: frozenset

    def __post_init__(self) -> None:
        for i, j in self.links:
            if not (0 <= i < j):
                raise ValueError(f"bad structure link ({i}, {j})")

    @classmethod
    def chain(cls, size: int) -> "StructureMask":
        return cls(frozenset((i, i + 1) for i in range(size - 1)))

    @classmethod
    def full(cls, size: int) -> "StructureMask":
        return cls(frozenset((i, j) for i in range(size) for j in range(i + 1, size)))

    @classmethod
    def of(cls, pairs) -> "StructureMask":
        return cls(frozenset((int(i), int(j)) for i, j in pairs))

    def __contains__(self, pair: Tuple[int, int]) -> bool:
        return pair in self.links

    def __len__(self) -> int:
        return len(self.links)

    def sorted_links(self) -> List[Tuple[int, int]]:
        return sorted(self.links)


def instance_to_network(instance: Instance) -> IntervalNetwork:
    """Derive the complete relation network over the non-null intervals.

    The instance must be canonically ordered (the dataset loader guarantees
    this); otherwise :class:`~ibgn.errors.OrderViolation` propagates from the
    pairwise relation computation.
    """
    intervals = instance.intervals
    actions = tuple(iv.action for iv in intervals)
    relations: Dict[Tuple[int, int], BaseRelation] = {}
    for i in range(len(intervals)):
        if intervals[i].is_null:
            continue
        for j in range(i + 1, len(intervals)):
            if intervals[j].is_null:
                continue
            relations[(i, j)] = relation_of(intervals[i].times, intervals[j].times)
    return IntervalNetwork(actions=actions, relations=relations)


def check_consistency(network: IntervalNetwork) -> ConsistencyReport:
    """Check every fully labeled triangle against the composition table.

    A triangle (i, j, k) is checked only when all three of its relations are
    present; the relation of (i, k) must be realizable given those of (i, j)
    and (j, k).  Triangles touching null/absent relations are skipped.
    """
    violations: List[Tuple[int, int, int]] = []
    rel = network.relations
    n = network.size
    for i in range(n):
        for j in range(i + 1, n):
            r_ij = rel.get((i, j))
            if r_ij is None:
                continue
            for k in range(j + 1, n):
                r_jk = rel.get((j, k))
                r_ik = rel.get((i, k))
                if r_jk is None or r_ik is None:
                    continue
                allowed = compose_sets(RelationSet.of(r_ij), RelationSet.of(r_jk))
                if r_ik not in allowed:
                    violations.append((i, j, k))
    return ConsistencyReport(consistent=not violations, violations=tuple(violations))


def compute_constraint(
    x: Mapping[Tuple[int, int], RelationSet], n_prime: int, n: int
) -> RelationSet:
    """Interval-relation constraint of the pair ``(n_prime, n)``.

    ``x`` holds the already-resolved entries: singleton sets on structure
    links, previously computed constraints elsewhere.  Adjacent pairs are
    unconstrained (the full set); all other pairs are constrained through
    every intermediate node:

        constraint = intersection over m in (n_prime, n) of
                     compose_sets(x[n_prime, m], x[m, n])

    Raises :class:`~ibgn.errors.EmptyConstraint` if the intersection empties,
    which cannot happen for entries derived from actual timestamps.
    """
    if not 0 <= n_prime < n:
        raise ValueError(f"bad pair ({n_prime}, {n})")
    if n == n_prime + 1:
        return FULL_SET
    constraint = FULL_SET
    for mid in range(n_prime + 1, n):
        constraint = constraint & compose_sets(x[(n_prime, mid)], x[(mid, n)])
        if not constraint:
            raise EmptyConstraint(f"constraint of pair ({n_prime}, {n}) is empty")
    return constraint


def scan_link_constraints(
    network: IntervalNetwork,
    mask: StructureMask,
    observed: Optional[int] = None,
) -> Iterator[Tuple[int, int, RelationSet, BaseRelation]]:
    """Walk an observed network in resolution order, yielding link constraints.

    For every structure link ``(n', n)`` inside the observed prefix this
    yields ``(n', n, constraint, relation)`` where ``relation`` is the
    network's actual relation and ``constraint`` is what the partially
    resolved matrix allows at that point — the exact quantity the relation
    distributions are conditioned on, during both training and scoring.

    Entries on links become singletons of the observed relation; entries off
    the mask keep the computed constraint set.
    """
    if observed is None:
        observed = network.size
        while observed and network.actions[observed - 1] == NULL_ACTION:
            observed -= 1
    x: Dict[Tuple[int, int], RelationSet] = {}
    for n in range(1, observed):
        for n_prime in range(n - 1, -1, -1):
            constraint = compute_constraint(x, n_prime, n)
            if (n_prime, n) in mask:
                relation = network.relations[(n_prime, n)]
                x[(n_prime, n)] = RelationSet.of(relation)
                yield n_prime, n, constraint, relation
            else:
                x[(n_prime, n)] = constraint


def pad_nulls(instance: Instance, target_length: int) -> Instance:
    """Append null intervals at the rear until the instance has the target length."""
    if len(instance) > target_length:
        raise InstanceTooLong(
            f"instance has {len(instance)} intervals, target is {target_length}"
        )
    padding = tuple(Interval.null() for _ in range(target_length - len(instance)))
    return replace(instance, intervals=instance.intervals + padding)
