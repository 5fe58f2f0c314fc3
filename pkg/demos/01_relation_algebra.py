#!/usr/bin/env python3
"""Tour of the forward interval relations and their composition algebra.

Shows how a pair of concrete intervals maps to one of the seven forward
relations, how relation composition constrains a third interval, and how
every composition result lands in one of eleven constraint classes.
"""

from ibgn import (
    BaseRelation,
    FULL_SET,
    RelationSet,
    classify_constraint,
    compose,
    compose_sets,
    enumerate_composition_classes,
    relation_of,
)


def main() -> None:
    print("== The seven forward relations ==")
    # One concrete witness pair per relation.  The first interval always
    # starts no later than the second, which is why seven relations cover
    # every ordered pair.
    witnesses = [
        ((0, 2), (4, 6)),  # before
        ((0, 2), (2, 6)),  # meets
        ((0, 4), (2, 6)),  # overlaps
        ((0, 2), (0, 6)),  # starts
        ((0, 6), (2, 4)),  # contains
        ((0, 6), (2, 6)),  # finished-by
        ((0, 6), (0, 6)),  # equals
    ]
    for first, second in witnesses:
        rel = relation_of(first, second)
        print(f"  {first} vs {second}: {rel.name.lower():<11} ({rel.symbol})")

    print()
    print("== Composition: what A-to-C follows from A-to-B and B-to-C ==")
    pairs = [
        (BaseRelation.MEETS, BaseRelation.STARTS),
        (BaseRelation.STARTS, BaseRelation.FINISHED_BY),
        (BaseRelation.OVERLAPS, BaseRelation.OVERLAPS),
        (BaseRelation.CONTAINS, BaseRelation.BEFORE),
    ]
    for r1, r2 in pairs:
        result = compose(r1, r2)
        print(f"  {r1.symbol} o {r2.symbol:<2} = {{{result.text()}}}")

    print()
    print("== Set-valued composition (union over member pairs) ==")
    left = RelationSet.of(BaseRelation.BEFORE, BaseRelation.MEETS)
    right = RelationSet.of(BaseRelation.STARTS)
    merged = compose_sets(left, right)
    print(f"  {{{left.text()}}} o {{{right.text()}}}"
          f" = {{{merged.text()}}}")

    print()
    print("== The eleven constraint classes ==")
    # Every constraint that can appear on a non-adjacent link is one of
    # these sets; class 1..7 are the singletons, the rest are the distinct
    # multi-relation results plus the unconstrained full set.
    for entry in enumerate_composition_classes():
        print(f"  class {entry.index:>2}: {{{entry.members.text()}}}")
    print(f"  classify {{b, m, o}} -> class "
          f"{classify_constraint(RelationSet.of(BaseRelation.BEFORE, BaseRelation.MEETS, BaseRelation.OVERLAPS))}")
    print(f"  classify full set -> class {classify_constraint(FULL_SET)}")


if __name__ == "__main__":
    main()
