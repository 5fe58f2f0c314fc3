"""Shared builders for the test suite."""

from __future__ import annotations

import itertools
import math

import numpy as np

from ibgn import (
    ClassModel,
    FULL_SET,
    Instance,
    Interval,
    StructureMask,
    TrainConfig,
    bic_family_score,
    instance_to_network,
    pad_nulls,
)
from ibgn.learning import _family_counts


def tiny_config(**overrides) -> TrainConfig:
    """A config small enough for unit tests but valid for the full pipeline."""
    defaults = dict(iterations=40, burn_in=10, avg_window=30, structure="chain")
    defaults.update(overrides)
    return TrainConfig(**defaults)


def random_instance(rng: np.random.Generator, k: int, label=None) -> Instance:
    """Random timestamped instance with integer-ish endpoints (ties likely)."""
    intervals = []
    for _ in range(k):
        start = int(rng.integers(0, 3 * k))
        length = int(rng.integers(1, k + 3))
        intervals.append(Interval(action=1, start=float(start), end=float(start + length)))
    return Instance(label=label, intervals=tuple(intervals)).canonicalized()


def random_actions_instance(
    rng: np.random.Generator, k: int, vocab_size: int, label=None
) -> Instance:
    inst = random_instance(rng, k, label=label)
    intervals = tuple(
        Interval(action=int(rng.integers(1, vocab_size + 1)), start=iv.start, end=iv.end)
        for iv in inst.intervals
    )
    return Instance(label=label, intervals=intervals)


def uniform_model(
    vocab=("a", "b"), k_star: int = 4, structure: str = "full", sizes=None
) -> ClassModel:
    """Maximally vague model: uniform actions, empty phi (uniform fallback)."""
    m = len(vocab)
    mask = StructureMask.full(k_star) if structure == "full" else StructureMask.chain(k_star)
    return ClassModel(
        k_star=k_star,
        ell=k_star,
        alpha=np.ones(k_star),
        beta=np.full((k_star, m), 0.5),
        theta=np.full((k_star, m), 1.0 / m),
        structure=mask,
        phi={},
        action_vocab=tuple(vocab),
        size_histogram=sizes or {k_star: 1},
    )


def random_model(rng: np.random.Generator, vocab_size: int = 3, k_star: int = 5) -> ClassModel:
    """Random theta rows and random phi vectors over every composition class."""
    from ibgn import enumerate_composition_classes

    theta = rng.random((k_star, vocab_size)) + 0.05
    theta /= theta.sum(axis=1, keepdims=True)
    phi = {}
    for i in range(1, vocab_size + 1):
        for j in range(1, vocab_size + 1):
            for cls in enumerate_composition_classes():
                vec = rng.random(cls.cardinality) + 0.05
                phi[(i, j, cls.members.bits)] = vec / vec.sum()
    return ClassModel(
        k_star=k_star,
        ell=k_star,
        alpha=rng.random(k_star) + 0.5,
        beta=rng.random((k_star, vocab_size)) + 0.2,
        theta=theta,
        structure=StructureMask.full(k_star),
        phi=phi,
        action_vocab=tuple(f"act{i}" for i in range(vocab_size)),
        size_histogram={k: 1 for k in range(1, k_star + 1)},
    )


def two_class_models(k_star: int = 5):
    """Two well-separated classes over one shared 4-action vocabulary.

    Class "assemble" uses the first two actions and prefers meets-chains;
    class "brew" uses the last two and prefers overlap-chains.
    """
    vocab = ("reach", "grasp", "pour", "stir")

    def build(action_pair, preferred_relation):
        theta = np.full((k_star, 4), 1e-12)
        for z in range(k_star):
            theta[z, action_pair[z % 2]] = 0.6
            theta[z, action_pair[(z + 1) % 2]] = 0.4 - 2e-12
        phi = {}
        for i in range(1, 5):
            for j in range(1, 5):
                vec = np.full(7, 0.02)
                vec[preferred_relation] = 1.0 - 0.12
                phi[(i, j, FULL_SET.bits)] = vec
        return ClassModel(
            k_star=k_star,
            ell=k_star,
            alpha=np.ones(k_star),
            beta=np.full((k_star, 4), 0.5),
            theta=theta,
            structure=StructureMask.chain(k_star),
            phi=phi,
            action_vocab=vocab,
            size_histogram={k_star - 2: 1, k_star - 1: 2, k_star: 2},
        )

    return {
        "assemble": build((0, 1), 0),  # before-heavy chains
        "brew": build((2, 3), 2),  # overlap-heavy chains
    }


def exhaustive_structure_oracle(instances, vocab_size) -> StructureMask:
    """Independent argmax over every mask, enumerated in bitmask order.

    Total score of a mask is the sum of per-pair family scores (with parents
    on linked pairs, marginal otherwise); ties keep the earlier bitmask.
    """
    k_star = max(len(inst) for inst in instances)
    networks = [instance_to_network(pad_nulls(inst, k_star)) for inst in instances]
    pairs = list(itertools.combinations(range(k_star), 2))
    scores = {}
    for pair in pairs:
        counts = _family_counts(networks, pair[0], pair[1], vocab_size)
        scores[pair] = (
            bic_family_score(counts, False),
            bic_family_score(counts, True),
        )
    best_mask, best_score = 0, -math.inf
    for bitmask in range(1 << len(pairs)):
        score = sum(
            scores[pair][bitmask >> p & 1] for p, pair in enumerate(pairs)
        )
        if score > best_score:
            best_mask, best_score = bitmask, score
    return StructureMask.of(
        pair for p, pair in enumerate(pairs) if best_mask >> p & 1
    )
