#!/usr/bin/env python3
"""Graceful degradation under annotation noise.

Trains on a clean synthetic corpus, then scores held-out copies whose
interval annotations have been corrupted at increasing rates — either the
action labels (resampled to a different action) or the durations (endpoints
jittered, then repaired to stay valid intervals).  Accuracy should fall
smoothly as the rate rises, not collapse.
"""

import numpy as np

from ibgn import (
    ClassModel,
    FULL_SET,
    StructureMask,
    TrainConfig,
    build_synthetic_corpus,
    perturb_durations,
    perturb_labels,
    predict,
    train_class_model,
)

VOCAB = ("reach", "grasp", "pour", "stir")


def truth_model(hot_actions, hot_relation, k_star=4) -> ClassModel:
    theta = np.full((k_star, len(VOCAB)), 0.01)
    for z in range(k_star):
        theta[z, hot_actions[0]] = 0.49
        theta[z, hot_actions[1]] = 0.49
    phi = {}
    for i in range(1, k_star + 1):
        for j in range(i + 1, k_star + 1):
            weights = np.full(7, 0.05)
            weights[hot_relation] = 0.70
            phi[(i, j, FULL_SET.bits)] = weights
    return ClassModel(
        k_star=k_star,
        ell=k_star,
        alpha=np.ones(k_star),
        beta=np.full((k_star, len(VOCAB)), 0.5),
        theta=theta,
        structure=StructureMask.chain(k_star),
        phi=phi,
        action_vocab=VOCAB,
        size_histogram={3: 1, 4: 1},
    )


def accuracy(fitted, corpus) -> float:
    hits = sum(
        predict(fitted, inst, corpus.vocab).label == inst.label
        for inst in corpus.instances
    )
    return hits / len(corpus.instances)


def main() -> None:
    truth = {
        "assemble": truth_model(hot_actions=(0, 1), hot_relation=0),
        "brew": truth_model(hot_actions=(2, 3), hot_relation=2),
    }
    train = build_synthetic_corpus(truth, per_class=60, seed=5)
    test = build_synthetic_corpus(truth, per_class=60, seed=6)

    # Chain structure keeps the consecutive-pair relation factors in play,
    # so duration corruption (which rewrites those relations) is visible in
    # the scores alongside the action-label corruption.
    config = TrainConfig(iterations=300, burn_in=100, avg_window=150,
                         structure="chain")
    fitted = [
        (name,
         train_class_model([i for i in train.instances if i.label == name],
                           train.vocab, config, np.random.default_rng(40 + k)))
        for k, name in enumerate(train.classes)
    ]

    rates = (0.0, 0.1, 0.2, 0.3, 0.5)
    repeats = 10  # average over perturbation draws to smooth the curves
    print("rate   labels-noise   duration-noise   (mean over "
          f"{repeats} perturbation seeds)")
    for rate in rates:
        by_labels = np.mean([
            accuracy(fitted, perturb_labels(test, rate, seed=17 + r))
            for r in range(repeats)
        ])
        by_durations = np.mean([
            accuracy(fitted, perturb_durations(test, rate, seed=17 + r))
            for r in range(repeats)
        ])
        print(f"{rate:.1f}    {by_labels:13.3f}   {by_durations:14.3f}")

    print()
    print("Label noise attacks the action evidence the tables score, and the")
    print("accuracy decays steadily with the corruption rate.  Duration noise")
    print("only reshuffles pairwise relations, a channel that degrades far")
    print("more gently: a corrupted relation is usually uninformative rather")
    print("than adversarial (and a light jitter can even un-stick the odd")
    print("clean instance whose relations coincidentally imitated the other")
    print("class).")


if __name__ == "__main__":
    main()
