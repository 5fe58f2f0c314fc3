#!/usr/bin/env python3
"""End-to-end training and classification on synthetic activities.

Two ground-truth activity classes share a four-action vocabulary but differ
in which actions dominate and which temporal relation their consecutive
intervals prefer.  A corpus sampled from the truth is used to train fresh
models (collapsed Gibbs for the table parameters, windowed fixed-point
refits for the concentration strengths, per-link BIC for structure), and
held-out accuracy plus a peek at the learned parameters are reported.
"""

import time

import numpy as np

from ibgn import (
    ClassModel,
    FULL_SET,
    Instance,
    Interval,
    StructureMask,
    TrainConfig,
    build_synthetic_corpus,
    learn_structure,
    predict,
    train_class_model,
)

VOCAB = ("chop", "saute", "plate", "garnish")


def truth_model(hot_actions, hot_relation, k_star=4) -> ClassModel:
    """One ground-truth class: two favored actions, one favored relation."""
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


def main() -> None:
    truth = {
        "stir_fry": truth_model(hot_actions=(0, 1), hot_relation=0),
        "plating": truth_model(hot_actions=(2, 3), hot_relation=2),
    }
    train = build_synthetic_corpus(truth, per_class=60, seed=11)
    test = build_synthetic_corpus(truth, per_class=60, seed=22)
    print(f"corpus: {len(train.instances)} train / {len(test.instances)} test, "
          f"vocab {train.vocab}")

    config = TrainConfig(iterations=300, burn_in=100, avg_window=150,
                         structure="learned")
    fitted = []
    for index, name in enumerate(train.classes):
        members = [i for i in train.instances if i.label == name]
        start = time.perf_counter()
        model = train_class_model(members, train.vocab, config,
                                  np.random.default_rng(100 + index))
        elapsed = time.perf_counter() - start
        fitted.append((name, model))
        strong = ", ".join(
            f"table {z}: {train.vocab[int(np.argmax(model.theta[z]))]}"
            f" ({model.theta[z].max():.2f})"
            for z in range(model.ell)
        )
        print(f"trained '{name}' in {elapsed:.1f}s: k*={model.k_star}, "
              f"alpha={np.round(model.alpha, 2)}, "
              f"{len(model.structure.sorted_links())} structure links")
        print(f"  dominant action per table: {strong}")

    hits = 0
    example = None
    for inst in test.instances:
        result = predict(fitted, inst, test.vocab)
        hits += result.label == inst.label
        if example is None:
            example = (inst.label, result)
    accuracy = hits / len(test.instances)
    print(f"\nheld-out accuracy: {accuracy:.3f} ({hits}/{len(test.instances)})")
    true_label, result = example
    scores = {name: round(score, 2)
              for (name, _), score in zip(fitted, result.scores)}
    print(f"example: truth '{true_label}' -> predicted '{result.label}' "
          f"(log-scores {scores}, margin {result.margin:.2f})")

    # In the truth above the relation preference never depends on which
    # actions the intervals carry, so the BIC learner rightly keeps zero
    # structure links (conditioning on actions buys no likelihood).  Here is
    # a corpus where the *pair of actions* does determine the relation: the
    # first two intervals meet when poured-then-stirred but overlap when
    # stirred-then-poured, while the third interval always comes after
    # regardless of anything.  The conditional model pays a complexity
    # penalty quadratic in the vocabulary, so the decisive evidence of a few
    # hundred instances keeps exactly the informative link and no other.
    pour, stir, serve = 1, 2, 3
    crafted = []
    for copy in range(250):
        crafted.append(Instance(label="drill", intervals=(
            Interval(action=pour, start=0.0, end=1.0),
            Interval(action=stir, start=1.0, end=2.0),
            Interval(action=serve, start=3.0, end=4.0),
        )))
        crafted.append(Instance(label="drill", intervals=(
            Interval(action=stir, start=0.0, end=2.0),
            Interval(action=pour, start=1.0, end=3.0),
            Interval(action=serve, start=4.0, end=5.0),
        )))
    mask = learn_structure(crafted, vocab_size=3)
    print(f"\naction-informed corpus -> learned links: {mask.sorted_links()}")


if __name__ == "__main__":
    main()
