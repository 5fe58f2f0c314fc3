"""Scoring instances against class models and picking the best class.

A score is a sum of log terms: one per interval for the action (its total
mass across the model's table-action distributions) and one per structure
link for the observed relation, conditioned on the interval-relation
constraint active at that link — replayed exactly as during training.

Test-time vocabularies need not match the training vocabulary: actions are
remapped by name, unknown actions contribute ``log(EPS)`` to the action term
and force the uniform-within-constraint fallback on links that touch them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .errors import NoModels
from .generate import ClassModel
from .network import Instance, instance_to_network, scan_link_constraints

__all__ = ["EPS", "Prediction", "score_instance", "predict"]

EPS = 1e-8  # floor probability for actions/relations the model cannot explain


@dataclass(frozen=True)
class Prediction:
    """Classification outcome: winning label, per-class scores, margin."""

    label: str
    scores: Tuple[float, ...]
    margin: float


def _log(p: float) -> float:
    return math.log(p) if p > 0.0 else math.log(EPS)


def score_instance(model: ClassModel, instance: Instance, vocab: Sequence[str]) -> float:
    """Log-score of an instance under one class model (always finite).

    ``vocab`` is the instance's own id-to-name vocabulary.  The action term
    covers every non-null interval; link terms cover the first ``k_star``
    intervals only (longer instances are truncated for the relation part).
    An empty instance scores 0.
    """
    observed = [iv for iv in instance.intervals if not iv.is_null]
    ids: List[Optional[int]] = [model.action_id(vocab[iv.action - 1]) for iv in observed]

    theta_mass = model.theta.sum(axis=0)
    score = 0.0
    for mid in ids:
        score += _log(float(theta_mass[mid - 1])) if mid is not None else math.log(EPS)

    prefix = min(len(observed), model.k_star)
    if prefix >= 2:
        network = instance_to_network(
            Instance(label=instance.label, intervals=tuple(observed[:prefix]))
        )
        for n_prime, n, constraint, relation in scan_link_constraints(network, model.structure):
            left, right = ids[n_prime], ids[n]
            vec = (
                model.phi.get((left, right, constraint.bits))
                if left is not None and right is not None
                else None
            )
            if vec is None:
                score += math.log(1.0 / len(constraint))
            else:
                score += _log(float(vec[constraint.index_of(relation)]))
    return score


def predict(
    models: Sequence[Tuple[str, ClassModel]],
    instance: Instance,
    vocab: Sequence[str],
) -> Prediction:
    """Max-score classification; ties break to the lowest class index."""
    if not models:
        raise NoModels("prediction requires at least one class model")
    scores = tuple(score_instance(model, instance, vocab) for _, model in models)
    best = max(range(len(scores)), key=lambda i: (scores[i], -i))
    if len(scores) > 1:
        runner_up = max(s for i, s in enumerate(scores) if i != best)
        margin = scores[best] - runner_up
    else:
        margin = 0.0
    return Prediction(label=models[best][0], scores=scores, margin=margin)
