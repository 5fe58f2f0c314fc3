"""Corpus ingestion, folds, perturbation harnesses, synthetic data.

The on-disk format is JSON Lines: one object per instance with an optional
``label`` and a list of ``intervals``, each ``{"action": name, "start": t0,
"end": t1}``.  Loading sorts every instance canonically and interns action
and class names in first-appearance order; action id ``i`` (1-based) is
``vocab[i - 1]`` and 0 stays reserved for the null padding action.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import DegenerateInterval, EmptyCorpus, InsufficientClassInstances, ParseError
from .generate import ClassModel, _draw, realize_timestamps, sample_network
from .network import Instance, Interval

__all__ = [
    "Corpus",
    "load_instances",
    "save_instances",
    "kfold_split",
    "perturb_labels",
    "perturb_durations",
    "build_synthetic_corpus",
]


@dataclass
class Corpus:
    """Instances plus the vocabularies their integer ids refer to."""

    instances: List[Instance] = field(default_factory=list)
    vocab: List[str] = field(default_factory=list)
    classes: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.instances)

    def by_class(self) -> Dict[str, List[Instance]]:
        groups: Dict[str, List[Instance]] = {name: [] for name in self.classes}
        for inst in self.instances:
            if inst.label is not None:
                groups[inst.label].append(inst)
        return groups

    @property
    def labeled(self) -> bool:
        return all(inst.label is not None for inst in self.instances)


def _require_number(value, line_no: int, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(line_no, f"{what} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ParseError(line_no, f"{what} must be finite, got {value!r}")
    return value


def load_instances(path) -> Corpus:
    """Read a JSONL corpus; blank lines are ignored.

    Raises :class:`ParseError` (with the line number) on malformed records
    and :class:`DegenerateInterval` on intervals with start >= end.
    """
    instances: List[Instance] = []
    vocab: List[str] = []
    action_ids: Dict[str, int] = {}
    classes: List[str] = []
    seen_classes = set()
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict) or not isinstance(record.get("intervals"), list):
                raise ParseError(line_no, "record must be an object with an 'intervals' list")
            label = record.get("label")
            if label is not None and not isinstance(label, str):
                raise ParseError(line_no, f"label must be a string, got {label!r}")
            intervals = []
            for entry in record["intervals"]:
                if not isinstance(entry, dict) or not isinstance(entry.get("action"), str):
                    raise ParseError(line_no, "interval must be an object with a string 'action'")
                start = _require_number(entry.get("start"), line_no, "start")
                end = _require_number(entry.get("end"), line_no, "end")
                if start >= end:
                    raise DegenerateInterval(
                        f"line {line_no}: interval [{start}, {end}] of "
                        f"action {entry['action']!r} has start >= end"
                    )
                name = entry["action"]
                if name not in action_ids:
                    action_ids[name] = len(vocab) + 1
                    vocab.append(name)
                intervals.append(Interval(action=action_ids[name], start=start, end=end))
            if label is not None and label not in seen_classes:
                seen_classes.add(label)
                classes.append(label)
            instances.append(Instance(label=label, intervals=tuple(intervals)).canonicalized())
    return Corpus(instances=instances, vocab=vocab, classes=classes)


def save_instances(corpus: Corpus, path) -> None:
    """Write a corpus back to JSONL (canonical interval order, stable bytes)."""
    with open(path, "w", encoding="utf-8") as handle:
        for inst in corpus.instances:
            record: Dict[str, object] = {}
            if inst.label is not None:
                record["label"] = inst.label
            record["intervals"] = [
                {
                    "action": corpus.vocab[iv.action - 1],
                    "start": iv.start,
                    "end": iv.end,
                }
                for iv in inst.intervals
                if not iv.is_null
            ]
            handle.write(json.dumps(record) + "\n")


def kfold_split(corpus: Corpus, folds: int = 5, seed: int = 0) -> List[Tuple[Corpus, Corpus]]:
    """Stratified k-fold split: per class, shuffle then deal round-robin.

    Returns ``folds`` pairs ``(train, test)`` sharing the parent corpus's
    vocabularies.  Raises :class:`InsufficientClassInstances` when any class
    has fewer instances than folds.
    """
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if not corpus.labeled:
        raise ValueError("cross-validation requires a fully labeled corpus")
    if not corpus.classes:
        raise EmptyCorpus("corpus has no labeled instances")
    rng = np.random.default_rng(seed)
    fold_of = [0] * len(corpus.instances)
    for name in corpus.classes:
        indices = [i for i, inst in enumerate(corpus.instances) if inst.label == name]
        if len(indices) < folds:
            raise InsufficientClassInstances(
                f"class {name!r} has {len(indices)} instances, need >= {folds}"
            )
        order = rng.permutation(len(indices))
        for position, which in enumerate(order):
            fold_of[indices[which]] = position % folds
    splits = []
    for fold in range(folds):
        train = [inst for i, inst in enumerate(corpus.instances) if fold_of[i] != fold]
        test = [inst for i, inst in enumerate(corpus.instances) if fold_of[i] == fold]
        splits.append(
            (
                Corpus(instances=train, vocab=list(corpus.vocab), classes=list(corpus.classes)),
                Corpus(instances=test, vocab=list(corpus.vocab), classes=list(corpus.classes)),
            )
        )
    return splits


def perturb_labels(corpus: Corpus, rate: float, seed: int = 0) -> Corpus:
    """Relabel each interval with probability ``rate`` to a different action.

    Timestamps are untouched, so the relation structure survives; only the
    action evidence degrades.  With a single-action vocabulary there is no
    different action to draw and intervals stay as they are.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate must lie in [0, 1], got {rate}")
    rng = np.random.default_rng(seed)
    vocab_size = len(corpus.vocab)
    instances = []
    for inst in corpus.instances:
        intervals = []
        for iv in inst.intervals:
            if not iv.is_null and vocab_size >= 2 and rng.random() < rate:
                shifted = int(rng.integers(vocab_size - 1)) + 1
                new_action = shifted if shifted < iv.action else shifted + 1
                iv = Interval(action=new_action, start=iv.start, end=iv.end)
            intervals.append(iv)
        instances.append(Instance(label=inst.label, intervals=tuple(intervals)))
    return Corpus(instances=instances, vocab=list(corpus.vocab), classes=list(corpus.classes))


def perturb_durations(corpus: Corpus, rate: float, seed: int = 0) -> Corpus:
    """Jitter both endpoints of each interval by up to ``rate`` of its length.

    Start and end move independently by uniform noise in
    ``[-rate * length, +rate * length]``.  Inverted results are repaired by
    swapping the endpoints; a zero-width collision is widened by the smallest
    representable step.  Instances are re-sorted canonically afterwards.
    """
    if rate < 0.0:
        raise ValueError(f"rate must be non-negative, got {rate}")
    rng = np.random.default_rng(seed)
    instances = []
    for inst in corpus.instances:
        intervals = []
        for iv in inst.intervals:
            if iv.is_null:
                intervals.append(iv)
                continue
            reach = rate * (iv.end - iv.start)
            start = iv.start + rng.uniform(-reach, reach)
            end = iv.end + rng.uniform(-reach, reach)
            if start > end:
                start, end = end, start
            if start == end:
                end = float(np.nextafter(end, np.inf))
            intervals.append(Interval(action=iv.action, start=start, end=end))
        instances.append(Instance(label=inst.label, intervals=tuple(intervals)).canonicalized())
    return Corpus(instances=instances, vocab=list(corpus.vocab), classes=list(corpus.classes))


def build_synthetic_corpus(
    class_models: Mapping[str, ClassModel], per_class: int, seed: int = 0
) -> Corpus:
    """Sample a labeled corpus from per-class generative models.

    Every model must share the same action vocabulary.  Instance sizes are
    drawn from each model's size histogram; networks are sampled and then
    realized to integer timestamps, so the emitted corpus is temporally
    consistent by construction and byte-stable for a fixed seed.
    """
    if not class_models:
        raise EmptyCorpus("no class models given")
    if per_class < 1:
        raise ValueError("per_class must be positive")
    names = list(class_models.keys())
    vocab = list(class_models[names[0]].action_vocab)
    for name in names:
        if list(class_models[name].action_vocab) != vocab:
            raise ValueError("all class models must share one action vocabulary")
    rng = np.random.default_rng(seed)
    instances = []
    for name in names:
        model = class_models[name]
        sizes = sorted(model.size_histogram.items())
        size_values = [size for size, _count in sizes]
        total = sum(count for _size, count in sizes)
        size_probs = np.asarray([count / total for _size, count in sizes])
        for _ in range(per_class):
            k = size_values[_draw(size_probs, rng)]
            network = sample_network(model, k, rng)
            instances.append(realize_timestamps(network, label=name))
    return Corpus(instances=instances, vocab=vocab, classes=names)
