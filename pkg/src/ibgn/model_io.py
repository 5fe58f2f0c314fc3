"""Model bundle files: one JSON document holding every per-class model.

All real-valued parameters are written as decimal text with 17 significant
digits, which round-trips IEEE doubles bit-exactly, and every collection is
emitted in a fixed order — so identical models produce identical bytes and
``load -> predict`` reproduces in-memory predictions exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence

import numpy as np

from .algebra import RelationSet
from .errors import UnknownClass
from .generate import ClassModel
from .network import StructureMask

__all__ = ["SCHEMA_VERSION", "ModelBundle", "save_bundle", "load_bundle"]

SCHEMA_VERSION = 1


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _fmt_vector(vec) -> List[str]:
    return [_fmt(v) for v in vec]


def _fmt_matrix(mat) -> List[List[str]]:
    return [_fmt_vector(row) for row in mat]


@dataclass
class ModelBundle:
    """Everything one training run produced."""

    vocab: List[str]
    classes: List[str]
    models: Dict[str, ClassModel]

    def model_for(self, name: str) -> ClassModel:
        if name not in self.models:
            raise UnknownClass(name)
        return self.models[name]


def _encode_model(model: ClassModel) -> Dict[str, object]:
    phi_entries = []
    for (i, j, bits), probs in sorted(model.phi.items()):
        phi_entries.append(
            {
                "i": i,
                "j": j,
                "constraint": RelationSet(bits).text(),
                "probs": _fmt_vector(probs),
            }
        )
    return {
        "k_star": model.k_star,
        "ell": model.ell,
        "alpha": _fmt_vector(model.alpha),
        "beta": _fmt_matrix(model.beta),
        "theta": _fmt_matrix(model.theta),
        "structure": [[i, j] for i, j in model.structure.sorted_links()],
        "phi": phi_entries,
        "size_histogram": {
            str(size): count for size, count in sorted(model.size_histogram.items())
        },
    }


def _decode_model(obj: Mapping[str, object], vocab: Sequence[str]) -> ClassModel:
    phi = {}
    for entry in obj["phi"]:
        key = (int(entry["i"]), int(entry["j"]), RelationSet.from_text(entry["constraint"]).bits)
        phi[key] = np.asarray([float(p) for p in entry["probs"]])
    model = ClassModel(
        k_star=int(obj["k_star"]),
        ell=int(obj["ell"]),
        alpha=np.asarray([float(a) for a in obj["alpha"]]),
        beta=np.asarray([[float(b) for b in row] for row in obj["beta"]]),
        theta=np.asarray([[float(t) for t in row] for row in obj["theta"]]),
        structure=StructureMask.of(obj["structure"]),
        phi=phi,
        action_vocab=tuple(vocab),
        size_histogram={int(size): int(count) for size, count in obj["size_histogram"].items()},
    )
    model.validate()
    return model


def save_bundle(path, bundle: ModelBundle) -> None:
    """Write a bundle; identical parameters give byte-identical files."""
    document = {
        "schema_version": SCHEMA_VERSION,
        "vocab": list(bundle.vocab),
        "classes": list(bundle.classes),
        "models": {name: _encode_model(bundle.models[name]) for name in bundle.classes},
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=2)
        handle.write("\n")


def load_bundle(path) -> ModelBundle:
    with open(path, "r", encoding="utf-8") as handle:
        document = json.load(handle)
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema version: {version!r}")
    vocab = list(document["vocab"])
    classes = list(document["classes"])
    models = {name: _decode_model(document["models"][name], vocab) for name in classes}
    return ModelBundle(vocab=vocab, classes=classes, models=models)
