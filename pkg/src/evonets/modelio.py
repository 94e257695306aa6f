"""Versioned JSON persistence for every trainable model.

The format is deliberately human-readable: weights are stored as plain JSON
numbers (Python's repr round-trips floats exactly, so loading reproduces
predictions bit for bit), and the envelope carries the normalization,
label mapping, and provenance needed to evaluate raw CSV data later.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baseline import FnnModel
from .cascade import CascadeNetwork
from .dataset import NormParams
from .errors import DataError
from .gmdh import PolyNetwork, SupportingNeuron
from .linear import LinearMachine, LinearTest, PairwiseTree
from .neuron import SigmoidNeuron
from .ruletree import RuleNode, RuleTree

FORMAT_VERSION = 1

METHODS = ("ecnn", "gmdh-layered", "gmdh-roulette", "lm", "pairwise-dt",
           "ruletree", "fnn")


def _floats(a):
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def _matrix(a):
    return [[float(v) for v in row] for row in np.asarray(a, dtype=float)]


@dataclass(eq=False)
class ModelBundle:
    """A loaded (or to-be-saved) model plus everything needed to apply it."""

    method: str
    model: object
    norm: NormParams
    feature_names: tuple
    label_names: tuple
    label_column: str = "y"
    provenance: dict | None = None

    def predict_classes(self, X_normalized):
        return self.model.predict_classes(X_normalized)

    def predict_csv_features(self, X_raw):
        return self.predict_classes(self.norm.apply(X_raw))


def _encode_sigmoid_neuron(n: SigmoidNeuron):
    return {"bindings": [[k, r] for k, r in n.bindings], "weights": _floats(n.weights)}


def _decode_sigmoid_neuron(d):
    return SigmoidNeuron(tuple((k, r) for k, r in d["bindings"]), np.array(d["weights"]))


def _encode_rule_node(node: RuleNode):
    return {
        "feature": node.feature,
        "threshold": float(node.threshold),
        "high_is_one": bool(node.high_is_one),
        "low": _encode_rule_node(node.low_child) if node.low_child else {"class": node.low_label},
        "high": _encode_rule_node(node.high_child) if node.high_child else {"class": node.high_label},
    }


def _decode_rule_node(d):
    node = RuleNode(int(d["feature"]), float(d["threshold"]), bool(d["high_is_one"]))
    if "class" in d["low"]:
        node.low_label = int(d["low"]["class"])
    else:
        node.low_child = _decode_rule_node(d["low"])
    if "class" in d["high"]:
        node.high_label = int(d["high"]["class"])
    else:
        node.high_child = _decode_rule_node(d["high"])
    return node


def _payload(method, model):
    if method == "ecnn":
        return {
            "anchor": model.anchor,
            "feature_order": list(model.feature_order),
            "single_errors": _floats(model.single_errors),
            "base_neuron": _encode_sigmoid_neuron(model.base_neuron),
            "base_score": float(model.base_score),
            "neurons": [_encode_sigmoid_neuron(n) for n in model.neurons],
            "accepted_features": list(model.accepted_features),
            "accepted_scores": _floats(model.accepted_scores),
            "threshold": float(model.threshold),
        }
    if method in ("gmdh-layered", "gmdh-roulette"):
        return {
            "neurons": [{
                "kind": n.kind,
                "inputs": [[t, r] for t, r in n.inputs],
                "weights": _floats(n.weights),
                "layer": n.layer,
                "survivor": bool(n.survivor),
            } for n in model.neurons],
            "output": model.output,
            "layer_scores": _floats(model.layer_scores),
        }
    if method == "lm":
        return {"weights": _matrix(model.weights)}
    if method == "pairwise-dt":
        return {
            "classes": model.class_count,
            "tests": [{
                "i": i, "j": j,
                "features": list(model.tlus[(i, j)].features),
                "weights": _floats(model.tlus[(i, j)].weights),
                "accuracy": float(model.tlus[(i, j)].accuracy),
            } for (i, j) in sorted(model.tlus)],
        }
    if method == "ruletree":
        return {"root": _encode_rule_node(model.root)}
    if method == "fnn":
        return {
            "hidden_weights": _matrix(model.hidden_weights),
            "output_weights": _matrix(model.output_weights),
            "classes": model.class_count,
            "threshold": float(model.threshold),
        }
    raise DataError(f"unknown method '{method}'")


def _restore(method, payload, feature_names):
    if method == "ecnn":
        return CascadeNetwork(
            anchor=int(payload["anchor"]),
            feature_order=tuple(payload["feature_order"]),
            single_errors=tuple(payload["single_errors"]),
            base_neuron=_decode_sigmoid_neuron(payload["base_neuron"]),
            base_score=float(payload["base_score"]),
            neurons=[_decode_sigmoid_neuron(d) for d in payload["neurons"]],
            accepted_features=[int(f) for f in payload["accepted_features"]],
            accepted_scores=[float(s) for s in payload["accepted_scores"]],
            threshold=float(payload["threshold"]),
            feature_names=feature_names,
        )
    if method in ("gmdh-layered", "gmdh-roulette"):
        neurons = []
        for d in payload["neurons"]:
            neurons.append(SupportingNeuron(
                d["kind"], tuple((t, r) for t, r in d["inputs"]),
                np.array(d["weights"]), int(d["layer"]), bool(d["survivor"])))
        return PolyNetwork(neurons, int(payload["output"]),
                           [float(s) for s in payload["layer_scores"]], feature_names)
    if method == "lm":
        return LinearMachine(np.array(payload["weights"]))
    if method == "pairwise-dt":
        tlus = {}
        for t in payload["tests"]:
            tlus[(int(t["i"]), int(t["j"]))] = LinearTest(
                tuple(t["features"]), np.array(t["weights"]), float(t["accuracy"]))
        return PairwiseTree(int(payload["classes"]), tlus, feature_names)
    if method == "ruletree":
        return RuleTree(_decode_rule_node(payload["root"]), feature_names)
    if method == "fnn":
        return FnnModel(np.array(payload["hidden_weights"]),
                        np.array(payload["output_weights"]),
                        int(payload["classes"]), float(payload["threshold"]))
    raise DataError(f"unknown method '{method}'")


def save_model(path, bundle: ModelBundle):
    """Serialize the bundle to deterministic, lossless JSON."""
    if bundle.method not in METHODS:
        raise DataError(f"unknown method '{bundle.method}'")
    doc = {
        "format_version": FORMAT_VERSION,
        "method": bundle.method,
        "feature_names": list(bundle.feature_names),
        "label_names": list(bundle.label_names),
        "label_column": bundle.label_column,
        "normalization": {"mean": _floats(bundle.norm.mean), "sd": _floats(bundle.norm.sd)},
        "payload": _payload(bundle.method, bundle.model),
        "provenance": bundle.provenance or {},
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path) -> ModelBundle:
    p = Path(path)
    if not p.exists():
        raise DataError(f"missing model file: {path}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON ({exc})") from None
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format_version {version!r}")
    method = doc.get("method")
    if method not in METHODS:
        raise DataError(f"{path}: unknown method '{method}'")
    feature_names = tuple(doc["feature_names"])
    norm = NormParams(np.array(doc["normalization"]["mean"]),
                      np.array(doc["normalization"]["sd"]))
    model = _restore(method, doc["payload"], feature_names)
    return ModelBundle(method, model, norm, feature_names,
                       tuple(doc["label_names"]), doc.get("label_column", "y"),
                       doc.get("provenance") or {})
