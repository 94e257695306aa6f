"""Model persistence: lossless JSON round trips for every family."""

import json

import numpy as np
import pytest

from evonets.baseline import FnnModel
from evonets.cascade import CascadeNetwork
from evonets.dataset import NormParams
from evonets.errors import DataError
from evonets.gmdh import PolyNetwork, SupportingNeuron
from evonets.linear import LinearMachine, LinearTest, PairwiseTree
from evonets.modelio import ModelBundle, load_model, save_model
from evonets.neuron import SigmoidNeuron
from evonets.ruletree import RuleNode, RuleTree

NORM2 = NormParams(np.array([0.25, -1.5]), np.array([1.1, 0.7]))


def round_trip(tmp_path, bundle, width):
    path = tmp_path / "model.json"
    save_model(path, bundle)
    loaded = load_model(path)
    rng = np.random.default_rng(99)
    X = rng.uniform(-2, 2, size=(64, width))
    np.testing.assert_array_equal(bundle.predict_csv_features(X),
                                  loaded.predict_csv_features(X))
    again = tmp_path / "again.json"
    save_model(again, loaded)
    assert path.read_bytes() == again.read_bytes()
    return loaded


class TestRoundTrips:
    def test_cascade_with_accepted_neurons(self, tmp_path):
        base = SigmoidNeuron((("x", 0),), [0.1, 1.3])
        n1 = SigmoidNeuron((("x", 0), ("x", 1)), [0.5, -2.0, 1.7])
        n2 = SigmoidNeuron((("x", 0), ("x", 1), ("z", 0)), [0.0, 0.3, -0.6, 2.2])
        net = CascadeNetwork(0, (0, 1), (0.3, 0.4), base, 0.3, [n1, n2],
                             [1, 1], [0.2, 0.1], feature_names=("a", "b"))
        bundle = ModelBundle("ecnn", net, NORM2, ("a", "b"), ("no", "yes"))
        loaded = round_trip(tmp_path, bundle, 2)
        assert loaded.model.accepted_scores == [0.2, 0.1]

    def test_cascade_fallback_without_accepted_neurons(self, tmp_path):
        base = SigmoidNeuron((("x", 1),), [-0.4, 2.5])
        net = CascadeNetwork(1, (1, 0), (0.2, 0.5), base, 0.2,
                             feature_names=("a", "b"))
        bundle = ModelBundle("ecnn", net, NORM2, ("a", "b"), ("0", "1"))
        loaded = round_trip(tmp_path, bundle, 2)
        assert loaded.model.neurons == []

    def test_polynomial_network_with_single_input_output(self, tmp_path):
        # a roulette run can end on a one-input neuron
        nrn = SupportingNeuron("linear", (("x", 1),), [0.2, -0.9], layer=1)
        net = PolyNetwork([nrn], 0, [], ("a", "b"))
        bundle = ModelBundle("gmdh-roulette", net, NORM2, ("a", "b"), ("0", "1"))
        loaded = round_trip(tmp_path, bundle, 2)
        assert loaded.model.neurons[0].kind == "linear"

    def test_linear_machine(self, tmp_path):
        lm = LinearMachine(np.array([[0.1, -2.0, 0.5], [0.0, 1.0, -1.0],
                                     [-0.3, 0.2, 2.0]]))
        bundle = ModelBundle("lm", lm, NORM2, ("a", "b"), ("x", "y", "z"))
        round_trip(tmp_path, bundle, 2)

    def test_pairwise_tree(self, tmp_path):
        tlus = {
            (0, 1): LinearTest((0,), [0.5, 1.0], 0.9),
            (0, 2): LinearTest((1,), [-0.5, 2.0], 0.8),
            (1, 2): LinearTest((0, 1), [0.0, 1.0, -1.0], 0.7),
        }
        tree = PairwiseTree(3, tlus, ("a", "b"))
        bundle = ModelBundle("pairwise-dt", tree, NORM2, ("a", "b"),
                             ("p", "q", "r"))
        loaded = round_trip(tmp_path, bundle, 2)
        assert loaded.model.tlus[(1, 2)].features == (0, 1)

    def test_rule_tree_nested(self, tmp_path):
        inner = RuleNode(1, 0.25, False, low_label=1, high_label=0)
        root = RuleNode(0, -0.75, True, low_child=inner, high_label=1)
        tree = RuleTree(root, ("a", "b"))
        bundle = ModelBundle("ruletree", tree, NORM2, ("a", "b"), ("0", "1"))
        loaded = round_trip(tmp_path, bundle, 2)
        assert loaded.model.root.low_child.feature == 1

    def test_fnn(self, tmp_path):
        rng = np.random.default_rng(5)
        model = FnnModel(rng.normal(size=(3, 3)), rng.normal(size=(1, 4)), 2)
        bundle = ModelBundle("fnn", model, NORM2, ("a", "b"), ("0", "1"))
        round_trip(tmp_path, bundle, 2)


class TestValidation:
    def test_unknown_method_rejected_on_save(self, tmp_path):
        bundle = ModelBundle("mystery", object(), NORM2, ("a", "b"), ("0", "1"))
        with pytest.raises(DataError):
            save_model(tmp_path / "m.json", bundle)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="missing model file"):
            load_model(tmp_path / "nope.json")

    def test_truncated_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"format_version": 1, "method"')
        with pytest.raises(DataError, match="not valid JSON"):
            load_model(p)

    def test_wrong_version(self, tmp_path):
        lm = LinearMachine(np.zeros((2, 3)))
        bundle = ModelBundle("lm", lm, NORM2, ("a", "b"), ("0", "1"))
        p = tmp_path / "m.json"
        save_model(p, bundle)
        doc = json.loads(p.read_text())
        doc["format_version"] = 2
        p.write_text(json.dumps(doc))
        with pytest.raises(DataError, match="format_version"):
            load_model(p)

    def test_weights_survive_with_full_precision(self, tmp_path):
        w = [[0.1 + 1e-17, -2.0 / 3.0, np.pi], [1e-300, -1e300, 0.1234567890123456789]]
        lm = LinearMachine(np.array(w))
        bundle = ModelBundle("lm", lm, NORM2, ("a", "b"), ("0", "1"))
        p = tmp_path / "m.json"
        save_model(p, bundle)
        loaded = load_model(p)
        np.testing.assert_array_equal(loaded.model.weights, lm.weights)
