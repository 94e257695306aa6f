"""Polynomial networks grown by the group method of data handling (GMDH).

Two-input supporting neurons with short polynomial transfer functions are
generated in layers, fitted on one half of the data, and selected by their
sum-squared error on the other half (the exterior criterion). Growth stops
as soon as the best candidate of a new layer fails to improve on the
previous layer. A roulette variant replaces exhaustive layer generation
with randomized pairing proportional to validation accuracy, which scales
to many input features.

The trained network is a small DAG that prints as a readable set of
polynomial equations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ._util import derive_seed
from .errors import DataError, TrainingError
from .neuron import exterior_criterion, least_squares_fit

__all__ = [
    "SupportingNeuron", "PolyNetwork", "GmdhConfig", "count_candidates",
    "eval_supporting_neuron", "train_gmdh_layered", "train_gmdh_roulette",
    "predict_poly", "to_polynomial_text", "gmdh_to_dot",
]


@dataclass(eq=False)
class SupportingNeuron:
    """One node of a polynomial network.

    kind "linear" computes w0 + w1*v1 (+ w2*v2); kind "bilinear" adds the
    interaction term w3*v1*v2 and requires exactly two inputs. Inputs
    reference either a feature column ("x", j) or an earlier neuron ("n", k).
    """

    kind: str
    inputs: tuple
    weights: np.ndarray | None = None
    layer: int = 1
    survivor: bool = False
    criterion: float = float("nan")
    accuracy: float = float("nan")

    def __post_init__(self):
        if self.kind not in ("linear", "bilinear"):
            raise DataError(f"unknown neuron kind '{self.kind}'")
        self.inputs = tuple((str(t), int(r)) for t, r in self.inputs)
        if len(self.inputs) not in (1, 2):
            raise DataError("supporting neurons take one or two inputs")
        if self.kind == "bilinear" and len(self.inputs) != 2:
            raise DataError("bilinear neurons need exactly two inputs")
        for t, _ in self.inputs:
            if t not in ("x", "n"):
                raise DataError(f"unknown input reference '{t}'")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != (self.weight_count,):
                raise DataError(f"{self.kind} neuron with {len(self.inputs)} inputs "
                                f"needs {self.weight_count} weights")

    @property
    def weight_count(self):
        return 4 if self.kind == "bilinear" else len(self.inputs) + 1


@dataclass(eq=False)
class PolyNetwork:
    """Topologically ordered supporting neurons plus the output reference.

    layer_scores records the minimal exterior criterion of each retained
    layer (layered growth only); these are strictly decreasing by the stop
    rule. Predictions threshold the raw polynomial output at 0.5 against
    0/1 targets.
    """

    neurons: list
    output: int
    layer_scores: list = field(default_factory=list)
    feature_names: tuple = ()

    def referenced_features(self):
        cols = sorted({r for n in self.neurons for t, r in n.inputs if t == "x"})
        return tuple(cols)

    def raw_outputs(self, X):
        if not self.neurons:
            raise TrainingError("untrained model: network has no neurons")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        needed = max(self.referenced_features(), default=-1)
        if X.shape[1] <= needed:
            raise DataError(f"input must provide at least {needed + 1} feature values")
        outs = []
        for nrn in self.neurons:
            cols = [X[:, r] if t == "x" else outs[r] for t, r in nrn.inputs]
            outs.append(_poly_eval(nrn, cols))
        return outs[self.output]

    def predict_classes(self, X):
        return (self.raw_outputs(X) >= 0.5).astype(int)


@dataclass(frozen=True)
class GmdhConfig:
    """Growth parameters.

    survivors: how many best candidates seed the next layer; the default
    round(0.4 * first-layer size) is capped at 64 to keep layered growth
    polynomial when there are many features. attempts only applies to the
    roulette variant. method picks the weight fitter: "gradient" descends
    the squared error like the sigmoid neurons do, "least_squares" solves
    the normal equations directly.
    """

    kind: str = "bilinear"
    survivors: int | None = None
    max_layers: int = 10
    attempts: int = 500
    method: str = "gradient"
    learning_rate: float = 0.1
    epochs: int = 200
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("linear", "bilinear"):
            raise DataError(f"unknown neuron kind '{self.kind}'")
        if self.survivors is not None and self.survivors < 1:
            raise DataError("survivors must be at least 1")
        if self.max_layers < 1:
            raise DataError("max_layers must be at least 1")
        if self.attempts < 0:
            raise DataError("attempts must be non-negative")
        if self.method not in ("gradient", "least_squares"):
            raise DataError(f"unknown fit method '{self.method}'")


def count_candidates(m):
    """Number of two-input pairings of m features: m * (m - 1) / 2."""
    if m < 2:
        raise DataError("need at least 2 features")
    return m * (m - 1) // 2


def _basis(kind, cols):
    n = cols[0].shape[0]
    if kind == "bilinear":
        return np.column_stack([np.ones(n), cols[0], cols[1], cols[0] * cols[1]])
    return np.column_stack([np.ones(n)] + list(cols))


def _poly_eval(nrn, cols):
    return _basis(nrn.kind, [np.asarray(c, dtype=float) for c in cols]) @ nrn.weights


def eval_supporting_neuron(neuron: SupportingNeuron, v1, v2=None):
    """Raw polynomial value for scalar inputs (no squashing)."""
    cols = [np.atleast_1d(float(v1))]
    if len(neuron.inputs) == 2:
        if v2 is None:
            raise DataError("two-input neuron needs v2")
        cols.append(np.atleast_1d(float(v2)))
    return float(_poly_eval(neuron, cols)[0])


def _fit_weights(kind, cols, targets, cfg: GmdhConfig, seed):
    """Fit polynomial weights on the fitting subset by the configured method."""
    B = _basis(kind, cols)
    y = np.asarray(targets, dtype=float)
    if cfg.method == "least_squares":
        return least_squares_fit(B, y)
    n = y.shape[0]
    rng = np.random.default_rng(seed)
    best = None
    for restart in range(cfg.restarts):
        w = rng.uniform(-0.5, 0.5, size=B.shape[1])
        for _ in range(cfg.epochs):
            w -= cfg.learning_rate * (2.0 / n) * (B.T @ (B @ w - y))
        if not np.isfinite(w).all():
            raise TrainingError("polynomial weights diverged; lower the learning rate")
        sse = float(np.sum((B @ w - y) ** 2))
        if best is None or sse < best[0]:
            best = (sse, restart, w)
    return best[2]


def _binary_targets(ds):
    if ds.class_count != 2:
        raise DataError("polynomial-network training requires binary labels")
    return ds.labels.astype(float)


def train_gmdh_layered(train, val, cfg: GmdhConfig = GmdhConfig()) -> PolyNetwork:
    """Layer-wise exhaustive growth with exterior-criterion selection.

    Layer 1 fits every pairing of input features on the fitting subset and
    keeps the `survivors` best by held-out sum-squared error; later layers
    pair the survivors. Growth stops when a new layer's best candidate no
    longer improves, and the best neuron of the last retained layer becomes
    the output. Neurons the output never references are pruned.
    """
    m = train.n_features
    if m < 2:
        raise DataError("need at least 2 features")
    yA = _binary_targets(train)
    yB = _binary_targets(val)
    if val.n_rows == 0:
        raise DataError("empty validation set")
    if not 0.4 <= train.n_rows / max(val.n_rows, 1) <= 2.5:
        warnings.warn("fitting and validation subsets differ a lot in size; "
                      "the selection criterion works best when they are comparable",
                      stacklevel=2)

    XA, XB = train.features, val.features
    kept = []            # retained neurons across layers, creation order
    colsA, colsB = [], []  # per retained neuron: outputs on both subsets
    layer_scores = []
    prev_layer = None    # indices into kept of the previous layer's survivors
    n_keep = cfg.survivors if cfg.survivors is not None \
        else max(1, min(64, round(0.4 * count_candidates(m))))

    for layer in range(1, cfg.max_layers + 1):
        if layer == 1:
            pair_cols = [(("x", a), ("x", b)) for a, b in combinations(range(m), 2)]
        else:
            if len(prev_layer) < 2:
                break
            pair_cols = [(("n", a), ("n", b)) for a, b in combinations(prev_layer, 2)]

        candidates = []
        for ci, (ra, rb) in enumerate(pair_cols):
            inA = [XA[:, ra[1]] if ra[0] == "x" else colsA[ra[1]],
                   XA[:, rb[1]] if rb[0] == "x" else colsA[rb[1]]]
            inB = [XB[:, ra[1]] if ra[0] == "x" else colsB[ra[1]],
                   XB[:, rb[1]] if rb[0] == "x" else colsB[rb[1]]]
            w = _fit_weights(cfg.kind, inA, yA, cfg, derive_seed(cfg.seed, layer, ci))
            nrn = SupportingNeuron(cfg.kind, (ra, rb), w, layer=layer)
            outB = _basis(cfg.kind, inB) @ w
            nrn.criterion = exterior_criterion(lambda _x, o=outB: o, XB, yB).value
            candidates.append((ci, nrn, _basis(cfg.kind, inA) @ w, outB))

        order = sorted(candidates, key=lambda c: (c[1].criterion, c[0]))
        best_cr = order[0][1].criterion
        if layer_scores and best_cr >= layer_scores[-1]:
            break
        layer_scores.append(best_cr)
        this_layer = []
        for ci, nrn, outA, outB in order[:n_keep]:
            nrn.survivor = True
            kept.append(nrn)
            colsA.append(outA)
            colsB.append(outB)
            this_layer.append(len(kept) - 1)
        prev_layer = this_layer

    if not kept:
        raise TrainingError("no layer could be grown")
    output = prev_layer[0]   # survivors are sorted best-first
    net = PolyNetwork(kept, output, layer_scores, train.feature_names)
    return _pruned(net)


def train_gmdh_roulette(train, val, cfg: GmdhConfig = GmdhConfig(), seed=None) -> PolyNetwork:
    """Randomized growth: accepted neurons join the selectable pool.

    Every feature first gets a one-input neuron whose validation accuracy
    seeds the roulette pool. Each attempt draws a pair of distinct pool
    members with probability proportional to accuracy, fits a two-input
    candidate on them, and accepts it only when it beats both parents; an
    accepted neuron's output becomes selectable for later pairings. The
    final model is the pool member with the best validation accuracy.
    """
    m = train.n_features
    if m < 2:
        raise DataError("need at least 2 features")
    yA = _binary_targets(train)
    yB = _binary_targets(val)
    if val.n_rows == 0:
        raise DataError("empty validation set")
    if seed is None:
        seed = cfg.seed

    XA, XB = train.features, val.features
    neurons, colsA, colsB = [], [], []

    def add(nrn, outA, outB):
        nrn.accuracy = float(np.mean((outB >= 0.5).astype(int) == val.labels))
        neurons.append(nrn)
        colsA.append(outA)
        colsB.append(outB)
        return nrn.accuracy

    pool = []  # accuracy per pool member; member k is neurons[k], and
    #            members below m stand in for the raw features themselves
    for i in range(m):
        w = _fit_weights("linear", [XA[:, i]], yA, cfg, derive_seed(seed, 0, i))
        nrn = SupportingNeuron("linear", (("x", i),), w, layer=1)
        acc = add(nrn, _basis("linear", [XA[:, i]]) @ w, _basis("linear", [XB[:, i]]) @ w)
        pool.append(acc)

    rng = np.random.default_rng(derive_seed(seed, 1))

    for attempt in range(cfg.attempts):
        a = np.asarray(pool, dtype=float)
        probs = a / a.sum() if a.sum() > 0 else np.full(len(pool), 1.0 / len(pool))
        pair = None
        for _ in range(10):
            i = int(rng.choice(len(pool), p=probs))
            j = int(rng.choice(len(pool), p=probs))
            if i != j:
                pair = (i, j)
                break
        if pair is None:
            continue
        i, j = pair
        refs, inA, inB = [], [], []
        for p in (i, j):
            if p < m:
                refs.append(("x", p))
                inA.append(XA[:, p])
                inB.append(XB[:, p])
            else:
                refs.append(("n", p))
                inA.append(colsA[p])
                inB.append(colsB[p])
        w = _fit_weights(cfg.kind, inA, yA, cfg, derive_seed(seed, 2, attempt))
        nrn = SupportingNeuron(cfg.kind, tuple(refs), w,
                               layer=1 + max(neurons[p].layer for p in (i, j)),
                               survivor=True)
        outB = _basis(cfg.kind, inB) @ w
        ac = float(np.mean((outB >= 0.5).astype(int) == val.labels))
        if ac > max(pool[i], pool[j]):
            add(nrn, _basis(cfg.kind, inA) @ w, outB)
            pool.append(ac)

    output = int(np.argmax(pool))
    net = PolyNetwork(neurons, output, [], train.feature_names)
    return _pruned(net)


def _pruned(net: PolyNetwork) -> PolyNetwork:
    """Drop neurons the output never references; predictions are unchanged."""
    needed = set()
    stack = [net.output]
    while stack:
        k = stack.pop()
        if k in needed:
            continue
        needed.add(k)
        stack.extend(r for t, r in net.neurons[k].inputs if t == "n")
    keep = sorted(needed)
    remap = {old: new for new, old in enumerate(keep)}
    pruned = []
    for old in keep:
        nrn = net.neurons[old]
        inputs = tuple((t, r if t == "x" else remap[r]) for t, r in nrn.inputs)
        copy = SupportingNeuron(nrn.kind, inputs, nrn.weights, nrn.layer, nrn.survivor)
        copy.criterion, copy.accuracy = nrn.criterion, nrn.accuracy
        pruned.append(copy)
    return PolyNetwork(pruned, remap[net.output], list(net.layer_scores), net.feature_names)


def predict_poly(net: PolyNetwork, x):
    """Classify a single example; returns (class, raw polynomial output)."""
    x = np.asarray(x, dtype=float)
    raw = float(net.raw_outputs(x[None, :])[0])
    return int(raw >= 0.5), raw


def _neuron_names(net):
    per_layer = {}
    names = []
    for nrn in net.neurons:
        per_layer[nrn.layer] = per_layer.get(nrn.layer, 0) + 1
        names.append(f"y{per_layer[nrn.layer]}({nrn.layer})")
    return names


def to_polynomial_text(net: PolyNetwork) -> str:
    """The network as a set of polynomial equations, one per neuron, with
    coefficients to 4 decimals and inputs substituted by name. Listing is
    topological, so every referenced term appears before its use."""
    if not net.neurons:
        raise TrainingError("untrained model: network has no neurons")
    names = _neuron_names(net)
    feature = net.feature_names or tuple(
        f"x{j + 1}" for j in range(max(net.referenced_features(), default=0) + 1))

    lines = []
    for k, nrn in enumerate(net.neurons):
        ins = [feature[r] if t == "x" else names[r] for t, r in nrn.inputs]
        terms = list(ins)
        if nrn.kind == "bilinear":
            terms.append(f"{ins[0]}*{ins[1]}")
        eq = f"{nrn.weights[0]:.4f}"
        for w, term in zip(nrn.weights[1:], terms):
            sign = " + " if w >= 0 else " - "
            eq += f"{sign}{abs(w):.4f}*{term}"
        mark = "   (output)" if k == net.output else ""
        lines.append(f"{names[k]} = {eq}{mark}")
    return "\n".join(lines)


def gmdh_to_dot(net: PolyNetwork) -> str:
    """Graphviz rendering of the DAG; surviving neurons are filled gray."""
    names = _neuron_names(net)
    feature = net.feature_names or tuple(
        f"x{j + 1}" for j in range(max(net.referenced_features(), default=0) + 1))
    lines = ["digraph polynet {", "  rankdir=LR;"]
    for f in net.referenced_features():
        lines.append(f'  "x{f}" [label="{feature[f]}", shape=box];')
    for k, nrn in enumerate(net.neurons):
        fill = ", style=filled, fillcolor=gray80" if nrn.survivor else ""
        mark = ", peripheries=2" if k == net.output else ""
        lines.append(f'  "n{k}" [label="{names[k]}"{fill}{mark}];')
        for t, r in nrn.inputs:
            src = f"x{r}" if t == "x" else f"n{r}"
            lines.append(f'  "{src}" -> "n{k}";')
    lines.append("}")
    return "\n".join(lines)
