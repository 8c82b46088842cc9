"""Feedforward classifier: sigmoid hidden layers, softmax output.

The network is small on purpose (it has to run on a dash-mounted single
board computer): an input layer sized by the feature set, two hidden layers,
and one output unit per driving-style class.  Training is plain minibatch
gradient descent on cross-entropy with seeded shuffling, which keeps every
run bit-reproducible.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import (
    DimensionMismatch,
    EmptyDataset,
    FormatVersionMismatch,
    MissingClass,
    ModelIoError,
)
from .records import (
    ClassScheme,
    Dataset,
    DrivingStyle,
    FeatureSet,
    NormalizationStats,
    Register,
    apply_scheme,
    extract_features,
    apply_normalization,
    feature_matrix,
    fit_normalization,
    normalize_matrix,
)

MODEL_FORMAT = "drivestyle-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Topology:
    """Layer sizes: input -> hidden... -> output."""

    input_size: int
    hidden_sizes: tuple[int, ...] = (16, 8)
    output_size: int = 3

    def __post_init__(self):
        sizes = (self.input_size, *self.hidden_sizes, self.output_size)
        if any(s < 1 for s in sizes):
            raise ValueError(f"layer sizes must be positive: {sizes}")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_size, *self.hidden_sizes, self.output_size)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 200
    minibatch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs <= 0 or self.minibatch_size <= 0:
            raise ValueError("learning rate, epochs and minibatch size must be positive")


@dataclass
class Network:
    """Trained (or freshly initialized) classifier.

    Treat instances as immutable once handed out; training always builds a
    new one.  `weights[l]` has shape (fan_out, fan_in) and `biases[l]` shape
    (fan_out,).  `classes` fixes the output unit order (ascending class
    code), and `stats` holds the min/max normalization fitted on the
    training data.
    """

    topology: Topology
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    feature_set: FeatureSet | None = None
    scheme: ClassScheme | None = None
    classes: tuple[DrivingStyle, ...] | None = None
    stats: NormalizationStats | None = None
    loss_curve: tuple[float, ...] = field(default=(), repr=False)


def _rng(seed: int) -> np.random.Generator:
    # counter-based generator: identical streams on every platform
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def init(topology: Topology, seed: int) -> Network:
    """Seeded uniform initialization in +/- sqrt(6 / (fan_in + fan_out))."""
    rng = _rng(seed)
    weights = []
    biases = []
    sizes = topology.layer_sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Network(topology, weights, biases)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return expit(z)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward_batch(net: Network, inputs: np.ndarray) -> np.ndarray:
    """Class probabilities for an (n, input_size) matrix of normalized rows."""
    if inputs.ndim != 2 or inputs.shape[1] != net.topology.input_size:
        raise DimensionMismatch(
            f"expected (n, {net.topology.input_size}) inputs, got {inputs.shape}"
        )
    activation = inputs
    last = len(net.weights) - 1
    for layer, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = activation @ w.T + b
        activation = _softmax(z) if layer == last else _sigmoid(z)
    return activation


def forward(net: Network, features) -> list[float]:
    """Softmax class probabilities for one normalized feature vector."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != net.topology.input_size:
        raise DimensionMismatch(
            f"expected {net.topology.input_size} features, got shape {x.shape}"
        )
    return [float(p) for p in forward_batch(net, x[None, :])[0]]


def predict(net: Network, r: Register) -> DrivingStyle:
    """Classify one register with the network's own feature set and stats."""
    if net.feature_set is None or net.stats is None or net.classes is None:
        raise ModelIoError("network has no attached feature set / normalization")
    raw = extract_features(r, net.feature_set)
    probs = forward(net, apply_normalization(raw, net.stats))
    # np.argmax-style tie break: first (lowest class code) wins
    best = 0
    for i in range(1, len(probs)):
        if probs[i] > probs[best]:
            best = i
    return net.classes[best]


def predict_dataset(net: Network, data: Dataset) -> list[DrivingStyle]:
    """Vectorized predict over a whole dataset (same tie-break as predict)."""
    if net.feature_set is None or net.stats is None or net.classes is None:
        raise ModelIoError("network has no attached feature set / normalization")
    if len(data) == 0:
        return []
    x = normalize_matrix(feature_matrix(data, net.feature_set), net.stats)
    probs = forward_batch(net, x)
    return [net.classes[i] for i in np.argmax(probs, axis=1)]


def loss_and_gradients(net: Network, inputs: np.ndarray, targets: np.ndarray):
    """Mean cross-entropy over the batch and its analytic gradients.

    `targets` is one-hot (n, output_size).  Returns (loss, grads) where
    grads is a list of (dW, db) matching the network layers.
    """
    n = inputs.shape[0]
    activations = [inputs]
    last = len(net.weights) - 1
    for layer, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = activations[-1] @ w.T + b
        activations.append(_softmax(z) if layer == last else _sigmoid(z))

    probs = activations[-1]
    loss = float(-np.sum(targets * np.log(probs)) / n)

    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(net.weights)
    delta = (probs - targets) / n
    for layer in range(last, -1, -1):
        grads[layer] = (delta.T @ activations[layer], delta.sum(axis=0))
        if layer > 0:
            a = activations[layer]
            delta = (delta @ net.weights[layer]) * a * (1.0 - a)
    return loss, grads


def batch_loss(net: Network, inputs: np.ndarray, targets: np.ndarray) -> float:
    """Mean cross-entropy without gradients."""
    probs = forward_batch(net, inputs)
    return float(-np.sum(targets * np.log(probs)) / inputs.shape[0])


def train(
    data: Dataset,
    fs: FeatureSet,
    scheme: ClassScheme,
    topology: Topology | None = None,
    cfg: TrainConfig = TrainConfig(),
) -> Network:
    """Minibatch gradient descent on cross-entropy.

    The scheme is applied to the data first; every class of the scheme must
    be present.  Normalization is fitted on the (scheme-applied) training
    data and attached to the returned network together with the feature set
    and class list.  The per-epoch shuffle and the weight initialization
    both derive from cfg.seed, so identical inputs give identical networks.
    """
    data = apply_scheme(data.require_labeled(), scheme)
    if len(data) == 0:
        raise EmptyDataset("no registers left to train on")
    classes = scheme.classes
    present = set(r.label for r in data)
    for cls in classes:
        if cls not in present:
            raise MissingClass(f"class {cls.name} absent from training data")

    if topology is None:
        topology = Topology(input_size=len(fs), output_size=len(classes))
    if topology.input_size != len(fs):
        raise DimensionMismatch(
            f"topology input size {topology.input_size} != feature count {len(fs)}"
        )
    if topology.output_size != len(classes):
        raise DimensionMismatch(
            f"topology output size {topology.output_size} != class count {len(classes)}"
        )

    stats = fit_normalization(data, fs)
    x = normalize_matrix(feature_matrix(data, fs), stats)
    class_index = {cls: i for i, cls in enumerate(classes)}
    y = np.zeros((len(data), len(classes)))
    for row, r in enumerate(data):
        y[row, class_index[r.label]] = 1.0

    net = init(topology, cfg.seed)
    rng = _rng(cfg.seed + 1)  # distinct stream for shuffling
    n = x.shape[0]
    batch = min(cfg.minibatch_size, n)
    lr = cfg.learning_rate
    losses = []
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        xs, ys = x[perm], y[perm]
        for start in range(0, n, batch):
            xb = xs[start:start + batch]
            yb = ys[start:start + batch]
            _, grads = loss_and_gradients(net, xb, yb)
            for layer, (dw, db) in enumerate(grads):
                net.weights[layer] -= lr * dw
                net.biases[layer] -= lr * db
        losses.append(batch_loss(net, x, y))

    return Network(
        topology=topology,
        weights=net.weights,
        biases=net.biases,
        feature_set=fs,
        scheme=scheme,
        classes=classes,
        stats=stats,
        loss_curve=tuple(losses),
    )


def save_model(net: Network, path) -> None:
    """Serialize to the versioned JSON model format (full float precision)."""
    if net.feature_set is None or net.scheme is None or net.stats is None:
        raise ModelIoError("only trained networks (with feature set, scheme "
                           "and normalization) can be saved")
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "feature_set": {
            "name": net.feature_set.name,
            "fields": list(net.feature_set.fields),
        },
        "scheme": net.scheme.value,
        "classes": [c.name for c in net.classes],
        "topology": {
            "input_size": net.topology.input_size,
            "hidden_sizes": list(net.topology.hidden_sizes),
            "output_size": net.topology.output_size,
        },
        "normalization": {
            "min": list(net.stats.mins),
            "max": list(net.stats.maxs),
        },
        "layers": [
            {"weights": w.tolist(), "bias": b.tolist()}
            for w, b in zip(net.weights, net.biases)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path) -> Network:
    """Read a model written by save_model; the round trip is exact."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ModelIoError(f"cannot read model file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ModelIoError(f"model file is not valid JSON: {exc}") from None

    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelIoError("not a drivestyle model file")
    if doc.get("version") != MODEL_VERSION:
        raise FormatVersionMismatch(
            f"model format version {doc.get('version')!r}, expected {MODEL_VERSION}"
        )
    try:
        fs = FeatureSet(doc["feature_set"]["name"],
                        tuple(doc["feature_set"]["fields"]))
        scheme = ClassScheme(doc["scheme"])
        classes = tuple(DrivingStyle[name] for name in doc["classes"])
        topo = Topology(
            input_size=int(doc["topology"]["input_size"]),
            hidden_sizes=tuple(int(h) for h in doc["topology"]["hidden_sizes"]),
            output_size=int(doc["topology"]["output_size"]),
        )
        stats = NormalizationStats(
            mins=tuple(float(v) for v in doc["normalization"]["min"]),
            maxs=tuple(float(v) for v in doc["normalization"]["max"]),
        )
        weights = [np.array(layer["weights"], dtype=np.float64)
                   for layer in doc["layers"]]
        biases = [np.array(layer["bias"], dtype=np.float64)
                  for layer in doc["layers"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelIoError(f"model file is structurally broken: {exc}") from None

    sizes = topo.layer_sizes
    expected = list(zip(sizes[1:], sizes[:-1]))
    if [w.shape for w in weights] != expected:
        raise ModelIoError("layer shapes do not match the declared topology")
    if topo.input_size != len(fs) or topo.output_size != len(classes):
        raise ModelIoError("topology inconsistent with feature set / classes")
    return Network(topo, weights, biases, fs, scheme, classes, stats)
