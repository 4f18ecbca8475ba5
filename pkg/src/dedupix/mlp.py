"""Sigmoid multilayer perceptron trained with backpropagation on the
averaged binary cross-entropy, plus the flat ontology it labels against."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, OntologyError, ShapeMismatch

CLAMP = 1e-12
_MAGIC = b"MLP1"


@dataclass(frozen=True)
class MlpModel:
    layer_sizes: tuple
    weights: tuple
    biases: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2:
            raise DimensionMismatch("need at least an input and an output layer")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise DimensionMismatch("one weight matrix and bias vector per layer")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if np.shape(w) != (sizes[l + 1], sizes[l]) or np.shape(b) != (sizes[l + 1],):
                raise DimensionMismatch(f"layer {l} has shapes {np.shape(w)}, {np.shape(b)}")
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "weights", tuple(np.array(w, dtype=np.float64) for w in self.weights))
        object.__setattr__(self, "biases", tuple(np.array(b, dtype=np.float64) for b in self.biases))


def init_model(layer_sizes: Sequence[int], seed: int = 0) -> MlpModel:
    """Uniform weights in +-1/sqrt(fan_in); biases drawn the same way."""
    rng = np.random.default_rng(seed)
    ws, bs = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        ws.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        bs.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpModel(tuple(layer_sizes), tuple(ws), tuple(bs))


def zero_model(layer_sizes: Sequence[int]) -> MlpModel:
    return MlpModel(tuple(layer_sizes),
                    tuple(np.zeros((o, i)) for i, o in zip(layer_sizes[:-1], layer_sizes[1:])),
                    tuple(np.zeros(o) for o in layer_sizes[1:]))


_LO = 1e-300
_HI = float(np.nextafter(1.0, 0.0))


def sigmoid(t):
    # clipped so saturated units stay strictly inside (0, 1)
    return np.clip(0.5 * (1.0 + np.tanh(0.5 * np.asarray(t, dtype=np.float64))), _LO, _HI)


def _activations(model: MlpModel, x: np.ndarray) -> list[np.ndarray]:
    acts = [x]
    for w, b in zip(model.weights, model.biases):
        acts.append(sigmoid(acts[-1] @ w.T + b))
    return acts


def forward(model: MlpModel, x) -> np.ndarray:
    """Output of the network for one input vector or a batch (rows)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.layer_sizes[0]:
        raise DimensionMismatch(f"input has {x.shape[-1]} features, model expects {model.layer_sizes[0]}")
    return _activations(model, x)[-1]


def loss(predictions, targets) -> float:
    p = np.atleast_2d(np.asarray(predictions, dtype=np.float64))
    y = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if p.shape != y.shape:
        raise ShapeMismatch(f"predictions {p.shape} vs targets {y.shape}")
    p = np.clip(p, CLAMP, 1.0 - CLAMP)
    return float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).sum() / p.shape[0])


def gradients(model: MlpModel, x, y) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Loss and its exact gradients w.r.t. every weight matrix and bias vector."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if x.shape[1] != model.layer_sizes[0]:
        raise DimensionMismatch(f"inputs have {x.shape[1]} features, model expects {model.layer_sizes[0]}")
    if y.shape != (x.shape[0], model.layer_sizes[-1]):
        raise ShapeMismatch(f"targets {y.shape} do not match outputs ({x.shape[0]}, {model.layer_sizes[-1]})")
    n = x.shape[0]
    acts = _activations(model, x)
    out = acts[-1]
    value = loss(out, y)
    # d(loss)/d(pre-activation) at the output for sigmoid + cross-entropy
    delta = (out - y) / n
    gw = [None] * len(model.weights)
    gb = [None] * len(model.biases)
    for l in range(len(model.weights) - 1, -1, -1):
        gw[l] = delta.T @ acts[l]
        gb[l] = delta.sum(axis=0)
        if l:
            a = acts[l]
            delta = (delta @ model.weights[l]) * a * (1.0 - a)
    return value, gw, gb


def backprop_step(model: MlpModel, x, y, lr: float) -> tuple[MlpModel, float]:
    """One gradient-descent step; returns the new model and the pre-step loss."""
    if len(np.atleast_2d(x)) == 0:
        raise ShapeMismatch("empty batch")
    value, gw, gb = gradients(model, x, y)
    ws = tuple(w - lr * g for w, g in zip(model.weights, gw))
    bs = tuple(b - lr * g for b, g in zip(model.biases, gb))
    return MlpModel(model.layer_sizes, ws, bs), value


def train(model: MlpModel, x, y, epochs: int, lr: float, seed: int = 0,
          batch_size: int | None = None) -> tuple[MlpModel, list[float]]:
    """Full-batch (default) or shuffled mini-batch gradient descent.

    The loss curve holds the full-data loss after each epoch.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if len(x) == 0:
        raise ShapeMismatch("empty dataset")
    if len(x) != len(y):
        raise ShapeMismatch(f"{len(x)} inputs but {len(y)} labels")
    rng = np.random.default_rng(seed)
    curve = []
    for _ in range(epochs):
        if batch_size is None or batch_size >= len(x):
            model, _ = backprop_step(model, x, y, lr)
        else:
            order = rng.permutation(len(x))
            for start in range(0, len(x), batch_size):
                idx = order[start:start + batch_size]
                model, _ = backprop_step(model, x[idx], y[idx], lr)
        curve.append(loss(forward(model, x), y))
    return model, curve


def one_hot(labels: Sequence[int], n_classes: int) -> np.ndarray:
    y = np.zeros((len(labels), n_classes))
    y[np.arange(len(labels)), np.asarray(labels, dtype=int)] = 1.0
    return y


# -- ontology ----------------------------------------------------------------

RELATION_KINDS = ("part-of", "adjacent-to")
DEFAULT_LABELS = ("background", "edge", "roi")


@dataclass(frozen=True)
class OntologyLabels:
    labels: tuple
    relations: tuple = field(default_factory=tuple)

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise OntologyError("duplicate label")
        known = set(labels)
        for a, kind, b in self.relations:
            if kind not in RELATION_KINDS:
                raise OntologyError(f"unknown relation kind {kind!r}")
            if a not in known or b not in known:
                raise OntologyError(f"relation {a} {kind} {b} uses an undeclared label")
        parent: dict[str, list[str]] = {}
        for a, kind, b in self.relations:
            if kind == "part-of":
                parent.setdefault(a, []).append(b)
        state: dict[str, int] = {}

        def visit(node):
            state[node] = 1
            for nxt in parent.get(node, ()):
                if state.get(nxt) == 1:
                    raise OntologyError(f"part-of cycle through {nxt!r}")
                if nxt not in state:
                    visit(nxt)
            state[node] = 2

        for node in parent:
            if node not in state:
                visit(node)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "relations", tuple(tuple(r) for r in self.relations))

    def index(self, label: str) -> int:
        return self.labels.index(label)


def parse_ontology(text: str) -> OntologyLabels:
    """One label per line; ``a part-of b`` / ``a adjacent-to b`` declare relations."""
    labels, relations = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 1:
            labels.append(parts[0])
        elif len(parts) == 3 and parts[1] in RELATION_KINDS:
            relations.append((parts[0], parts[1], parts[2]))
        else:
            raise OntologyError(f"line {lineno}: cannot parse {raw!r}")
    return OntologyLabels(tuple(labels), tuple(relations))


def default_ontology() -> OntologyLabels:
    return OntologyLabels(DEFAULT_LABELS, (("edge", "part-of", "roi"), ("roi", "adjacent-to", "background")))


def classify_chunk(model: MlpModel, ontology: OntologyLabels, summary) -> tuple[str, float]:
    """Label with the highest output; ties go to the earlier declared label."""
    if model.layer_sizes[-1] != len(ontology.labels):
        raise DimensionMismatch(f"model has {model.layer_sizes[-1]} outputs for {len(ontology.labels)} labels")
    out = forward(model, summary)
    k = int(np.argmax(out))
    return ontology.labels[k], float(out[k])


# -- persistence ---------------------------------------------------------------

def dump_model(model: MlpModel) -> bytes:
    """``MLP1``, layer count, sizes (u32 LE), then each layer's weights and biases
    as row-major little-endian float64."""
    sizes = model.layer_sizes
    parts = [_MAGIC, struct.pack("<I", len(sizes)), struct.pack(f"<{len(sizes)}I", *sizes)]
    for w, b in zip(model.weights, model.biases):
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(parts)


def load_model(blob: bytes) -> MlpModel:
    if blob[:4] != _MAGIC:
        raise ValueError("not an MLP1 blob")
    (count,) = struct.unpack_from("<I", blob, 4)
    sizes = struct.unpack_from(f"<{count}I", blob, 8)
    pos = 8 + 4 * count
    ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        nw = fan_in * fan_out
        ws.append(np.frombuffer(blob, dtype="<f8", count=nw, offset=pos).reshape(fan_out, fan_in))
        pos += 8 * nw
        bs.append(np.frombuffer(blob, dtype="<f8", count=fan_out, offset=pos))
        pos += 8 * fan_out
    if pos != len(blob):
        raise ValueError(f"{len(blob) - pos} trailing bytes in model blob")
    return MlpModel(tuple(sizes), tuple(ws), tuple(bs))


# -- optional emit/no-emit refinement of edge pixels ------------------------------

def neighbourhoods(magnitude: np.ndarray) -> np.ndarray:
    """3x3 magnitude patches (edge clamped) scaled by the global maximum, one row per pixel."""
    mag = np.asarray(magnitude, dtype=np.float64)
    scale = mag.max() or 1.0
    p = np.pad(mag / scale, 1, mode="edge")
    h, w = mag.shape
    cols = [p[1 + dy:1 + dy + h, 1 + dx:1 + dx + w].ravel() for dy in (-1, 0, 1) for dx in (-1, 0, 1)]
    return np.stack(cols, axis=1)


def refine_edges(model: MlpModel, magnitude: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Keep a marked edge pixel only when the 9-input model scores it >= 0.5."""
    if model.layer_sizes[0] != 9 or model.layer_sizes[-1] != 1:
        raise DimensionMismatch("refinement model must map 9 inputs to 1 output")
    flags = np.asarray(edges, dtype=bool)
    scores = forward(model, neighbourhoods(magnitude))[:, 0].reshape(flags.shape)
    return flags & (scores >= 0.5)
