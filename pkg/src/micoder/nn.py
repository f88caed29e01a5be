"""Minimal dense-network engine: forward, reverse-mode gradients, Adam.

Everything is float64 numpy. The engine covers exactly what the rest of
the package needs: sequential dense layers with relu/linear activations,
an optional leading embedding table for integer message inputs, and an
input-cotangent contract on backward() so separately-built networks can
be chained (encoder -> channel -> scoring network).
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    CheckpointError,
    NanAbortError,
    ShapeMismatchError,
    SpecError,
    StaleTapeError,
)
from .rng import make_rng, normal

ACTIVATIONS = ("relu", "linear")

CHECKPOINT_MAGIC = b"MCNN1\n"


@dataclass
class DenseLayer:
    weight: np.ndarray  # (in_width, out_width)
    bias: np.ndarray  # (out_width,)
    activation: str

    @property
    def in_width(self):
        return self.weight.shape[0]

    @property
    def out_width(self):
        return self.weight.shape[1]


class DenseNetwork:
    """Sequential dense layers, optionally fronted by an embedding table."""

    def __init__(self, layers, embedding=None):
        if not layers:
            raise SpecError("network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_width != nxt.in_width:
                raise SpecError(
                    f"layer widths incompatible: {prev.out_width} -> {nxt.in_width}"
                )
        if embedding is not None and embedding.shape[1] != layers[0].in_width:
            raise SpecError("embedding width must match first layer input width")
        self.layers = layers
        self.embedding = embedding
        # bumped on every parameter update; tapes record it to detect staleness
        self._version = 0

    @property
    def in_width(self):
        return self.layers[0].in_width

    @property
    def out_width(self):
        return self.layers[-1].out_width

    def parameters(self):
        """All parameter arrays in declaration order (embedding first)."""
        params = []
        if self.embedding is not None:
            params.append(self.embedding)
        for layer in self.layers:
            params.append(layer.weight)
            params.append(layer.bias)
        return params

    def param_count(self):
        return sum(p.size for p in self.parameters())

    def set_parameters(self, arrays):
        """Overwrite parameters in place from arrays in declaration order."""
        current = self.parameters()
        if len(arrays) != len(current):
            raise ShapeMismatchError("parameter list length mismatch")
        for dst, src in zip(current, arrays):
            if dst.shape != src.shape:
                raise ShapeMismatchError(
                    f"parameter shape mismatch: {dst.shape} vs {src.shape}"
                )
            dst[...] = src
        self._version += 1

    def copy(self):
        layers = [
            DenseLayer(l.weight.copy(), l.bias.copy(), l.activation)
            for l in self.layers
        ]
        emb = None if self.embedding is None else self.embedding.copy()
        return DenseNetwork(layers, emb)


@dataclass
class GradientTape:
    """Activations recorded during one forward pass."""

    inputs: list  # per layer: input activation matrix
    preacts: list  # per layer: pre-activation matrix
    indices: np.ndarray | None  # embedding lookups, if any
    version: int


@dataclass
class Gradients:
    """Parameter gradients, mirroring DenseNetwork layout."""

    embedding: np.ndarray | None
    layers: list  # per layer: (dweight, dbias)

    def arrays(self):
        out = []
        if self.embedding is not None:
            out.append(self.embedding)
        for dw, db in self.layers:
            out.append(dw)
            out.append(db)
        return out

    def scaled(self, factor):
        emb = None if self.embedding is None else factor * self.embedding
        return Gradients(emb, [(factor * dw, factor * db) for dw, db in self.layers])

    def add(self, other):
        if self.embedding is not None:
            self.embedding += other.embedding
        for (dw, db), (ow, ob) in zip(self.layers, other.layers):
            dw += ow
            db += ob
        return self


def zero_gradients(net: DenseNetwork) -> Gradients:
    emb = None if net.embedding is None else np.zeros_like(net.embedding)
    return Gradients(
        emb, [(np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in net.layers]
    )


def network_new(
    layer_spec,
    in_width=None,
    embedding=None,
    init="glorot",
    sigma=0.05,
    rng_seed=0,
) -> DenseNetwork:
    """Build a network from a list of (width, activation) pairs.

    `embedding`, if given, is (vocab, width) and feeds the first dense
    layer; otherwise `in_width` sets the first layer's input width.
    `init` is "glorot" (uniform +-sqrt(6/(fan_in+fan_out))) or "gaussian"
    (zero-mean, std `sigma`). Biases start at zero. Deterministic in
    `rng_seed`.
    """
    if not layer_spec:
        raise SpecError("empty layer spec")
    for width, act in layer_spec:
        if width < 1:
            raise SpecError(f"layer width must be >= 1, got {width}")
        if act not in ACTIVATIONS:
            raise SpecError(f"unknown activation {act!r}")
    if embedding is not None:
        vocab, emb_width = embedding
        if vocab < 1 or emb_width < 1:
            raise SpecError("embedding vocab and width must be >= 1")
        first_in = emb_width
    else:
        if in_width is None or in_width < 1:
            raise SpecError("in_width must be >= 1 when no embedding is used")
        first_in = in_width

    rng = make_rng(rng_seed)

    def draw(fan_in, fan_out):
        if init == "gaussian":
            return sigma * normal(rng, (fan_in, fan_out))
        if init == "glorot":
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-limit, limit, (fan_in, fan_out))
        raise SpecError(f"unknown init scheme {init!r}")

    emb_table = None
    if embedding is not None:
        emb_table = draw(vocab, emb_width)

    layers = []
    prev = first_in
    for width, act in layer_spec:
        layers.append(DenseLayer(draw(prev, width), np.zeros(width), act))
        prev = width
    return DenseNetwork(layers, emb_table)


def forward(net: DenseNetwork, batch):
    """Run the network on a batch; returns (outputs, tape).

    `batch` is a float matrix [batch x in_width], or an integer index
    vector when the network has an embedding front-end.
    """
    if net.embedding is not None:
        indices = np.asarray(batch)
        if indices.ndim != 1 or not np.issubdtype(indices.dtype, np.integer):
            raise ShapeMismatchError("embedding network expects a 1-d index vector")
        vocab = net.embedding.shape[0]
        if indices.size and (indices.min() < 0 or indices.max() >= vocab):
            raise IndexError(f"message index out of range [0, {vocab})")
        a = net.embedding[indices]
    else:
        indices = None
        a = np.asarray(batch, dtype=np.float64)
        if a.ndim != 2 or a.shape[1] != net.in_width:
            raise ShapeMismatchError(
                f"expected input shape [batch x {net.in_width}], got {a.shape}"
            )

    inputs, preacts = [], []
    for layer in net.layers:
        inputs.append(a)
        z = a @ layer.weight + layer.bias
        preacts.append(z)
        a = np.maximum(z, 0.0) if layer.activation == "relu" else z
    if np.isnan(a).any():
        raise NanAbortError("NaN in forward pass output")
    return a, GradientTape(inputs, preacts, indices, net._version)


def backward(net: DenseNetwork, tape: GradientTape, cotangent):
    """Reverse pass; returns (Gradients, input cotangent).

    The input cotangent is the gradient with respect to the forward
    input batch (None for embedding-fronted networks, whose input is
    discrete).
    """
    if tape.version != net._version:
        raise StaleTapeError("tape recorded against older parameters")
    cot = np.asarray(cotangent, dtype=np.float64)
    out_shape = (tape.inputs[-1].shape[0], net.out_width)
    if cot.shape != out_shape:
        raise ShapeMismatchError(f"cotangent shape {cot.shape} != output {out_shape}")

    layer_grads = [None] * len(net.layers)
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        dz = cot * (tape.preacts[i] > 0) if layer.activation == "relu" else cot
        layer_grads[i] = (tape.inputs[i].T @ dz, dz.sum(axis=0))
        cot = dz @ layer.weight.T

    emb_grad = None
    input_cot = cot
    if net.embedding is not None:
        emb_grad = np.zeros_like(net.embedding)
        np.add.at(emb_grad, tape.indices, cot)
        input_cot = None
    return Gradients(emb_grad, layer_grads), input_cot


@dataclass
class AdamState:
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_network(cls, net: DenseNetwork, learning_rate: float, **kw):
        state = cls(learning_rate=learning_rate, **kw)
        state.m = [np.zeros_like(p) for p in net.parameters()]
        state.v = [np.zeros_like(p) for p in net.parameters()]
        return state


def adam_step(net: DenseNetwork, grads: Gradients, state: AdamState):
    """One bias-corrected Adam update, in place. Returns (net, state)."""
    params = net.parameters()
    garrays = grads.arrays()
    if len(garrays) != len(params):
        raise ShapeMismatchError("gradient layout does not match network")
    state.step += 1
    t = state.step
    for p, g, m, v in zip(params, garrays, state.m, state.v):
        if p.shape != g.shape:
            raise ShapeMismatchError(f"gradient shape {g.shape} != param {p.shape}")
        m *= state.beta1
        m += (1 - state.beta1) * g
        v *= state.beta2
        v += (1 - state.beta2) * g * g
        m_hat = m / (1 - state.beta1**t)
        v_hat = v / (1 - state.beta2**t)
        p -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    net._version += 1
    return net, state


def checkpoint_save(net: DenseNetwork) -> bytes:
    """Serialize a network: text header, then raw little-endian float64."""
    lines = [f"layers={len(net.layers)} embed={1 if net.embedding is not None else 0}"]
    if net.embedding is not None:
        lines.append(f"{net.embedding.shape[0]} {net.embedding.shape[1]} embed")
    for layer in net.layers:
        lines.append(f"{layer.in_width} {layer.out_width} {layer.activation}")
    header = CHECKPOINT_MAGIC + ("\n".join(lines) + "\n").encode("ascii")
    blob = b"".join(
        np.ascontiguousarray(p, dtype="<f8").tobytes() for p in net.parameters()
    )
    return header + blob


def checkpoint_load(data: bytes) -> DenseNetwork:
    """Parse a checkpoint produced by checkpoint_save."""
    if not data:
        raise CheckpointError("empty stream", 0)
    if not data.startswith(CHECKPOINT_MAGIC):
        raise CheckpointError("bad magic", 0)
    pos = len(CHECKPOINT_MAGIC)

    def read_line():
        nonlocal pos
        end = data.find(b"\n", pos)
        if end < 0:
            raise CheckpointError("truncated header", pos)
        line = data[pos:end].decode("ascii", errors="replace")
        pos = end + 1
        return line

    head = read_line()
    try:
        fields = dict(item.split("=") for item in head.split())
        n_layers = int(fields["layers"])
        has_embed = int(fields["embed"])
    except (ValueError, KeyError) as exc:
        raise CheckpointError(f"malformed header line: {head!r}", pos) from exc

    embedding_shape = None
    if has_embed:
        parts = read_line().split()
        if len(parts) != 3 or parts[2] != "embed":
            raise CheckpointError("malformed embedding line", pos)
        embedding_shape = (int(parts[0]), int(parts[1]))

    specs = []
    for _ in range(n_layers):
        parts = read_line().split()
        if len(parts) != 3 or parts[2] not in ACTIVATIONS:
            raise CheckpointError(f"malformed layer line: {parts!r}", pos)
        specs.append((int(parts[0]), int(parts[1]), parts[2]))

    shapes = []
    if embedding_shape is not None:
        shapes.append(embedding_shape)
    for w_in, w_out, _ in specs:
        shapes.append((w_in, w_out))
        shapes.append((w_out,))
    expected = sum(int(np.prod(s)) for s in shapes) * 8
    if len(data) - pos != expected:
        raise CheckpointError(
            f"parameter bytes mismatch: expected {expected}, got {len(data) - pos}",
            pos,
        )

    arrays = []
    for shape in shapes:
        n = int(np.prod(shape)) * 8
        arrays.append(
            np.frombuffer(data[pos : pos + n], dtype="<f8").astype(np.float64).reshape(shape)
        )
        pos += n

    emb = arrays.pop(0) if embedding_shape is not None else None
    layers = []
    for w_in, w_out, act in specs:
        w = arrays.pop(0)
        b = arrays.pop(0)
        if w.shape != (w_in, w_out):
            raise CheckpointError("layer shape mismatch", pos)
        layers.append(DenseLayer(w.copy(), b.copy(), act))
    return DenseNetwork(layers, None if emb is None else emb.copy())
