"""Softmax message decoder trained with cross-entropy."""

from dataclasses import dataclass

import numpy as np

from . import nn
from .encoder import encode_batch, to_real
from .exceptions import NanAbortError, ShapeMismatchError, SpecError
from .rng import make_rng

PROB_FLOOR = 1e-300


class DecoderModel:
    def __init__(self, net: nn.DenseNetwork, num_messages: int, block_length: int):
        if net.out_width != num_messages:
            raise SpecError("decoder output width must equal |M|")
        if net.in_width != 2 * block_length:
            raise SpecError("decoder input width must be 2n")
        self.net = net
        self.num_messages = num_messages
        self.block_length = block_length
        self.clamp_count = 0  # times cross-entropy hit the probability floor

    @classmethod
    def build(cls, num_messages, block_length, hidden_width=None, seed=0):
        if hidden_width is None:
            hidden_width = max(64, 2 * num_messages)
        net = nn.network_new(
            [(hidden_width, "relu"), (hidden_width, "relu"), (num_messages, "linear")],
            in_width=2 * block_length,
            init="glorot",
            rng_seed=seed,
        )
        return cls(net, num_messages, block_length)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-shifted softmax over the last axis."""
    logits = np.asarray(logits, dtype=np.float64)
    if np.isnan(logits).any():
        raise NanAbortError("NaN logit in softmax")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def decode_batch(model: DecoderModel, y: np.ndarray):
    """Probabilities and hard decisions for a received complex batch."""
    if y.shape[1] != model.block_length:
        raise ShapeMismatchError(
            f"signal length {y.shape[1]} != model block length {model.block_length}"
        )
    logits, tape = nn.forward(model.net, to_real(y))
    probs = softmax(logits)
    return probs, np.argmax(probs, axis=1), tape


def cross_entropy_loss(probs: np.ndarray, messages, model: DecoderModel | None = None):
    """Mean negative log probability of the true messages, in nats."""
    messages = np.asarray(messages)
    selected = probs[np.arange(len(messages)), messages]
    clamped = selected < PROB_FLOOR
    if clamped.any() and model is not None:
        model.clamp_count += int(clamped.sum())
    return float(-np.mean(np.log(np.maximum(selected, PROB_FLOOR))))


@dataclass
class DecoderSchedule:
    iterations: int = 10_000
    batch: int = 500
    learning_rate: float = 0.001


def train_decoder(model: DecoderModel, frozen_encoder, channel, schedule, seed=0):
    """Adam descent on the cross-entropy of decoder outputs.

    The encoder is treated as fixed: messages are drawn uniformly via a
    seeded generator (shared-seed convention, so the receiver knows the
    true indices), encoded, sent through `channel`, and classified.
    Returns (model, per-iteration loss trace in nats).
    """
    rng = make_rng(seed, stream=3)
    adam = nn.AdamState.for_network(model.net, schedule.learning_rate)
    trace = []
    for _ in range(schedule.iterations):
        messages = rng.integers(0, model.num_messages, schedule.batch)
        x, _ = encode_batch(frozen_encoder, messages)
        y = channel.transmit(x)
        try:
            probs, _, tape = decode_batch(model, y)
        except NanAbortError as exc:
            raise NanAbortError(str(exc), trace=trace) from exc
        trace.append(cross_entropy_loss(probs, messages, model))
        # dJ/dlogits for mean negative log-likelihood
        cot = probs.copy()
        cot[np.arange(len(messages)), messages] -= 1.0
        cot /= len(messages)
        grads, _ = nn.backward(model.net, tape, cot)
        nn.adam_step(model.net, grads, adam)
    return model, trace
