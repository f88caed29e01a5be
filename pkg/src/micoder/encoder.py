"""Trainable message-to-codeword encoder.

Message index m -> embedding -> dense relu hidden layer -> linear layer
of width 2n -> reshape to n complex values -> batch power normalization.
The real layout everywhere is [re_1..re_n, im_1..im_n].
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import nn
from .channel import normalize_power
from .exceptions import SpecError


def to_real(x: np.ndarray) -> np.ndarray:
    """Complex (B, n) -> real (B, 2n), real parts first."""
    return np.concatenate([x.real, x.imag], axis=1)


def to_complex(r: np.ndarray) -> np.ndarray:
    """Real (B, 2n) -> complex (B, n)."""
    n = r.shape[1] // 2
    return r[:, :n] + 1j * r[:, n:]


class EncoderModel:
    def __init__(self, net: nn.DenseNetwork, num_messages: int, block_length: int):
        if num_messages < 2:
            raise SpecError("need at least 2 messages")
        if net.out_width != 2 * block_length:
            raise SpecError("encoder output width must be 2 * block_length")
        self.net = net
        self.num_messages = num_messages
        self.block_length = block_length

    @classmethod
    def build(cls, num_messages, block_length, hidden_width=None, seed=0):
        if hidden_width is None:
            hidden_width = max(64, 2 * num_messages)
        net = nn.network_new(
            [(hidden_width, "relu"), (2 * block_length, "linear")],
            embedding=(num_messages, num_messages),
            init="glorot",
            rng_seed=seed,
        )
        return cls(net, num_messages, block_length)


@dataclass
class EncodeTape:
    net_tape: nn.GradientTape
    raw: np.ndarray  # pre-normalization real output (B, 2n)
    scale: float  # sqrt of batch-mean power of the raw complex signal


def encode_batch(model: EncoderModel, messages) -> tuple[np.ndarray, EncodeTape]:
    """Encode message indices to a unit-mean-power complex batch."""
    messages = np.asarray(messages)
    raw, net_tape = nn.forward(model.net, messages)
    x = normalize_power(to_complex(raw))
    scale = float(np.sqrt(np.mean(np.abs(to_complex(raw)) ** 2)))
    return x, EncodeTape(net_tape, raw, scale)


def encoder_backward(model: EncoderModel, tape: EncodeTape, x_cotangent_real):
    """Gradients of a scalar loss w.r.t. encoder parameters.

    `x_cotangent_real` is dL/dx for the *normalized* output, in the
    real (B, 2n) layout. Backpropagates through the normalization
    y = r / c with c^2 = sum(r^2) / (B * n), then through the network.
    """
    g = np.asarray(x_cotangent_real, dtype=np.float64)
    r = tape.raw
    c = tape.scale
    n_complex = r.shape[0] * (r.shape[1] // 2)
    # dL/dr_s = g_s / c - r_s * sum(g * r) / (N * c^3)
    raw_cot = g / c - r * (np.sum(g * r) / (n_complex * c**3))
    grads, _ = nn.backward(model.net, tape.net_tape, raw_cot)
    return grads


def constellation_table(model: EncoderModel) -> np.ndarray:
    """Codewords for the full message set, normalized over that batch.

    Returns complex (|M|, n).
    """
    x, _ = encode_batch(model, np.arange(model.num_messages))
    return x


def save_constellation_csv(path, table: np.ndarray):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["message", "dim", "re", "im"])
        for m in range(table.shape[0]):
            for d in range(table.shape[1]):
                writer.writerow([m, d, repr(float(table[m, d].real)), repr(float(table[m, d].imag))])


def load_constellation_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    n_msg = max(int(r["message"]) for r in rows) + 1
    n_dim = max(int(r["dim"]) for r in rows) + 1
    table = np.zeros((n_msg, n_dim), dtype=complex)
    for r in rows:
        table[int(r["message"]), int(r["dim"])] = float(r["re"]) + 1j * float(r["im"])
    return table
