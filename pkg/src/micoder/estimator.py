"""Neural mutual-information lower bounds.

Two sample-based estimators over a scalar scoring network T(x, y):

- Donsker-Varadhan (default): mean joint score minus log-mean-exp of
  marginal scores. Tighter, but the log term can be unstable, hence the
  low-sigma Gaussian init of the scoring network.
- f-divergence (Fenchel dual with conjugate exp(t - 1)): mean joint
  score minus mean exp(marginal score - 1). Never above the DV value on
  the same scores.

Marginal pairs are built deterministically from a batch of 2k joint
draws: x from the first k pairs, y from the last k pairs.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import nn
from .encoder import to_real
from .exceptions import SpecError
from .rng import make_rng

DONSKER_VARADHAN = "donsker_varadhan"
F_DIVERGENCE = "f_divergence"
ESTIMATOR_KINDS = (DONSKER_VARADHAN, F_DIVERGENCE)

LN2 = math.log(2.0)


class StatisticNetwork:
    """Scalar scorer T(x^n, y^n) on concatenated real/imag inputs (4n)."""

    def __init__(self, net: nn.DenseNetwork, block_length: int):
        if net.out_width != 1:
            raise SpecError("statistic network must have scalar output")
        if net.in_width != 4 * block_length:
            raise SpecError("statistic network input width must be 4n")
        self.net = net
        self.block_length = block_length

    @classmethod
    def build(cls, block_length, hidden_width=20, seed=0, sigma=0.05):
        net = nn.network_new(
            [(hidden_width, "relu"), (hidden_width, "relu"), (1, "linear")],
            in_width=4 * block_length,
            init="gaussian",
            sigma=sigma,
            rng_seed=seed,
        )
        return cls(net, block_length)


@dataclass
class SampleBatch:
    joint_x: np.ndarray  # complex (k, n)
    joint_y: np.ndarray
    marginal_x: np.ndarray  # x from pairs 1..k
    marginal_y: np.ndarray  # y from pairs k+1..2k

    @property
    def k(self):
        return self.joint_x.shape[0]


@dataclass
class MiEstimate:
    nats: float
    kind: str
    k: int

    @property
    def bits(self):
        return self.nats / LN2


def split_joint_marginal(x: np.ndarray, y: np.ndarray) -> SampleBatch:
    """Partition 2k aligned (x, y) pairs into joint and marginal halves."""
    if x.shape != y.shape:
        raise SpecError("x and y batches must be aligned")
    total = x.shape[0]
    if total % 2 != 0:
        raise SpecError(f"batch size must be even, got {total}")
    k = total // 2
    if k < 2:
        raise SpecError("need k >= 2 (log-mean-exp degenerates at k=1)")
    return SampleBatch(x[:k], y[:k], x[:k], y[k:])


def _score_inputs(batch: SampleBatch):
    joint_in = np.concatenate([to_real(batch.joint_x), to_real(batch.joint_y)], axis=1)
    marg_in = np.concatenate(
        [to_real(batch.marginal_x), to_real(batch.marginal_y)], axis=1
    )
    return joint_in, marg_in


def _log_mean_exp(t: np.ndarray) -> float:
    shift = t.max()
    return float(shift + np.log(np.mean(np.exp(t - shift))))


def dv_value(joint_scores: np.ndarray, marginal_scores: np.ndarray) -> float:
    return float(np.mean(joint_scores)) - _log_mean_exp(marginal_scores)


def fdiv_value(joint_scores: np.ndarray, marginal_scores: np.ndarray) -> float:
    return float(np.mean(joint_scores) - np.mean(np.exp(marginal_scores - 1.0)))


def _estimate(kind, tnet, batch):
    joint_in, marg_in = _score_inputs(batch)
    tj, joint_tape = nn.forward(tnet.net, joint_in)
    tm, marg_tape = nn.forward(tnet.net, marg_in)
    tj = tj[:, 0]
    tm = tm[:, 0]
    if kind == DONSKER_VARADHAN:
        value = dv_value(tj, tm)
    elif kind == F_DIVERGENCE:
        value = fdiv_value(tj, tm)
    else:
        raise SpecError(f"unknown estimator kind {kind!r}")
    est = MiEstimate(nats=value, kind=kind, k=batch.k)
    return est, (joint_tape, marg_tape, tj, tm)


def dv_estimate(tnet: StatisticNetwork, batch: SampleBatch):
    return _estimate(DONSKER_VARADHAN, tnet, batch)


def fdiv_estimate(tnet: StatisticNetwork, batch: SampleBatch):
    return _estimate(F_DIVERGENCE, tnet, batch)


def estimator_gradients(kind, tnet: StatisticNetwork, batch: SampleBatch):
    """Estimate plus exact gradients of the estimator value.

    Returns (MiEstimate, theta gradients, x cotangent). The x cotangent
    has shape (2k, 2n) in the real layout and covers the full 2k input
    batch: each of the first k codewords feeds a joint pair (both slots,
    since y = x + z passes gradients through unchanged) and a marginal
    x slot; each of the last k feeds a marginal y slot.
    """
    est, (joint_tape, marg_tape, tj, tm) = _estimate(kind, tnet, batch)
    k = batch.k
    n2 = 2 * tnet.block_length

    joint_cot = np.full((k, 1), 1.0 / k)
    if kind == DONSKER_VARADHAN:
        shifted = np.exp(tm - tm.max())
        marg_cot = (-shifted / shifted.sum())[:, None]
    else:
        marg_cot = (-np.exp(tm - 1.0) / k)[:, None]

    joint_grads, joint_in_cot = nn.backward(tnet.net, joint_tape, joint_cot)
    marg_grads, marg_in_cot = nn.backward(tnet.net, marg_tape, marg_cot)
    theta_grads = joint_grads.add(marg_grads)

    x_cot = np.zeros((2 * k, n2))
    x_cot[:k] = joint_in_cot[:, :n2] + joint_in_cot[:, n2:] + marg_in_cot[:, :n2]
    x_cot[k:] = marg_in_cot[:, n2:]
    return est, theta_grads, x_cot


def train_statistic_network(
    tnet: StatisticNetwork,
    sample_source,
    iterations: int,
    batch_2k: int,
    learning_rate: float,
    kind: str = DONSKER_VARADHAN,
    adam_state: nn.AdamState | None = None,
):
    """Ascend the chosen estimator with Adam.

    `sample_source(batch_2k)` must yield fresh aligned (x, y) complex
    batches. Returns (tnet, per-iteration value trace in nats,
    adam_state). On NaN the partial trace rides on the raised error.
    """
    from .exceptions import NanAbortError

    if adam_state is None:
        adam_state = nn.AdamState.for_network(tnet.net, learning_rate)
    trace = []
    for _ in range(iterations):
        x, y = sample_source(batch_2k)
        batch = split_joint_marginal(x, y)
        try:
            est, grads, _ = estimator_gradients(kind, tnet, batch)
        except NanAbortError as exc:
            raise NanAbortError(str(exc), trace=trace) from exc
        trace.append(est.nats)
        # ascent: Adam minimizes, so feed the negated gradient
        nn.adam_step(tnet.net, grads.scaled(-1.0), adam_state)
    return tnet, trace, adam_state


def evaluate_mi(
    kind,
    tnet: StatisticNetwork,
    sample_source,
    batch_2k: int,
    num_batches: int = 20,
):
    """Mean and standard error of the estimator over fresh batches (bits)."""
    values = []
    for _ in range(num_batches):
        x, y = sample_source(batch_2k)
        est, _ = _estimate(kind, tnet, split_joint_marginal(x, y))
        values.append(est.bits)
    values = np.asarray(values)
    stderr = float(values.std(ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
    return float(values.mean()), stderr
