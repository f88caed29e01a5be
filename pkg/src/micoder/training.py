"""Two-phase alternating training and full-system orchestration.

Phase 1 fits the scoring network on samples from the freshly
initialized encoder. Phase 2 runs encoder-ascent cycles; ten times per
cycle the encoder is frozen and the scoring network is re-trained for a
short burst. Decoder training follows on the frozen encoder.

Seed discipline: the master seed spawns fixed sub-seeds so each phase
is independently reproducible:
  encoder init = master + 1, scoring-net init = master + 2,
  decoder init = master + 3, channel noise = stream 1 of master,
  message draws = stream 2, decoder loop = stream 3 (see decoder),
  SNR sampling = stream 4.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .channel import (
    AwgnChannel,
    ChannelParams,
    SnrSpec,
    ebn0_db_to_noise_variance,
    noise_variance_from_snr,
)
from .decoder import DecoderModel, DecoderSchedule, cross_entropy_loss, decode_batch, train_decoder
from .encoder import EncoderModel, constellation_table, encode_batch, encoder_backward
from .estimator import (
    DONSKER_VARADHAN,
    StatisticNetwork,
    estimator_gradients,
    evaluate_mi,
    split_joint_marginal,
    train_statistic_network,
)
from .exceptions import NanAbortError, SpecError
from .rng import make_rng

REFRESHES_PER_CYCLE = 10


@dataclass
class EstimatorPhase:
    iterations: int = 1000
    batch: int = 200  # total batch 2k
    learning_rate: float = 0.0005


@dataclass
class EncoderCycle:
    batch: int  # total batch 2k
    iterations: int
    learning_rate: float


def default_cycles():
    return [
        EncoderCycle(100, 1000, 0.01),
        EncoderCycle(100, 10_000, 0.001),
        EncoderCycle(1000, 10_000, 0.001),
    ]


@dataclass
class TrainingSchedule:
    train_snr: SnrSpec
    initial: EstimatorPhase = field(default_factory=EstimatorPhase)
    cycles: list = field(default_factory=default_cycles)
    refresh_iterations: int = 50
    refresh_batch: int = 200
    refresh_learning_rate: float = 0.0005
    reset_adam_on_refresh: bool = False
    early_stop: bool = False
    early_stop_window: int = 500
    early_stop_rel_improvement: float = 1e-3

    def validate(self):
        counts = [self.initial.iterations, self.refresh_iterations]
        rates = [self.initial.learning_rate, self.refresh_learning_rate]
        for cyc in self.cycles:
            counts += [cyc.iterations, cyc.batch]
            rates.append(cyc.learning_rate)
            if cyc.iterations % REFRESHES_PER_CYCLE != 0:
                raise SpecError(
                    f"cycle iterations {cyc.iterations} not divisible by "
                    f"{REFRESHES_PER_CYCLE} refresh points"
                )
        if any(c < 1 for c in counts):
            raise SpecError("all iteration/batch counts must be >= 1")
        if any(r <= 0 for r in rates):
            raise SpecError("learning rates must be > 0")


@dataclass
class TrainingReport:
    seeds: dict = field(default_factory=dict)
    phase1_trace: list = field(default_factory=list)
    cycle_traces: list = field(default_factory=list)
    running_max: list = field(default_factory=list)
    wall_clock: dict = field(default_factory=dict)
    final_mi_bits: float | None = None
    final_mi_stderr: float | None = None
    worst_codeword_power: float | None = None
    abort_reason: str | None = None
    checkpoints: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def training_snr_sample(spec: SnrSpec, rng) -> float:
    """Noise variance for one batch; ranges draw Eb/N0 uniformly in dB."""
    if spec.is_range:
        lo, hi = spec.ebn0_db
        db = float(rng.uniform(lo, hi))
        return ebn0_db_to_noise_variance(db, spec.rate)
    return noise_variance_from_snr(spec)


def _frozen_encoder_source(enc, channel, spec, rng_msgs, rng_snr):
    def source(batch_2k):
        sigma2 = training_snr_sample(spec, rng_snr)
        m = rng_msgs.integers(0, enc.num_messages, batch_2k)
        x, _ = encode_batch(enc, m)
        return x, channel.transmit(x, sigma2)

    return source


def train_encoder_mi(
    encoder: EncoderModel,
    tnet: StatisticNetwork,
    schedule: TrainingSchedule,
    master_seed: int = 0,
    kind: str = DONSKER_VARADHAN,
):
    """Alternating MI maximization over encoder and scoring network.

    Returns (encoder, tnet, TrainingReport). On NaN the partial report
    rides on the raised NanAbortError as `trace`.
    """
    schedule.validate()
    report = TrainingReport(seeds={"master": master_seed})
    channel = AwgnChannel(ChannelParams(0.0, master_seed), stream=1)
    rng_msgs = make_rng(master_seed, stream=2)
    rng_snr = make_rng(master_seed, stream=4)
    source = _frozen_encoder_source(encoder, channel, schedule.train_snr, rng_msgs, rng_snr)

    t0 = time.monotonic()
    theta_adam = nn.AdamState.for_network(tnet.net, schedule.initial.learning_rate)
    try:
        tnet, trace, theta_adam = train_statistic_network(
            tnet,
            source,
            schedule.initial.iterations,
            schedule.initial.batch,
            schedule.initial.learning_rate,
            kind=kind,
            adam_state=theta_adam,
        )
    except NanAbortError as exc:
        report.phase1_trace = exc.trace
        report.abort_reason = f"phase1: {exc}"
        raise NanAbortError(str(exc), trace=report) from exc
    report.phase1_trace = trace
    report.wall_clock["initial_estimator"] = time.monotonic() - t0

    running_max = -np.inf
    for ci, cycle in enumerate(schedule.cycles):
        t0 = time.monotonic()
        phi_adam = nn.AdamState.for_network(encoder.net, cycle.learning_rate)
        interval = cycle.iterations // REFRESHES_PER_CYCLE
        trace = []
        for it in range(cycle.iterations):
            sigma2 = training_snr_sample(schedule.train_snr, rng_snr)
            m = rng_msgs.integers(0, encoder.num_messages, cycle.batch)
            try:
                x, enc_tape = encode_batch(encoder, m)
                y = channel.transmit(x, sigma2)
                est, _, x_cot = estimator_gradients(
                    kind, tnet, split_joint_marginal(x, y)
                )
            except NanAbortError as exc:
                report.cycle_traces.append(trace)
                report.abort_reason = f"cycle {ci + 1} iteration {it}: {exc}"
                raise NanAbortError(str(exc), trace=report) from exc
            trace.append(est.nats)
            running_max = max(running_max, est.nats)
            report.running_max.append(running_max)
            phi_grads = encoder_backward(encoder, enc_tape, x_cot)
            nn.adam_step(encoder.net, phi_grads.scaled(-1.0), phi_adam)

            if (it + 1) % interval == 0:
                if schedule.reset_adam_on_refresh:
                    theta_adam = nn.AdamState.for_network(
                        tnet.net, schedule.refresh_learning_rate
                    )
                theta_adam.learning_rate = schedule.refresh_learning_rate
                tnet, _, theta_adam = train_statistic_network(
                    tnet,
                    source,
                    schedule.refresh_iterations,
                    schedule.refresh_batch,
                    schedule.refresh_learning_rate,
                    kind=kind,
                    adam_state=theta_adam,
                )
            if schedule.early_stop and len(trace) >= 2 * schedule.early_stop_window:
                w = schedule.early_stop_window
                prev = float(np.mean(trace[-2 * w : -w]))
                curr = float(np.mean(trace[-w:]))
                if prev > 0 and (curr - prev) / abs(prev) < schedule.early_stop_rel_improvement:
                    break
        report.cycle_traces.append(trace)
        report.wall_clock[f"encoder_cycle_{ci + 1}"] = time.monotonic() - t0

    # final estimate on large batches: small-k DV values are biased upward
    final_eval_batch = max(schedule.initial.batch, 4000)
    mean_bits, stderr = evaluate_mi(kind, tnet, source, final_eval_batch)
    report.final_mi_bits = mean_bits
    report.final_mi_stderr = stderr
    table = constellation_table(encoder)
    report.worst_codeword_power = float(np.max(np.mean(np.abs(table) ** 2, axis=1)))
    return encoder, tnet, report


@dataclass
class CeEndToEndSchedule:
    iterations: int = 10_000
    batch: int = 500
    learning_rate: float = 0.001


def train_ce_end_to_end(
    encoder: EncoderModel,
    decoder: DecoderModel,
    schedule: CeEndToEndSchedule,
    train_snr: SnrSpec,
    master_seed: int = 0,
):
    """Joint cross-entropy training of encoder and decoder.

    Comparison mode only: gradients flow through the known additive
    channel (dy/dx = identity), which is exactly the channel-knowledge
    assumption the MI approach avoids.
    """
    channel = AwgnChannel(ChannelParams(0.0, master_seed), stream=1)
    rng_msgs = make_rng(master_seed, stream=2)
    rng_snr = make_rng(master_seed, stream=4)
    phi_adam = nn.AdamState.for_network(encoder.net, schedule.learning_rate)
    psi_adam = nn.AdamState.for_network(decoder.net, schedule.learning_rate)
    trace = []
    for _ in range(schedule.iterations):
        sigma2 = training_snr_sample(train_snr, rng_snr)
        m = rng_msgs.integers(0, encoder.num_messages, schedule.batch)
        x, enc_tape = encode_batch(encoder, m)
        y = channel.transmit(x, sigma2)
        probs, _, dec_tape = decode_batch(decoder, y)
        trace.append(cross_entropy_loss(probs, m, decoder))
        cot = probs.copy()
        cot[np.arange(len(m)), m] -= 1.0
        cot /= len(m)
        psi_grads, y_cot = nn.backward(decoder.net, dec_tape, cot)
        phi_grads = encoder_backward(encoder, enc_tape, y_cot)
        nn.adam_step(decoder.net, psi_grads, psi_adam)
        nn.adam_step(encoder.net, phi_grads, phi_adam)
    return encoder, decoder, trace


def save_report(report: TrainingReport, path):
    lines = ["[meta]"]
    for key, val in report.meta.items():
        lines.append(f"{key}={val}")
    lines.append("[seeds]")
    for key, val in report.seeds.items():
        lines.append(f"{key}={val}")
    lines.append("[phase initial_estimator]")
    lines.append(f"iterations={len(report.phase1_trace)}")
    if report.phase1_trace:
        lines.append(f"final_value_nats={report.phase1_trace[-1]!r}")
    for ci, trace in enumerate(report.cycle_traces):
        lines.append(f"[phase encoder_cycle_{ci + 1}]")
        lines.append(f"iterations={len(trace)}")
        if trace:
            lines.append(f"final_value_nats={trace[-1]!r}")
    lines.append("[wall_clock]")
    for key, val in report.wall_clock.items():
        lines.append(f"{key}_s={val:.3f}")
    lines.append("[final]")
    if report.final_mi_bits is not None:
        lines.append(f"mi_bits={report.final_mi_bits!r}")
        lines.append(f"mi_stderr_bits={report.final_mi_stderr!r}")
    if report.worst_codeword_power is not None:
        lines.append(f"worst_codeword_power={report.worst_codeword_power!r}")
    if report.abort_reason:
        lines.append(f"abort_reason={report.abort_reason}")
    lines.append("[checkpoints]")
    for key, val in report.checkpoints.items():
        lines.append(f"{key}={val}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
