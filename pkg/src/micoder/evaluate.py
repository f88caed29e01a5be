"""Monte-Carlo evaluation: BLER curves, MI sweeps, QAM baseline, CSV io.

Every grid point owns an independent RNG stream derived from the master
seed and the point index, so results are deterministic and independent
of evaluation order.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .channel import AwgnChannel, ChannelParams, ebn0_db_to_noise_variance
from .decoder import decode_batch
from .encoder import encode_batch
from .estimator import StatisticNetwork, evaluate_mi, train_statistic_network
from .rng import make_rng
from .qam import qam_detect, qam_modulate, qam_ser_theoretical, qam_table

EVAL_CHUNK = 20_000


@dataclass
class BlerPoint:
    ebn0_db: float
    bler: float
    errors: int
    trials: int
    stderr: float
    capped: bool  # max-symbol cap hit before reaching min_errors


def _binomial_stderr(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials) if trials else 0.0


def _point_seed(master: int, index: int) -> int:
    return master ^ (index + 1)


def evaluate_bler(
    encoder,
    decoder,
    grid_db,
    rate: float,
    min_errors: int = 100,
    max_symbols: int = 10_000_000,
    seed: int = 0,
):
    """Monte-Carlo block error rate at each Eb/N0 grid point."""
    points = []
    for idx, ebn0 in enumerate(grid_db):
        sigma2 = ebn0_db_to_noise_variance(ebn0, rate)
        pseed = _point_seed(seed, idx)
        rng = make_rng(pseed, stream=5)
        channel = AwgnChannel(ChannelParams(sigma2, pseed), stream=6)
        errors = trials = 0
        while errors < min_errors and trials < max_symbols:
            chunk = min(EVAL_CHUNK, max_symbols - trials)
            m = rng.integers(0, encoder.num_messages, chunk)
            x, _ = encode_batch(encoder, m)
            y = channel.transmit(x)
            _, mhat, _ = decode_batch(decoder, y)
            errors += int(np.sum(mhat != m))
            trials += chunk
        p = errors / trials
        points.append(
            BlerPoint(
                ebn0_db=float(ebn0),
                bler=p,
                errors=errors,
                trials=trials,
                stderr=_binomial_stderr(p, trials),
                capped=errors < min_errors,
            )
        )
    return points


def mi_sweep(
    encoder,
    tnet: StatisticNetwork,
    kind: str,
    grid_db,
    rate: float,
    seed: int = 0,
    refresh_iterations: int = 200,
    refresh_batch: int = 1000,
    refresh_learning_rate: float = 0.0005,
    eval_batches: int = 20,
    eval_batch: int = 4000,
):
    """MI estimate per grid SNR: refresh a copy of the scoring network
    at that SNR, then average the estimator over fresh batches.

    Returns rows (symbols, ebn0_db, mi_bits, stderr).
    """
    rows = []
    for idx, ebn0 in enumerate(grid_db):
        sigma2 = ebn0_db_to_noise_variance(ebn0, rate)
        pseed = _point_seed(seed, idx)
        rng = make_rng(pseed, stream=5)
        channel = AwgnChannel(ChannelParams(sigma2, pseed), stream=6)

        def source(batch_2k):
            m = rng.integers(0, encoder.num_messages, batch_2k)
            x, _ = encode_batch(encoder, m)
            return x, channel.transmit(x)

        point_tnet = StatisticNetwork(tnet.net.copy(), tnet.block_length)
        point_tnet, _, _ = train_statistic_network(
            point_tnet, source, refresh_iterations, refresh_batch,
            refresh_learning_rate, kind=kind,
        )
        # evaluation uses a much larger batch than training: the sample DV
        # value is biased upward when k marginal samples under-cover the
        # heavy exp tail, and a large k keeps estimates below log2|M|.
        # the refresh batch is also large so the per-point score function
        # stays smooth; small-batch refreshes add visible point-to-point
        # scatter at high SNR
        mean_bits, stderr = evaluate_mi(kind, point_tnet, source, eval_batch, eval_batches)
        rows.append((encoder.num_messages, float(ebn0), mean_bits, stderr))
    return rows


def qam_baseline(
    order: int,
    grid_db,
    min_errors: int = 100,
    max_symbols: int = 10_000_000,
    seed: int = 0,
):
    """Theoretical and simulated SER rows for the QAM baseline.

    Rows: (ebn0_db, ser_theory, ser_sim, errors, trials, stderr).
    """
    table = qam_table(order)
    rate = math.log2(order)
    rows = []
    for idx, ebn0 in enumerate(grid_db):
        sigma2 = ebn0_db_to_noise_variance(ebn0, rate)
        pseed = _point_seed(seed, idx)
        rng = make_rng(pseed, stream=5)
        channel = AwgnChannel(ChannelParams(sigma2, pseed), stream=6)
        errors = trials = 0
        while errors < min_errors and trials < max_symbols:
            chunk = min(EVAL_CHUNK, max_symbols - trials)
            m = rng.integers(0, order, chunk)
            y = channel.transmit(qam_modulate(m, table)[:, None])[:, 0]
            errors += int(np.sum(qam_detect(y, table) != m))
            trials += chunk
        p = errors / trials
        rows.append(
            (
                float(ebn0),
                qam_ser_theoretical(order, sigma2),
                p,
                errors,
                trials,
                _binomial_stderr(p, trials),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# CSV schemas

BLER_HEADER = ["ebn0_db", "bler", "errors", "trials", "stderr", "capped"]
MI_SWEEP_HEADER = ["symbols", "ebn0_db", "mi_bits", "stderr"]
QAM_HEADER = ["ebn0_db", "ser_theory", "ser_sim", "errors", "trials", "stderr"]
TRACE_HEADER = ["iteration", "value_nats", "value_bits"]
LOSS_HEADER = ["iteration", "loss_nats"]


def write_bler_csv(path, points):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BLER_HEADER)
        for p in points:
            writer.writerow(
                [repr(p.ebn0_db), repr(p.bler), p.errors, p.trials,
                 repr(p.stderr), int(p.capped)]
            )


def read_bler_csv(path):
    points = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            points.append(
                BlerPoint(
                    ebn0_db=float(row["ebn0_db"]),
                    bler=float(row["bler"]),
                    errors=int(row["errors"]),
                    trials=int(row["trials"]),
                    stderr=float(row["stderr"]),
                    capped=bool(int(row["capped"])),
                )
            )
    return points


def write_mi_sweep_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MI_SWEEP_HEADER)
        for symbols, ebn0, bits, stderr in rows:
            writer.writerow([symbols, repr(ebn0), repr(bits), repr(stderr)])


def read_mi_sweep_csv(path):
    with open(path, newline="") as fh:
        return [
            (int(r["symbols"]), float(r["ebn0_db"]), float(r["mi_bits"]), float(r["stderr"]))
            for r in csv.DictReader(fh)
        ]


def write_qam_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(QAM_HEADER)
        for ebn0, theory, sim, errors, trials, stderr in rows:
            writer.writerow([repr(ebn0), repr(theory), repr(sim), errors, trials, repr(stderr)])


def read_qam_csv(path):
    with open(path, newline="") as fh:
        return [
            (
                float(r["ebn0_db"]), float(r["ser_theory"]), float(r["ser_sim"]),
                int(r["errors"]), int(r["trials"]), float(r["stderr"]),
            )
            for r in csv.DictReader(fh)
        ]


def write_value_trace_csv(path, nats_trace):
    ln2 = math.log(2.0)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for i, v in enumerate(nats_trace):
            writer.writerow([i, repr(v), repr(v / ln2)])


def read_value_trace_csv(path):
    with open(path, newline="") as fh:
        return [float(r["value_nats"]) for r in csv.DictReader(fh)]


def write_loss_trace_csv(path, trace):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOSS_HEADER)
        for i, v in enumerate(trace):
            writer.writerow([i, repr(v)])


def read_loss_trace_csv(path):
    with open(path, newline="") as fh:
        return [float(r["loss_nats"]) for r in csv.DictReader(fh)]
