"""Command-line front end.

Subcommands: train, eval-bler, mi-sweep, constellation, baseline-qam,
estimator-bench. Every evaluation command writes CSVs and renders the
matching matplotlib figures next to them. Exit codes: 0 success,
1 usage error, 2 runtime failure.
"""

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import nn, plots
from .channel import AwgnChannel, ChannelParams, SnrSpec, noise_variance_from_snr
from .config import ExperimentConfig, load_config, parse_grid
from .decoder import DecoderModel, train_decoder
from .encoder import EncoderModel, constellation_table, save_constellation_csv
from .estimator import StatisticNetwork
from .evaluate import (
    evaluate_bler,
    mi_sweep,
    qam_baseline,
    write_bler_csv,
    write_loss_trace_csv,
    write_mi_sweep_csv,
    write_qam_csv,
    write_value_trace_csv,
)
from .qam import SUPPORTED_ORDERS
from .training import save_report, train_ce_end_to_end, train_encoder_mi

OUT_ENV_VAR = "MICODER_OUT"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _resolve_out(args) -> Path:
    out = args.out or os.environ.get(OUT_ENV_VAR)
    if not out:
        raise _UsageError("--out is required (or set " + OUT_ENV_VAR + ")")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_cfg(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig().validate()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _load_encoder(run_dir: Path) -> EncoderModel:
    net = nn.checkpoint_load((run_dir / "encoder.ckpt").read_bytes())
    return EncoderModel(net, net.embedding.shape[0], net.out_width // 2)


def _load_decoder(run_dir: Path) -> DecoderModel:
    net = nn.checkpoint_load((run_dir / "decoder.ckpt").read_bytes())
    return DecoderModel(net, net.out_width, net.in_width // 2)


def _load_tnet(run_dir: Path) -> StatisticNetwork:
    net = nn.checkpoint_load((run_dir / "tnet.ckpt").read_bytes())
    return StatisticNetwork(net, net.in_width // 4)


def run_training(cfg: ExperimentConfig, out: Path):
    """Train the full system per config and save all artifacts."""
    encoder = EncoderModel.build(
        cfg.symbols, cfg.block_length, cfg.encoder_hidden, seed=cfg.seed + 1
    )
    decoder = DecoderModel.build(
        cfg.symbols, cfg.block_length, cfg.decoder_hidden, seed=cfg.seed + 3
    )
    if cfg.mode == "ce_e2e":
        encoder, decoder, loss_trace = train_ce_end_to_end(
            encoder, decoder, cfg.ce_e2e, cfg.train_snr(), master_seed=cfg.seed
        )
        write_loss_trace_csv(out / "ce_loss_trace.csv", loss_trace)
        plots.render_trace_figure(
            out / "ce_loss_trace.png", loss_trace, ylabel="cross-entropy [nats]"
        )
        report = None
    else:
        tnet = StatisticNetwork.build(
            cfg.block_length, cfg.tnet_hidden, seed=cfg.seed + 2
        )
        encoder, tnet, report = train_encoder_mi(
            encoder, tnet, cfg.schedule(), master_seed=cfg.seed, kind=cfg.estimator
        )
        (out / "tnet.ckpt").write_bytes(nn.checkpoint_save(tnet.net))
        write_value_trace_csv(out / "mi_trace_initial.csv", report.phase1_trace)
        flat = [v for trace in report.cycle_traces for v in trace]
        write_value_trace_csv(out / "mi_trace_cycles.csv", flat)
        plots.render_trace_figure(out / "mi_trace_cycles.png", flat)

        # decoder trains at a fixed SNR: the midpoint when training used a range
        spec = cfg.train_snr()
        if spec.is_range:
            spec = SnrSpec(ebn0_db=sum(cfg.train_ebn0_db) / 2, rate=cfg.rate)
        sigma2 = noise_variance_from_snr(spec)
        channel = AwgnChannel(ChannelParams(sigma2, cfg.seed), stream=7)
        decoder, loss_trace = train_decoder(
            decoder, encoder, channel, cfg.decoder, seed=cfg.seed
        )
        write_loss_trace_csv(out / "decoder_loss_trace.csv", loss_trace)
        plots.render_trace_figure(
            out / "decoder_loss_trace.png", loss_trace, ylabel="cross-entropy [nats]"
        )

    (out / "encoder.ckpt").write_bytes(nn.checkpoint_save(encoder.net))
    (out / "decoder.ckpt").write_bytes(nn.checkpoint_save(decoder.net))
    table = constellation_table(encoder)
    save_constellation_csv(out / "constellation.csv", table)
    plots.render_constellation_figure(out / "constellation.png", table)
    if report is not None:
        report.meta = {
            "symbols": cfg.symbols,
            "block_length": cfg.block_length,
            "estimator": cfg.estimator,
            "mode": cfg.mode,
        }
        report.checkpoints = {
            "encoder": "encoder.ckpt",
            "decoder": "decoder.ckpt",
            "tnet": "tnet.ckpt",
        }
        save_report(report, out / "report.txt")
    return encoder, decoder


def _cmd_train(args):
    cfg = _load_cfg(args)
    out = _resolve_out(args)
    run_training(cfg, out)
    return 0


def _cmd_eval_bler(args):
    cfg = _load_cfg(args)
    out = _resolve_out(args)
    run_dir = Path(args.run) if args.run else out
    encoder = _load_encoder(run_dir)
    decoder = _load_decoder(run_dir)
    grid = parse_grid(args.grid) if args.grid else cfg.eval_ebn0_db
    points = evaluate_bler(
        encoder, decoder, grid, cfg.rate,
        min_errors=cfg.min_errors, max_symbols=cfg.max_symbols, seed=cfg.seed,
    )
    write_bler_csv(out / "bler.csv", points)
    order = cfg.symbols if cfg.symbols in SUPPORTED_ORDERS else None
    plots.render_bler_figure(out / "bler.png", points, qam_order=order, rate=cfg.rate)
    return 0


def _cmd_mi_sweep(args):
    cfg = _load_cfg(args)
    out = _resolve_out(args)
    run_dir = Path(args.run) if args.run else out
    encoder = _load_encoder(run_dir)
    tnet = _load_tnet(run_dir)
    grid = parse_grid(args.grid) if args.grid else cfg.eval_ebn0_db
    rows = mi_sweep(encoder, tnet, cfg.estimator, grid, cfg.rate, seed=cfg.seed)
    write_mi_sweep_csv(out / "mi_sweep.csv", rows)
    plots.render_mi_sweep_figure(out / "mi_sweep.png", rows)
    return 0


def _cmd_constellation(args):
    out = _resolve_out(args)
    run_dir = Path(args.run) if args.run else out
    encoder = _load_encoder(run_dir)
    table = constellation_table(encoder)
    save_constellation_csv(out / "constellation.csv", table)
    plots.render_constellation_figure(out / "constellation.png", table)
    worst = float(np.max(np.mean(np.abs(table) ** 2, axis=1)))
    print(f"constellation exported; worst per-codeword power = {worst:.6f}")
    return 0


def _cmd_baseline_qam(args):
    target = Path(args.out or os.environ.get(OUT_ENV_VAR) or ".")
    if target.suffix == ".csv":
        csv_path = target
        csv_path.parent.mkdir(parents=True, exist_ok=True)
    else:
        target.mkdir(parents=True, exist_ok=True)
        csv_path = target / "qam_baseline.csv"
    grid = parse_grid(args.grid)
    rows = qam_baseline(
        args.order, grid,
        min_errors=args.min_errors, max_symbols=args.max_symbols,
        seed=args.seed if args.seed is not None else 0,
    )
    write_qam_csv(csv_path, rows)
    plots.render_qam_figure(csv_path.with_suffix(".png"), rows, args.order)
    return 0


def _cmd_estimator_bench(args):
    cfg = _load_cfg(args)
    out = _resolve_out(args)
    widths = [int(w) for w in args.nodes.split(",") if w.strip()]
    if not widths or any(w < 1 for w in widths):
        raise _UsageError("--nodes must be a comma list of positive widths")
    results = []
    for width in widths:
        encoder = EncoderModel.build(
            cfg.symbols, cfg.block_length, cfg.encoder_hidden, seed=cfg.seed + 1
        )
        tnet = StatisticNetwork.build(cfg.block_length, width, seed=cfg.seed + 2)
        encoder, tnet, report = train_encoder_mi(
            encoder, tnet, cfg.schedule(), master_seed=cfg.seed, kind=cfg.estimator
        )
        table = constellation_table(encoder)
        save_constellation_csv(out / f"constellation_nodes_{width}.csv", table)
        plots.render_constellation_figure(
            out / f"constellation_nodes_{width}.png", table, title=f"{width} nodes"
        )
        results.append((width, report.final_mi_bits, report.final_mi_stderr))
    with open(out / "estimator_bench.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["nodes", "mi_bits", "stderr"])
        for width, bits, stderr in results:
            writer.writerow([width, repr(bits), repr(stderr)])
    return 0


def _build_parser():
    parser = _Parser(prog="micoder", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, run=False):
        p.add_argument("--config", help="key=value experiment config file")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out", help="output directory")
        if run:
            p.add_argument("--run", help="directory holding trained checkpoints")

    common(sub.add_parser("train", help="train the full system"))
    p = sub.add_parser("eval-bler", help="Monte-Carlo BLER curve")
    common(p, run=True)
    p.add_argument("--grid", help="Eb/N0 grid, lo:hi:step or comma list")
    p = sub.add_parser("mi-sweep", help="MI estimate over an SNR grid")
    common(p, run=True)
    p.add_argument("--grid", help="Eb/N0 grid, lo:hi:step or comma list")
    p = sub.add_parser("constellation", help="export the learned constellation")
    common(p, run=True)
    p = sub.add_parser("baseline-qam", help="QAM SER baseline, theory + Monte Carlo")
    p.add_argument("--order", type=int, required=True, choices=SUPPORTED_ORDERS)
    p.add_argument("--grid", required=True)
    p.add_argument("--min-errors", type=int, default=100)
    p.add_argument("--max-symbols", type=int, default=10_000_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p = sub.add_parser("estimator-bench", help="retrain with varying scorer widths")
    common(p)
    p.add_argument("--nodes", required=True, help="comma list of hidden widths")
    return parser


_COMMANDS = {
    "train": _cmd_train,
    "eval-bler": _cmd_eval_bler,
    "mi-sweep": _cmd_mi_sweep,
    "constellation": _cmd_constellation,
    "baseline-qam": _cmd_baseline_qam,
    "estimator-bench": _cmd_estimator_bench,
}


def run_cli(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
