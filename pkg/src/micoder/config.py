"""Experiment configuration: flat key=value files with # comments."""

import math
from dataclasses import dataclass, field

from .channel import SnrSpec
from .decoder import DecoderSchedule
from .estimator import DONSKER_VARADHAN, ESTIMATOR_KINDS
from .exceptions import SpecError
from .training import (
    CeEndToEndSchedule,
    EncoderCycle,
    EstimatorPhase,
    TrainingSchedule,
    default_cycles,
)

MODES = ("mi_ce", "ce_e2e")


@dataclass
class ExperimentConfig:
    symbols: int = 16
    block_length: int = 1
    estimator: str = DONSKER_VARADHAN
    mode: str = "mi_ce"
    train_ebn0_db: float | tuple = 7.0
    seed: int = 1
    eval_ebn0_db: list = field(default_factory=lambda: [float(v) for v in range(4, 13)])
    min_errors: int = 100
    max_symbols: int = 10_000_000
    tnet_hidden: int = 20
    encoder_hidden: int | None = None
    decoder_hidden: int | None = None
    decoder: DecoderSchedule = field(default_factory=DecoderSchedule)
    initial: EstimatorPhase = field(default_factory=EstimatorPhase)
    cycles: list = field(default_factory=default_cycles)
    refresh_iterations: int = 50
    refresh_batch: int = 200
    reset_adam_on_refresh: bool = False
    early_stop: bool = False
    ce_e2e: CeEndToEndSchedule = field(default_factory=CeEndToEndSchedule)

    @property
    def rate(self):
        """Bits per complex channel use, R = log2|M| / n."""
        return math.log2(self.symbols) / self.block_length

    def train_snr(self) -> SnrSpec:
        return SnrSpec(ebn0_db=self.train_ebn0_db, rate=self.rate)

    def schedule(self) -> TrainingSchedule:
        return TrainingSchedule(
            train_snr=self.train_snr(),
            initial=self.initial,
            cycles=list(self.cycles),
            refresh_iterations=self.refresh_iterations,
            refresh_batch=self.refresh_batch,
            refresh_learning_rate=self.initial.learning_rate,
            reset_adam_on_refresh=self.reset_adam_on_refresh,
            early_stop=self.early_stop,
        )

    def validate(self):
        if self.symbols < 2 or self.symbols & (self.symbols - 1):
            raise SpecError(f"symbols must be a power of two >= 2, got {self.symbols}")
        if self.block_length < 1:
            raise SpecError("block_length must be >= 1")
        if not self.eval_ebn0_db:
            raise SpecError("eval grid must be nonempty")
        if self.min_errors < 1:
            raise SpecError("min_errors must be >= 1")
        if self.estimator not in ESTIMATOR_KINDS:
            raise SpecError(f"unknown estimator {self.estimator!r}")
        if self.mode not in MODES:
            raise SpecError(f"unknown mode {self.mode!r}")
        self.schedule().validate()
        return self


def parse_grid(text: str) -> list:
    """Parse "lo:hi:step" (inclusive) or a comma-separated dB list."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) == 2:
            lo, hi, step = parts[0], parts[1], 1.0
        elif len(parts) == 3:
            lo, hi, step = parts
        else:
            raise SpecError(f"bad grid spec {text!r}")
        if step <= 0 or hi < lo:
            raise SpecError(f"bad grid spec {text!r}")
        count = int(round((hi - lo) / step)) + 1
        return [lo + i * step for i in range(count) if lo + i * step <= hi + 1e-9]
    return [float(p) for p in text.split(",") if p.strip()]


def _parse_cycles(text: str) -> list:
    """Cycles as "batch x iterations @ lr" items, comma separated."""
    cycles = []
    for item in text.split(","):
        item = item.strip()
        try:
            bxi, lr = item.split("@")
            batch, iters = bxi.split("x")
            cycles.append(EncoderCycle(int(batch), int(iters), float(lr)))
        except ValueError as exc:
            raise SpecError(f"bad cycle spec {item!r}") from exc
    return cycles


def _parse_ebn0(text: str):
    if ":" in text:
        lo, hi = (float(p) for p in text.split(":"))
        return (lo, hi)
    return float(text)


def parse_config_text(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            _apply_key(cfg, key, value)
        except (ValueError, SpecError) as exc:
            raise SpecError(f"line {lineno}: {exc}") from exc
    return cfg.validate()


def _apply_key(cfg: ExperimentConfig, key: str, value: str):
    if key == "symbols":
        cfg.symbols = int(value)
    elif key == "block_length":
        cfg.block_length = int(value)
    elif key == "estimator":
        cfg.estimator = value
    elif key == "mode":
        cfg.mode = value
    elif key == "train_ebn0_db":
        cfg.train_ebn0_db = _parse_ebn0(value)
    elif key == "seed":
        cfg.seed = int(value)
    elif key == "eval_ebn0_db":
        cfg.eval_ebn0_db = parse_grid(value)
    elif key == "min_errors":
        cfg.min_errors = int(value)
    elif key == "max_symbols":
        cfg.max_symbols = int(value)
    elif key == "tnet_hidden":
        cfg.tnet_hidden = int(value)
    elif key == "encoder_hidden":
        cfg.encoder_hidden = int(value)
    elif key == "decoder_hidden":
        cfg.decoder_hidden = int(value)
    elif key == "decoder_iterations":
        cfg.decoder.iterations = int(value)
    elif key == "decoder_batch":
        cfg.decoder.batch = int(value)
    elif key == "decoder_lr":
        cfg.decoder.learning_rate = float(value)
    elif key == "initial_iterations":
        cfg.initial.iterations = int(value)
    elif key == "initial_batch":
        cfg.initial.batch = int(value)
    elif key == "estimator_lr":
        cfg.initial.learning_rate = float(value)
    elif key == "cycles":
        cfg.cycles = _parse_cycles(value)
    elif key == "refresh_iterations":
        cfg.refresh_iterations = int(value)
    elif key == "refresh_batch":
        cfg.refresh_batch = int(value)
    elif key == "reset_adam_on_refresh":
        cfg.reset_adam_on_refresh = value.strip() in ("1", "true", "yes")
    elif key == "early_stop":
        cfg.early_stop = value.strip() in ("1", "true", "yes")
    elif key == "ce_e2e_iterations":
        cfg.ce_e2e.iterations = int(value)
    elif key == "ce_e2e_batch":
        cfg.ce_e2e.batch = int(value)
    elif key == "ce_e2e_lr":
        cfg.ce_e2e.learning_rate = float(value)
    else:
        raise SpecError(f"unknown config key {key!r}")


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config_text(fh.read())
