"""Optimization loop for the insertion model.

Adam with bias correction behind global-norm gradient clipping; per-epoch
shuffles and per-step dropout masks are derived from the training seed, so a
run is fully reproducible and resuming from saved state continues the exact
same trajectory. Batches pad to the longest in-batch sequence; padded slots
never enter the loss.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .data import Activity, RecoverySample, align_subsequence
from .generator import ConfigError
from .model import (
    DecoderState,
    InsertionModel,
    ModelConfig,
    _read_container,
    _write_container,
    insertion_targets,
    parameter_checksum,
    save_checkpoint,
)
from .tensor import Parameter

__all__ = [
    "TrainConfig",
    "TrainReport",
    "Adam",
    "clip_gradients",
    "global_grad_norm",
    "train",
    "save_train_state",
    "load_train_state",
]


@dataclass
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 64
    epochs: int = 10
    clip_norm: float = 1.0
    seed: int = 0
    checkpoint_interval: int = 0  # steps between checkpoints; 0 = final only
    roll_in: float = 0.7  # fraction of batch states resampled from the decode lattice

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ConfigError(f"learning rate must be positive: {self.lr}")
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigError("batch_size must be >= 1 and epochs >= 0")
        if self.clip_norm <= 0:
            raise ConfigError(f"clip norm must be positive: {self.clip_norm}")
        if not 0.0 <= self.roll_in <= 1.0:
            raise ConfigError(f"roll_in out of [0, 1]: {self.roll_in}")

    def to_dict(self) -> dict:
        return {
            "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
            "batch_size": self.batch_size, "epochs": self.epochs,
            "clip_norm": self.clip_norm, "seed": self.seed,
            "checkpoint_interval": self.checkpoint_interval, "roll_in": self.roll_in,
        }


@dataclass
class TrainReport:
    losses: list[float] = field(default_factory=list)
    checksum: str = ""
    wall_clock: float = 0.0
    steps: int = 0
    skipped_steps: int = 0

    def to_json_dict(self) -> dict:
        return {
            "losses": self.losses,
            "checksum": self.checksum,
            "wall_clock": self.wall_clock,
            "steps": self.steps,
            "skipped_steps": self.skipped_steps,
        }


def global_grad_norm(params: Sequence[Parameter]) -> float:
    total = 0.0
    for p in params:
        total += float((p.grad * p.grad).sum())
    return float(np.sqrt(total))


def clip_gradients(params: Sequence[Parameter], max_norm: float) -> float:
    """Scale all gradients so their global norm is at most ``max_norm``."""
    norm = global_grad_norm(params)
    if np.isfinite(norm) and norm > max_norm:
        scale = max_norm / norm
        for p in params:
            p.grad = p.grad * scale
    return norm


class Adam:
    """Adam with bias correction; skips (and counts) non-finite steps."""

    def __init__(self, params: Sequence[Parameter], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {p.name: np.zeros_like(p.data) for p in params}
        self.v = {p.name: np.zeros_like(p.data) for p in params}
        self.skipped = 0

    def step(self, params: Sequence[Parameter]) -> bool:
        """Apply one update from ``p.grad``; returns False if skipped."""
        for p in params:
            if not np.isfinite(p.grad).all():
                self.skipped += 1
                return False
        self.t += 1
        correct1 = 1.0 - self.beta1**self.t
        correct2 = 1.0 - self.beta2**self.t
        for p in params:
            m = self.m[p.name] = self.beta1 * self.m[p.name] + (1 - self.beta1) * p.grad
            v = self.v[p.name] = self.beta2 * self.v[p.name] + (1 - self.beta2) * p.grad**2
            p.data = p.data - self.lr * (m / correct1) / (np.sqrt(v / correct2) + self.eps)
        return True


def _prepare(samples: Sequence[RecoverySample], max_len: int):
    """Precompute decoder states and per-slot targets for every sample."""
    states, targets = [], []
    for i, s in enumerate(samples):
        if len(s.complete) > max_len:
            raise ConfigError(
                f"sample {i} has {len(s.complete)} activities, above max_len={max_len}"
            )
        inc, comp = s.incomplete.labels(), s.complete.labels()
        anchors = align_subsequence(inc, comp)
        targets.append(insertion_targets(inc, comp, anchors))
        states.append(DecoderState.from_sequence(s.incomplete))
    return states, targets


def _lattice_state(sample: RecoverySample, rng: np.random.Generator):
    """A random intermediate decode state of ``sample`` with its targets.

    Iterative insertion only ever visits the complete sequence minus a subset
    of the still-missing positions, where already-inserted tokens carry no
    unknown covariates. Promoting each removed position with one shared
    random rate covers the whole lattice from the raw input (nothing
    promoted) to the finished state, which is what teaches the decoder both
    intermediate insertions and termination.
    """
    removed = set(sample.removed_positions)
    rate = rng.random()
    promoted = {i for i in removed if rng.random() < rate}
    acts = []
    for j, act in enumerate(sample.complete.activities):
        if j in promoted:
            acts.append(Activity(label=act.label, observed=False))
        elif j not in removed:
            acts.append(replace(act))
    partial = replace(sample.complete, activities=acts)
    labels, comp = partial.labels(), sample.complete.labels()
    anchors = align_subsequence(labels, comp)
    return DecoderState.from_sequence(partial), insertion_targets(labels, comp, anchors)


def save_train_state(path, model: InsertionModel, adam: Adam, step: int) -> None:
    """Full-precision training state: parameters plus Adam moments."""
    names = [p.name for p in model.parameters()]
    manifest = {
        "format": 1,
        "kind": "train_state",
        "config": model.config.to_dict(),
        "params": [{"name": p.name, "shape": list(p.shape)} for p in model.parameters()],
        "step": step,
        "adam_t": adam.t,
        "adam_skipped": adam.skipped,
    }
    parts = [p.data.astype("<f8").tobytes() for p in model.parameters()]
    parts += [adam.m[n].astype("<f8").tobytes() for n in names]
    parts += [adam.v[n].astype("<f8").tobytes() for n in names]
    _write_container(path, manifest, b"".join(parts))


def load_train_state(path, model: InsertionModel, adam: Adam) -> int:
    """Restore parameters and Adam moments in place; returns the step count."""
    manifest, blob = _read_container(path)
    if manifest.get("kind") != "train_state":
        raise ConfigError(f"{path}: not a training-state container")
    if manifest["config"] != model.config.to_dict():
        raise ConfigError(f"{path}: training state was saved for a different model config")
    params = model.parameters()
    offset = 0

    def take(shape):
        nonlocal offset
        count = int(np.prod(shape))
        values = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        offset += count * 8
        return values.astype(np.float64).reshape(shape)

    for p in params:
        p.data = take(p.shape)
    for p in params:
        adam.m[p.name] = take(p.shape)
    for p in params:
        adam.v[p.name] = take(p.shape)
    adam.t = int(manifest["adam_t"])
    adam.skipped = int(manifest["adam_skipped"])
    return int(manifest["step"])


def train(
    samples: Sequence[RecoverySample],
    model_config: ModelConfig,
    train_config: TrainConfig,
    checkpoint_path=None,
    resume_from=None,
):
    """Fit an insertion model on recovery samples; returns (model, report).

    The checkpoint, when requested, is written every
    ``checkpoint_interval`` steps and at the end, with a same-named
    ``.state`` sidecar carrying full-precision resume state.
    """
    if not samples:
        raise ConfigError("training dataset is empty")
    states, targets = _prepare(samples, model_config.max_len)
    model = InsertionModel(model_config, seed=train_config.seed)
    adam = Adam(
        model.parameters(),
        lr=train_config.lr,
        beta1=train_config.beta1,
        beta2=train_config.beta2,
        eps=train_config.eps,
    )
    start_step = 0
    if resume_from is not None:
        start_step = load_train_state(str(resume_from) + ".state", model, adam)

    n = len(states)
    per_epoch = (n + train_config.batch_size - 1) // train_config.batch_size
    total_steps = per_epoch * train_config.epochs
    params = model.parameters()
    report = TrainReport()
    started = time.perf_counter()

    def write_checkpoint(step: int) -> None:
        if checkpoint_path is None:
            return
        save_checkpoint(model, checkpoint_path, extra={"step": step, "train": train_config.to_dict()})
        save_train_state(str(checkpoint_path) + ".state", model, adam, step)

    step = start_step
    while step < total_steps:
        epoch, pos = divmod(step, per_epoch)
        order = np.random.default_rng([train_config.seed, 1, epoch]).permutation(n)
        idx = order[pos * train_config.batch_size : (pos + 1) * train_config.batch_size]
        roll_rng = np.random.default_rng([train_config.seed, 3, step])
        batch_states, batch_targets = [], []
        for i in idx:
            if samples[i].removed_positions and roll_rng.random() < train_config.roll_in:
                state, target = _lattice_state(samples[i], roll_rng)
            else:
                state, target = states[i], targets[i]
            batch_states.append(state)
            batch_targets.append(target)
        model.zero_grads()
        rng = np.random.default_rng([train_config.seed, 2, step])
        loss = model.batch_loss(batch_states, batch_targets, train=True, rng=rng)
        loss.backward()
        clip_gradients(params, train_config.clip_norm)
        adam.step(params)
        report.losses.append(float(loss.data))
        step += 1
        if train_config.checkpoint_interval and step % train_config.checkpoint_interval == 0:
            write_checkpoint(step)
    write_checkpoint(step)

    report.steps = step
    report.skipped_steps = adam.skipped
    report.wall_clock = time.perf_counter() - started
    report.checksum = parameter_checksum(model)
    return model, report
