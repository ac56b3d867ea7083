"""The slot insertion model.

A partial day is framed by begin/end sentinels; every gap between adjacent
positions (including the ends) is a slot. The network encodes each position
from its covariate streams (token identity with position code, arrival and
departure bins, travel mode, trip distance, weekday, holiday), fuses them
through variable selection conditioned on a static-covariate context, runs a
stack of bidirectional self-attention blocks with gated residual
feed-forwards, and scores every slot over the nine activity labels plus a
per-slot stop label. Decoding inserts the argmax of every non-stop slot
simultaneously and repeats until all slots stop or a round cap is reached,
so the observed tokens always survive in order.

With ``use_vsn`` off the model degrades to the token-only flavor: positions
are encoded from token embeddings alone and covariates are never read.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import tensor as T
from .activities import (
    BOS_ID,
    EOS_ID,
    ID_TO_LABEL,
    LABEL_TO_ID,
    MISSING_CODE,
    N_ACTIVITIES,
    N_CONTENT_CLASSES,
    N_MODES,
    N_STATIC_LEVELS,
    N_TIME_BINS,
    NO_INSERT_ID,
    PAD_ID,
    TOKEN_VOCAB_SIZE,
)
from .data import AlignmentError, DaySequence, Activity
from .layers import (
    GatedResidualBlock,
    Linear,
    MultiHeadSelfAttention,
    apply_dropout,
    sinusoidal_positions,
)
from .tensor import Parameter

__all__ = [
    "CapacityError",
    "VocabularyError",
    "CompatibilityError",
    "ModelConfig",
    "CovariateBundle",
    "DecoderState",
    "SlotDistribution",
    "SelectionWeights",
    "RecoveryOutcome",
    "InsertionModel",
    "insertion_targets",
    "save_checkpoint",
    "load_checkpoint",
    "parameter_checksum",
]

N_COVARIATE_STREAMS = 7  # token + arrival + departure + mode + distance + weekday + holiday


class CapacityError(RuntimeError):
    """A sequence exceeded the configured length cap."""


class VocabularyError(ValueError):
    """A label or categorical covariate code is outside its closed range."""


class CompatibilityError(ValueError):
    """A checkpoint does not match the expected configuration."""


@dataclass
class ModelConfig:
    d_m: int = 64
    n_heads: int = 4
    d_attn: int = 16
    d_val: int = 16
    n_layers: int = 2
    dropout: float = 0.1
    use_vsn: bool = True
    max_rounds: int = 8
    max_len: int = 32
    n_static: int = 4
    n_known: int = 2
    n_unknown: int = 4

    def __post_init__(self) -> None:
        if min(self.d_m, self.n_heads, self.d_attn, self.d_val, self.n_layers) < 1:
            raise ValueError("model dimensions must all be >= 1")
        if self.n_heads * max(self.d_attn, self.d_val) > 4096:
            raise ValueError("head count times head width is unreasonably large")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout out of [0, 1): {self.dropout}")
        if self.max_rounds < 0 or self.max_len < 1:
            raise ValueError("max_rounds must be >= 0 and max_len >= 1")
        if self.n_static + self.n_known + self.n_unknown != 10:
            raise ValueError("covariate counts must total the ten-covariate schema")

    def to_dict(self) -> dict:
        return {
            "d_m": self.d_m,
            "n_heads": self.n_heads,
            "d_attn": self.d_attn,
            "d_val": self.d_val,
            "n_layers": self.n_layers,
            "dropout": self.dropout,
            "use_vsn": self.use_vsn,
            "max_rounds": self.max_rounds,
            "max_len": self.max_len,
            "n_static": self.n_static,
            "n_known": self.n_known,
            "n_unknown": self.n_unknown,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ModelConfig":
        return cls(**raw)


@dataclass
class CovariateBundle:
    """Model-ready covariates for one partial sequence.

    Per-token unknown covariates carry the missing sentinel wherever
    ``observed`` is false, which is how decoder insertions stay free of
    leaked timing/mode/distance information.
    """

    static: tuple[int, int, int, int]
    weekday: int
    holiday: int
    arr: list[int]
    dep: list[int]
    mode: list[int]
    dist: list[float]
    observed: list[bool]

    @classmethod
    def from_sequence(cls, seq: DaySequence) -> "CovariateBundle":
        bundle = cls(
            static=tuple(seq.static),
            weekday=seq.weekday,
            holiday=seq.holiday,
            arr=[a.arr if a.observed else MISSING_CODE for a in seq.activities],
            dep=[a.dep if a.observed else MISSING_CODE for a in seq.activities],
            mode=[a.mode if a.observed else MISSING_CODE for a in seq.activities],
            dist=[a.dist if a.observed else 0.0 for a in seq.activities],
            observed=[a.observed for a in seq.activities],
        )
        bundle.validate()
        return bundle

    def validate(self) -> None:
        if not 1 <= self.weekday <= 7:
            raise VocabularyError(f"weekday code out of 1..7: {self.weekday}")
        if self.holiday not in (0, 1):
            raise VocabularyError(f"holiday flag must be 0/1: {self.holiday}")
        if len(self.static) != 4 or any(not 1 <= c <= N_STATIC_LEVELS for c in self.static):
            raise VocabularyError(f"static codes must be four values in 1..{N_STATIC_LEVELS}")
        for arr, dep, mode, dist, obs in zip(self.arr, self.dep, self.mode, self.dist, self.observed):
            if obs:
                if not (1 <= arr <= N_TIME_BINS and 1 <= dep <= N_TIME_BINS):
                    raise VocabularyError(f"time bins out of 1..{N_TIME_BINS}: {arr}, {dep}")
                if not 1 <= mode <= N_MODES:
                    raise VocabularyError(f"mode code out of 1..{N_MODES}: {mode}")
            elif arr != MISSING_CODE or dep != MISSING_CODE or mode != MISSING_CODE:
                raise VocabularyError("unobserved tokens must carry the missing sentinel")
            if dist < 0:
                raise VocabularyError(f"negative trip distance {dist}")


@dataclass
class DecoderState:
    """A partial label sequence (sentinels implied at the ends) plus covariates."""

    tokens: list[int]
    covariates: CovariateBundle
    round: int = 0

    @classmethod
    def from_sequence(cls, seq: DaySequence, round: int = 0) -> "DecoderState":
        try:
            tokens = [LABEL_TO_ID[a.label] for a in seq.activities]
        except KeyError as exc:
            raise VocabularyError(f"unknown activity label {exc.args[0]!r}") from exc
        return cls(tokens=tokens, covariates=CovariateBundle.from_sequence(seq), round=round)

    @property
    def n_slots(self) -> int:
        return len(self.tokens) + 1


@dataclass
class SlotDistribution:
    """Per-slot probabilities over the nine labels plus the stop label."""

    probs: np.ndarray  # (n_slots, N_CONTENT_CLASSES)

    @property
    def n_slots(self) -> int:
        return self.probs.shape[0]

    def argmax(self) -> np.ndarray:
        return self.probs.argmax(axis=-1)


@dataclass
class SelectionWeights:
    """Per-position stream selection weights, rows summing to one."""

    weights: np.ndarray  # (n_positions, n_streams)


@dataclass
class RecoveryOutcome:
    sequence: DaySequence
    rounds: int
    truncated: bool


def insertion_targets(
    incomplete: Sequence, complete: Sequence, anchors: Sequence[int]
) -> list[Counter]:
    """Per-slot multisets of labels the decoder must insert.

    Slot ``s`` sits before source token ``s``; it owes exactly the complete
    labels lying strictly between anchor ``s-1`` and anchor ``s`` (with the
    sequence ends as virtual anchors). An empty counter means the slot's
    target is the stop label.
    """
    n = len(incomplete)
    if len(anchors) != n:
        raise AlignmentError(f"{len(anchors)} anchors for {n} source tokens")
    prev = -1
    for i, a in enumerate(anchors):
        if not prev < a < len(complete):
            raise AlignmentError(f"anchor {i} = {a} is out of order or out of range")
        if complete[a] != incomplete[i]:
            raise AlignmentError(f"anchor {i} points at {complete[a]!r}, expected {incomplete[i]!r}")
        prev = a
    targets = []
    for s in range(n + 1):
        lo = anchors[s - 1] if s > 0 else -1
        hi = anchors[s] if s < n else len(complete)
        targets.append(Counter(complete[lo + 1 : hi]))
    return targets


class _EncoderLayer:
    """Self-attention with a residual layer norm, then a gated residual feed-forward."""

    def __init__(self, name: str, cfg: ModelConfig, rng):
        self.attn = MultiHeadSelfAttention(
            name + ".attn", cfg.d_m, cfg.n_heads, cfg.d_attn, cfg.d_val, rng
        )
        self.norm_gain = Parameter(name + ".norm.gain", np.ones(cfg.d_m))
        self.norm_bias = Parameter(name + ".norm.bias", np.zeros(cfg.d_m))
        self.ff = GatedResidualBlock(
            name + ".ff", cfg.d_m, cfg.d_m, cfg.d_m, rng, None, cfg.dropout
        )

    def __call__(self, x, key_valid, train, rng, dropout):
        attended = apply_dropout(self.attn(x, key_valid), dropout, train, rng)
        x = T.layer_norm(T.add(x, attended), self.norm_gain, self.norm_bias)
        return self.ff(x, None, train, rng)

    def parameters(self) -> list[Parameter]:
        return self.attn.parameters() + [self.norm_gain, self.norm_bias] + self.ff.parameters()


class InsertionModel:
    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        d = config.d_m
        emb_std = 1.0 / np.sqrt(d)

        def table(name: str, rows: int) -> Parameter:
            return Parameter(name, rng.normal(0.0, emb_std, size=(rows, d)))

        self.tok_emb = table("tok_emb", TOKEN_VOCAB_SIZE)
        if config.use_vsn:
            self.arr_emb = table("cov.arr_emb", N_TIME_BINS + 1)  # row 0 = missing
            self.dep_emb = table("cov.dep_emb", N_TIME_BINS + 1)
            self.mode_emb = table("cov.mode_emb", N_MODES + 1)
            self.dist_lin = Linear("cov.dist", 1, d, rng)
            self.dist_missing = Parameter("cov.dist_missing", rng.normal(0.0, emb_std, size=(d,)))
            self.weekday_emb = table("cov.weekday_emb", 7)
            self.holiday_emb = table("cov.holiday_emb", 2)
            self.static_embs = [table(f"cov.static{j}_emb", N_STATIC_LEVELS) for j in range(4)]
            self.static_grn = GatedResidualBlock("static_ctx", d, d, d, rng, None, config.dropout)
            from .layers import VariableSelection

            self.vsn = VariableSelection(
                "vsn", N_COVARIATE_STREAMS, d, rng, d_context=d, dropout=config.dropout
            )
        self.encoder_layers = [
            _EncoderLayer(f"enc{i}", config, rng) for i in range(config.n_layers)
        ]
        self.slot_proj = Linear("slot_proj", 2 * d, d, rng)
        self.out_proj = Linear("out_proj", d, N_CONTENT_CLASSES, rng)

        self._params = self._collect_parameters()
        names = [p.name for p in self._params]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate parameter names: {dupes}")

    def _collect_parameters(self) -> list[Parameter]:
        params: list[Parameter] = [self.tok_emb]
        if self.config.use_vsn:
            params += [self.arr_emb, self.dep_emb, self.mode_emb]
            params += self.dist_lin.parameters() + [self.dist_missing]
            params += [self.weekday_emb, self.holiday_emb] + self.static_embs
            params += self.static_grn.parameters() + self.vsn.parameters()
        for layer in self.encoder_layers:
            params += layer.parameters()
        return params + self.slot_proj.parameters() + self.out_proj.parameters()

    def parameters(self) -> list[Parameter]:
        return list(self._params)

    def param_map(self) -> dict[str, Parameter]:
        return {p.name: p for p in self._params}

    def zero_grads(self) -> None:
        for p in self._params:
            p.zero_grad()

    # -- forward -------------------------------------------------------------

    def _batch_arrays(self, states: Sequence[DecoderState]) -> dict:
        for st in states:
            if len(st.tokens) > self.config.max_len:
                raise CapacityError(
                    f"state of {len(st.tokens)} tokens exceeds max_len={self.config.max_len}"
                )
            bad = [t for t in st.tokens if not 0 <= t < N_ACTIVITIES]
            if bad:
                raise VocabularyError(f"token ids out of activity range: {bad}")
        b = len(states)
        t_pad = max(len(st.tokens) for st in states) + 2
        tok = np.full((b, t_pad), PAD_ID, dtype=np.int64)
        valid = np.zeros((b, t_pad), dtype=bool)
        arr = np.full((b, t_pad), MISSING_CODE, dtype=np.int64)
        dep = np.full((b, t_pad), MISSING_CODE, dtype=np.int64)
        mode = np.full((b, t_pad), MISSING_CODE, dtype=np.int64)
        dist = np.zeros((b, t_pad))
        dist_missing = np.ones((b, t_pad))
        weekday = np.zeros((b, t_pad), dtype=np.int64)
        holiday = np.zeros((b, t_pad), dtype=np.int64)
        static = np.zeros((b, 4), dtype=np.int64)
        for i, st in enumerate(states):
            cb = st.covariates
            cb.validate()
            n = len(st.tokens)
            if len(cb.observed) != n:
                raise VocabularyError(f"covariate rows ({len(cb.observed)}) != tokens ({n})")
            tok[i, 0] = BOS_ID
            tok[i, 1 : n + 1] = st.tokens
            tok[i, n + 1] = EOS_ID
            valid[i, : n + 2] = True
            weekday[i, :] = cb.weekday - 1
            holiday[i, :] = cb.holiday
            static[i, :] = [c - 1 for c in cb.static]
            for j in range(n):
                if cb.observed[j]:
                    arr[i, j + 1] = cb.arr[j]
                    dep[i, j + 1] = cb.dep[j]
                    mode[i, j + 1] = cb.mode[j]
                    dist[i, j + 1] = cb.dist[j]
                    dist_missing[i, j + 1] = 0.0
        slot_valid = valid[:, :-1] & valid[:, 1:]
        n_slots = np.array([len(st.tokens) + 1 for st in states])
        return {
            "tok": tok, "valid": valid, "arr": arr, "dep": dep, "mode": mode,
            "dist": dist, "dist_missing": dist_missing, "weekday": weekday,
            "holiday": holiday, "static": static, "slot_valid": slot_valid,
            "n_slots": n_slots, "t_pad": t_pad,
        }

    def _static_context(self, static_idx: np.ndarray, train: bool, rng):
        total = None
        for j, emb in enumerate(self.static_embs):
            e = T.embed(emb, static_idx[:, j])
            total = e if total is None else T.add(total, e)
        context = self.static_grn(total, None, train, rng)
        return T.reshape(context, (static_idx.shape[0], 1, self.config.d_m))

    def forward(self, states: Sequence[DecoderState], train: bool = False, rng=None):
        """Slot logits for a batch; returns (logits, info).

        ``logits`` has shape (B, max_slots, classes); ``info`` carries the
        numpy slot mask and, for the covariate flavor, selection weights.
        """
        cfg = self.config
        arrs = self._batch_arrays(states)
        pos = sinusoidal_positions(arrs["t_pad"], cfg.d_m)
        token_stream = T.add(T.embed(self.tok_emb, arrs["tok"]), pos)
        selection = None
        if cfg.use_vsn:
            dist_vals = arrs["dist"][:, :, None]
            flag = arrs["dist_missing"][:, :, None]
            dist_stream = T.add(
                self.dist_lin(T.Tensor(dist_vals)),
                T.mul(T.Tensor(flag), self.dist_missing),
            )
            streams = T.stack(
                [
                    token_stream,
                    T.embed(self.arr_emb, arrs["arr"]),
                    T.embed(self.dep_emb, arrs["dep"]),
                    T.embed(self.mode_emb, arrs["mode"]),
                    dist_stream,
                    T.embed(self.weekday_emb, arrs["weekday"]),
                    T.embed(self.holiday_emb, arrs["holiday"]),
                ],
                axis=2,
            )
            context = self._static_context(arrs["static"], train, rng)
            x, weights = self.vsn(streams, context, train, rng)
            selection = weights.data
        else:
            x = token_stream
        for layer in self.encoder_layers:
            x = layer(x, arrs["valid"], train, rng, cfg.dropout)
        rep = self.slot_proj(T.concat([x[:, :-1, :], x[:, 1:, :]], axis=-1))
        logits = self.out_proj(rep)
        info = {"slot_mask": arrs["slot_valid"], "n_slots": arrs["n_slots"], "selection": selection}
        return logits, info

    def decoder_forward(self, state: DecoderState) -> SlotDistribution:
        """Distributions over what to insert into each of the n+1 slots."""
        logits, info = self.forward([state])
        raw = logits.data[0, : state.n_slots]
        z = raw - raw.max(axis=-1, keepdims=True)
        e = np.exp(z)
        return SlotDistribution(probs=e / e.sum(axis=-1, keepdims=True))

    def selection_weights(self, state: DecoderState) -> SelectionWeights:
        if not self.config.use_vsn:
            raise VocabularyError("token-only flavor has no selection weights")
        _, info = self.forward([state])
        return SelectionWeights(weights=info["selection"][0, : len(state.tokens) + 2])

    def encode_position_covariates(
        self, bundle: CovariateBundle, token_id: int, position: int
    ) -> list[np.ndarray]:
        """Per-stream encodings for one position (inspection helper).

        Mirrors the batched path: token embedding plus position code first;
        unknown covariate streams fall back to their learned missing rows
        when the position is unobserved or a sentinel. The token-only flavor
        produces only the token stream.
        """
        bundle.validate()
        if not (0 <= token_id < N_ACTIVITIES or token_id in (BOS_ID, EOS_ID)):
            raise VocabularyError(f"token id {token_id} out of vocabulary")
        d = self.config.d_m
        pos = sinusoidal_positions(position + 1, d)[position]
        token_stream = self.tok_emb.data[token_id] + pos
        if not self.config.use_vsn:
            return [token_stream]
        inside = token_id < N_ACTIVITIES
        j = position - 1  # position 0 is the begin sentinel
        observed = inside and 0 <= j < len(bundle.observed) and bundle.observed[j]
        if observed:
            arr_c, dep_c, mode_c = bundle.arr[j], bundle.dep[j], bundle.mode[j]
            dist_v, flag = bundle.dist[j], 0.0
        else:
            arr_c = dep_c = mode_c = MISSING_CODE
            dist_v, flag = 0.0, 1.0
        dist_stream = (
            self.dist_lin.w.data[0] * dist_v + self.dist_lin.b.data + flag * self.dist_missing.data
        )
        return [
            token_stream,
            self.arr_emb.data[arr_c],
            self.dep_emb.data[dep_c],
            self.mode_emb.data[mode_c],
            dist_stream,
            self.weekday_emb.data[bundle.weekday - 1],
            self.holiday_emb.data[bundle.holiday],
        ]

    def static_context(self, static_codes: Sequence[int]) -> np.ndarray:
        """The context vector a person's four static codes produce."""
        if len(static_codes) != 4 or any(not 1 <= c <= N_STATIC_LEVELS for c in static_codes):
            raise VocabularyError(f"static codes must be four values in 1..{N_STATIC_LEVELS}")
        idx = np.asarray([[c - 1 for c in static_codes]])
        return self._static_context(idx, train=False, rng=None).data[0, 0]

    # -- loss ----------------------------------------------------------------

    def _target_arrays(self, info: dict, targets_list: Sequence[Sequence[Counter]]):
        b, s = info["slot_mask"].shape
        target = np.zeros((b, s, N_CONTENT_CLASSES))
        weight = np.zeros((b, s, 1))
        for i, targets in enumerate(targets_list):
            n_slots = info["n_slots"][i]
            if len(targets) != n_slots:
                raise AlignmentError(f"sample {i}: {len(targets)} targets for {n_slots} slots")
            for slot, counter in enumerate(targets):
                total = sum(counter.values())
                if total == 0:
                    target[i, slot, NO_INSERT_ID] = 1.0
                else:
                    for label, count in counter.items():
                        if label not in LABEL_TO_ID:
                            raise VocabularyError(f"unknown target label {label!r}")
                        target[i, slot, LABEL_TO_ID[label]] = count / total
            weight[i, :n_slots, 0] = 1.0 / (n_slots * b)
        return target, weight

    def batch_loss(self, states, targets_list, train: bool = False, rng=None):
        """Mean-over-slots cross-entropy, averaged over the batch."""
        logits, info = self.forward(states, train=train, rng=rng)
        target, weight = self._target_arrays(info, targets_list)
        logp = T.log_softmax(logits, axis=-1)
        return T.mul(T.tsum(T.mul(logp, target * weight)), -1.0)

    def insertion_loss(self, state: DecoderState, targets: Sequence[Counter], train: bool = False, rng=None):
        """Cross-entropy of one state's slot distributions against its targets."""
        return self.batch_loss([state], [targets], train=train, rng=rng)

    def per_sample_losses(self, states, targets_list) -> np.ndarray:
        """Per-sample mean-over-slots cross-entropy (no gradients)."""
        logits, info = self.forward(states)
        target, weight = self._target_arrays(info, targets_list)
        z = logits.data - logits.data.max(axis=-1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
        per_slot = -(logp * target).sum(axis=-1)  # (B, S)
        weighted = per_slot * weight[:, :, 0] * len(states)  # undo the batch mean
        return weighted.sum(axis=-1)

    # -- decoding ------------------------------------------------------------

    def recover(self, incomplete: DaySequence, max_rounds: int | None = None) -> RecoveryOutcome:
        """Iteratively insert activities until every slot stops.

        Inserted activities carry no timing/mode/distance information; the
        input tokens appear in the output as a subsequence, in order.
        """
        cfg = self.config
        limit = cfg.max_rounds if max_rounds is None else max_rounds
        acts = [replace(a) for a in incomplete.activities]
        truncated = False
        rounds = 0
        while rounds < limit:
            current = replace(incomplete, activities=acts)
            state = DecoderState.from_sequence(current, round=rounds)
            choices = self.decoder_forward(state).argmax()
            picks = [(s, int(c)) for s, c in enumerate(choices) if c != NO_INSERT_ID]
            if not picks:
                break
            rounds += 1
            budget = cfg.max_len - len(acts)
            if len(picks) > budget:
                truncated = True
                picks = picks[:budget]
            insert_at = {s: c for s, c in picks}
            new_acts: list[Activity] = []
            for s in range(len(acts) + 1):
                if s in insert_at:
                    new_acts.append(Activity(label=ID_TO_LABEL[insert_at[s]], observed=False))
                if s < len(acts):
                    new_acts.append(acts[s])
            acts = new_acts
            if truncated:
                break
        return RecoveryOutcome(
            sequence=replace(incomplete, activities=acts), rounds=rounds, truncated=truncated
        )


# -- checkpoints --------------------------------------------------------------

_MAGIC = b"ARCK"


def _write_container(path, manifest: dict, blob: bytes) -> None:
    payload = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(len(payload).to_bytes(4, "little"))
        fh.write(payload)
        fh.write(blob)


def _read_container(path) -> tuple[dict, bytes]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise CompatibilityError(f"{path}: not a checkpoint container")
        size = int.from_bytes(fh.read(4), "little")
        manifest = json.loads(fh.read(size).decode("utf-8"))
        blob = fh.read()
    return manifest, blob


def save_checkpoint(model: InsertionModel, path, extra: dict | None = None) -> None:
    """Write the model as a JSON manifest plus a little-endian float32 blob."""
    manifest = {
        "format": 1,
        "kind": "model",
        "config": model.config.to_dict(),
        "params": [{"name": p.name, "shape": list(p.shape)} for p in model.parameters()],
        "extra": extra or {},
    }
    blob = b"".join(p.data.astype("<f4").tobytes() for p in model.parameters())
    _write_container(path, manifest, blob)


def load_checkpoint(path, expected_config: ModelConfig | None = None):
    """Rebuild a model from a checkpoint; returns (model, manifest)."""
    manifest, blob = _read_container(path)
    if manifest.get("kind") != "model":
        raise CompatibilityError(f"{path}: container holds {manifest.get('kind')!r}, not a model")
    config = ModelConfig.from_dict(manifest["config"])
    if expected_config is not None and config != expected_config:
        diffs = [
            f"{key}={manifest['config'][key]!r} (expected {value!r})"
            for key, value in expected_config.to_dict().items()
            if manifest["config"].get(key) != value
        ]
        raise CompatibilityError(f"{path}: checkpoint config mismatch: " + ", ".join(diffs))
    model = InsertionModel(config, seed=0)
    params = model.param_map()
    offset = 0
    for entry in manifest["params"]:
        name, shape = entry["name"], tuple(entry["shape"])
        if name not in params or params[name].shape != shape:
            raise CompatibilityError(f"{path}: parameter {name!r} with shape {shape} does not fit")
        count = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        params[name].data = values.astype(np.float64).reshape(shape)
        offset += count * 4
    if offset != len(blob):
        raise CompatibilityError(f"{path}: blob size {len(blob)} does not match manifest")
    return model, manifest


def parameter_checksum(model: InsertionModel) -> str:
    """SHA-256 of the float32 parameter blob in manifest order."""
    digest = hashlib.sha256()
    for p in model.parameters():
        digest.update(p.data.astype("<f4").tobytes())
    return digest.hexdigest()
