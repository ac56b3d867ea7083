"""Recovery of incomplete daily activity sequences by insertion decoding.

The package is organized as a small numpy library:

- :mod:`actrecover.tensor`, :mod:`actrecover.gradcheck` — dense tensors with
  reverse-mode differentiation and finite-difference verification.
- :mod:`actrecover.layers` — gated residual blocks, variable selection,
  multi-head self-attention.
- :mod:`actrecover.activities`, :mod:`actrecover.data`,
  :mod:`actrecover.generator` — the activity vocabulary, person-day
  sequences, masking, alignment, JSONL persistence, and a synthetic
  regime-switched Markov generator.
- :mod:`actrecover.model` — the slot insertion model (covariate-fused and
  token-only flavors), training targets/loss, iterative recovery decoding,
  checkpoints.
- :mod:`actrecover.training` — Adam with gradient clipping, the batch loop,
  train reports, resumable state.
- :mod:`actrecover.metrics` — position-anchored and order-independent
  recovery metrics, distribution/pattern/transition analyses.
- :mod:`actrecover.cli` — gen / train / recover / eval / compare pipeline
  commands.
"""

from .activities import ACTIVITY_CATEGORIES, LABEL_TO_ID, NO_INSERT_ID
from .data import Activity, DaySequence, RecoverySample, align_subsequence, mask_sequence
from .generator import GeneratorConfig, generate_population
from .gradcheck import GradientReport, grad_check
from .metrics import MetricsReport, TransitionTable, evaluate
from .model import InsertionModel, ModelConfig, insertion_targets, load_checkpoint, save_checkpoint
from .tensor import Parameter, Tensor
from .training import TrainConfig, TrainReport, train

__version__ = "0.1.0"

__all__ = [
    "ACTIVITY_CATEGORIES",
    "LABEL_TO_ID",
    "NO_INSERT_ID",
    "Activity",
    "DaySequence",
    "RecoverySample",
    "align_subsequence",
    "mask_sequence",
    "GeneratorConfig",
    "generate_population",
    "GradientReport",
    "grad_check",
    "MetricsReport",
    "TransitionTable",
    "evaluate",
    "InsertionModel",
    "ModelConfig",
    "insertion_targets",
    "load_checkpoint",
    "save_checkpoint",
    "Parameter",
    "Tensor",
    "TrainConfig",
    "TrainReport",
    "train",
    "__version__",
]
