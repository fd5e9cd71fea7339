"""Text-to-text adapter for victim-count prediction.

Wraps a small byte-level encoder-decoder with three output
formulations: digit-constrained generation, log-count regression, and
3-class magnitude classification.  Prediction files are written in the
evaluation toolkit's exchange formats.
"""

from .decoding import (
    BeamCandidate,
    GenerationFailure,
    GenerationResult,
    generate_counts,
)
from .emit import (
    write_classification_predictions,
    write_generation_predictions,
    write_regression_predictions,
)
from .errors import AdapterError, DecodingError, TrainingError
from .heads import (
    ClassificationHead,
    N_CLASSES,
    RegressionHead,
    log_mse_loss,
    mean_pool,
    three_class_bin,
)
from .model import AdapterConfig, CountModel, build_model, load_model, save_model
from .prompts import QUESTION_TEMPLATES, PromptSpec, prompt_for, render_prompt
from .tokenizer import (
    BYTE_OFFSET,
    DIGIT_IDS,
    EOS_ID,
    PAD_ID,
    VOCAB_SIZE,
    ByteTokenizer,
)
from .training import (
    RegressionFit,
    TrainExample,
    examples_from_manifest,
    train_classification_head,
    train_generation,
    train_regression_head,
)

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "BYTE_OFFSET",
    "BeamCandidate",
    "ByteTokenizer",
    "ClassificationHead",
    "CountModel",
    "DIGIT_IDS",
    "DecodingError",
    "EOS_ID",
    "GenerationFailure",
    "GenerationResult",
    "N_CLASSES",
    "PAD_ID",
    "PromptSpec",
    "QUESTION_TEMPLATES",
    "RegressionFit",
    "RegressionHead",
    "TrainExample",
    "TrainingError",
    "VOCAB_SIZE",
    "build_model",
    "examples_from_manifest",
    "generate_counts",
    "load_model",
    "log_mse_loss",
    "mean_pool",
    "prompt_for",
    "render_prompt",
    "save_model",
    "three_class_bin",
    "train_classification_head",
    "train_generation",
    "train_regression_head",
    "write_classification_predictions",
    "write_generation_predictions",
    "write_regression_predictions",
]
