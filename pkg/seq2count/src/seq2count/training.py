"""Fine-tuning loops for the three prediction formulations.

All loops run single-process on a fixed example order with dropout
disabled, so a given (weights, data, seed) triple always produces the
same trained parameters.  Epoch counts stay small by design; the
adapter's contracts are about output formats and shapes, not leaderboard
scores.
"""

import math
from dataclasses import dataclass

import torch

from .errors import TrainingError
from .heads import N_CLASSES, log_mse_loss, three_class_bin
from .prompts import prompt_for
from .tokenizer import EOS_ID

_IGNORE = -100     # label pad value skipped by the LM loss


@dataclass(frozen=True)
class TrainExample:
    id: str
    text: str
    gold: int


def examples_from_manifest(payload: dict):
    """Read (victim_type, examples) out of a training manifest dict."""
    try:
        victim_type = payload["victim_type"]
        rows = payload["train"]
    except KeyError as exc:
        raise TrainingError(f"manifest is missing field {exc}")
    examples = []
    for row in rows:
        try:
            examples.append(TrainExample(str(row["id"]), row["text"],
                                         int(row["gold"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise TrainingError(f"bad manifest row {row!r}: {exc}")
    return victim_type, examples


def _prompts(examples, victim_type):
    return [prompt_for(victim_type, ex.text) for ex in examples]


def _batches(n, batch_size):
    for start in range(0, n, batch_size):
        yield slice(start, start + batch_size)


def train_generation(model, examples, victim_type, epochs: int = 3,
                     lr: float = 5e-4, batch_size: int = 8) -> None:
    """Teacher-forced fine-tuning of the seq2seq base on digit targets."""
    if not examples:
        raise TrainingError("empty training set")
    prompts = _prompts(examples, victim_type)
    targets = [str(ex.gold) for ex in examples]
    optimizer = torch.optim.AdamW(model.seq2seq.parameters(), lr=lr)
    model.train()
    for _ in range(epochs):
        for batch in _batches(len(examples), batch_size):
            ids, mask = model.tokenizer.batch(prompts[batch])
            labels = _label_tensor(model.tokenizer, targets[batch])
            loss = model.seq2seq(input_ids=ids, attention_mask=mask,
                                 labels=labels).loss
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
    model.eval()


def _label_tensor(tokenizer, targets):
    rows = [tokenizer.encode(text) for text in targets]
    width = max(len(r) for r in rows)
    out = torch.full((len(rows), width), _IGNORE, dtype=torch.long)
    for i, row in enumerate(rows):
        out[i, :len(row)] = torch.tensor(row, dtype=torch.long)
    return out


@dataclass(frozen=True)
class RegressionFit:
    scale: float       # predictive std in log(1 + count) space


def train_regression_head(model, examples, victim_type, dev=None,
                          epochs: int = 3, lr: float = 1e-3,
                          batch_size: int = 8,
                          min_scale: float = 1e-3) -> RegressionFit:
    """Fit the regression head (with the encoder) on log(1 + count).

    The predictive scale is the standard deviation of residuals on the
    dev examples, or on the training examples when no dev split exists.
    """
    if not examples:
        raise TrainingError("empty training set")
    prompts = _prompts(examples, victim_type)
    counts = torch.tensor([float(ex.gold) for ex in examples])
    params = list(model.seq2seq.encoder.parameters()) + \
        list(model.reg_head.parameters())
    optimizer = torch.optim.AdamW(params, lr=lr)
    model.train()
    for _ in range(epochs):
        for batch in _batches(len(examples), batch_size):
            pooled = model.pooled_for(prompts[batch])
            loss = log_mse_loss(model.reg_head(pooled), counts[batch])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
    model.eval()

    holdout = dev if dev else examples
    locs = model.predict_log_counts(_prompts(holdout, victim_type))
    residuals = [loc - math.log1p(ex.gold) for loc, ex in zip(locs, holdout)]
    mean = sum(residuals) / len(residuals)
    var = sum((r - mean) ** 2 for r in residuals) / len(residuals)
    return RegressionFit(scale=max(math.sqrt(var), min_scale))


def train_classification_head(model, examples, victim_type,
                              epochs: int = 3, lr: float = 1e-3,
                              batch_size: int = 8) -> None:
    """Fit the 3-class head (with the encoder) on binned counts."""
    if not examples:
        raise TrainingError("empty training set")
    labels = torch.tensor([three_class_bin(ex.gold) for ex in examples])
    if len(set(labels.tolist())) < 2:
        raise TrainingError(
            "training set covers a single class; need at least 2 of "
            f"{N_CLASSES}")
    prompts = _prompts(examples, victim_type)
    params = list(model.seq2seq.encoder.parameters()) + \
        list(model.clf_head.parameters())
    optimizer = torch.optim.AdamW(params, lr=lr)
    loss_fn = torch.nn.CrossEntropyLoss()
    model.train()
    for _ in range(epochs):
        for batch in _batches(len(examples), batch_size):
            pooled = model.pooled_for(prompts[batch])
            loss = loss_fn(model.clf_head(pooled), labels[batch])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
    model.eval()
