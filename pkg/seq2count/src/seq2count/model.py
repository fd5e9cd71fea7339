"""Tiny text-to-text model bundle.

The base is a randomly initialized encoder-decoder transformer over the
byte vocabulary, built from a fixed seed so every run starts from the
same weights.  Checkpoints restore to the exact same state dict.
"""

from dataclasses import dataclass, asdict

import torch
from torch import nn
from transformers import T5Config, T5ForConditionalGeneration

from .heads import ClassificationHead, RegressionHead, mean_pool
from .tokenizer import EOS_ID, PAD_ID, VOCAB_SIZE, ByteTokenizer


@dataclass(frozen=True)
class AdapterConfig:
    d_model: int = 64
    d_kv: int = 16
    d_ff: int = 128
    num_layers: int = 2
    num_heads: int = 4
    reg_hidden: int = 32
    seed: int = 0


class CountModel(nn.Module):
    """Encoder-decoder base plus regression and classification heads."""

    def __init__(self, config: AdapterConfig):
        super().__init__()
        self.config = config
        self.tokenizer = ByteTokenizer()
        t5_config = T5Config(
            vocab_size=VOCAB_SIZE,
            d_model=config.d_model,
            d_kv=config.d_kv,
            d_ff=config.d_ff,
            num_layers=config.num_layers,
            num_heads=config.num_heads,
            dropout_rate=0.0,
            pad_token_id=PAD_ID,
            eos_token_id=EOS_ID,
            decoder_start_token_id=PAD_ID,
        )
        self.seq2seq = T5ForConditionalGeneration(t5_config)
        self.reg_head = RegressionHead(config.d_model, config.reg_hidden)
        self.clf_head = ClassificationHead(config.d_model)

    def encode_pooled(self, input_ids, attention_mask) -> torch.Tensor:
        hidden = self.seq2seq.encoder(
            input_ids=input_ids, attention_mask=attention_mask
        ).last_hidden_state
        return mean_pool(hidden, attention_mask)

    def pooled_for(self, texts, device=None) -> torch.Tensor:
        ids, mask = self.tokenizer.batch(texts, device=device)
        return self.encode_pooled(ids, mask)

    @torch.no_grad()
    def predict_log_counts(self, texts, batch_size: int = 64) -> list:
        """Regression-head point estimates in log(1 + count) space."""
        out = []
        for start in range(0, len(texts), batch_size):
            pooled = self.pooled_for(texts[start:start + batch_size])
            out.extend(float(v) for v in self.reg_head(pooled))
        return out

    @torch.no_grad()
    def class_scores(self, texts, batch_size: int = 64) -> list:
        """Pre-softmax 3-class score vectors, one list per text."""
        out = []
        for start in range(0, len(texts), batch_size):
            pooled = self.pooled_for(texts[start:start + batch_size])
            out.extend([float(v) for v in row]
                       for row in self.clf_head(pooled))
        return out


def build_model(seed: int = 0, **overrides) -> CountModel:
    """Build a CountModel with reproducible random initialization."""
    config = AdapterConfig(seed=seed, **overrides)
    torch.manual_seed(config.seed)
    model = CountModel(config)
    model.eval()
    return model


def save_model(model: CountModel, path) -> None:
    torch.save({"config": asdict(model.config),
                "state": model.state_dict()}, path)


def load_model(path) -> CountModel:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    model = CountModel(AdapterConfig(**payload["config"]))
    model.load_state_dict(payload["state"])
    model.eval()
    return model
