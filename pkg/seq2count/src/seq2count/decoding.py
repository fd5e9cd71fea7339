"""Digit-constrained beam decoding.

Every candidate is a nonempty digit string: the first decoding step may
only emit a digit, later steps may emit a digit or end the sequence,
and the sequence is forced closed at max_digits.  Beam scores are the
raw accumulated log-probabilities (length penalty zero), so downstream
confidence readers see unnormalized scores.
"""

import re
from dataclasses import dataclass

import torch

from .errors import DecodingError
from .tokenizer import DIGIT_IDS, EOS_ID, PAD_ID

_DIGITS = re.compile(r"^[0-9]+$")


@dataclass(frozen=True)
class BeamCandidate:
    text: str
    score: float


@dataclass(frozen=True)
class GenerationResult:
    id: str
    beams: tuple      # BeamCandidate, best first


@dataclass(frozen=True)
class GenerationFailure:
    id: str
    error: str


def _allowed_tokens(max_digits: int):
    digits = list(DIGIT_IDS)
    digits_or_stop = digits + [EOS_ID]

    def allowed(batch_id, input_ids):
        emitted = input_ids.shape[-1] - 1    # excludes the decoder start token
        if emitted == 0:
            return digits
        if emitted < max_digits:
            return digits_or_stop
        return [EOS_ID]

    return allowed


def generate_counts(model, prompts, ids=None, beam_width: int = 5,
                    max_digits: int = 9, batch_size: int = 64):
    """Decode digit-string candidates for each prompt.

    Returns (results, failures); a prompt appears in exactly one list.
    """
    if beam_width < 1:
        raise DecodingError(f"beam width must be >= 1, got {beam_width}")
    if max_digits < 1:
        raise DecodingError(f"max digits must be >= 1, got {max_digits}")
    prompts = list(prompts)
    ids = [str(i) for i in ids] if ids is not None else \
        [str(i) for i in range(len(prompts))]
    if len(ids) != len(prompts):
        raise DecodingError("ids and prompts differ in length")

    results, failures = [], []
    model.eval()
    for start in range(0, len(prompts), batch_size):
        chunk_ids = ids[start:start + batch_size]
        chunk = prompts[start:start + batch_size]
        try:
            results.extend(_decode_batch(model, chunk_ids, chunk,
                                         beam_width, max_digits))
        except Exception as exc:        # noqa: BLE001 - per-sample records
            failures.extend(GenerationFailure(rid, str(exc))
                            for rid in chunk_ids)
    return results, failures


def _decode_batch(model, chunk_ids, prompts, beam_width, max_digits):
    input_ids, mask = model.tokenizer.batch(prompts)
    kwargs = dict(
        attention_mask=mask,
        max_new_tokens=max_digits + 1,
        prefix_allowed_tokens_fn=_allowed_tokens(max_digits),
        output_scores=True,
        return_dict_in_generate=True,
    )
    if beam_width > 1:
        kwargs.update(num_beams=beam_width, num_return_sequences=beam_width,
                      length_penalty=0.0, early_stopping=True)
    with torch.no_grad():
        out = model.seq2seq.generate(input_ids, **kwargs)
    sequences = out.sequences.tolist()
    if beam_width > 1:
        scores = [float(s) for s in out.sequences_scores]
    else:
        scores = _greedy_scores(out)

    results = []
    for row, rid in enumerate(chunk_ids):
        cands = []
        for k in range(beam_width):
            flat = row * beam_width + k
            text = model.tokenizer.decode(sequences[flat])
            if not _DIGITS.match(text):
                raise DecodingError(
                    f"non-digit candidate {text!r} for prompt {rid}")
            cands.append(BeamCandidate(text, scores[flat]))
        cands.sort(key=lambda c: -c.score)
        results.append(GenerationResult(rid, tuple(cands)))
    return results


def _greedy_scores(out) -> list:
    """Cumulative log-probability of each greedy sequence.

    Greedy search reports no sequence scores, so accumulate per-step
    log-softmax of the processed logits at the chosen tokens, through
    the first end-of-sequence token.
    """
    step_logps = [torch.log_softmax(step, dim=-1) for step in out.scores]
    totals = []
    for row, seq in enumerate(out.sequences.tolist()):
        total = 0.0
        for step, token in enumerate(seq[1:]):     # skip the decoder start
            if token == PAD_ID:
                break
            total += float(step_logps[step][row, token])
            if token == EOS_ID:
                break
        totals.append(total)
    return totals
