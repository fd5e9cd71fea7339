"""UTF-8 byte tokenizer for the count adapter.

Token ids: pad 0, end-of-sequence 1, byte value b at b + 2.  The
vocabulary is fixed at 258, so any text round-trips without an
out-of-vocabulary path.
"""

import torch

PAD_ID = 0
EOS_ID = 1
BYTE_OFFSET = 2
VOCAB_SIZE = 256 + BYTE_OFFSET

# decoder output alphabet for count generation
DIGIT_IDS = tuple(ord(c) + BYTE_OFFSET for c in "0123456789")


class ByteTokenizer:
    def encode(self, text: str, add_eos: bool = True) -> list[int]:
        ids = [b + BYTE_OFFSET for b in text.encode("utf-8")]
        if add_eos:
            ids.append(EOS_ID)
        return ids

    def decode(self, ids) -> str:
        data = bytes(int(t) - BYTE_OFFSET for t in ids
                     if int(t) not in (PAD_ID, EOS_ID))
        return data.decode("utf-8", errors="replace")

    def batch(self, texts, device=None):
        """Encode and right-pad a list of strings.

        Returns (input_ids, attention_mask) long tensors of shape
        (len(texts), max_len).
        """
        rows = [self.encode(text) for text in texts]
        width = max(len(r) for r in rows) if rows else 1
        ids = torch.full((len(rows), width), PAD_ID, dtype=torch.long)
        mask = torch.zeros((len(rows), width), dtype=torch.long)
        for i, row in enumerate(rows):
            ids[i, :len(row)] = torch.tensor(row, dtype=torch.long)
            mask[i, :len(row)] = 1
        if device is not None:
            ids, mask = ids.to(device), mask.to(device)
        return ids, mask
