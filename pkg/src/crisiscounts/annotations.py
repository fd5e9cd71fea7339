"""Readers for external linguistic annotation files.

The toolkit never runs a parser or role labeler itself; dependency and
frame annotations arrive as files produced elsewhere and are matched to
event records by id.  Parses use a 10-column tab-separated layout
(index, form, lemma, pos, -, -, head, deprel, -, -) with blank lines
between sentences and a "# id = <record id>" comment opening each
document.  Frames are JSONL with character spans into the same text the
parse was built from.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import AnnotationError


@dataclass(frozen=True)
class Token:
    index: int          # 1-based position within the sentence
    form: str
    lemma: str
    pos: str
    head: int           # 0 points at the sentence root
    deprel: str
    sentence: int       # 0-based sentence number within the document
    offset: int         # 0-based token position within the document


@dataclass
class ParsedDocument:
    doc_id: str
    sentences: list[list[Token]] = field(default_factory=list)

    @property
    def tokens(self) -> list[Token]:
        return [tok for sent in self.sentences for tok in sent]

    def head_of(self, token: Token) -> Token | None:
        if token.head == 0:
            return None
        return self.sentences[token.sentence][token.head - 1]

    def dependents_of(self, token: Token) -> list[Token]:
        return [t for t in self.sentences[token.sentence]
                if t.head == token.index and t is not token]

    def validate(self):
        if not self.sentences:
            raise AnnotationError(f"{self.doc_id}: document has no sentences")
        for s, sent in enumerate(self.sentences):
            roots = 0
            for tok in sent:
                if tok.head < 0 or tok.head > len(sent):
                    raise AnnotationError(
                        f"{self.doc_id}: sentence {s}: token {tok.index} "
                        f"has dangling head {tok.head}")
                if tok.head == tok.index:
                    raise AnnotationError(
                        f"{self.doc_id}: sentence {s}: token {tok.index} heads itself")
                if tok.head == 0:
                    roots += 1
            if roots != 1:
                raise AnnotationError(
                    f"{self.doc_id}: sentence {s}: expected one root, found {roots}")

    def align_offsets(self, text: str):
        """Map tokens onto character spans of text by greedy forward
        search.  Returns {document token offset: (start, end)}; tokens
        that cannot be located are omitted."""
        spans = {}
        cursor = 0
        for tok in self.tokens:
            at = text.find(tok.form, cursor)
            if at < 0:
                continue
            spans[tok.offset] = (at, at + len(tok.form))
            cursor = at + len(tok.form)
        return spans


def read_parses(path) -> dict[str, ParsedDocument]:
    """Read all documents from a parse file, keyed by record id."""
    docs: dict[str, ParsedDocument] = {}
    current: ParsedDocument | None = None
    sentence: list[Token] = []
    offset = 0

    def close_sentence():
        nonlocal sentence
        if sentence:
            current.sentences.append(sentence)
            sentence = []

    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if line.startswith("# id ="):
                if current is not None:
                    close_sentence()
                    current.validate()
                doc_id = line.split("=", 1)[1].strip()
                if doc_id in docs:
                    raise AnnotationError(f"{path}: line {lineno}: duplicate document id {doc_id!r}")
                current = ParsedDocument(doc_id)
                docs[doc_id] = current
                offset = 0
                continue
            if line.startswith("#"):
                continue
            if not line.strip():
                if current is not None:
                    close_sentence()
                continue
            if current is None:
                raise AnnotationError(f"{path}: line {lineno}: token line before any '# id =' header")
            cols = line.split("\t")
            if len(cols) != 10:
                raise AnnotationError(
                    f"{path}: line {lineno}: expected 10 tab-separated columns, got {len(cols)}")
            try:
                index = int(cols[0])
                head = int(cols[6])
            except ValueError:
                raise AnnotationError(f"{path}: line {lineno}: index and head must be integers")
            if index != len(sentence) + 1:
                raise AnnotationError(
                    f"{path}: line {lineno}: token index {index} out of sequence")
            sentence.append(Token(
                index=index,
                form=cols[1],
                lemma=cols[2],
                pos=cols[3],
                head=head,
                deprel=cols[7],
                sentence=len(current.sentences),
                offset=offset,
            ))
            offset += 1
    if current is not None:
        close_sentence()
        current.validate()
    return docs


def write_parses(docs: dict[str, ParsedDocument], path):
    with open(path, "w") as fh:
        for doc_id, doc in docs.items():
            fh.write(f"# id = {doc_id}\n")
            for sent in doc.sentences:
                for tok in sent:
                    fh.write("\t".join([
                        str(tok.index), tok.form, tok.lemma, tok.pos,
                        "-", "-", str(tok.head), tok.deprel, "-", "-",
                    ]) + "\n")
                fh.write("\n")


@dataclass(frozen=True)
class SrlArgument:
    role: str
    start: int
    end: int


@dataclass(frozen=True)
class SrlFrame:
    predicate: str                      # predicate lemma
    predicate_span: tuple[int, int]
    arguments: tuple[SrlArgument, ...]


def read_frames(path) -> dict[str, list[SrlFrame]]:
    """Read frame annotations: JSONL of {id, frames: [...]} objects."""
    out: dict[str, list[SrlFrame]] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise AnnotationError(f"{path}: line {lineno}: bad JSON ({exc})")
            if "id" not in rec or "frames" not in rec:
                raise AnnotationError(f"{path}: line {lineno}: need id and frames fields")
            doc_id = str(rec["id"])
            if doc_id in out:
                raise AnnotationError(f"{path}: line {lineno}: duplicate document id {doc_id!r}")
            frames = []
            for fr in rec["frames"]:
                try:
                    span = (int(fr["predicate_span"][0]), int(fr["predicate_span"][1]))
                    args = tuple(SrlArgument(str(a["role"]), int(a["start"]), int(a["end"]))
                                 for a in fr["arguments"])
                    frames.append(SrlFrame(str(fr["predicate"]), span, args))
                except (KeyError, TypeError, IndexError, ValueError) as exc:
                    raise AnnotationError(f"{path}: line {lineno}: malformed frame ({exc})")
                for arg in frames[-1].arguments:
                    if arg.start < 0 or arg.end < arg.start:
                        raise AnnotationError(
                            f"{path}: line {lineno}: bad argument span ({arg.start}, {arg.end})")
            out[doc_id] = frames
    return out


def write_frames(frames_by_id: dict[str, list[SrlFrame]], path):
    with open(path, "w") as fh:
        for doc_id, frames in frames_by_id.items():
            payload = {
                "id": doc_id,
                "frames": [
                    {
                        "predicate": fr.predicate,
                        "predicate_span": list(fr.predicate_span),
                        "arguments": [
                            {"role": a.role, "start": a.start, "end": a.end}
                            for a in fr.arguments
                        ],
                    }
                    for fr in frames
                ],
            }
            fh.write(json.dumps(payload) + "\n")
