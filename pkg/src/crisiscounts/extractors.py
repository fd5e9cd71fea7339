"""Rule-based victim count extraction.

Three extractors with increasing annotation requirements: voice-aware
string patterns over raw text, rules over a dependency parse, and rules
over semantic role frames.  Each is driven by a per-victim-type lexicon
of locating terms and returns a single count plus the rule that fired
and, where possible, the character span of the deciding token.

All extractors expect text that has been through normalize_numerals, so
spelled-out cardinals are already digit strings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .annotations import ParsedDocument, SrlFrame
from .errors import AnnotationError, UnsupportedVictimTypeError
from .numerals import find_count_tokens, parse_count_token

# ---------------------------------------------------------------------------
# Lexicons

# Surface fragments per lemma: (passive/participle fragment, active
# fragments).  Fragments are regex alternates; stems rely on the absence
# of a right-hand word boundary for prefix matching ("kill" -> killed,
# kills, killing).
_FORMS: dict[str, tuple[str, tuple[str, ...]]] = {
    "kill": ("killed", ("kill",)),
    "die": ("died", ()),
    "dead": ("dead", ()),
    "slay": ("slain", ("slay", "slain")),
    "injure": ("injur", ("injured?",)),
    "wound": ("wound", ("wound",)),
    "lose": ("lost", ("lost",)),
    "abduct": ("abducted", ("abduct",)),
    "kidnap": ("kidnapped", ("kidnap",)),
    "displace": ("displaced", ("displace",)),
}

# Strict shape: a passive match needs an auxiliary before the participle
# and excludes numbers sitting next to an excluded term.  Loose shape:
# the locating stem anywhere after the number suffices, and the
# exclusion scans the whole tail.
STRICT = "strict"
LOOSE = "loose"


def _passive_fragment(lemma: str) -> str:
    if lemma in _FORMS:
        return _FORMS[lemma][0]
    return lemma + ("d" if lemma.endswith("e") else "ed")


def _active_fragments(lemma: str) -> tuple[str, ...]:
    if lemma in _FORMS:
        return _FORMS[lemma][1]
    return (re.escape(lemma),)


@dataclass(frozen=True)
class Lexicon:
    """Locating vocabulary for one victim type.

    locating_terms are lemmas used by the parse- and frame-based rules;
    predicate_verbs restrict which frame predicates count.  The regex
    fields hold surface fragments; exclude_forms are fragments of the
    complementary victim type used as negative context.
    """

    victim_type: str
    locating_terms: tuple[str, ...]
    predicate_verbs: tuple[str, ...] = ()
    passive_forms: tuple[str, ...] = ()
    active_forms: tuple[str, ...] = ()
    exclude_forms: tuple[str, ...] = ()
    shape: str = STRICT

    def __post_init__(self):
        if not self.locating_terms:
            raise UnsupportedVictimTypeError(
                f"{self.victim_type}: lexicon needs at least one locating term")

    @property
    def terms(self) -> frozenset:
        return frozenset(t.lower() for t in self.locating_terms)

    @property
    def predicates(self) -> frozenset:
        verbs = self.predicate_verbs or self.locating_terms
        return frozenset(v.lower() for v in verbs)


# Negative-context fragments tie the two built-in types together: death
# patterns must not fire on injury phrasing and vice versa.
_INJURY_STEMS = ("injur", "wound")
_DEATH_PARTICIPLES = ("killed", "dead", "died", "slain")

DEFAULT_LEXICONS = {
    "death": Lexicon(
        victim_type="death",
        locating_terms=("die", "kill", "slay", "dead"),
        predicate_verbs=("die", "kill", "slay"),
        passive_forms=_DEATH_PARTICIPLES,
        active_forms=("kill", "slay", "slain"),
        exclude_forms=_INJURY_STEMS,
        shape=STRICT,
    ),
    "injury": Lexicon(
        victim_type="injury",
        locating_terms=("injure", "wound"),
        predicate_verbs=("injure", "wound"),
        passive_forms=_INJURY_STEMS,
        active_forms=("injured?", "wound"),
        exclude_forms=_DEATH_PARTICIPLES,
        shape=LOOSE,
    ),
}


def build_lexicon(victim_type: str, locating_terms, predicate_verbs=None,
                  shape: str | None = None) -> Lexicon:
    """Derive a full lexicon (regex fragments included) from lemma lists."""
    terms = tuple(locating_terms)
    passive = tuple(_passive_fragment(t.lower()) for t in terms)
    active = tuple(frag for t in terms for frag in _active_fragments(t.lower()))
    base = DEFAULT_LEXICONS.get(victim_type)
    exclude = base.exclude_forms if base is not None else ()
    if shape is None:
        shape = base.shape if base is not None else STRICT
    return Lexicon(
        victim_type=victim_type,
        locating_terms=terms,
        predicate_verbs=tuple(predicate_verbs) if predicate_verbs else (),
        passive_forms=passive,
        active_forms=active,
        exclude_forms=exclude,
        shape=shape,
    )


def read_lexicon(path, victim_type: str, predicates_path=None) -> Lexicon:
    """Load a lexicon file: one locating lemma per line, # comments."""
    def read_terms(p):
        out = []
        with open(p) as fh:
            for raw in fh:
                term = raw.strip()
                if term and not term.startswith("#"):
                    out.append(term.lower())
        return out

    terms = read_terms(path)
    predicates = read_terms(predicates_path) if predicates_path else None
    return build_lexicon(victim_type, terms, predicates)


def resolve_lexicon(victim_type: str | None, lexicon: Lexicon | None) -> Lexicon:
    if lexicon is not None:
        return lexicon
    if victim_type in DEFAULT_LEXICONS:
        return DEFAULT_LEXICONS[victim_type]
    raise UnsupportedVictimTypeError(
        f"no default lexicon for victim type {victim_type!r}")


# ---------------------------------------------------------------------------
# Extraction result


@dataclass(frozen=True)
class Extraction:
    """One extractor decision: the count, which rule produced it, and
    (when a concrete token decided) its character span."""

    count: int | None
    method: str
    rule: str | None = None
    evidence: tuple[int, int] | None = None

    def __post_init__(self):
        # A count without a rule (or vice versa) would be meaningless.
        if (self.count is None) != (self.rule is None):
            raise ValueError("count and rule must be present together")
        if self.count is not None and self.count < 0:
            raise ValueError("counts are non-negative")


# ---------------------------------------------------------------------------
# Pattern-based extraction

_NUM = r"\d(?:\d|,)*"


def _alt(fragments) -> str:
    return "|".join(fragments)


def _build_patterns(lex: Lexicon) -> list[tuple[str, re.Pattern]]:
    passive = _alt(lex.passive_forms)
    active = _alt(lex.active_forms)
    exclude = _alt(lex.exclude_forms)
    pats: list[tuple[str, str]] = []
    if lex.shape == STRICT:
        guard = rf"(?!\D*(?:{exclude}))" if exclude else ""
        pats.append((
            "passive_plural",
            rf"(?P<num>{_NUM}){guard}(?=.*(?:\b(?:were|are)\D*\b(?:{passive})))",
        ))
        pats.append((
            "passive_singular",
            rf"(?P<subj>\S*){guard}(?=.*(?:\b(?:was|is)\D*\b(?:{passive})))",
        ))
    else:
        plural_guard = rf"(?!.*(?:\b(?:were|are)?\D*\b(?:{exclude})))" if exclude else ""
        singular_guard = rf"(?!\D*(?:\b(?:were|are)\D*\b(?:{exclude})))" if exclude else ""
        pats.append((
            "passive_plural",
            rf"(?P<num>{_NUM}){plural_guard}(?=.*\b(?:{passive}))",
        ))
        pats.append((
            "passive_singular",
            rf"(?P<subj>\S*)(?=(?:was|is).*\b(?:{passive})){singular_guard}",
        ))
    if active:
        number = _NUM if lex.shape == STRICT else r"\d+"
        pats.append(("active", rf"(?:{active})\D*\b(?P<num>{number})"))
    return [(name, re.compile(p, re.IGNORECASE)) for name, p in pats]


_PATTERN_CACHE: dict[Lexicon, list[tuple[str, re.Pattern]]] = {}
_TERM_CACHE: dict[Lexicon, re.Pattern] = {}


def _patterns_for(lex: Lexicon):
    if lex not in _PATTERN_CACHE:
        _PATTERN_CACHE[lex] = _build_patterns(lex)
    return _PATTERN_CACHE[lex]


def _term_regex(lex: Lexicon) -> re.Pattern:
    if lex not in _TERM_CACHE:
        fragments = set(lex.passive_forms) | set(lex.active_forms)
        _TERM_CACHE[lex] = re.compile(
            rf"\b(?:{_alt(sorted(fragments))})", re.IGNORECASE)
    return _TERM_CACHE[lex]


def extract_regex(text: str, victim_type: str | None = None,
                  lexicon: Lexicon | None = None) -> Extraction:
    """Voice-pattern extraction over plain text.

    Patterns are tried in order passive-plural, passive-singular,
    active; the first match decides.  A passive-singular match with a
    non-numeric subject yields 1.  With no pattern match the count is 1
    when a locating term occurs in the text (something happened, but no
    number survives the patterns) and 0 otherwise.
    """
    lex = resolve_lexicon(victim_type, lexicon)
    if not lex.passive_forms:
        raise UnsupportedVictimTypeError(
            f"{lex.victim_type}: no regex patterns for this victim type")
    for rule, pattern in _patterns_for(lex):
        m = pattern.search(text)
        if m is None:
            continue
        if rule == "passive_singular":
            token = m.group("subj")
            value = parse_count_token(token)
            if value is None:
                span = (m.start("subj"), m.end("subj")) if token else None
                return Extraction(1, "regex", rule, span)
            return Extraction(value, "regex", rule, (m.start("subj"), m.end("subj")))
        value = int(m.group("num").replace(",", ""))
        return Extraction(value, "regex", rule, (m.start("num"), m.end("num")))
    term = _term_regex(lex).search(text)
    if term is not None:
        return Extraction(1, "regex", "term_fallback", (term.start(), term.end()))
    return Extraction(0, "regex", "no_match")


# ---------------------------------------------------------------------------
# Dependency-rule extraction

_SUBJ_OBJ = {"nsubj", "nsubjpass", "nsubj:pass", "csubj", "dobj", "obj", "iobj"}
_NUMMOD = {"nummod", "num"}
_NUMERIC_POS = {"CD", "NUM"}
_TEMPORAL_LEMMAS = {"year", "month", "week", "day", "hour", "minute", "decade"}
_AGE_HEADS = tuple(f"{u}-old" for u in ("year", "month", "week", "day"))
_SINGULAR_PRONOUNS = {"he", "she", "it", "i"}


def _is_age_or_temporal(token) -> bool:
    form = token.form.lower()
    lemma = token.lemma.lower()
    return (lemma in _TEMPORAL_LEMMAS
            or lemma in _AGE_HEADS
            or form.endswith(_AGE_HEADS)
            or form.rstrip("s") in _TEMPORAL_LEMMAS)


def _argument_link(doc: ParsedDocument, token):
    """Relation and governor for a token, looking through conjunction
    chains so coordinated arguments count like their first conjunct."""
    seen = 0
    t = token
    while t.deprel == "conj" and seen < 32:
        head = doc.head_of(t)
        if head is None:
            return None, None
        t = head
        seen += 1
    return t.deprel, doc.head_of(t)


def _is_singular(token) -> bool:
    if token.pos in ("NN", "NNP"):
        return True
    if token.pos in ("NNS", "NNPS"):
        return False
    if token.pos in ("NOUN", "PROPN"):
        return not token.form.lower().endswith("s")
    if token.pos in ("PRP", "PRON"):
        return token.form.lower() in _SINGULAR_PRONOUNS
    return False


def extract_dependency(doc: ParsedDocument, victim_type: str | None = None,
                       lexicon: Lexicon | None = None,
                       text: str | None = None) -> Extraction:
    """Parse-rule extraction.

    Accepts a numeric modifier when the phrase it modifies is the
    subject or object of a locating verb, rejecting age and temporal
    compounds.  With no accepted number, a locating verb governing a
    singular subject or object yields 1; otherwise 0.  Ties resolve to
    the earliest token in the document.
    """
    lex = resolve_lexicon(victim_type, lexicon)
    doc.validate()
    terms = lex.terms
    spans = doc.align_offsets(text) if text is not None else {}

    for tok in doc.tokens:
        value = parse_count_token(tok.form)
        if value is None:
            continue
        if tok.deprel in _NUMMOD or tok.deprel == "amod":
            anchor = doc.head_of(tok)
            if anchor is None or _is_age_or_temporal(anchor):
                continue
        elif tok.pos in _NUMERIC_POS:
            anchor = tok
        else:
            continue
        rel, governor = _argument_link(doc, anchor)
        if rel in _SUBJ_OBJ and governor is not None \
                and governor.lemma.lower() in terms:
            return Extraction(value, "dependency", "numeric_argument",
                              spans.get(tok.offset))

    for tok in doc.tokens:
        if tok.lemma.lower() not in terms:
            continue
        for dep in doc.dependents_of(tok):
            if dep.deprel in _SUBJ_OBJ and _is_singular(dep):
                return Extraction(1, "dependency", "singular_argument",
                                  spans.get(dep.offset))
    return Extraction(0, "dependency", "no_rule")


# ---------------------------------------------------------------------------
# Frame-rule extraction


def extract_srl(text: str, frames: list[SrlFrame],
                victim_type: str | None = None,
                lexicon: Lexicon | None = None) -> Extraction:
    """Frame-rule extraction.

    Takes the first frame (document order) whose predicate lemma is in
    the lexicon and scans its arguments left to right for a number.  A
    matching frame without any number yields 1; no matching frame
    yields 0.
    """
    lex = resolve_lexicon(victim_type, lexicon)
    predicates = lex.predicates
    for frame in frames:
        if frame.predicate.lower() not in predicates:
            continue
        for arg in sorted(frame.arguments, key=lambda a: (a.start, a.end)):
            if arg.end > len(text):
                raise AnnotationError(
                    f"argument span ({arg.start}, {arg.end}) outside text "
                    f"of length {len(text)}")
            segment = text[arg.start:arg.end]
            for value, s, e in find_count_tokens(segment):
                return Extraction(value, "srl", "argument_number",
                                  (arg.start + s, arg.start + e))
        return Extraction(1, "srl", "frame_without_number",
                          frame.predicate_span)
    return Extraction(0, "srl", "no_predicate")


EXTRACTOR_NAMES = ("regex", "dependency", "srl")
