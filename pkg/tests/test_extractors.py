from __future__ import annotations

import pytest

from crisiscounts.annotations import ParsedDocument, SrlArgument, SrlFrame, Token
from crisiscounts.errors import AnnotationError, UnsupportedVictimTypeError
from crisiscounts.extractors import (
    DEFAULT_LEXICONS,
    Extraction,
    build_lexicon,
    extract_dependency,
    extract_regex,
    extract_srl,
    read_lexicon,
    resolve_lexicon,
)
from crisiscounts.numerals import normalize_numerals, parse_count_token

# ---------------------------------------------------------------------------
# Helpers

EXTENDED_DEATH = build_lexicon(
    "death", ["die", "kill", "slay", "dead", "lose"], ["die", "kill", "slay", "lose"])


def make_doc(doc_id, *sentences):
    """Each sentence is a list of (form, lemma, pos, head, deprel)."""
    doc = ParsedDocument(doc_id)
    offset = 0
    for s, rows in enumerate(sentences):
        sent = []
        for i, (form, lemma, pos, head, deprel) in enumerate(rows, start=1):
            sent.append(Token(index=i, form=form, lemma=lemma, pos=pos,
                              head=head, deprel=deprel, sentence=s, offset=offset))
            offset += 1
        doc.sentences.append(sent)
    return doc


def frame(predicate, span, *args):
    return SrlFrame(predicate, span,
                    tuple(SrlArgument(role, s, e) for role, s, e in args))


# ---------------------------------------------------------------------------
# Lexicons


def test_default_lexicons_present():
    assert set(DEFAULT_LEXICONS) == {"death", "injury"}
    death = resolve_lexicon("death", None)
    assert death.terms == {"die", "kill", "slay", "dead"}
    assert death.predicates == {"die", "kill", "slay"}


def test_resolve_unknown_type_errors():
    with pytest.raises(UnsupportedVictimTypeError):
        resolve_lexicon("abduction", None)


def test_build_lexicon_derives_surface_forms():
    lex = build_lexicon("abduction", ["abduct", "kidnap"])
    assert "abducted" in lex.passive_forms
    assert "kidnapped" in lex.passive_forms
    assert lex.predicates == {"abduct", "kidnap"}


def test_read_lexicon_file(tmp_path):
    path = tmp_path / "death.txt"
    path.write_text("# comment\ndie\nkill\nslay\ndead\nlose\n")
    lex = read_lexicon(path, "death")
    assert lex.terms == {"die", "kill", "slay", "dead", "lose"}
    assert "lost" in lex.passive_forms


def test_extraction_type_invariants():
    with pytest.raises(ValueError):
        Extraction(count=3, method="regex", rule=None)
    with pytest.raises(ValueError):
        Extraction(count=-1, method="regex", rule="x")


# ---------------------------------------------------------------------------
# Regex extraction


def test_regex_injury_passive_plural():
    ext = extract_regex("5 people were injured", "injury")
    assert ext.count == 5
    assert ext.rule == "passive_plural"


def test_regex_death_passive_plural():
    ext = extract_regex("23 people were killed in the attack", "death")
    assert ext.count == 23
    assert ext.rule == "passive_plural"


def test_regex_no_locating_terms_gives_zero():
    assert extract_regex("The market reopened today", "death").count == 0
    assert extract_regex("The market reopened today", "injury").count == 0


def test_regex_active_voice_death():
    ext = extract_regex("Rebels killed 12 civilians and injured 30", "death")
    assert ext.count == 12
    assert ext.rule == "active"


def test_regex_injury_first_number_precedence():
    # The plural injury pattern only demands an injury stem somewhere
    # after the number, so the first number wins even when a later one
    # sits next to the verb.
    ext = extract_regex("Rebels killed 12 civilians and injured 30", "injury")
    assert ext.count == 12
    assert ext.rule == "passive_plural"


def test_regex_injury_active_when_no_earlier_number():
    ext = extract_regex("The blast wounded 17", "injury")
    assert ext.count == 17


def test_regex_passive_singular_nonnumeric_subject():
    ext = extract_regex("a journalist was injured", "injury")
    assert ext.count == 1
    assert ext.rule == "passive_singular"
    assert extract_regex("a journalist was injured", "death").count == 0


def test_regex_passive_singular_numeric_subject():
    ext = extract_regex("1 was killed yesterday", "death")
    assert ext.count == 1
    assert ext.rule == "passive_singular"


def test_regex_age_compound_falls_back_to_singular():
    ext = extract_regex("A 42-year-old man was killed", "death")
    assert ext.count == 1
    assert ext.rule == "passive_singular"


def test_regex_comma_grouped_number():
    ext = extract_regex("colera outbreak: 5,000 people were injured", "injury")
    assert ext.count == 5000


def test_regex_term_fallback_with_extended_lexicon():
    text = normalize_numerals("one child and four women lost their lives")
    ext = extract_regex(text, "death", EXTENDED_DEATH)
    assert ext.count == 1
    assert ext.rule == "term_fallback"
    # Default lexicon has no term matching "lost", so nothing fires.
    assert extract_regex(text, "death").count == 0


def test_regex_death_number_not_stolen_by_injury_context():
    # The death plural pattern must skip a number that belongs to an
    # injury phrase.
    ext = extract_regex("5 people were injured", "death")
    assert ext.count == 0


def test_regex_custom_type_without_patterns_errors():
    bare = build_lexicon("abduction", ["abduct"])
    ext = extract_regex("3 people were abducted", "abduction", bare)
    assert ext.count == 3
    with pytest.raises(UnsupportedVictimTypeError):
        extract_regex("anything", "abduction")


def test_regex_numeric_evidence_parses_to_count():
    text = "Rebels killed 12 civilians and injured 30"
    ext = extract_regex(text, "death")
    assert ext.evidence is not None
    start, end = ext.evidence
    assert parse_count_token(text[start:end]) == ext.count


# ---------------------------------------------------------------------------
# Dependency extraction


def doc_five_people_injured():
    return make_doc(
        "d1",
        [("5", "5", "CD", 2, "nummod"),
         ("people", "people", "NNS", 4, "nsubjpass"),
         ("were", "be", "VBD", 4, "auxpass"),
         ("injured", "injure", "VBN", 0, "root"),
         (".", ".", ".", 4, "punct")],
    )


def test_dependency_numeric_argument():
    ext = extract_dependency(doc_five_people_injured(), "injury")
    assert ext.count == 5
    assert ext.rule == "numeric_argument"


def test_dependency_evidence_alignment():
    text = "5 people were injured ."
    ext = extract_dependency(doc_five_people_injured(), "injury", text=text)
    start, end = ext.evidence
    assert text[start:end] == "5"


def test_dependency_singular_fallback():
    doc = make_doc(
        "d2",
        [("a", "a", "DT", 2, "det"),
         ("journalist", "journalist", "NN", 4, "nsubjpass"),
         ("was", "be", "VBD", 4, "auxpass"),
         ("injured", "injure", "VBN", 0, "root")],
    )
    ext = extract_dependency(doc, "injury")
    assert ext.count == 1
    assert ext.rule == "singular_argument"


def test_dependency_rejects_age_compound():
    doc = make_doc(
        "d3",
        [("A", "a", "DT", 4, "det"),
         ("42", "42", "CD", 3, "nummod"),
         ("year-old", "year-old", "JJ", 4, "amod"),
         ("man", "man", "NN", 6, "nsubjpass"),
         ("was", "be", "VBD", 6, "auxpass"),
         ("killed", "kill", "VBN", 0, "root")],
    )
    ext = extract_dependency(doc, "death")
    assert ext.count == 1
    assert ext.rule == "singular_argument"


def test_dependency_rejects_duration():
    doc = make_doc(
        "d4",
        [("The", "the", "DT", 2, "det"),
         ("siege", "siege", "NN", 3, "nsubj"),
         ("lasted", "last", "VBD", 0, "root"),
         ("3", "3", "CD", 5, "nummod"),
         ("days", "day", "NNS", 3, "dobj")],
    )
    assert extract_dependency(doc, "death").count == 0


def test_dependency_object_position():
    doc = make_doc(
        "d5",
        [("Gunmen", "gunman", "NNS", 2, "nsubj"),
         ("killed", "kill", "VBD", 0, "root"),
         ("7", "7", "CD", 4, "nummod"),
         ("farmers", "farmer", "NNS", 2, "dobj")],
    )
    ext = extract_dependency(doc, "death")
    assert ext.count == 7


def test_dependency_verb_outside_lexicon_gives_zero():
    doc = make_doc(
        "d6",
        [("Protesters", "protester", "NNS", 2, "nsubj"),
         ("marched", "march", "VBD", 0, "root"),
         ("downtown", "downtown", "RB", 2, "advmod")],
    )
    assert extract_dependency(doc, "death").count == 0


def test_dependency_coordination_keeps_earliest():
    # "1 child and 4 women lost their lives"
    doc = make_doc(
        "d7",
        [("1", "1", "CD", 2, "nummod"),
         ("child", "child", "NN", 6, "nsubj"),
         ("and", "and", "CC", 5, "cc"),
         ("4", "4", "CD", 5, "nummod"),
         ("women", "woman", "NNS", 2, "conj"),
         ("lost", "lose", "VBD", 0, "root"),
         ("their", "they", "PRP$", 8, "poss"),
         ("lives", "life", "NNS", 6, "dobj")],
    )
    ext = extract_dependency(doc, "death", EXTENDED_DEATH)
    assert ext.count == 1
    assert ext.rule == "numeric_argument"
    # Without "lose" in the lexicon nothing fires.
    assert extract_dependency(doc, "death").count == 0


def test_dependency_numeral_as_subject():
    doc = make_doc(
        "d8",
        [("12", "12", "CD", 3, "nsubjpass"),
         ("were", "be", "VBD", 3, "auxpass"),
         ("killed", "kill", "VBN", 0, "root")],
    )
    assert extract_dependency(doc, "death").count == 12


def test_dependency_dangling_head_errors():
    doc = make_doc(
        "d9",
        [("5", "5", "CD", 9, "nummod"),
         ("died", "die", "VBD", 0, "root")],
    )
    with pytest.raises(AnnotationError):
        extract_dependency(doc, "death")


def test_dependency_two_roots_errors():
    doc = make_doc(
        "d10",
        [("5", "5", "CD", 0, "root"),
         ("died", "die", "VBD", 0, "root")],
    )
    with pytest.raises(AnnotationError):
        extract_dependency(doc, "death")


# ---------------------------------------------------------------------------
# Frame extraction


def test_srl_first_number_in_arguments():
    text = "5 people were injured"
    frames = [frame("injure", (14, 21), ("ARG1", 0, 8))]
    ext = extract_srl(text, frames, "injury")
    assert ext.count == 5
    start, end = ext.evidence
    assert text[start:end] == "5"


def test_srl_no_matching_predicate_gives_zero():
    text = "Protesters marched downtown"
    frames = [frame("march", (11, 18), ("ARG0", 0, 10))]
    ext = extract_srl(text, frames, "death")
    assert ext.count == 0
    assert ext.rule == "no_predicate"


def test_srl_matching_frame_without_number_gives_one():
    text = "a journalist was injured"
    frames = [frame("injure", (17, 24), ("ARG1", 0, 12))]
    ext = extract_srl(text, frames, "injury")
    assert ext.count == 1
    assert ext.rule == "frame_without_number"


def test_srl_uses_first_matching_frame_only():
    text = ("Herders shot and killed 4 people at a village market . "
            "Herders then shot and killed a farmer at Jokhana")
    frames = [
        frame("shoot", (8, 12), ("ARG0", 0, 7), ("ARG1", 24, 32)),
        frame("kill", (17, 23), ("ARG0", 0, 7), ("ARG1", 24, 32)),
        frame("shoot", (68, 72), ("ARG0", 55, 62), ("ARG1", 84, 92)),
        frame("kill", (77, 83), ("ARG0", 55, 62), ("ARG1", 84, 92)),
    ]
    ext = extract_srl(text, frames, "death")
    assert ext.count == 4


def test_srl_arguments_scanned_left_to_right():
    text = normalize_numerals("one child and four women lost their lives")
    assert text == "1 child and 4 women lost their lives"
    frames = [frame("lose", (20, 24),
                    ("ARG1", 25, 37), ("ARG0", 0, 19))]
    ext = extract_srl(text, frames, "death", EXTENDED_DEATH)
    assert ext.count == 1  # earliest argument span wins, not frame order


def test_srl_span_outside_text_errors():
    with pytest.raises(AnnotationError):
        extract_srl("short", [frame("kill", (0, 4), ("ARG1", 0, 99))], "death")


def test_srl_empty_frames_gives_zero():
    assert extract_srl("anything", [], "death").count == 0
