import json
from pathlib import Path

import pytest

from seq2count import AdapterError, PromptSpec, QUESTION_TEMPLATES, prompt_for, render_prompt

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixtures():
    return json.loads((FIXTURES / "prompt_fixtures.json").read_text())


def test_fixture_corpus_size():
    assert len(load_fixtures()) == 20


def test_rendering_byte_exact_against_fixtures():
    for entry in load_fixtures():
        rendered = render_prompt(entry["question"], entry["passage"])
        assert rendered.encode("utf-8") == entry["rendered"].encode("utf-8")


def test_prompt_spec_matches_function():
    spec = PromptSpec("How many people died?", "5 dead.")
    assert spec.render() == render_prompt(spec.question, spec.passage)
    assert spec.render() == "answer me:How many people died? context:5 dead."


def test_no_hidden_whitespace():
    # the template inserts exactly one space, before "context:"
    rendered = render_prompt("Q", "P")
    assert rendered == "answer me:Q context:P"


def test_prompt_for_each_victim_type():
    for victim_type, question in QUESTION_TEMPLATES.items():
        assert prompt_for(victim_type, "x") == \
            "answer me:" + question + " context:x"


def test_prompt_for_unknown_type():
    with pytest.raises(AdapterError, match="storm"):
        prompt_for("storm", "x")
