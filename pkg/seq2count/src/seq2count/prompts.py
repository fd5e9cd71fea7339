"""Prompt rendering for count questions.

A rendered prompt is the exact byte string
"answer me:" + question + " context:" + passage, with no other
whitespace inserted.
"""

from dataclasses import dataclass

from .errors import AdapterError

QUESTION_TEMPLATES = {
    "death": "How many people died?",
    "injury": "How many people were injured?",
    "abduction": "How many people were abducted?",
}


@dataclass(frozen=True)
class PromptSpec:
    question: str
    passage: str

    def render(self) -> str:
        return "answer me:" + self.question + " context:" + self.passage


def render_prompt(question: str, passage: str) -> str:
    return PromptSpec(question, passage).render()


def prompt_for(victim_type: str, passage: str) -> str:
    """Render the default question for a victim type."""
    try:
        question = QUESTION_TEMPLATES[victim_type]
    except KeyError:
        raise AdapterError(
            f"no question template for victim type {victim_type!r}; "
            f"known: {sorted(QUESTION_TEMPLATES)}")
    return render_prompt(question, passage)
