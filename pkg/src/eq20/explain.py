"""Builds the closing justification for an identified concept.

The engine explains itself by pointing at the single question-answer turn
that moved the identified concept's probability the most, then rendering a
fixed sentence template around that turn plus the concept's description.
"""

from __future__ import annotations

from dataclasses import dataclass

from .belief import BeliefState, TurnRecord
from .errors import KBReferenceError
from .kb import KnowledgeBase


@dataclass(frozen=True)
class TraceRow:
    turn: int
    question_id: str
    selected: tuple[str, ...]
    before: float
    after: float
    jump: float


@dataclass(frozen=True)
class Explanation:
    concept: str
    pivotal_question: str
    pivotal_answer: tuple[str, ...]
    jump: float
    text: str
    trace: tuple[TraceRow, ...]


def pivotal_pair(history, concept_index: int) -> tuple[int, TurnRecord, float]:
    """Turn whose answer raised the concept's probability the most.

    Returns (turn number, record, jump); the earliest turn wins ties.
    """
    if not history:
        raise ValueError("cannot explain an empty history")
    best_turn, best_record, best_jump = 0, history[0], None
    for turn, record in enumerate(history):
        jump = float(record.after[concept_index] - record.before[concept_index])
        if best_jump is None or jump > best_jump:
            best_turn, best_record, best_jump = turn, record, jump
    return best_turn, best_record, best_jump


def trace_report(history, concept_index: int) -> tuple[TraceRow, ...]:
    """Per-turn before/after probability of one concept, with its jump."""
    rows = []
    for turn, record in enumerate(history):
        before = float(record.before[concept_index])
        after = float(record.after[concept_index])
        rows.append(TraceRow(turn=turn, question_id=record.question_id,
                             selected=record.selected, before=before,
                             after=after, jump=after - before))
    return tuple(rows)


def _decapitalize(text: str) -> str:
    # Lowercase a leading sentence capital but leave acronyms (SQL, XSS) alone.
    if len(text) >= 2 and text[0].isupper() and text[1].islower():
        return text[0].lower() + text[1:]
    return text


def answer_phrase(kb: KnowledgeBase, question_id: str, selected) -> str:
    question = kb.question(question_id)
    return " and ".join(_decapitalize(question.option_text(oid))
                        for oid in selected)


def generate_explanation(kb: KnowledgeBase, concept_id: str,
                         state: BeliefState) -> Explanation:
    """Render the final explanation for the identified concept."""
    concept = kb.concept(concept_id)
    concepts = kb.concepts_in(concept.category)
    index = next(i for i, c in enumerate(concepts) if c.id == concept_id)
    if len(state.probs) != len(concepts):
        raise KBReferenceError("belief length does not match the category")
    _, record, jump = pivotal_pair(state.history, index)
    question = kb.question(record.question_id)
    text = (f"Based on your answer that "
            f"{answer_phrase(kb, record.question_id, record.selected)} "
            f"to '{question.text}', the most likely threat is {concept.name}. "
            f"{concept.description}")
    return Explanation(concept=concept_id,
                       pivotal_question=record.question_id,
                       pivotal_answer=record.selected,
                       jump=jump,
                       text=text,
                       trace=trace_report(state.history, index))
