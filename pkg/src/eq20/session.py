"""One interactive game from initiation text to verdict.

A session owns a category-scoped belief, asks questions through a
pluggable policy, and closes either when one concept's probability clears
the confidence threshold or when the question budget runs out. Closed
sessions carry a result with the rendered explanation.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field

import numpy as np

from .belief import (MAX_TURNS, BeliefState, CategoryTable, SmoothingConfig,
                     normalize_prior, update_belief)
from .errors import (ConfigurationError, ExhaustedQuestionsError,
                     OutOfOrderError, SessionClosedError, StillActiveError,
                     UnknownCategoryError, UnscriptedQuestionError)
from .explain import Explanation, generate_explanation
from .kb import KnowledgeBase, Question
from .ranking import POLICY_KINDS, make_policy

AWAITING = "awaiting_answer"
IDENTIFIED = "identified"
EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class SessionConfig:
    category: str
    policy_kind: str = "entropy-paper"
    confidence_threshold: float = 0.8
    max_turns: int = MAX_TURNS
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    keyword_boost: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        if not 0.5 < self.confidence_threshold <= 1.0:
            raise ConfigurationError(
                f"confidence threshold {self.confidence_threshold} not in (0.5, 1]")
        if not 1 <= self.max_turns <= MAX_TURNS:
            raise ConfigurationError(
                f"max_turns {self.max_turns} not in [1, {MAX_TURNS}]")
        if self.policy_kind not in POLICY_KINDS:
            raise ConfigurationError(f"unknown policy kind {self.policy_kind!r}")
        if self.keyword_boost < 0:
            raise ConfigurationError("keyword boost must be nonnegative")


@dataclass(frozen=True)
class SessionResult:
    concept: str
    name: str
    confidence: float
    status: str
    explanation: Explanation


class GameSession:
    """Mutable state of one game; confine each instance to a single caller."""

    def __init__(self, session_id: str, kb: KnowledgeBase, table: CategoryTable,
                 cfg: SessionConfig, policy, belief: BeliefState):
        self.id = session_id
        self.kb = kb
        self.table = table
        self.cfg = cfg
        self.policy = policy
        self.belief = belief
        self.asked: set[str] = set()
        self.pending: str | None = None
        self.status = AWAITING
        self.transcript: list[tuple[str, tuple[str, ...]]] = []
        self.result: SessionResult | None = None

    @property
    def turn_budget(self) -> int:
        # A category with fewer questions than max_turns exhausts early.
        return min(self.cfg.max_turns, len(self.table.question_ids))

    def pending_question(self) -> Question | None:
        return self.kb.question(self.pending) if self.pending else None

    def belief_top(self, k: int = 5) -> list[tuple[str, float]]:
        return [(self.table.concept_ids[i], p) for i, p in self.belief.top(k)]


def keyword_prior(kb: KnowledgeBase, category: str, text: str,
                  boost: float) -> np.ndarray:
    """Concept prior weights, multiplied up once per keyword found in text."""
    lowered = text.lower()
    weights = []
    for concept in kb.concepts_in(category):
        matches = sum(1 for kw in concept.keywords if kw and kw in lowered)
        weights.append(concept.prior_weight * (1.0 + boost) ** matches)
    return np.array(weights)


def start_session(kb: KnowledgeBase, initiation_text: str, cfg: SessionConfig,
                  policy=None, net=None,
                  session_id: str | None = None) -> tuple[GameSession, Question]:
    """Open a game: prime the prior from the text, pick the first question."""
    if not kb.has_category(cfg.category):
        raise UnknownCategoryError(f"unknown category {cfg.category!r}")
    table = CategoryTable(kb, cfg.category, cfg.smoothing)
    weights = keyword_prior(kb, cfg.category, initiation_text, cfg.keyword_boost)
    belief = normalize_prior(weights)
    if policy is None:
        policy = make_policy(cfg.policy_kind, seed=cfg.seed, net=net)
    session = GameSession(session_id or uuid.uuid4().hex[:12],
                          kb, table, cfg, policy, belief)
    session.pending = policy.choose(table, belief, session.asked)
    return session, kb.question(session.pending)


def _close(session: GameSession, status: str) -> SessionResult:
    probs = session.belief.probs
    index = int(np.argmax(probs))
    concept_id = session.table.concept_ids[index]
    explanation = generate_explanation(session.kb, concept_id, session.belief)
    session.status = status
    session.pending = None
    session.result = SessionResult(concept=concept_id,
                                   name=session.kb.concept(concept_id).name,
                                   confidence=float(probs[index]),
                                   status=status,
                                   explanation=explanation)
    return session.result


def submit_answer(session: GameSession, question_id: str,
                  selected) -> Question | SessionResult:
    """Fold one answer into the belief; return the next question or verdict."""
    if session.status != AWAITING:
        raise SessionClosedError(f"session {session.id} is {session.status}")
    if question_id != session.pending:
        raise OutOfOrderError(
            f"expected an answer to {session.pending!r}, got {question_id!r}")
    selected = tuple(dict.fromkeys(selected))
    session.belief = update_belief(session.belief, session.table, question_id,
                                   selected)
    session.asked.add(question_id)
    session.transcript.append((question_id, selected))
    if float(session.belief.probs.max()) > session.cfg.confidence_threshold:
        return _close(session, IDENTIFIED)
    if session.belief.turn >= session.turn_budget:
        return _close(session, EXHAUSTED)
    try:
        session.pending = session.policy.choose(session.table, session.belief,
                                                session.asked)
    except ExhaustedQuestionsError:
        return _close(session, EXHAUSTED)
    return session.kb.question(session.pending)


def get_result(session: GameSession) -> SessionResult:
    if session.status == AWAITING or session.result is None:
        raise StillActiveError(f"session {session.id} is still awaiting answers")
    return session.result


def reference_answer(kb: KnowledgeBase, target: str, question_id: str) -> tuple[str, ...]:
    """The target concept's reference options, in the question's option order."""
    reference = kb.cell(target, question_id).reference
    return tuple(oid for oid in kb.question(question_id).option_ids()
                 if oid in reference)


def replay_transcript(kb: KnowledgeBase, cfg: SessionConfig, script: dict,
                      fallback_target: str | None = None,
                      initiation_text: str = "") -> tuple[SessionResult, GameSession]:
    """Drive a whole session from scripted answers keyed by question id.

    Questions missing from the script are answered with the fallback
    target's reference options when a target is given, otherwise rejected.
    """
    session, question = start_session(kb, initiation_text, cfg)
    while session.status == AWAITING:
        if question.id in script:
            selected = script[question.id]
        elif fallback_target is not None:
            selected = reference_answer(kb, fallback_target, question.id)
        else:
            raise UnscriptedQuestionError(
                f"no scripted answer for question {question.id!r}")
        if isinstance(selected, str):
            selected = (selected,)
        outcome = submit_answer(session, question.id, selected)
        if isinstance(outcome, Question):
            question = outcome
    return get_result(session), session


def transcript_text(session: GameSession) -> str:
    """Readable per-turn log: question, chosen options, top three concepts."""
    lines = []
    for turn, (question_id, selected) in enumerate(session.transcript, start=1):
        question = session.kb.question(question_id)
        answers = ", ".join(question.option_text(oid) for oid in selected)
        record = session.belief.history[turn - 1]
        order = sorted(range(len(record.after)),
                       key=lambda i: (-record.after[i], i))[:3]
        top = ", ".join(
            f"{session.kb.concept(session.table.concept_ids[i]).name} "
            f"{record.after[i]:.3f}" for i in order)
        lines.append(f"{turn}. {question.text} -> {answers} | top: {top}")
    return "\n".join(lines)
