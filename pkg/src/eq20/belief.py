"""Belief engine: priors, answer likelihoods, multiplicative updates, entropy.

The belief over concepts is a probability vector updated after every answer
by an elementwise product with the answer's aggregate likelihood, followed
by renormalization. A small floor proportional to the pre-update belief
keeps contradicted concepts faintly alive so later answers can resurrect
them; the floor never resurrects a concept whose probability is exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CollapsedBeliefError,
    ConfigurationError,
    DegeneratePriorError,
    DimensionError,
    EmptySelectionError,
    InvalidOptionError,
)
from .kb import KnowledgeBase

MAX_TURNS = 20


@dataclass(frozen=True)
class SmoothingConfig:
    """Knobs for Eq.-style likelihood smoothing and the belief rescue floor.

    alpha trades historical answer counts against the reference matrix: at
    zero only recorded frequencies matter, large values make the reference
    answers dominate. epsilon_floor is the rescue sliver; zero disables the
    rescue entirely, in which case a fully contradicted belief is an error.
    """

    alpha: float = 1.0
    epsilon_floor: float = 1e-6

    def __post_init__(self):
        if not (self.alpha >= 0):
            raise ConfigurationError(f"alpha must be >= 0, got {self.alpha}")
        if not (0 <= self.epsilon_floor < 1e-3):
            raise ConfigurationError(
                f"epsilon_floor must lie in [0, 1e-3), got {self.epsilon_floor}")


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.asarray(array, dtype=float).copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TurnRecord:
    question_id: str
    selected: tuple[str, ...]
    before: np.ndarray
    after: np.ndarray


@dataclass(frozen=True)
class BeliefState:
    probs: np.ndarray
    turn: int
    history: tuple[TurnRecord, ...] = ()

    def top(self, k: int) -> list[tuple[int, float]]:
        """Indices and probabilities of the k most likely concepts."""
        order = sorted(range(len(self.probs)), key=lambda i: (-self.probs[i], i))
        return [(i, float(self.probs[i])) for i in order[:k]]


def normalize_prior(weights) -> BeliefState:
    """Turn nonnegative concept weights into the turn-zero belief."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or len(w) == 0:
        raise DimensionError("prior weights must be a non-empty vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DegeneratePriorError("prior weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise DegeneratePriorError("all prior weights are zero")
    return BeliefState(probs=_frozen(w / total), turn=0)


def answer_likelihood(kb: KnowledgeBase, concept_id: str, question_id: str,
                      cfg: SmoothingConfig) -> np.ndarray:
    """Per-option answer distribution for one concept, in option order.

    Each option gets its historical count plus alpha if it is a reference
    answer, normalized over the question's options. A degenerate all-zero
    row (no history, alpha = 0) falls back to uniform.
    """
    question = kb.question(question_id)
    cell = kb.cell(concept_id, question_id)
    counts = np.array([count + (cfg.alpha if oid in cell.reference else 0.0)
                       for oid, count in cell.frequencies], dtype=float)
    total = counts.sum()
    if total <= 0:
        return np.full(len(question.options), 1.0 / len(question.options))
    return counts / total


class CategoryTable:
    """Dense per-category view: concept order, question order, likelihood rows.

    Concept and question order follow document order and fix the meaning of
    belief vector indices for everything downstream.
    """

    def __init__(self, kb: KnowledgeBase, category_id: str, cfg: SmoothingConfig):
        concepts = kb.concepts_in(category_id)
        questions = kb.questions_in(category_id)
        self.kb = kb
        self.category = category_id
        self.cfg = cfg
        self.concept_ids = tuple(c.id for c in concepts)
        self.question_ids = tuple(q.id for q in questions)
        self.concept_index = {cid: i for i, cid in enumerate(self.concept_ids)}
        self.question_index = {qid: i for i, qid in enumerate(self.question_ids)}
        self.options = {q.id: q.option_ids() for q in questions}
        self.rows = {}
        for q in questions:
            rows = np.vstack([answer_likelihood(kb, c.id, q.id, cfg) for c in concepts])
            rows.setflags(write=False)
            self.rows[q.id] = rows
        self.prior_weights = np.array([c.prior_weight for c in concepts])

    @property
    def size(self) -> int:
        return len(self.concept_ids)

    def reference_options(self, concept_id: str, question_id: str) -> frozenset[str]:
        return self.kb.cell(concept_id, question_id).reference

    def option_indices(self, question_id: str, selected) -> list[int]:
        ids = self.options[question_id]
        position = {oid: i for i, oid in enumerate(ids)}
        indices = []
        for oid in selected:
            if oid not in position:
                raise InvalidOptionError(
                    f"question {question_id!r} has no option {oid!r}")
            indices.append(position[oid])
        return indices


def aggregate_likelihood(rows: np.ndarray, option_indices) -> np.ndarray:
    """Per-concept probability mass on the selected options (the update vector)."""
    indices = list(option_indices)
    if not indices:
        raise EmptySelectionError("an answer must select at least one option")
    return rows[:, indices].sum(axis=1)


def update_belief(state: BeliefState, table: CategoryTable, question_id: str,
                  selected, cfg: SmoothingConfig | None = None) -> BeliefState:
    """Multiply the belief by the answer likelihood and renormalize.

    The update vector is scaled by its own maximum before the floor is
    applied, which makes the posterior invariant to rescaling of the
    likelihoods. Entries where probs * beta falls below epsilon_floor *
    probs are held at that floor instead of vanishing.
    """
    cfg = cfg or table.cfg
    if state.turn >= MAX_TURNS:
        raise ConfigurationError(f"belief already at the {MAX_TURNS}-turn cap")
    if len(state.probs) != table.size:
        raise DimensionError("belief length does not match the category")
    rows = table.rows[question_id]
    selected = tuple(selected)
    beta = aggregate_likelihood(rows, table.option_indices(question_id, selected))
    return _apply_update(state, question_id, selected, beta, cfg.epsilon_floor)


def _apply_update(state: BeliefState, question_id: str, selected,
                  beta: np.ndarray, epsilon_floor: float) -> BeliefState:
    probs = state.probs
    peak = beta.max()
    if peak <= 0:
        if epsilon_floor <= 0:
            raise CollapsedBeliefError(
                f"answer to {question_id!r} contradicts every concept")
        after = probs  # floor everywhere: posterior is unchanged
    else:
        scaled = np.maximum(beta / peak, epsilon_floor)
        if np.all(scaled == 1.0):
            after = probs  # uninformative answer: multiplying by one must not drift
        else:
            unnormalized = probs * scaled
            total = unnormalized.sum()
            if total <= 0:
                raise CollapsedBeliefError(
                    f"answer to {question_id!r} contradicts every concept")
            after = _frozen(unnormalized / total)
    record = TurnRecord(question_id=question_id, selected=tuple(selected),
                        before=probs, after=after)
    return BeliefState(probs=after, turn=state.turn + 1,
                       history=state.history + (record,))


def update_with_beta(state: BeliefState, question_id: str, selected,
                     beta, cfg: SmoothingConfig) -> BeliefState:
    """update_belief for callers that already hold the update vector."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != state.probs.shape:
        raise DimensionError("update vector length does not match the belief")
    if np.any(beta < 0) or not np.all(np.isfinite(beta)):
        raise ConfigurationError("update vector must be finite and nonnegative")
    if state.turn >= MAX_TURNS:
        raise ConfigurationError(f"belief already at the {MAX_TURNS}-turn cap")
    return _apply_update(state, question_id, tuple(selected), beta,
                         cfg.epsilon_floor)


def entropy(probs) -> float:
    """Shannon entropy in bits; zero-probability entries contribute nothing."""
    total = 0.0
    for p in np.asarray(probs, dtype=float):
        if p > 0:
            total -= p * math.log2(p)
    return total


def probability_jump(before: BeliefState, after: BeliefState,
                     concept_index: int) -> float:
    """How much one concept's probability moved across an update."""
    return float(after.probs[concept_index] - before.probs[concept_index])


def state_delta(before: BeliefState, after: BeliefState) -> np.ndarray:
    """Elementwise posterior-minus-prior movement across an update."""
    if before.probs.shape != after.probs.shape:
        raise DimensionError("belief vectors differ in length")
    return after.probs - before.probs
