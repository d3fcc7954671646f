"""Question ranking and the selection policies built on top of it.

Two entropy modes share the same per-concept answer entropies. The
"entropy-paper" weight is the belief-weighted negated conditional entropy,
so deterministic questions score exactly zero and ambiguous ones score
below it; higher is better. The "entropy-infogain" weight is the mutual
information between the answer and the concept, which additionally
rewards questions that actually split the current belief.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .belief import BeliefState, CategoryTable
from .errors import ConfigurationError, ExhaustedQuestionsError, MaskError
from . import nets

RANKING_MODES = ("entropy-paper", "entropy-infogain", "random")
POLICY_KINDS = RANKING_MODES + ("learned",)


@dataclass(frozen=True)
class QuestionRanking:
    mode: str
    entries: tuple[tuple[str, float], ...]  # (question id, weight), best first


def _entropy_bits(values) -> float:
    total = 0.0
    for v in values:
        v = float(v)
        if v > 0.0:
            total -= v * math.log2(v)
    return total


def question_weight(table: CategoryTable, state: BeliefState, question_id: str,
                    mode: str) -> float:
    # Accumulated left to right in concept and option order rather than with
    # numpy reductions: rankings must break weight ties the same way on every
    # platform, and BLAS summation order is not part of any contract.
    rows = table.rows[question_id]
    conditional = 0.0
    for m in range(rows.shape[0]):
        conditional += float(state.probs[m]) * _entropy_bits(rows[m])
    if mode == "entropy-paper":
        return -conditional + 0.0
    if mode == "entropy-infogain":
        mixture = [sum(float(state.probs[m]) * float(rows[m, l])
                       for m in range(rows.shape[0]))
                   for l in range(rows.shape[1])]
        return _entropy_bits(mixture) - conditional
    raise ConfigurationError(f"no weight defined for mode {mode!r}")


def rank_questions(table: CategoryTable, state: BeliefState, asked,
                   mode: str = "entropy-paper", rng=None) -> QuestionRanking:
    """Score every unasked question, best first; ties break on question id."""
    if mode not in RANKING_MODES:
        raise ConfigurationError(f"unknown ranking mode {mode!r}")
    asked = set(asked)
    unasked = [qid for qid in table.question_ids if qid not in asked]
    if mode == "random":
        order = list(unasked)
        if rng is not None:
            order = [order[i] for i in rng.permutation(len(order))]
        return QuestionRanking(mode=mode, entries=tuple((q, 0.0) for q in order))
    weighted = [(qid, question_weight(table, state, qid, mode)) for qid in unasked]
    weighted.sort(key=lambda item: (-item[1], item[0]))
    return QuestionRanking(mode=mode, entries=tuple(weighted))


def select_question(policy_kind: str, ranking_or_net, state: BeliefState,
                    asked, rng=None, table: CategoryTable | None = None) -> str:
    """Pick the next question id under the given policy.

    Entropy and random policies consume a QuestionRanking; the learned
    policy consumes a policy network plus the category table and samples
    from its masked output distribution (argmax without an rng).
    """
    asked = set(asked)
    if policy_kind in RANKING_MODES:
        ranking: QuestionRanking = ranking_or_net
        for qid, _ in ranking.entries:
            if qid not in asked:
                return qid
        raise ExhaustedQuestionsError("every question has been asked")
    if policy_kind == "learned":
        if table is None:
            raise ConfigurationError("learned policy needs the category table")
        return sample_learned(ranking_or_net, table, state, asked, rng)
    raise ConfigurationError(f"unknown policy kind {policy_kind!r}")


def policy_input(table: CategoryTable, state: BeliefState, asked) -> np.ndarray:
    """Network input: belief vector concatenated with the asked-question mask."""
    asked_mask = np.array([1.0 if qid in asked else 0.0
                           for qid in table.question_ids])
    return np.concatenate([state.probs, asked_mask])


def sample_learned(net, table: CategoryTable, state: BeliefState, asked,
                   rng=None) -> str:
    asked = set(asked)
    mask = np.array([qid in asked for qid in table.question_ids])
    if mask.all():
        raise ExhaustedQuestionsError("every question has been asked")
    probs = nets.forward(net, policy_input(table, state, asked), mask=mask)
    if rng is None:
        index = int(np.argmax(probs))
    else:
        index = int(rng.choice(len(probs), p=probs))
    return table.question_ids[index]


class RankingPolicy:
    """Stateless wrapper that re-ranks before every pick."""

    def __init__(self, mode: str, seed=None):
        if mode not in RANKING_MODES:
            raise ConfigurationError(f"unknown ranking mode {mode!r}")
        self.kind = mode
        self._rng = np.random.default_rng(seed) if mode == "random" else None

    def choose(self, table: CategoryTable, state: BeliefState, asked) -> str:
        ranking = rank_questions(table, state, asked, self.kind, rng=self._rng)
        return select_question(self.kind, ranking, state, asked)


class LearnedPolicy:
    """Samples questions from a trained policy network."""

    kind = "learned"

    def __init__(self, net, seed=None, deterministic: bool = False):
        self.net = net
        self.deterministic = deterministic
        self._rng = None if deterministic else np.random.default_rng(seed)

    def choose(self, table: CategoryTable, state: BeliefState, asked) -> str:
        return sample_learned(self.net, table, state, asked, self._rng)


def make_policy(kind: str, seed=None, net=None):
    if kind == "learned":
        if net is None:
            raise ConfigurationError("learned policy requires a network")
        return LearnedPolicy(net, seed=seed)
    return RankingPolicy(kind, seed=seed)
