"""Question ranking against brute-force oracles, plus policy selection rules.

The oracles below recompute everything from the raw KB document with plain
Python loops: per-concept answer rows, their entropies, the belief-weighted
conditional entropy, and the mixture entropy for the information-gain mode.
"""

import math

import numpy as np
import pytest

from eq20.belief import CategoryTable, SmoothingConfig, normalize_prior
from eq20.errors import (ConfigurationError, ExhaustedQuestionsError,
                         MaskError)
from eq20.nets import init_network
from eq20.ranking import (LearnedPolicy, RankingPolicy, make_policy,
                          policy_input, rank_questions, sample_learned,
                          select_question)

from conftest import build_kb, random_belief, random_kb

CFG = SmoothingConfig()


def entropy_bits(values):
    total = 0.0
    for v in values:
        if v > 0:
            total -= v * math.log2(v)
    return total


def oracle_row(kb, concept_id, question_id, alpha):
    cell = kb.cell(concept_id, question_id)
    counts = [count + (alpha if oid in cell.reference else 0.0)
              for oid, count in cell.frequencies]
    total = sum(counts)
    if total <= 0:
        return [1.0 / len(counts)] * len(counts)
    return [c / total for c in counts]


def oracle_weight(kb, category, belief, question_id, mode, alpha):
    concepts = kb.concepts_in(category)
    rows = [oracle_row(kb, c.id, question_id, alpha) for c in concepts]
    conditional = 0.0
    for w, row in zip(belief, rows):
        conditional += w * entropy_bits(row)
    if mode == "entropy-paper":
        return -conditional + 0.0
    mixture = [sum(w * row[l] for w, row in zip(belief, rows))
               for l in range(len(rows[0]))]
    return entropy_bits(mixture) - conditional


def oracle_ranking(kb, category, belief, asked, mode, alpha):
    unasked = [q.id for q in kb.questions_in(category) if q.id not in asked]
    weighted = [(qid, oracle_weight(kb, category, belief, qid, mode, alpha))
                for qid in unasked]
    weighted.sort(key=lambda item: (-item[1], item[0]))
    return weighted


def three_question_kb():
    # q-disc separates the concepts, q-flat is pure noise, q-ident is
    # deterministic but answered identically by both concepts.
    return build_kb(
        ["a", "b"],
        [("q-disc", ["yes", "no"]), ("q-flat", ["yes", "no"]),
         ("q-ident", ["yes", "no"])],
        {("a", "q-disc"): ["yes"], ("b", "q-disc"): ["no"],
         ("a", "q-flat"): ["yes", "no"], ("b", "q-flat"): ["yes", "no"],
         ("a", "q-ident"): ["yes"], ("b", "q-ident"): ["yes"]})


class TestHandWorkedWeights:
    def test_deterministic_question_scores_zero(self):
        table = CategoryTable(three_question_kb(), "cat", CFG)
        state = normalize_prior([1, 1])
        ranking = rank_questions(table, state, set(), "entropy-paper")
        weights = dict(ranking.entries)
        assert weights["q-disc"] == 0.0
        assert weights["q-ident"] == 0.0
        assert weights["q-flat"] == -1.0

    def test_paper_mode_cannot_tell_ident_from_disc(self):
        # both deterministic questions tie at zero; the id breaks the tie
        table = CategoryTable(three_question_kb(), "cat", CFG)
        state = normalize_prior([1, 1])
        ranking = rank_questions(table, state, set(), "entropy-paper")
        assert [qid for qid, _ in ranking.entries] == ["q-disc", "q-ident",
                                                       "q-flat"]

    def test_infogain_mode_separates_them(self):
        table = CategoryTable(three_question_kb(), "cat", CFG)
        state = normalize_prior([1, 1])
        ranking = rank_questions(table, state, set(), "entropy-infogain")
        weights = dict(ranking.entries)
        assert weights["q-disc"] == pytest.approx(1.0, abs=1e-12)
        assert weights["q-ident"] == pytest.approx(0.0, abs=1e-12)
        assert weights["q-flat"] == pytest.approx(0.0, abs=1e-12)
        assert ranking.entries[0][0] == "q-disc"


class TestOracleEquivalence:
    def test_random_kbs_match_bruteforce(self):
        rng = np.random.default_rng(7)
        for trial in range(80):
            kb = random_kb(rng)
            alpha = float(rng.choice([0.0, 0.5, 1.0, 2.0]))
            cfg = SmoothingConfig(alpha=alpha)
            table = CategoryTable(kb, "cat", cfg)
            belief = random_belief(rng, table.size)
            state = normalize_prior(belief)
            asked = set()
            if len(table.question_ids) > 1 and rng.random() < 0.5:
                asked = {table.question_ids[0]}
            for mode in ("entropy-paper", "entropy-infogain"):
                expected = oracle_ranking(kb, "cat", state.probs, asked,
                                          mode, alpha)
                got = rank_questions(table, state, asked, mode).entries
                assert [qid for qid, _ in got] == [qid for qid, _ in expected]
                for (_, w_got), (_, w_exp) in zip(got, expected):
                    assert abs(w_got - w_exp) <= 1e-12

    def test_weight_bounds(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            kb = random_kb(rng)
            table = CategoryTable(kb, "cat", CFG)
            state = normalize_prior(random_belief(rng, table.size))
            for qid, w in rank_questions(table, state, set(),
                                         "entropy-paper").entries:
                assert w <= 0.0
            max_options = max(len(v) for v in table.options.values())
            for qid, w in rank_questions(table, state, set(),
                                         "entropy-infogain").entries:
                assert -1e-12 <= w <= math.log2(max_options) + 1e-12

    def test_permuting_concepts_leaves_weights_alone(self):
        rng = np.random.default_rng(9)
        kb = random_kb(rng)
        table = CategoryTable(kb, "cat", CFG)
        belief = random_belief(rng, table.size)
        baseline = dict(rank_questions(table, normalize_prior(belief),
                                       set(), "entropy-infogain").entries)
        perm = rng.permutation(table.size)
        # same KB with concepts listed in a different document order
        from eq20.kb import parse_kb, serialize_kb
        doc = serialize_kb(kb)
        doc["concepts"] = [doc["concepts"][int(i)] for i in perm]
        shuffled = CategoryTable(parse_kb(doc), "cat", CFG)
        permuted_belief = belief[perm]
        moved = dict(rank_questions(shuffled, normalize_prior(permuted_belief),
                                    set(), "entropy-infogain").entries)
        for qid, weight in baseline.items():
            assert moved[qid] == pytest.approx(weight, abs=1e-12)


class TestSelection:
    def test_asked_questions_are_excluded(self):
        table = CategoryTable(three_question_kb(), "cat", CFG)
        state = normalize_prior([1, 1])
        ranking = rank_questions(table, state, {"q-disc"}, "entropy-paper")
        assert [qid for qid, _ in ranking.entries] == ["q-ident", "q-flat"]
        assert select_question("entropy-paper", ranking, state,
                               {"q-disc"}) == "q-ident"

    def test_exhausted(self):
        table = CategoryTable(three_question_kb(), "cat", CFG)
        state = normalize_prior([1, 1])
        asked = set(table.question_ids)
        ranking = rank_questions(table, state, asked, "entropy-paper")
        assert ranking.entries == ()
        with pytest.raises(ExhaustedQuestionsError):
            select_question("entropy-paper", ranking, state, asked)

    def test_random_mode_is_seeded(self):
        table = CategoryTable(three_question_kb(), "cat", CFG)
        state = normalize_prior([1, 1])
        one = RankingPolicy("random", seed=42)
        two = RankingPolicy("random", seed=42)
        picks_one = [one.choose(table, state, set()) for _ in range(10)]
        picks_two = [two.choose(table, state, set()) for _ in range(10)]
        assert picks_one == picks_two

    def test_unknown_mode_rejected(self):
        table = CategoryTable(three_question_kb(), "cat", CFG)
        state = normalize_prior([1, 1])
        with pytest.raises(ConfigurationError):
            rank_questions(table, state, set(), "entropy-quantum")
        with pytest.raises(ConfigurationError):
            make_policy("entropy-quantum")
        with pytest.raises(ConfigurationError):
            make_policy("learned")  # needs a network


class TestLearnedSelection:
    def _table_and_net(self, seed=0):
        table = CategoryTable(three_question_kb(), "cat", CFG)
        m, n = table.size, len(table.question_ids)
        net = init_network((m + n, 8, n), "masked-softmax",
                           np.random.default_rng(seed))
        return table, net

    def test_policy_input_layout(self):
        table, _ = self._table_and_net()
        state = normalize_prior([3, 1])
        x = policy_input(table, state, {"q-flat"})
        assert x.tolist() == [0.75, 0.25, 0.0, 1.0, 0.0]

    def test_deterministic_argmax(self):
        table, net = self._table_and_net()
        state = normalize_prior([1, 1])
        policy = LearnedPolicy(net, deterministic=True)
        assert (policy.choose(table, state, set())
                == policy.choose(table, state, set()))

    def test_seeded_sampling_reproducible(self):
        table, net = self._table_and_net()
        state = normalize_prior([1, 1])
        one = [LearnedPolicy(net, seed=5).choose(table, state, set())
               for _ in range(5)]
        two = [LearnedPolicy(net, seed=5).choose(table, state, set())
               for _ in range(5)]
        assert one == two

    def test_masking_excludes_asked(self):
        table, net = self._table_and_net()
        state = normalize_prior([1, 1])
        asked = {"q-disc", "q-flat"}
        for seed in range(10):
            pick = sample_learned(net, table, state, asked,
                                  np.random.default_rng(seed))
            assert pick == "q-ident"

    def test_all_asked_raises(self):
        table, net = self._table_and_net()
        state = normalize_prior([1, 1])
        with pytest.raises(ExhaustedQuestionsError):
            sample_learned(net, table, state, set(table.question_ids))
