"""Shared fixtures: built-in knowledge bases, a tiny-KB factory, and the
seeded random KB generator the oracle tests draw from."""

import numpy as np
import pytest

import eq20
from eq20.kb import parse_kb


@pytest.fixture(scope="session")
def starter_kb():
    return eq20.load_builtin_kb()


@pytest.fixture(scope="session")
def drill_kb():
    return eq20.load_builtin_kb(eq20.TRAINING_DRILL_KB)


def build_kb(concepts, questions, cells, category="cat"):
    """Assemble and parse a one-category KB document.

    concepts: iterable of ids, or (id, prior_weight, keywords) triples.
    questions: iterable of (question_id, [option ids]).
    cells: {(concept_id, question_id): reference list
                                       or (reference list, {option: count})}.
    """
    concept_docs = []
    for entry in concepts:
        if isinstance(entry, str):
            cid, weight, keywords = entry, 1.0, []
        else:
            cid, weight, keywords = entry
        concept_docs.append({
            "id": cid, "name": cid.upper(), "category": category,
            "description": f"Description of {cid}.",
            "prior_weight": weight, "keywords": list(keywords),
        })
    question_docs = [{
        "id": qid, "text": f"Question {qid}?", "category": category,
        "options": [{"id": oid, "text": f"Option {oid} of {qid}"}
                    for oid in option_ids],
    } for qid, option_ids in questions]
    cell_docs = []
    for (cid, qid), value in cells.items():
        if isinstance(value, tuple):
            reference, freqs = value
        else:
            reference, freqs = value, {}
        doc = {"concept": cid, "question": qid, "reference": list(reference)}
        if freqs:
            doc["frequencies"] = dict(freqs)
        cell_docs.append(doc)
    return parse_kb({
        "version": 1,
        "categories": [{"id": category, "name": category.title()}],
        "concepts": concept_docs,
        "questions": question_docs,
        "cells": cell_docs,
    })


def random_kb(rng, with_uniform_question=False):
    """Small random KB: 2-4 concepts, 1-5 questions, 2-3 options each.

    References and historical counts are random. With the flag set, one
    extra question carries identical cells for every concept, so answering
    it can never move the belief.
    """
    m = int(rng.integers(2, 5))
    n = int(rng.integers(1, 6))
    concept_ids = [f"c{i}" for i in range(m)]
    questions = []
    cells = {}
    for j in range(n):
        level = int(rng.integers(2, 4))
        option_ids = [chr(ord("a") + k) for k in range(level)]
        qid = f"q{j}"
        questions.append((qid, option_ids))
        for cid in concept_ids:
            n_ref = int(rng.integers(1, level + 1))
            picks = rng.choice(level, size=n_ref, replace=False)
            reference = [option_ids[int(k)] for k in picks]
            freqs = {oid: int(rng.integers(0, 6)) for oid in option_ids
                     if rng.random() < 0.5}
            cells[(cid, qid)] = (reference, freqs)
    if with_uniform_question:
        option_ids = ["a", "b"]
        questions.append(("q-same", option_ids))
        shared_freqs = {"a": int(rng.integers(0, 4)), "b": int(rng.integers(0, 4))}
        for cid in concept_ids:
            cells[(cid, "q-same")] = (["a"], dict(shared_freqs))
    weights = rng.uniform(0.1, 3.0, size=m)
    concepts = [(cid, float(weights[i]), []) for i, cid in enumerate(concept_ids)]
    return build_kb(concepts, questions, cells)


def random_belief(rng, size):
    raw = rng.uniform(0.05, 1.0, size=size)
    return raw / raw.sum()


# Scripted whole-game fixtures against the starter KB: answers keyed by
# question id, the expected verdict, and the question budget each script
# is allowed to use. Unscripted questions fall back to reference answers.
REPLAY_FIXTURES = {
    "reconnaissance": {
        "category": "kill-chain",
        "text": "",
        "script": {"kc-04": "yes", "kc-05": "no", "kc-06": "yes", "kc-07": "yes"},
        "budget": 4,
    },
    "phishing": {
        "category": "attack-vectors",
        "text": "I received an email asking me to verify my account.",
        "script": {"av-03": "a", "av-04": "a", "av-24": "yes", "av-25": "yes",
                   "av-26": "yes", "av-27": "no", "av-28": "no", "av-29": "yes"},
        "budget": 8,
    },
    "ransomware": {
        "category": "attack-vectors",
        "text": "My computer suddenly showed a message saying my files are "
                "encrypted.",
        "script": {"av-05": "b", "av-07": "a", "av-08": "a", "av-09": "a"},
        "budget": 4,
    },
    "sql-injection": {
        "category": "attack-vectors",
        "text": "Our website started showing strange database errors, and some "
                "user information got exposed after someone entered unusual "
                "characters into the login form.",
        "script": {"av-06": "yes", "av-13": "yes", "av-14": "yes",
                   "av-15": "yes", "av-16": "yes", "av-17": "yes"},
        "budget": 6,
    },
    "xss": {
        "category": "attack-vectors",
        "text": "When a user visits our website, malicious pop-ups appear and "
                "some pages automatically redirect to other websites.",
        "script": {"av-18": "yes", "av-19": "yes", "av-20": "yes",
                   "av-21": "no", "av-22": "no", "av-23": "yes"},
        "budget": 6,
    },
}


def np_rng(seed):
    return np.random.default_rng(seed)
