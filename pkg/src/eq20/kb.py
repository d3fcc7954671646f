"""Knowledge base: categories, concepts, questions, and the reference answer matrix.

The on-disk format is a single JSON document with top-level keys
``version``, ``categories``, ``concepts``, ``questions``, ``cells``.
Parsing is strict: unknown keys anywhere are a hard error, every
same-category (concept, question) pair must have exactly one cell, and
all ids must resolve. Loaded knowledge bases are immutable by contract;
mutation-shaped operations return a new instance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import KBParseError, KBReferenceError, KBValidationError

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Category:
    id: str
    name: str


@dataclass(frozen=True)
class Concept:
    id: str
    name: str
    category: str
    description: str
    prior_weight: float
    keywords: tuple[str, ...]


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    category: str
    options: tuple[tuple[str, str], ...]  # (option id, option text), order is meaningful

    def option_ids(self) -> tuple[str, ...]:
        return tuple(oid for oid, _ in self.options)

    def option_text(self, option_id: str) -> str:
        for oid, text in self.options:
            if oid == option_id:
                return text
        raise KeyError(option_id)


@dataclass(frozen=True)
class MatrixCell:
    concept: str
    question: str
    reference: frozenset[str]
    # frequencies carry one count per option id, zero-filled at load time
    frequencies: tuple[tuple[str, int], ...]

    def frequency(self, option_id: str) -> int:
        for oid, count in self.frequencies:
            if oid == option_id:
                return count
        raise KeyError(option_id)


class KnowledgeBase:
    """Indexed, read-only view over the parsed document."""

    def __init__(self, categories, concepts, questions, cells):
        self.categories = tuple(categories)
        self.concepts = tuple(concepts)
        self.questions = tuple(questions)
        self.cells = tuple(cells)
        self._category_by_id = {c.id: c for c in self.categories}
        self._concept_by_id = {c.id: c for c in self.concepts}
        self._question_by_id = {q.id: q for q in self.questions}
        self._cell_by_pair = {(c.concept, c.question): c for c in self.cells}

    def category(self, category_id: str) -> Category:
        return self._category_by_id[category_id]

    def concept(self, concept_id: str) -> Concept:
        return self._concept_by_id[concept_id]

    def question(self, question_id: str) -> Question:
        return self._question_by_id[question_id]

    def cell(self, concept_id: str, question_id: str) -> MatrixCell:
        return self._cell_by_pair[(concept_id, question_id)]

    def has_category(self, category_id: str) -> bool:
        return category_id in self._category_by_id

    def concepts_in(self, category_id: str) -> tuple[Concept, ...]:
        return tuple(c for c in self.concepts if c.category == category_id)

    def questions_in(self, category_id: str) -> tuple[Question, ...]:
        return tuple(q for q in self.questions if q.category == category_id)


def _require_keys(obj: dict, allowed: set[str], required: set[str], path: str) -> None:
    if not isinstance(obj, dict):
        raise KBParseError(f"{path}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise KBParseError(f"{path}: unknown key(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise KBParseError(f"{path}: missing key(s) {sorted(missing)}")


def _require_str(value, path: str) -> str:
    if not isinstance(value, str) or not value:
        raise KBParseError(f"{path}: expected a non-empty string")
    return value


def _parse_category(obj, path):
    _require_keys(obj, {"id", "name"}, {"id", "name"}, path)
    return Category(id=_require_str(obj["id"], f"{path}.id"),
                    name=_require_str(obj["name"], f"{path}.name"))


def _parse_concept(obj, path):
    allowed = {"id", "name", "category", "description", "prior_weight", "keywords"}
    _require_keys(obj, allowed, allowed - {"prior_weight", "keywords"}, path)
    weight = obj.get("prior_weight", 1.0)
    if not isinstance(weight, (int, float)) or isinstance(weight, bool) or weight < 0:
        raise KBParseError(f"{path}.prior_weight: expected a number >= 0")
    keywords = obj.get("keywords", [])
    if not isinstance(keywords, list) or any(not isinstance(k, str) for k in keywords):
        raise KBParseError(f"{path}.keywords: expected a list of strings")
    for k in keywords:
        if k != k.lower():
            raise KBParseError(f"{path}.keywords: {k!r} must be lowercase")
    return Concept(
        id=_require_str(obj["id"], f"{path}.id"),
        name=_require_str(obj["name"], f"{path}.name"),
        category=_require_str(obj["category"], f"{path}.category"),
        description=_require_str(obj["description"], f"{path}.description"),
        prior_weight=float(weight),
        keywords=tuple(keywords),
    )


def _parse_question(obj, path):
    allowed = {"id", "text", "category", "options"}
    _require_keys(obj, allowed, allowed, path)
    options = obj["options"]
    if not isinstance(options, list) or len(options) < 2:
        raise KBParseError(f"{path}.options: expected a list of at least 2 options")
    parsed = []
    seen = set()
    for i, opt in enumerate(options):
        opath = f"{path}.options[{i}]"
        _require_keys(opt, {"id", "text"}, {"id", "text"}, opath)
        oid = _require_str(opt["id"], f"{opath}.id")
        if oid in seen:
            raise KBParseError(f"{opath}.id: duplicate option id {oid!r}")
        seen.add(oid)
        parsed.append((oid, _require_str(opt["text"], f"{opath}.text")))
    return Question(
        id=_require_str(obj["id"], f"{path}.id"),
        text=_require_str(obj["text"], f"{path}.text"),
        category=_require_str(obj["category"], f"{path}.category"),
        options=tuple(parsed),
    )


def _parse_cell(obj, path):
    allowed = {"concept", "question", "reference", "frequencies"}
    _require_keys(obj, allowed, {"concept", "question", "reference"}, path)
    reference = obj["reference"]
    if not isinstance(reference, list) or not reference:
        raise KBParseError(f"{path}.reference: expected a non-empty list of option ids")
    for r in reference:
        if not isinstance(r, str):
            raise KBParseError(f"{path}.reference: expected strings")
    if len(set(reference)) != len(reference):
        raise KBParseError(f"{path}.reference: duplicate option ids")
    freqs = obj.get("frequencies", {})
    if not isinstance(freqs, dict):
        raise KBParseError(f"{path}.frequencies: expected an object")
    for oid, count in freqs.items():
        if not isinstance(count, int) or isinstance(count, bool) or count < 0:
            raise KBParseError(f"{path}.frequencies.{oid}: expected an integer >= 0")
    return (
        _require_str(obj["concept"], f"{path}.concept"),
        _require_str(obj["question"], f"{path}.question"),
        tuple(reference),
        dict(freqs),
    )


def parse_kb(document: dict) -> KnowledgeBase:
    """Build a validated KnowledgeBase from an already-parsed JSON document."""
    top = {"version", "categories", "concepts", "questions", "cells"}
    _require_keys(document, top, top, "document")
    if document["version"] != FORMAT_VERSION:
        raise KBParseError(f"document.version: expected {FORMAT_VERSION}, "
                           f"got {document['version']!r}")
    for key in ("categories", "concepts", "questions", "cells"):
        if not isinstance(document[key], list):
            raise KBParseError(f"document.{key}: expected a list")

    categories = [_parse_category(o, f"categories[{i}]")
                  for i, o in enumerate(document["categories"])]
    concepts = [_parse_concept(o, f"concepts[{i}]")
                for i, o in enumerate(document["concepts"])]
    questions = [_parse_question(o, f"questions[{i}]")
                 for i, o in enumerate(document["questions"])]
    raw_cells = [_parse_cell(o, f"cells[{i}]")
                 for i, o in enumerate(document["cells"])]

    for name, items in (("categories", categories), ("concepts", concepts),
                        ("questions", questions)):
        ids = [x.id for x in items]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise KBValidationError(f"{name}: duplicate id(s) {dupes}")

    category_ids = {c.id for c in categories}
    concept_by_id = {c.id: c for c in concepts}
    question_by_id = {q.id: q for q in questions}

    for c in concepts:
        if c.category not in category_ids:
            raise KBReferenceError(f"concept {c.id!r}: unknown category {c.category!r}")
    for q in questions:
        if q.category not in category_ids:
            raise KBReferenceError(f"question {q.id!r}: unknown category {q.category!r}")

    cells = []
    seen_pairs = set()
    for i, (concept_id, question_id, reference, freqs) in enumerate(raw_cells):
        path = f"cells[{i}]"
        if concept_id not in concept_by_id:
            raise KBReferenceError(f"{path}: unknown concept {concept_id!r}")
        if question_id not in question_by_id:
            raise KBReferenceError(f"{path}: unknown question {question_id!r}")
        concept = concept_by_id[concept_id]
        question = question_by_id[question_id]
        if concept.category != question.category:
            raise KBValidationError(f"{path}: concept {concept_id!r} and question "
                                    f"{question_id!r} are in different categories")
        pair = (concept_id, question_id)
        if pair in seen_pairs:
            raise KBValidationError(f"{path}: duplicate cell for {pair}")
        seen_pairs.add(pair)
        option_ids = question.option_ids()
        for r in reference:
            if r not in option_ids:
                raise KBReferenceError(f"{path}.reference: unknown option {r!r} "
                                       f"for question {question_id!r}")
        for oid in freqs:
            if oid not in option_ids:
                raise KBReferenceError(f"{path}.frequencies: unknown option {oid!r} "
                                       f"for question {question_id!r}")
        frequencies = tuple((oid, int(freqs.get(oid, 0))) for oid in option_ids)
        cells.append(MatrixCell(concept=concept_id, question=question_id,
                                reference=frozenset(reference),
                                frequencies=frequencies))

    for pair in ((c.id, q.id) for c in concepts for q in questions
                 if c.category == q.category):
        if pair not in seen_pairs:
            raise KBValidationError(f"missing cell for concept/question pair {pair}")

    for cat in categories:
        n_concepts = sum(1 for c in concepts if c.category == cat.id)
        n_questions = sum(1 for q in questions if q.category == cat.id)
        if n_concepts < 2:
            raise KBValidationError(f"category {cat.id!r}: needs at least 2 concepts, "
                                    f"has {n_concepts}")
        if n_questions < 1:
            raise KBValidationError(f"category {cat.id!r}: needs at least 1 question")

    return KnowledgeBase(categories, concepts, questions, cells)


def load_kb(text: str) -> KnowledgeBase:
    """Parse a JSON knowledge-base document from text."""
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise KBParseError(f"invalid JSON: {exc}") from exc
    return parse_kb(document)


def load_kb_file(path) -> KnowledgeBase:
    with open(path, "r", encoding="utf-8") as fh:
        return load_kb(fh.read())


def serialize_kb(kb: KnowledgeBase) -> dict:
    """Render a knowledge base back into its document form.

    Reference option ids are emitted in question option order so that
    load -> serialize -> load is a fixed point field for field.
    """
    def cell_doc(cell):
        question = kb.question(cell.question)
        doc = {
            "concept": cell.concept,
            "question": cell.question,
            "reference": [oid for oid in question.option_ids() if oid in cell.reference],
        }
        freqs = {oid: count for oid, count in cell.frequencies if count}
        if freqs:
            doc["frequencies"] = freqs
        return doc

    return {
        "version": FORMAT_VERSION,
        "categories": [{"id": c.id, "name": c.name} for c in kb.categories],
        "concepts": [{
            "id": c.id, "name": c.name, "category": c.category,
            "description": c.description, "prior_weight": c.prior_weight,
            "keywords": list(c.keywords),
        } for c in kb.concepts],
        "questions": [{
            "id": q.id, "text": q.text, "category": q.category,
            "options": [{"id": oid, "text": text} for oid, text in q.options],
        } for q in kb.questions],
        "cells": [cell_doc(c) for c in kb.cells],
    }


def dump_kb(kb: KnowledgeBase) -> str:
    return json.dumps(serialize_kb(kb), indent=2) + "\n"


def validate_identifiability(kb: KnowledgeBase, category_id: str) -> list[tuple[str, str]]:
    """List concept pairs whose reference answers agree on every question.

    An empty list means every concept in the category can in principle be
    told apart by reference answers alone.
    """
    concepts = kb.concepts_in(category_id)
    questions = kb.questions_in(category_id)
    clashes = []
    for i, first in enumerate(concepts):
        for second in concepts[i + 1:]:
            if all(kb.cell(first.id, q.id).reference == kb.cell(second.id, q.id).reference
                   for q in questions):
                clashes.append((first.id, second.id))
    return clashes


def record_answer_frequency(kb: KnowledgeBase, concept_id: str, question_id: str,
                            option_id: str) -> KnowledgeBase:
    """Return a new knowledge base with one historical answer count bumped."""
    cell = kb.cell(concept_id, question_id)  # KeyError on unknown pair
    if option_id not in kb.question(question_id).option_ids():
        raise KBReferenceError(f"unknown option {option_id!r} for question {question_id!r}")
    bumped = MatrixCell(
        concept=cell.concept,
        question=cell.question,
        reference=cell.reference,
        frequencies=tuple((oid, count + 1 if oid == option_id else count)
                          for oid, count in cell.frequencies),
    )
    cells = tuple(bumped if c is cell else c for c in kb.cells)
    return KnowledgeBase(kb.categories, kb.concepts, kb.questions, cells)
