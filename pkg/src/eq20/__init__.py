"""Explainable twenty-questions engine for cybersecurity concepts."""

from .belief import (MAX_TURNS, BeliefState, CategoryTable, SmoothingConfig,
                     TurnRecord, aggregate_likelihood, answer_likelihood,
                     entropy, normalize_prior, probability_jump, state_delta,
                     update_belief)
from .errors import Eq20Error
from .explain import Explanation, generate_explanation, pivotal_pair, trace_report
from .kb import (Category, Concept, KnowledgeBase, MatrixCell, Question,
                 dump_kb, load_kb, load_kb_file, parse_kb,
                 record_answer_frequency, serialize_kb, validate_identifiability)
from .ranking import (POLICY_KINDS, RANKING_MODES, QuestionRanking, make_policy,
                      rank_questions, select_question)
from .session import (GameSession, SessionConfig, SessionResult, get_result,
                      replay_transcript, start_session, submit_answer,
                      transcript_text)

__version__ = "0.1.0"

STARTER_KB = "starter_kb.json"
TRAINING_DRILL_KB = "training_drill.json"


def builtin_kb_path(name: str = STARTER_KB):
    """Filesystem path of a knowledge base shipped inside the package."""
    from importlib.resources import files

    return files("eq20.data").joinpath(name)


def load_builtin_kb(name: str = STARTER_KB) -> KnowledgeBase:
    return load_kb(builtin_kb_path(name).read_text(encoding="utf-8"))
