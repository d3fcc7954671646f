"""HTTP facade: sessions over JSON for the web client and other callers.

Sessions live in memory behind deterministic counter ids, expire on a TTL,
and serialize concurrent access per session. Every 4xx body carries one of
the fixed machine-readable codes so clients can branch without parsing
message text.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from .errors import (EmptySelectionError, Eq20Error, SessionError,
                     UnknownCategoryError)
from .kb import KnowledgeBase, Question, record_answer_frequency
from .nets import load_network
from .ranking import LearnedPolicy, RANKING_MODES
from .session import (AWAITING, GameSession, IDENTIFIED, SessionConfig,
                      start_session, submit_answer)

API_PREFIX = "/api/v1"

STATUS_BY_CODE = {
    "SESSION_CLOSED": 409,
    "SESSION_NOT_FOUND": 404,
    "OUT_OF_ORDER": 409,
    "INVALID_OPTION": 400,
    "UNKNOWN_CATEGORY": 404,
    "VALIDATION": 400,
}


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    kb_path: str | None = None
    model_dir: str | None = None
    session_ttl: float = 3600.0
    record_frequencies: bool = False
    log_path: str | None = None
    default_policy: str = "entropy-paper"
    confidence_threshold: float = 0.8
    max_turns: int = 20


class ServiceHTTPError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        self.message = message
        super().__init__(message)


class StartRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    description: str
    category: str | None = None
    policy: str | None = None


class AnswerRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    question_id: str
    option_ids: list[str]


@dataclass
class StoredSession:
    session: GameSession
    deadline: float
    lock: threading.Lock


class SessionStore:
    """TTL-bounded session registry with per-session locks."""

    def __init__(self, ttl: float):
        self.ttl = ttl
        self._lock = threading.Lock()
        self._sessions: dict[str, StoredSession] = {}
        self._counter = 0

    def next_id(self) -> str:
        with self._lock:
            self._counter += 1
            return f"s-{self._counter:06d}"

    def put(self, session: GameSession) -> None:
        with self._lock:
            self._sessions[session.id] = StoredSession(
                session=session, deadline=time.monotonic() + self.ttl,
                lock=threading.Lock())

    def get(self, session_id: str) -> StoredSession:
        with self._lock:
            stored = self._sessions.get(session_id)
            now = time.monotonic()
            if stored is not None and stored.deadline < now:
                del self._sessions[session_id]
                stored = None
            if stored is None:
                raise ServiceHTTPError("SESSION_NOT_FOUND",
                                       f"no session {session_id!r}")
            stored.deadline = now + self.ttl
            return stored


def _question_payload(question: Question) -> dict:
    return {"id": question.id, "text": question.text,
            "options": [{"id": oid, "text": text}
                        for oid, text in question.options]}


def _belief_payload(session: GameSession, k: int = 5) -> list[dict]:
    return [{"concept": cid, "prob": prob}
            for cid, prob in session.belief_top(k)]


def _result_payload(session: GameSession) -> dict:
    result = session.result
    explanation = result.explanation
    kb = session.kb
    trace = []
    for row in explanation.trace:
        question = kb.question(row.question_id)
        answer = " and ".join(question.option_text(oid) for oid in row.selected)
        trace.append({"question": question.text, "answer": answer,
                      "jump": row.jump})
    return {"concept": result.concept, "name": result.name,
            "confidence": result.confidence, "status": result.status,
            "explanation": explanation.text, "trace": trace}


def create_app(kb: KnowledgeBase, cfg: ServiceConfig | None = None) -> FastAPI:
    cfg = cfg or ServiceConfig()
    app = FastAPI(title="eq20", docs_url=None, redoc_url=None,
                  openapi_url=None)
    store = SessionStore(cfg.session_ttl)
    state = {"kb": kb}
    policy_net = None
    if cfg.model_dir is not None:
        policy_path = Path(cfg.model_dir) / "policy.net"
        if policy_path.exists():
            policy_net = load_network(policy_path)
    log_lock = threading.Lock()

    def log_event(event: str, **payload) -> None:
        if cfg.log_path is None:
            return
        record = {"ts": time.time(), "event": event, **payload}
        with log_lock:
            with open(cfg.log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record) + "\n")

    def error_response(code: str, message: str) -> JSONResponse:
        return JSONResponse(status_code=STATUS_BY_CODE.get(code, 400),
                            content={"error": {"code": code,
                                               "message": message}})

    @app.exception_handler(ServiceHTTPError)
    async def on_service_error(request: Request, exc: ServiceHTTPError):
        return error_response(exc.code, exc.message)

    @app.exception_handler(SessionError)
    async def on_session_error(request: Request, exc: SessionError):
        return error_response(exc.code, str(exc))

    @app.exception_handler(EmptySelectionError)
    async def on_empty_selection(request: Request, exc: EmptySelectionError):
        return error_response("VALIDATION", str(exc))

    @app.exception_handler(Eq20Error)
    async def on_engine_error(request: Request, exc: Eq20Error):
        return error_response("VALIDATION", str(exc))

    @app.exception_handler(RequestValidationError)
    async def on_request_error(request: Request, exc: RequestValidationError):
        return error_response("VALIDATION", str(exc.errors()))

    @app.exception_handler(404)
    async def on_unknown_route(request: Request, exc):
        return JSONResponse(status_code=404,
                            content={"error": {"code": "VALIDATION",
                                               "message": "unknown route"}})

    def resolve_policy(requested: str | None) -> tuple[str, object | None, bool]:
        """Map the request's policy name to (kind, policy object, fell_back)."""
        kind = requested or cfg.default_policy
        if kind == "learned":
            if policy_net is not None:
                return kind, LearnedPolicy(policy_net, deterministic=True), False
            return "entropy-paper", None, True
        if kind not in RANKING_MODES:
            raise ServiceHTTPError("VALIDATION", f"unknown policy {kind!r}")
        return kind, None, False

    @app.post(API_PREFIX + "/sessions", status_code=201)
    def create_session(body: StartRequest):
        current_kb: KnowledgeBase = state["kb"]
        category = body.category or current_kb.categories[0].id
        if not current_kb.has_category(category):
            raise UnknownCategoryError(f"unknown category {category!r}")
        kind, policy, fell_back = resolve_policy(body.policy)
        session_cfg = SessionConfig(
            category=category, policy_kind=kind,
            confidence_threshold=cfg.confidence_threshold,
            max_turns=cfg.max_turns)
        session, question = start_session(current_kb, body.description,
                                          session_cfg, policy=policy,
                                          session_id=store.next_id())
        store.put(session)
        log_event("session_started", session=session.id, category=category,
                  policy=kind)
        payload = {"session_id": session.id,
                   "question": _question_payload(question),
                   "belief_top": _belief_payload(session)}
        headers = {"X-Policy-Fallback": "entropy-paper"} if fell_back else None
        return JSONResponse(status_code=201, content=payload, headers=headers)

    @app.post(API_PREFIX + "/sessions/{session_id}/answers")
    def answer(session_id: str, body: AnswerRequest):
        stored = store.get(session_id)
        with stored.lock:
            session = stored.session
            outcome = submit_answer(session, body.question_id, body.option_ids)
            log_event("answer", session=session.id,
                      question=body.question_id, options=body.option_ids)
            if isinstance(outcome, Question):
                return {"question": _question_payload(outcome),
                        "belief_top": _belief_payload(session)}
            log_event("closed", session=session.id, status=session.status,
                      concept=outcome.concept)
            if cfg.record_frequencies and session.status == IDENTIFIED:
                updated = state["kb"]
                for question_id, selected in session.transcript:
                    for oid in selected:
                        updated = record_answer_frequency(
                            updated, outcome.concept, question_id, oid)
                state["kb"] = updated
            return {"result": _result_payload(session)}

    @app.get(API_PREFIX + "/sessions/{session_id}")
    def snapshot(session_id: str):
        stored = store.get(session_id)
        with stored.lock:
            session = stored.session
            payload = {"session_id": session.id,
                       "category": session.cfg.category,
                       "status": session.status,
                       "turn": session.belief.turn,
                       "belief_top": _belief_payload(session)}
            if session.status == AWAITING:
                payload["question"] = _question_payload(session.pending_question())
            else:
                payload["result"] = _result_payload(session)
            return payload

    @app.get(API_PREFIX + "/sessions/{session_id}/explanation")
    def explanation(session_id: str):
        stored = store.get(session_id)
        with stored.lock:
            session = stored.session
            if session.status == AWAITING:
                raise ServiceHTTPError("OUT_OF_ORDER",
                                       "the session is still taking answers")
            return {"result": _result_payload(session)}

    @app.get(API_PREFIX + "/kb/concepts")
    def concepts():
        current_kb: KnowledgeBase = state["kb"]
        return {"concepts": [{"id": c.id, "name": c.name,
                              "category": c.category,
                              "description": c.description}
                             for c in current_kb.concepts]}

    @app.get(API_PREFIX + "/kb/categories")
    def categories():
        current_kb: KnowledgeBase = state["kb"]
        return {"categories": [{"id": c.id, "name": c.name,
                                "concepts": len(current_kb.concepts_in(c.id)),
                                "questions": len(current_kb.questions_in(c.id))}
                               for c in current_kb.categories]}

    return app


def serve(kb: KnowledgeBase, cfg: ServiceConfig) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(kb, cfg), host=cfg.host, port=cfg.port,
                log_level="info")
