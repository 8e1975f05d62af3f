"""HTTP/JSON session service: drives one acquisition loop per session with a
human (or scripted client) playing the oracle.

The acquisition loop runs on a session-owned thread and blocks on an answer
channel whenever it needs an oracle reply; HTTP handlers feed that channel.
This keeps the algorithm literally sequential while the service stays
responsive across sessions.
"""

from __future__ import annotations

import queue
import threading
import uuid
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from conacq.acquisition import CollapseError, GuidedLayers, Layer, Oracle, Session
from conacq.benchmarks import BUILTIN_NAMES, generate_benchmark
from conacq.core import Assignment, Constraint, ValidationError
from conacq.learning import ClassifierKind
from conacq.problem import (
    ParseError,
    constraint_to_dict,
    parse_problem,
    render_var,
    serialize_problem,
)

MAX_SESSIONS = 64

_METHOD_KINDS = {
    "base": None,
    "count": ClassifierKind.COUNTING,
    "gnb": ClassifierKind.GNB,
    "rf": ClassifierKind.RF,
}

_INFIX = {
    "GEQ": ">=", "LEQ": "<=", "LT": "<", "GT": ">", "NEQ": "!=", "EQ": "==",
}


def render_constraint(c: Constraint) -> str:
    a, b = (render_var(v) for v in c.scope)
    if c.kind.name == "FLOORDIV_NEQ":
        return f"{a} // {c.param} != {b} // {c.param}"
    return f"{a} {_INFIX[c.kind.name]} {b}"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status, self.code, self.message = status, code, message


class _ChannelOracle(Oracle):
    """Blocks the acquisition thread until an answer arrives over HTTP."""

    def __init__(self, live: "LiveSession"):
        self.live = live

    def ask(self, e: Assignment) -> bool:
        return self.live._await_answer(e)


class _ServiceSession(Session):
    """Stashes the current layer so the pending-query payload can report it."""

    def ask(self, e, layer):
        self.oracle._layer = layer  # type: ignore[attr-defined]
        return super().ask(e, layer)


class LiveSession:
    def __init__(self, voc, language, method: str, guide: str, seed: int,
                 cutoff: Optional[float]):
        self.id = uuid.uuid4().hex[:12]
        self.cond = threading.Condition()
        self.phase = "GENERATING"
        self.pending: Optional[tuple[int, Assignment, str]] = None
        self._answers: queue.Queue[bool] = queue.Queue(maxsize=1)
        self._next_query_id = 1
        self.error: Optional[str] = None
        oracle = _ChannelOracle(self)
        self.session = _ServiceSession(
            voc, language, oracle,
            guidance=_METHOD_KINDS[method],
            guided_layers=GuidedLayers(guide),
            seed=seed,
            cutoff=cutoff,
        )
        self.thread = threading.Thread(target=self._run, daemon=True)

    def start(self):
        self.thread.start()

    # -- acquisition thread side ---------------------------------------------

    def _run(self):
        try:
            self.session.grow_acquire()
            final = "CONVERGED"
        except CollapseError as exc:
            final, self.error = "COLLAPSED", str(exc)
        except Exception as exc:  # surfaced via GET /sessions/{id}
            final, self.error = "COLLAPSED", f"internal: {exc}"
        with self.cond:
            self.phase = final
            self.pending = None
            self.cond.notify_all()

    def _await_answer(self, e: Assignment) -> bool:
        layer: Layer = getattr(self.session.oracle, "_layer", Layer.TOP)
        with self.cond:
            qid = self._next_query_id
            self._next_query_id += 1
            self.pending = (qid, e, layer.value)
            self.phase = "AWAITING_ANSWER"
            self.cond.notify_all()
        answer = self._answers.get()
        with self.cond:
            self.pending = None
            self.phase = "GENERATING"
            self.cond.notify_all()
        return answer

    # -- HTTP handler side ----------------------------------------------------

    def stats_payload(self) -> dict:
        st = self.session.stats
        return {
            "bias_size": len(self.session.B),
            "learned_size": len(self.session.C_L),
            "queries_total": st.total_queries,
            "queries_by_layer": {k.value: v for k, v in st.queries_by_layer.items()},
            "max_wait_seconds": st.max_wait,
        }

    def query_payload(self) -> dict:
        qid, e, layer = self.pending  # caller holds self.cond
        bindings = [
            {"tensor": v.tensor, "index": list(v.index), "value": e[v]}
            for v in sorted(e.support, key=self.session.voc.ordinal.__getitem__)
        ]
        return {"query_id": qid, "bindings": bindings, "layer": layer,
                "stats": self.stats_payload()}

    def answer(self, query_id: int, yes: bool) -> dict:
        with self.cond:
            if self.phase != "AWAITING_ANSWER" or self.pending is None:
                raise ApiError(409, "CONFLICT", f"session is {self.phase}, not awaiting an answer")
            if self.pending[0] != query_id:
                raise ApiError(409, "STALE_QUERY",
                               f"pending query is {self.pending[0]}, got {query_id}")
            before_b = len(self.session.B)
            before_l = len(self.session.C_L)
            self._answers.put(yes)
            # wait until the loop consumed the answer and reached the next
            # stable point: a strictly newer pending query or a terminal phase
            self.cond.wait_for(
                lambda: self.phase in ("CONVERGED", "COLLAPSED")
                or (self.pending is not None and self.pending[0] > query_id),
                timeout=600,
            )
            return {
                "phase": self.phase,
                "candidates_removed": before_b - len(self.session.B),
                "constraints_learned": len(self.session.C_L) - before_l,
                "stats": self.stats_payload(),
            }


class CreateSessionBody(BaseModel):
    builtin: Optional[str] = None
    problem: Optional[str] = None
    method: str = "base"
    guide: str = "qgen"
    seed: int = 0
    cutoff: Optional[float] = 1.0
    params: dict = {}


class AnswerBody(BaseModel):
    query_id: int
    answer: str  # "yes" | "no"


def _tensor_payload(voc) -> list[dict]:
    return [
        {"name": t.name, "shape": list(t.shape), "lb": t.lower, "ub": t.upper}
        for t in voc.tensors
    ]


def create_app() -> FastAPI:
    app = FastAPI(title="conacq session service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, LiveSession] = {}

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    def _get(sid: str) -> LiveSession:
        live = sessions.get(sid)
        if live is None:
            raise ApiError(404, "NOT_FOUND", f"no session {sid!r}")
        return live

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        if len(sessions) >= MAX_SESSIONS:
            raise ApiError(429, "CAPACITY", "session limit reached")
        if body.method not in _METHOD_KINDS:
            raise ApiError(400, "VALIDATION", f"unknown method {body.method!r}")
        if body.guide not in ("qgen", "all"):
            raise ApiError(400, "VALIDATION", f"unknown guide {body.guide!r}")
        if (body.builtin is None) == (body.problem is None):
            raise ApiError(400, "VALIDATION", "give exactly one of builtin/problem")
        if body.builtin is not None:
            if body.builtin not in BUILTIN_NAMES:
                raise ApiError(400, "VALIDATION", f"unknown builtin {body.builtin!r}")
            bench = generate_benchmark(body.builtin, **body.params)
            voc, language = bench.voc, bench.language
        else:
            try:
                voc, language, _target = parse_problem(body.problem)
            except ParseError as exc:
                raise ApiError(400, "PARSE_ERROR", str(exc))
            except ValidationError as exc:
                raise ApiError(400, "VALIDATION", str(exc))
        live = LiveSession(voc, language, body.method, body.guide,
                           body.seed, body.cutoff)
        sessions[live.id] = live
        live.start()
        return {"id": live.id, "phase": live.phase}

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        live = _get(sid)
        with live.cond:
            out = {
                "id": live.id,
                "phase": live.phase,
                "tensors": _tensor_payload(live.session.voc),
                "stats": live.stats_payload(),
            }
            if live.error:
                out["error"] = live.error
            return out

    @app.get("/sessions/{sid}/query")
    def get_query(sid: str):
        live = _get(sid)
        with live.cond:
            # brief grace for the generator so pollers don't need tight loops
            live.cond.wait_for(lambda: live.phase != "GENERATING", timeout=30)
            if live.phase != "AWAITING_ANSWER" or live.pending is None:
                raise ApiError(409, "CONFLICT", f"session is {live.phase}")
            return live.query_payload()

    @app.post("/sessions/{sid}/answer")
    def post_answer(sid: str, body: AnswerBody):
        if body.answer not in ("yes", "no"):
            raise ApiError(400, "VALIDATION", "answer must be 'yes' or 'no'")
        return _get(sid).answer(body.query_id, body.answer == "yes")

    @app.get("/sessions/{sid}/learned")
    def get_learned(sid: str):
        live = _get(sid)
        with live.cond:
            sess = live.session
            out = []
            for c in sess.C_L:
                row = {"constraint": constraint_to_dict(c), "text": render_constraint(c)}
                if sess.clf is not None:
                    row["probability"] = sess.clf.predict_proba(c)
                out.append(row)
            return out

    @app.get("/sessions/{sid}/snapshot")
    def get_snapshot(sid: str):
        live = _get(sid)
        with live.cond:
            sess = live.session
            return {
                "phase": live.phase,
                "problem": serialize_problem(sess.voc, sess.language, sess.C_L),
                "tensors": _tensor_payload(sess.voc),
                "learned": [constraint_to_dict(c) for c in sess.C_L],
                "stats": live.stats_payload(),
            }

    return app
