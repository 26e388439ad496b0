"""HTTP front for review sessions.

The service is stateless above its stores: every request loads the
session document from disk, mutates it under a per-session lock, and
writes it back.  Restarting the process loses nothing.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .actlift import action_to_dict
from .bundles import BundleActions, load_bundle_actions
from .cluster import (ClusterError, ClusterSession, DuplicateDecisionError,
                      PendingReviewError, SessionStateError,
                      UnknownBundleError, advance_round, load_session,
                      save_session, submit_label)
from .hunter import finding_to_doc, hunt
from .matrix import MatrixConfig
from .nn import ModelConfig
from .workflow import corpus_by_ref, train_and_embed


class ServiceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ServiceConfig:
    sessions_dir: str
    bundles_path: str
    audit_path: str | None = None
    host: str = "127.0.0.1"
    port: int = 8571
    matrix_config: MatrixConfig = field(default_factory=MatrixConfig)
    model_config: ModelConfig = field(default_factory=ModelConfig)
    cors_origins: tuple[str, ...] = ()
    auth_token: str | None = None
    static_dir: str | None = None


class DecisionBody(BaseModel):
    kind: Literal["known", "new", "dismissed"]
    label: str | None = None


class LabelBody(BaseModel):
    bundle: str
    decision: DecisionBody


class _SessionStore:
    """Disk-backed sessions with one writer lock per session id."""

    def __init__(self, directory: Path) -> None:
        self.directory = directory
        self.directory.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def lock(self, session_id: str) -> threading.Lock:
        with self._guard:
            if session_id not in self._locks:
                self._locks[session_id] = threading.Lock()
            return self._locks[session_id]

    def path(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.json"

    def load(self, session_id: str) -> ClusterSession:
        path = self.path(session_id)
        if not path.exists():
            raise HTTPException(status_code=404,
                                detail=f"unknown session {session_id}")
        return load_session(path)

    def save(self, session_id: str, session: ClusterSession) -> None:
        # Write back to the addressed file, not session.session_id: the
        # two can differ when a session file was copied or renamed, and
        # saving elsewhere would silently fork the state.
        save_session(session, self.path(session_id))


def session_summary(session: ClusterSession) -> dict:
    clusters = {c for c in session.assignments.values() if c >= 0}
    return {
        "session_id": session.session_id,
        "round": session.round,
        "epsilon": session.epsilon,
        "label_set": list(session.label_set),
        "new_labels_this_round": list(session.new_labels_this_round),
        "counts": {
            "corpus": len(session.refs),
            "clusters": len(clusters),
            "pending": len(session.pending_refs()),
            "reviewed": session.reviewed_total,
        },
        "terminal": session.terminal,
        "terminal_reason": session.terminal_reason,
    }


def _transaction_views(ba: BundleActions) -> list[dict]:
    views = []
    for tx in ba.per_tx:
        views.append({
            "hash": "0x" + tx.tx_hash.hex(),
            "sender": tx.sender.hex0x() if tx.sender else None,
            "recipient": tx.recipient.hex0x() if tx.recipient else None,
            "actions": [action_to_dict(a) for a in tx.actions],
        })
    return views


def bundle_view(ba: BundleActions) -> dict:
    return {
        "ref": ba.bundle.ref,
        "block_number": ba.bundle.block_number,
        "bundle_index": ba.bundle.bundle_index,
        "coinbase": ba.bundle.coinbase.hex0x(),
        "transactions": _transaction_views(ba),
        "findings": [finding_to_doc(f) for f in hunt(ba)],
    }


def queue_view(session: ClusterSession,
               bundles: dict[str, BundleActions]) -> dict:
    sizes: dict[int, int] = {}
    for cid in session.assignments.values():
        sizes[cid] = sizes.get(cid, 0) + 1
    items = []
    for item in session.queue:
        entry = {
            "ref": item.ref,
            "cluster": item.cluster,
            "cluster_size": sizes.get(item.cluster, 1) if item.cluster >= 0 else 1,
            "status": item.status,
            "label": item.label,
        }
        ba = bundles.get(item.ref)
        if ba is not None:
            entry.update(bundle_view(ba))
        items.append(entry)
    return {
        "session_id": session.session_id,
        "round": session.round,
        "epsilon": session.epsilon,
        "items": items,
        "pending": len(session.pending_refs()),
        "terminal": session.terminal,
    }


def create_app(config: ServiceConfig) -> FastAPI:
    bundles_path = Path(config.bundles_path)
    if not bundles_path.exists():
        raise ServiceError(f"bundle store not found: {bundles_path}")
    bundles = corpus_by_ref(load_bundle_actions(bundles_path))
    store = _SessionStore(Path(config.sessions_dir))
    app = FastAPI(title="mevlift review service", docs_url=None, redoc_url=None)

    if config.cors_origins:
        app.add_middleware(CORSMiddleware,
                           allow_origins=list(config.cors_origins),
                           allow_methods=["*"], allow_headers=["*"])

    if config.auth_token:
        @app.middleware("http")
        async def check_token(request: Request, call_next):
            if request.url.path.startswith("/api"):
                header = request.headers.get("authorization", "")
                if header != f"Bearer {config.auth_token}":
                    return JSONResponse({"detail": "unauthorized"},
                                        status_code=401)
            return await call_next(request)

    @app.get("/api/session/{session_id}")
    def get_session(session_id: str) -> dict:
        return session_summary(store.load(session_id))

    @app.get("/api/session/{session_id}/queue")
    def get_queue(session_id: str) -> dict:
        return queue_view(store.load(session_id), bundles)

    @app.get("/api/bundle/{block}/{index}")
    def get_bundle(block: int, index: int) -> dict:
        ref = f"{block}/{index}"
        ba = bundles.get(ref)
        if ba is None:
            raise HTTPException(status_code=404, detail=f"unknown bundle {ref}")
        return bundle_view(ba)

    @app.post("/api/session/{session_id}/label")
    def post_label(session_id: str, body: LabelBody) -> dict:
        with store.lock(session_id):
            session = store.load(session_id)
            try:
                submit_label(session, body.bundle, body.decision.kind,
                             body.decision.label, actor="ui",
                             audit_path=config.audit_path)
            except UnknownBundleError as exc:
                raise HTTPException(status_code=404, detail=str(exc)) from None
            except (DuplicateDecisionError, SessionStateError) as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from None
            except ClusterError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from None
            store.save(session_id, session)
        return session_summary(session)

    @app.post("/api/session/{session_id}/advance")
    def post_advance(session_id: str) -> dict:
        with store.lock(session_id):
            session = store.load(session_id)
            try:
                if session.terminal:
                    raise SessionStateError(
                        f"session {session_id} is terminal")
                if session.pending_refs():
                    raise PendingReviewError(
                        f"{len(session.pending_refs())} queue entries "
                        "still pending review")
                corpus = {ref: bundles[ref] for ref in session.refs
                          if ref in bundles}
                missing = [ref for ref in session.refs if ref not in bundles]
                if missing:
                    raise HTTPException(
                        status_code=404,
                        detail=f"bundle store lacks {', '.join(missing[:5])}")
                _, embeddings, _ = train_and_embed(
                    corpus, session.label_set, config.model_config,
                    config.matrix_config)
                advance_round(session, embeddings, corpus)
            except (PendingReviewError, SessionStateError) as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from None
            except ClusterError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from None
            store.save(session_id, session)
        return session_summary(session)

    if config.static_dir and Path(config.static_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.static_dir, html=True),
                  name="ui")

    return app
