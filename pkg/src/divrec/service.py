"""HTTP service binding the engine for the web client and for batch use.

One process, in-memory catalog, file-backed sessions. Scoring state is
immutable after startup except the exposure ledgers (single serialized
writer) and per-session files (one writer per session at a time; calls for
the same session are serialized, distinct sessions proceed independently).

Endpoints (JSON bodies, numbers serialized with full round-trip precision):

    GET  /health                      -> {status, items, version}
    GET  /items?prefix=&limit=        -> {items: [{id, title, artist, genre_id}]}
    POST /sessions                    -> {session_id, sigma}
    GET  /sessions/{id}               -> {session_id, sigma, recommendations}
    POST /sessions/{id}/recommend     -> {recommendations: [...], sigma}
    POST /sessions/{id}/feedback      -> {sigma_before, sigma_after}
    GET  /metrics/equity              -> {gini, coverage, total_exposures}

The GET session view returns the last list that was served without mutating
anything, so a reloading client reproduces its view from server state.

Errors use {"error": {"code", "message"}} with conventional status codes:
404 session-not-found, 409 item-not-recommended, 400 for bad references,
422 invalid-request. Retry semantics per endpoint: session creation is safe
to retry (an orphan session is harmless); recommend and feedback mutate
state (exposure counts, sigma), so clients must serialize them per session
and must not blind-retry; the bundled client enforces one in-flight mutating
call per session.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .catalog import Catalog, load_catalog, load_distance_config, load_genre_graph
from .equity import DEFAULT_LAMBDA, ExposureLedger, coverage, gini, gini_from_counts
from .errors import DivrecError, ValidationFailure
from .kernel import (
    DEFAULT_SIGMA,
    DEFAULT_SIGMA_MAX,
    DEFAULT_SIGMA_MIN,
    DEFAULT_THETA,
)
from .recommender import Recommendation, SeedProfile, recommend, recommend_vectors
from .session import (
    FeedbackError,
    SessionDefaults,
    SessionNotFoundError,
    UserSession,
    apply_feedback,
    create_session,
    load_session,
    record_recommendations,
    save_session,
)
from .textemb import DocVector, build_vectors, load_corpus, load_vectors, seed_target

logger = logging.getLogger(__name__)

DEFAULT_K = 10


class ConfigError(DivrecError):
    """Unusable service configuration; message carries a startup error code."""


@dataclass(frozen=True)
class Defaults:
    sigma: float = DEFAULT_SIGMA
    eta: float = 0.1
    boost: float = DEFAULT_LAMBDA
    theta: float = DEFAULT_THETA
    k: int = DEFAULT_K
    sigma_min: float = DEFAULT_SIGMA_MIN
    sigma_max: float = DEFAULT_SIGMA_MAX
    embed_dim: int = 64
    embed_seed: int = 7

    def session_defaults(self) -> SessionDefaults:
        return SessionDefaults(sigma=self.sigma, eta=self.eta,
                               sigma_min=self.sigma_min, sigma_max=self.sigma_max,
                               theta=self.theta)


@dataclass(frozen=True)
class ServiceConfig:
    catalog_path: Path
    session_store_path: Path
    listen: str = "127.0.0.1:8642"
    genre_graph_path: Path | None = None
    distance_config_path: Path | None = None
    vectors_path: Path | None = None
    corpus_path: Path | None = None
    ui_dir: Path | None = None
    defaults: Defaults = field(default_factory=Defaults)


def load_service_config(path: Path) -> ServiceConfig:
    """Parse the service config file (a single JSON object)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config-unreadable: {exc}") from None
    if not isinstance(doc, dict) or "catalog" not in doc or "session_store" not in doc:
        raise ConfigError("config-invalid: need at least catalog and session_store")
    base = Path(path).parent

    def resolve(key):
        return (base / doc[key]).resolve() if key in doc and doc[key] else None

    raw_defaults = doc.get("defaults", {})
    known = {"sigma", "eta", "lambda", "theta", "k", "sigma_min", "sigma_max",
             "embed_dim", "embed_seed"}
    unknown = set(raw_defaults) - known
    if unknown:
        raise ConfigError(f"config-invalid: unknown defaults {sorted(unknown)}")
    defaults = Defaults(
        sigma=raw_defaults.get("sigma", DEFAULT_SIGMA),
        eta=raw_defaults.get("eta", 0.1),
        boost=raw_defaults.get("lambda", DEFAULT_LAMBDA),
        theta=raw_defaults.get("theta", DEFAULT_THETA),
        k=raw_defaults.get("k", DEFAULT_K),
        sigma_min=raw_defaults.get("sigma_min", DEFAULT_SIGMA_MIN),
        sigma_max=raw_defaults.get("sigma_max", DEFAULT_SIGMA_MAX),
        embed_dim=raw_defaults.get("embed_dim", 64),
        embed_seed=raw_defaults.get("embed_seed", 7),
    )
    return ServiceConfig(
        catalog_path=resolve("catalog"),
        session_store_path=(base / doc["session_store"]).resolve(),
        listen=doc.get("listen", "127.0.0.1:8642"),
        genre_graph_path=resolve("genre_graph"),
        distance_config_path=resolve("distance_config"),
        vectors_path=resolve("vectors"),
        corpus_path=resolve("corpus"),
        ui_dir=resolve("ui"),
        defaults=defaults,
    )


def _check_defaults(defaults: Defaults) -> None:
    """Fail at startup, not first request, when configured defaults are unusable."""
    from .kernel import KernelParams, clamp_sigma

    try:
        if defaults.k < 1:
            raise ValueError(f"k must be >= 1, got {defaults.k}")
        if not (0.0 < defaults.eta < 1.0):
            raise ValueError(f"eta must be in (0, 1), got {defaults.eta}")
        if defaults.boost < 0.0:
            raise ValueError(f"lambda must be >= 0, got {defaults.boost}")
        if defaults.embed_dim < 1:
            raise ValueError(f"embed_dim must be >= 1, got {defaults.embed_dim}")
        KernelParams(
            sigma=clamp_sigma(defaults.sigma, defaults.sigma_min, defaults.sigma_max),
            theta=defaults.theta, sigma_min=defaults.sigma_min,
            sigma_max=defaults.sigma_max)
    except ValueError as exc:
        raise ConfigError(f"config-invalid: {exc}") from None


class Engine:
    """Owns the loaded catalog, vectors, ledgers, and session store."""

    def __init__(self, catalog: Catalog, store: Path,
                 defaults: Defaults | None = None,
                 doc_vectors: list[DocVector] | None = None,
                 doc_titles: dict | None = None):
        self.catalog = catalog
        self.store = Path(store)
        self.defaults = defaults or Defaults()
        _check_defaults(self.defaults)
        self.doc_vectors = list(doc_vectors or [])
        self.doc_titles = dict(doc_titles or {})
        self.music_ledger = ExposureLedger(catalog.ids())
        self.doc_ledger = (ExposureLedger([v.id for v in self.doc_vectors])
                           if self.doc_vectors else None)
        self._ledger_lock = threading.Lock()
        self._sessions: dict[str, UserSession] = {}
        self._session_locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    @classmethod
    def from_config(cls, config: ServiceConfig) -> "Engine":
        try:
            graph = (load_genre_graph(config.genre_graph_path)
                     if config.genre_graph_path else None)
            criteria, calibration = ((), None)
            if config.distance_config_path:
                criteria, calibration = load_distance_config(config.distance_config_path)
            catalog = load_catalog(config.catalog_path, criteria=criteria,
                                   genre_graph=graph, calibration=calibration)
        except FileNotFoundError as exc:
            raise ConfigError(f"catalog-unreadable: {exc}") from None
        except ValidationFailure as exc:
            raise ConfigError(f"catalog-invalid:\n{exc.report.render()}") from None
        doc_vectors: list[DocVector] = []
        doc_titles: dict = {}
        try:
            if config.vectors_path:
                doc_vectors = load_vectors(config.vectors_path)
            if config.corpus_path:
                docs = load_corpus(config.corpus_path)
                doc_titles = {d.id: d.title for d in docs}
                if not doc_vectors:
                    result = build_vectors(docs, k=config.defaults.embed_dim,
                                           seed=config.defaults.embed_seed)
                    doc_vectors = list(result.vectors)
                    for doc_id, reason in result.skipped:
                        logger.warning("document %s skipped: %s", doc_id, reason)
        except FileNotFoundError as exc:
            raise ConfigError(f"corpus-unreadable: {exc}") from None
        except ValidationFailure as exc:
            raise ConfigError(f"corpus-invalid:\n{exc.report.render()}") from None
        return cls(catalog=catalog, store=config.session_store_path,
                   defaults=config.defaults, doc_vectors=doc_vectors,
                   doc_titles=doc_titles)

    # -- sessions ---------------------------------------------------------

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._session_locks.setdefault(session_id, threading.Lock())

    def _get_session(self, session_id: str) -> UserSession:
        if session_id not in self._sessions:
            self._sessions[session_id] = load_session(self.store, session_id)
        return self._sessions[session_id]

    def create_session(self, seed_ids: list[str] | None,
                       target_doc_ids: list[str] | None,
                       sigma: float | None = None) -> UserSession:
        if (seed_ids is None) == (target_doc_ids is None):
            raise ValueError("exactly one of seed_ids or target_doc_ids is required")
        if seed_ids is not None:
            for item_id in seed_ids:
                if item_id not in self.catalog.items:
                    raise KeyError(f"unknown item {item_id!r}")
            profile = SeedProfile.from_seed_ids(seed_ids)
        else:
            if not self.doc_vectors:
                raise ConfigError("no-doc-vectors: service has no document corpus")
            by_id = {v.id: v for v in self.doc_vectors}
            missing = [d for d in target_doc_ids if d not in by_id]
            if missing:
                raise KeyError(f"unknown document {missing[0]!r}")
            target = seed_target([by_id[d] for d in target_doc_ids])
            profile = SeedProfile.from_target(target, target_doc_ids=target_doc_ids)
        session = create_session(profile, self.defaults.session_defaults(), sigma=sigma)
        with self._lock_for(session.session_id):
            self._sessions[session.session_id] = session
            save_session(self.store, session)
        return session

    def recommend_for(self, session_id: str, k: int, mode: str,
                      boost: float | None = None) -> tuple[list[Recommendation], float, UserSession]:
        boost = self.defaults.boost if boost is None else boost
        with self._lock_for(session_id):
            session = self._get_session(session_id)
            params = session.params
            if session.profile.seed_ids is not None:
                with self._ledger_lock:
                    recs = recommend(self.catalog, session.profile, params, boost,
                                     self.music_ledger, k, mode)
            else:
                if not self.doc_vectors:
                    raise ConfigError("no-doc-vectors: service has no document corpus")
                with self._ledger_lock:
                    recs = recommend_vectors(self.doc_vectors, session.profile, params,
                                             boost, self.doc_ledger, k, mode)
            record_recommendations(session, recs)
            save_session(self.store, session)
            return recs, session.sigma, session

    def session_view(self, session_id: str) -> tuple[list[Recommendation], float]:
        """Read-only snapshot: the last served list plus current sigma."""
        with self._lock_for(session_id):
            session = self._get_session(session_id)
            return list(session.last_recommendations), session.sigma

    def feedback_for(self, session_id: str, item_id: str,
                     verdict: str) -> tuple[float, float]:
        with self._lock_for(session_id):
            session = self._get_session(session_id)
            sigma_before = session.sigma
            apply_feedback(session, item_id, verdict)
            save_session(self.store, session)
            return sigma_before, session.sigma

    # -- read endpoints -----------------------------------------------------

    def list_items(self, prefix: str = "", limit: int = 20) -> list[dict]:
        prefix_lower = prefix.lower()
        out = []
        for item in self.catalog.items.values():
            if (item.id.lower().startswith(prefix_lower)
                    or item.title.lower().startswith(prefix_lower)
                    or item.artist.lower().startswith(prefix_lower)):
                out.append({"id": item.id, "title": item.title,
                            "artist": item.artist, "genre_id": item.genre_id})
            if len(out) >= limit:
                break
        return out

    def equity_metrics(self) -> dict:
        with self._ledger_lock:
            counts = self.music_ledger.counts()
            total = self.music_ledger.total
            exposed = sum(1 for c in counts if c > 0)
            universe = len(counts)
            if self.doc_ledger is not None:
                doc_counts = self.doc_ledger.counts()
                counts = counts + doc_counts
                total += self.doc_ledger.total
                exposed += sum(1 for c in doc_counts if c > 0)
                universe += len(doc_counts)
        return {
            "gini": gini_from_counts(counts),
            "coverage": (exposed / universe) if universe else 0.0,
            "total_exposures": total,
        }

    def rec_payload(self, rec: Recommendation) -> dict:
        item = self.catalog.items.get(rec.item_id)
        if item is not None:
            title, artist = item.title, item.artist
        else:
            title, artist = self.doc_titles.get(rec.item_id, rec.item_id), ""
        return {
            "item_id": rec.item_id,
            "title": title,
            "artist": artist,
            "distance": rec.distance,
            "raw_score": rec.raw_score,
            "adjusted_score": rec.adjusted_score,
            "band": rec.band.value,
            "bold": rec.bold,
            "rank": rec.rank,
        }


# -- request/response models --------------------------------------------------

class CreateSessionBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    seed_ids: list[str] | None = None
    target_doc_ids: list[str] | None = None
    sigma: float | None = None


class RecommendBody(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)
    k: int | None = Field(default=None, ge=1, le=1000)
    mode: str = "diverse"
    boost: float | None = Field(default=None, ge=0.0, alias="lambda")


class FeedbackBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    item_id: str
    verdict: str


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"code": code, "message": message}})


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="divrec", version=__version__, docs_url=None, redoc_url=None)

    # The browser client may be served from another origin during development.
    from fastapi.middleware.cors import CORSMiddleware
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.middleware("http")
    async def request_log(request: Request, call_next):
        start = time.monotonic()
        response = await call_next(request)
        logger.info(json.dumps({
            "method": request.method, "path": request.url.path,
            "status": response.status_code,
            "ms": round((time.monotonic() - start) * 1000, 2),
        }))
        return response

    @app.exception_handler(RequestValidationError)
    async def on_validation(request: Request, exc: RequestValidationError):
        return _error(422, "invalid-request", str(exc.errors()[:3]))

    @app.get("/health")
    def health():
        return {"status": "ok", "items": len(engine.catalog), "version": __version__}

    @app.get("/items")
    def items(prefix: str = Query(default=""), limit: int = Query(default=20, ge=1, le=200)):
        return {"items": engine.list_items(prefix=prefix, limit=limit)}

    @app.post("/sessions")
    def create_session_ep(body: CreateSessionBody):
        try:
            session = engine.create_session(body.seed_ids, body.target_doc_ids,
                                            sigma=body.sigma)
        except KeyError as exc:
            return _error(400, "unknown-item", str(exc))
        except ConfigError as exc:
            return _error(400, "no-doc-vectors", str(exc))
        except (ValueError, DivrecError) as exc:
            return _error(422, "invalid-request", str(exc))
        return {"session_id": session.session_id, "sigma": session.sigma}

    @app.get("/sessions/{session_id}")
    def session_view_ep(session_id: str):
        try:
            recs, sigma = engine.session_view(session_id)
        except SessionNotFoundError as exc:
            return _error(404, "session-not-found", str(exc))
        return {"session_id": session_id, "sigma": sigma,
                "recommendations": [engine.rec_payload(r) for r in recs]}

    @app.post("/sessions/{session_id}/recommend")
    def recommend_ep(session_id: str, body: RecommendBody):
        if body.mode not in ("diverse", "similar"):
            return _error(422, "invalid-request",
                          f"mode must be 'diverse' or 'similar', got {body.mode!r}")
        k = body.k if body.k is not None else engine.defaults.k
        try:
            recs, sigma, _ = engine.recommend_for(session_id, k=k, mode=body.mode,
                                                  boost=body.boost)
        except SessionNotFoundError as exc:
            return _error(404, "session-not-found", str(exc))
        except ConfigError as exc:
            return _error(400, "no-doc-vectors", str(exc))
        return {"recommendations": [engine.rec_payload(r) for r in recs],
                "sigma": sigma}

    @app.post("/sessions/{session_id}/feedback")
    def feedback_ep(session_id: str, body: FeedbackBody):
        try:
            before, after = engine.feedback_for(session_id, body.item_id, body.verdict)
        except SessionNotFoundError as exc:
            return _error(404, "session-not-found", str(exc))
        except FeedbackError as exc:
            return _error(409, "item-not-recommended", str(exc))
        except ValueError as exc:
            return _error(422, "invalid-request", str(exc))
        return {"sigma_before": before, "sigma_after": after}

    @app.get("/metrics/equity")
    def metrics_ep():
        return engine.equity_metrics()

    return app


def build_app(config: ServiceConfig) -> FastAPI:
    """Engine + app from a config, with the optional static UI mounted."""
    engine = Engine.from_config(config)
    app = create_app(engine)
    if config.ui_dir and Path(config.ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=str(config.ui_dir), html=True),
                  name="ui")
    return app


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted; uvicorn handles signal shutdown."""
    import uvicorn

    host, _, port = config.listen.rpartition(":")
    app = build_app(config)
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    except (OSError, SystemExit) as exc:
        raise ConfigError(f"startup-failure: cannot listen on {config.listen}: {exc}") from None
