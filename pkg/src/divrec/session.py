"""Per-user session state: the adaptive diversity radius, feedback log, and
file-backed persistence.

Feedback on *bold* recommendations (items outside the similarity core) moves
sigma multiplicatively: a reject shrinks it by (1 - eta), an accept grows it
by (1 + eta), always clamped to the working range. Feedback on non-bold items
is logged but leaves sigma untouched.

A session is one line-oriented file in the store directory: a version header,
a metadata record, then one record per event, so saves stay append-friendly
and loads replay the log.
"""

from __future__ import annotations

import json
import logging
import math
import re
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DivrecError
from .kernel import (
    Band,
    DEFAULT_SIGMA,
    DEFAULT_SIGMA_MAX,
    DEFAULT_SIGMA_MIN,
    DEFAULT_THETA,
    KernelParams,
    clamp_sigma,
)
from .recommender import Recommendation, SeedProfile

logger = logging.getLogger(__name__)

FORMAT_HEADER = "divrec-session 1"

VERDICTS = ("accept", "reject")

_SESSION_ID_RE = re.compile(r"^[A-Za-z0-9_-]+$")


class SessionNotFoundError(DivrecError):
    pass


class SessionDecodeError(DivrecError):
    """Corrupted session file; names the offending line and byte offset."""


class FeedbackError(DivrecError):
    """Feedback for an item never recommended to this session."""


@dataclass(frozen=True)
class SessionDefaults:
    sigma: float = DEFAULT_SIGMA
    eta: float = 0.1
    sigma_min: float = DEFAULT_SIGMA_MIN
    sigma_max: float = DEFAULT_SIGMA_MAX
    theta: float = DEFAULT_THETA


@dataclass(frozen=True)
class FeedbackEvent:
    item_id: str
    verdict: str
    bold: bool
    timestamp: float
    sigma_after: float


@dataclass
class UserSession:
    session_id: str
    profile: SeedProfile
    sigma: float
    eta: float = 0.1
    sigma_min: float = DEFAULT_SIGMA_MIN
    sigma_max: float = DEFAULT_SIGMA_MAX
    theta: float = DEFAULT_THETA
    created_at: float = 0.0
    sigma0: float = 0.0  # sigma at creation, kept for persistence replay
    feedback_log: list[FeedbackEvent] = field(default_factory=list)
    recommended: dict[str, bool] = field(default_factory=dict)  # item id -> bold
    last_recommendations: list[Recommendation] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.sigma0 == 0.0:
            self.sigma0 = self.sigma

    @property
    def params(self) -> KernelParams:
        return KernelParams(sigma=self.sigma, theta=self.theta,
                            sigma_min=self.sigma_min, sigma_max=self.sigma_max)


def adapt_sigma(sigma: float, bold: bool, verdict: str, eta: float,
                lo: float, hi: float) -> float:
    """The single adaptation rule shared by sessions and the simulator."""
    if verdict not in VERDICTS:
        raise ValueError(f"verdict must be one of {VERDICTS}, got {verdict!r}")
    if not bold:
        return sigma
    factor = 1.0 - eta if verdict == "reject" else 1.0 + eta
    return clamp_sigma(sigma * factor, lo, hi)


def create_session(profile: SeedProfile, defaults: SessionDefaults | None = None,
                   sigma: float | None = None, session_id: str | None = None,
                   created_at: float | None = None) -> UserSession:
    """New session with the default (or explicitly requested, clamped) sigma."""
    defaults = defaults or SessionDefaults()
    requested = defaults.sigma if sigma is None else sigma
    if not math.isfinite(requested) or requested <= 0:
        raise ValueError(f"sigma must be finite and > 0, got {requested!r}")
    clamped = clamp_sigma(requested, defaults.sigma_min, defaults.sigma_max)
    if clamped != requested:
        logger.warning("sigma %.6g clamped to %.6g (bounds [%g, %g])",
                       requested, clamped, defaults.sigma_min, defaults.sigma_max)
    if not (0.0 < defaults.eta < 1.0):
        raise ValueError(f"eta must be in (0, 1), got {defaults.eta!r}")
    return UserSession(
        session_id=session_id or uuid.uuid4().hex,
        profile=profile,
        sigma=clamped,
        eta=defaults.eta,
        sigma_min=defaults.sigma_min,
        sigma_max=defaults.sigma_max,
        theta=defaults.theta,
        created_at=time.time() if created_at is None else created_at,
    )


def record_recommendations(session: UserSession, recs: list[Recommendation]) -> None:
    """Remember what was shown: the cumulative bold map for feedback lookups
    and the latest full list so clients can rebuild their view."""
    for rec in recs:
        session.recommended[rec.item_id] = rec.bold
    session.last_recommendations = list(recs)


def apply_feedback(session: UserSession, item_id: str, verdict: str,
                   timestamp: float | None = None) -> UserSession:
    """Apply one accept/reject; adapts sigma only for bold items.

    The bold flag comes from the recommendation record, not the caller.
    Raises FeedbackError when the item was never recommended to this session.
    """
    if verdict not in VERDICTS:
        raise ValueError(f"verdict must be one of {VERDICTS}, got {verdict!r}")
    if item_id not in session.recommended:
        raise FeedbackError(f"item {item_id!r} was never recommended in this session")
    bold = session.recommended[item_id]
    session.sigma = adapt_sigma(session.sigma, bold, verdict, session.eta,
                                session.sigma_min, session.sigma_max)
    session.feedback_log.append(FeedbackEvent(
        item_id=item_id, verdict=verdict, bold=bold,
        timestamp=time.time() if timestamp is None else timestamp,
        sigma_after=session.sigma,
    ))
    return session


def _profile_to_json(profile: SeedProfile) -> dict:
    if profile.seed_ids is not None:
        return {"seed_ids": list(profile.seed_ids)}
    return {"target": [float(x) for x in profile.target],
            "target_doc_ids": list(profile.target_doc_ids)}


def _profile_from_json(data: dict) -> SeedProfile:
    if "seed_ids" in data:
        return SeedProfile(seed_ids=tuple(data["seed_ids"]))
    return SeedProfile(target=np.asarray(data["target"], dtype=np.float64),
                       target_doc_ids=tuple(data.get("target_doc_ids", ())))


def _session_path(store: Path, session_id: str) -> Path:
    if not _SESSION_ID_RE.match(session_id):
        raise SessionNotFoundError(f"invalid session id {session_id!r}")
    return Path(store) / f"{session_id}.jsonl"


def save_session(store: Path, session: UserSession) -> Path:
    """Write the session file atomically; returns its path."""
    store = Path(store)
    store.mkdir(parents=True, exist_ok=True)
    path = _session_path(store, session.session_id)
    lines = [FORMAT_HEADER]
    meta = {
        "session_id": session.session_id,
        "created_at": session.created_at,
        "sigma0": session.sigma0,
        "eta": session.eta,
        "sigma_min": session.sigma_min,
        "sigma_max": session.sigma_max,
        "theta": session.theta,
        "profile": _profile_to_json(session.profile),
    }
    lines.append(json.dumps(meta))
    recommended_order = list(session.recommended.items())
    lines.append(json.dumps({"event": "recommended",
                             "items": [[i, b] for i, b in recommended_order]}))
    if session.last_recommendations:
        lines.append(json.dumps({"event": "last_list", "items": [
            [r.item_id, r.distance, r.raw_score, r.adjusted_score,
             r.band.value, r.bold, r.rank]
            for r in session.last_recommendations]}))
    for ev in session.feedback_log:
        lines.append(json.dumps({
            "event": "feedback", "item_id": ev.item_id, "verdict": ev.verdict,
            "bold": ev.bold, "timestamp": ev.timestamp, "sigma_after": ev.sigma_after,
        }))
    tmp = path.with_suffix(".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    tmp.replace(path)
    return path


def load_session(store: Path, session_id: str) -> UserSession:
    """Reconstruct a session by replaying its file; errors name the offset."""
    path = _session_path(Path(store), session_id)
    if not path.exists():
        raise SessionNotFoundError(f"no session {session_id!r}")
    raw = path.read_bytes()
    lines = raw.splitlines()
    offset = 0

    def fail(lineno: int, message: str) -> SessionDecodeError:
        return SessionDecodeError(
            f"session {session_id!r}: line {lineno} (byte offset {offset}): {message}")

    if not lines or lines[0].decode("utf-8", "replace").strip() != FORMAT_HEADER:
        raise fail(1, f"missing header {FORMAT_HEADER!r}")
    offset = len(lines[0]) + 1
    if len(lines) < 2:
        raise fail(2, "missing metadata record")
    try:
        meta = json.loads(lines[1])
        session = UserSession(
            session_id=str(meta["session_id"]),
            profile=_profile_from_json(meta["profile"]),
            sigma=float(meta["sigma0"]),
            eta=float(meta["eta"]),
            sigma_min=float(meta["sigma_min"]),
            sigma_max=float(meta["sigma_max"]),
            theta=float(meta["theta"]),
            created_at=float(meta["created_at"]),
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise fail(2, f"bad metadata: {exc}") from None
    offset += len(lines[1]) + 1
    for lineno, raw_line in enumerate(lines[2:], start=3):
        if not raw_line.strip():
            offset += len(raw_line) + 1
            continue
        try:
            event = json.loads(raw_line)
            kind = event["event"]
            if kind == "recommended":
                for item_id, bold in event["items"]:
                    session.recommended[str(item_id)] = bool(bold)
            elif kind == "last_list":
                session.last_recommendations = [
                    Recommendation(item_id=str(row[0]), distance=float(row[1]),
                                   raw_score=float(row[2]), adjusted_score=float(row[3]),
                                   band=Band(row[4]), bold=bool(row[5]),
                                   rank=int(row[6]))
                    for row in event["items"]]
            elif kind == "feedback":
                ev = FeedbackEvent(
                    item_id=str(event["item_id"]),
                    verdict=str(event["verdict"]),
                    bold=bool(event["bold"]),
                    timestamp=float(event["timestamp"]),
                    sigma_after=float(event["sigma_after"]),
                )
                if ev.verdict not in VERDICTS:
                    raise ValueError(f"bad verdict {ev.verdict!r}")
                session.feedback_log.append(ev)
                session.sigma = ev.sigma_after
            else:
                raise ValueError(f"unknown event kind {kind!r}")
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise fail(lineno, f"bad event record: {exc}") from None
        offset += len(raw_line) + 1
    return session


def list_sessions(store: Path) -> list[str]:
    store = Path(store)
    if not store.is_dir():
        return []
    return sorted(p.stem for p in store.glob("*.jsonl"))
