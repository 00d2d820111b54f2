"""Document embedding and ring retrieval for the scientific-library mode.

Documents are embedded with sublinear tf-idf and a seeded random projection
(entries +-1/sqrt(k)), then L2-normalized, so the whole pipeline is
deterministic given (corpus order, k, seed). When k equals the vocabulary
size the projection is skipped (identity mode) so tests can reason about raw
tf-idf geometry. Externally produced vectors can be ingested instead via
load_vectors.

Ring retrieval scores corpus vectors against a target either by the
diversity kernel (mode "diverse") or by plain similarity 1-d
(mode "similar"), with distance d = (1 - cos)/2 on unit vectors.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DivrecError, ValidationFailure, ValidationReport
from .kernel import KernelParams, diversity_score

_TOKEN_SPLIT = re.compile(r"[^a-z0-9]+")

_DOC_FIELDS = {"id", "title", "text", "discipline_tag"}


class EmbeddingError(DivrecError):
    """Vocabulary too small, or other embedding-stage failure."""


class DegenerateTargetError(DivrecError):
    """Seed vectors cancel out; no usable target direction."""


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    text: str
    discipline_tag: str | None = None


@dataclass(frozen=True, eq=False)
class DocVector:
    """A document's unit-norm embedding."""

    id: str
    vector: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])


@dataclass(frozen=True)
class EmbeddingResult:
    vectors: tuple[DocVector, ...]
    skipped: tuple[tuple[str, str], ...] = ()  # (doc id, reason)


class RingHit(NamedTuple):
    id: str
    distance: float
    score: float


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop tokens shorter than 2 chars."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if len(t) >= 2]


def unit_cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """(1 - cos)/2 for unit vectors, clamped into [0, 1].

    Equal vectors short-circuit to exactly 0; dot-product rounding would
    otherwise leave ~1e-16 residue.
    """
    if a is b or np.array_equal(a, b):
        return 0.0
    cos = float(np.dot(a, b))
    cos = max(-1.0, min(1.0, cos))
    return max(0.0, (1.0 - cos) / 2.0)


def build_vectors(corpus: Sequence[Document], k: int, seed: int) -> EmbeddingResult:
    """Embed a corpus into k dimensions; deterministic given (order, k, seed).

    tf = 1 + ln(count), idf = ln(N/df) over the embeddable documents.
    Documents with no tokens (or a zero tf-idf vector) are skipped and listed
    in the result's skip report. Raises EmbeddingError when the vocabulary is
    smaller than k.
    """
    if not corpus:
        raise EmbeddingError("corpus is empty")
    if k < 1:
        raise EmbeddingError(f"k must be >= 1, got {k}")
    token_lists: list[tuple[Document, list[str]]] = []
    skipped: list[tuple[str, str]] = []
    for doc in corpus:
        tokens = tokenize(doc.text)
        if not tokens:
            skipped.append((doc.id, "empty-text"))
        else:
            token_lists.append((doc, tokens))
    if not token_lists:
        raise EmbeddingError("no embeddable documents (all empty after tokenization)")
    vocab = sorted({t for _, tokens in token_lists for t in tokens})
    if len(vocab) < k:
        raise EmbeddingError(f"vocabulary size {len(vocab)} smaller than k={k}")
    index = {term: i for i, term in enumerate(vocab)}
    n_docs = len(token_lists)
    df = np.zeros(len(vocab), dtype=np.float64)
    for _, tokens in token_lists:
        for term in set(tokens):
            df[index[term]] += 1.0
    idf = np.log(n_docs / df)
    tfidf = np.zeros((n_docs, len(vocab)), dtype=np.float64)
    for row, (_, tokens) in enumerate(token_lists):
        counts: dict[str, int] = {}
        for term in tokens:
            counts[term] = counts.get(term, 0) + 1
        for term, count in counts.items():
            col = index[term]
            tfidf[row, col] = (1.0 + math.log(count)) * idf[col]
    if k == len(vocab):
        projected = tfidf
    else:
        rng = np.random.default_rng(seed)
        signs = rng.integers(0, 2, size=(len(vocab), k)).astype(np.float64)
        matrix = (2.0 * signs - 1.0) / math.sqrt(k)
        projected = tfidf @ matrix
    vectors: list[DocVector] = []
    for row, (doc, _) in enumerate(token_lists):
        norm = float(np.linalg.norm(projected[row]))
        if norm == 0.0:
            skipped.append((doc.id, "zero-vector"))
            continue
        vectors.append(DocVector(id=doc.id, vector=projected[row] / norm))
    return EmbeddingResult(vectors=tuple(vectors), skipped=tuple(skipped))


def seed_target(seeds: Sequence[DocVector | np.ndarray]) -> np.ndarray:
    """Normalized centroid of the seed vectors; the retrieval target."""
    if not seeds:
        raise DegenerateTargetError("no seed vectors")
    arrays = [s.vector if isinstance(s, DocVector) else np.asarray(s, dtype=np.float64)
              for s in seeds]
    dim = arrays[0].shape[0]
    for a in arrays:
        if a.shape != (dim,):
            raise EmbeddingError("seed vectors must share one dimension")
    mean = np.mean(arrays, axis=0)
    norm = float(np.linalg.norm(mean))
    if norm == 0.0:
        raise DegenerateTargetError("seed vectors cancel out (zero centroid)")
    return mean / norm


def ring_retrieve(target: np.ndarray, corpus_vectors: Sequence[DocVector],
                  params: KernelParams, k: int, mode: str = "diverse",
                  exclude: Iterable[str] = ()) -> list[RingHit]:
    """Top-k corpus hits around the target, by diversity or plain similarity.

    Ties break toward smaller distance, then lexicographic id. Excluded ids
    (normally the seed papers) never appear. An empty post-exclusion corpus
    yields an empty result.
    """
    if mode not in ("diverse", "similar"):
        raise ValueError(f"mode must be 'diverse' or 'similar', got {mode!r}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    target = np.asarray(target, dtype=np.float64)
    excluded = set(exclude)
    hits: list[RingHit] = []
    for dv in corpus_vectors:
        if dv.id in excluded:
            continue
        if dv.vector.shape != target.shape:
            raise EmbeddingError(
                f"dimension mismatch: target {target.shape[0]} vs {dv.id!r} {dv.dim}")
        d = unit_cosine_distance(target, dv.vector)
        if mode == "diverse":
            score = diversity_score(d, params.sigma)
        else:
            score = 1.0 - d
        hits.append(RingHit(id=dv.id, distance=d, score=score))
    hits.sort(key=lambda h: (-h.score, h.distance, h.id))
    return hits[:k]


def load_corpus(source) -> list[Document]:
    """Parse a line-delimited corpus (id, title, text, optional discipline_tag)."""
    from .catalog import _byte_lines, _decode_json_line  # shared line machinery

    report = ValidationReport()
    docs: list[Document] = []
    seen: set[str] = set()
    saw_line = False
    for lineno, raw in enumerate(_byte_lines(source), start=1):
        if not raw.strip():
            continue
        saw_line = True
        record = _decode_json_line(raw, lineno, report)
        if record is None:
            continue
        unknown = set(record) - _DOC_FIELDS
        if unknown:
            report.add("unknown-field", f"unknown fields: {sorted(unknown)}", line=lineno)
            continue
        doc_id = record.get("id")
        text = record.get("text")
        if not isinstance(doc_id, str) or not doc_id:
            report.add("missing-field", "id must be a non-empty string", line=lineno)
            continue
        if not isinstance(text, str):
            report.add("missing-field", "text must be a string", line=lineno, item_id=doc_id)
            continue
        title = record.get("title", "")
        tag = record.get("discipline_tag")
        if not isinstance(title, str) or (tag is not None and not isinstance(tag, str)):
            report.add("bad-type", "title/discipline_tag must be strings",
                       line=lineno, item_id=doc_id)
            continue
        if doc_id in seen:
            report.add("duplicate-id", f"id {doc_id!r} already defined",
                       line=lineno, item_id=doc_id)
            continue
        seen.add(doc_id)
        docs.append(Document(id=doc_id, title=title, text=text, discipline_tag=tag))
    if not saw_line:
        report.add("empty-corpus", "empty corpus")
    if not report.ok:
        raise ValidationFailure(report)
    return docs


def load_vectors(source) -> list[DocVector]:
    """Parse an externally produced vectors file; normalizes every row."""
    from .catalog import _byte_lines, _decode_json_line

    report = ValidationReport()
    out: list[DocVector] = []
    seen: set[str] = set()
    dim: int | None = None
    saw_line = False
    for lineno, raw in enumerate(_byte_lines(source), start=1):
        if not raw.strip():
            continue
        saw_line = True
        record = _decode_json_line(raw, lineno, report)
        if record is None:
            continue
        doc_id = record.get("id")
        values = record.get("vector")
        if not isinstance(doc_id, str) or not doc_id:
            report.add("missing-field", "id must be a non-empty string", line=lineno)
            continue
        if (not isinstance(values, list) or not values
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                           for v in values)):
            report.add("bad-vector", "vector must be a non-empty numeric array",
                       line=lineno, item_id=doc_id)
            continue
        if any(not math.isfinite(v) for v in values):
            report.add("non-finite", "vector has a non-finite entry", line=lineno,
                       item_id=doc_id)
            continue
        if set(record) - {"id", "vector"}:
            report.add("unknown-field",
                       f"unknown fields: {sorted(set(record) - {'id', 'vector'})}",
                       line=lineno, item_id=doc_id)
            continue
        if doc_id in seen:
            report.add("duplicate-id", f"id {doc_id!r} already defined",
                       line=lineno, item_id=doc_id)
            continue
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            report.add("dimension-mismatch",
                       f"vector has dimension {len(values)}, expected {dim}",
                       line=lineno, item_id=doc_id)
            continue
        arr = np.asarray(values, dtype=np.float64)
        norm = float(np.linalg.norm(arr))
        if norm == 0.0:
            report.add("bad-vector", "zero vector cannot be normalized",
                       line=lineno, item_id=doc_id)
            continue
        seen.add(doc_id)
        out.append(DocVector(id=doc_id, vector=arr / norm))
    if not saw_line:
        report.add("empty-corpus", "empty vectors file")
    if not report.ok:
        raise ValidationFailure(report)
    return out


def dump_vectors(vectors: Sequence[DocVector]) -> str:
    """Serialize vectors to the line-delimited vectors format."""
    lines = []
    for dv in vectors:
        lines.append(json.dumps({"id": dv.id, "vector": [float(x) for x in dv.vector]}))
    return "\n".join(lines) + ("\n" if lines else "")
