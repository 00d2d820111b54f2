"""The scoring pipeline: seed profile -> distances -> diversity kernel ->
equity boost -> deterministic top-k with band and bold labeling.

Ranking is a total order: adjusted score descending, then lower exposure
count, then smaller distance, then item id. Exposure is recorded for the
returned ids exactly once per call. Item popularity is never read.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .catalog import Catalog, Item
from .distance import combined_distance
from .equity import ExposureLedger, equity_adjust, record_exposure, underexposure
from .errors import DivrecError
from .kernel import Band, KernelParams, band_classify, diversity_score
from .textemb import DocVector, unit_cosine_distance

MODES = ("diverse", "similar")


class ProfileError(DivrecError):
    """Invalid seed profile, or an operation applied to the wrong mode."""


@dataclass(frozen=True)
class SeedProfile:
    """What the user starts from: seed items (music mode) or a target vector
    (document mode). Exactly one of the two forms is set."""

    seed_ids: tuple[str, ...] | None = None
    target: np.ndarray | None = None
    target_doc_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if (self.seed_ids is None) == (self.target is None):
            raise ProfileError("profile needs exactly one of seed_ids or target")
        if self.seed_ids is not None and len(self.seed_ids) == 0:
            raise ProfileError("seed_ids must be non-empty")

    @classmethod
    def from_seed_ids(cls, seed_ids: Sequence[str]) -> "SeedProfile":
        return cls(seed_ids=tuple(sorted(set(seed_ids))))

    @classmethod
    def from_target(cls, target: np.ndarray,
                    target_doc_ids: Sequence[str] = ()) -> "SeedProfile":
        return cls(target=np.asarray(target, dtype=np.float64),
                   target_doc_ids=tuple(sorted(set(target_doc_ids))))

    @property
    def excluded_ids(self) -> tuple[str, ...]:
        return self.seed_ids if self.seed_ids is not None else self.target_doc_ids


@dataclass(frozen=True)
class Recommendation:
    item_id: str
    distance: float
    raw_score: float
    adjusted_score: float
    band: Band
    bold: bool
    rank: int


def _target_distance(vector: np.ndarray, target: np.ndarray) -> float:
    return unit_cosine_distance(target, vector)


def profile_distance(item, profile: SeedProfile, catalog: Catalog | None = None) -> float:
    """Distance of a candidate to the profile, in [0, 1].

    Music mode: arithmetic mean of the combined distance to each seed item
    (needs the catalog for criteria and the genre graph). Document mode:
    (1 - cos)/2 between the candidate's unit vector and the target.
    """
    if profile.target is not None:
        vector = item.vector if isinstance(item, DocVector) else np.asarray(item, dtype=np.float64)
        return _target_distance(vector, profile.target)
    if catalog is None:
        raise ProfileError("music-mode profile distance needs the catalog")
    assert profile.seed_ids is not None
    if isinstance(item, Item) and item.id in profile.seed_ids:
        raise ProfileError(f"item {item.id!r} is a seed of this profile")
    acc = 0.0
    for seed_id in profile.seed_ids:
        seed = catalog.item(seed_id)
        acc += combined_distance(item, seed, catalog.criteria,
                                 catalog.calibration, catalog.genre_graph)
    return acc / len(profile.seed_ids)


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def rank_candidates(candidates: Sequence[tuple[str, float]], params: KernelParams,
                    lam: float, ledger: ExposureLedger, k: int,
                    mode: str) -> list[Recommendation]:
    """Score, boost, and deterministically rank (id, distance) candidates.

    Does not record exposure; recommend()/recommend_vectors() do that once
    on the ids they return.
    """
    _check_mode(mode)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scored = []
    for item_id, d in candidates:
        if mode == "diverse":
            raw = diversity_score(d, params.sigma)
        else:
            raw = 1.0 - d
        u = underexposure(item_id, ledger)
        adjusted = equity_adjust(raw, u, lam)
        scored.append((item_id, d, raw, adjusted, ledger.count(item_id)))
    scored.sort(key=lambda row: (-row[3], row[4], row[1], row[0]))
    out = []
    for rank, (item_id, d, raw, adjusted, _count) in enumerate(scored[:k], start=1):
        band = band_classify(d, params)
        out.append(Recommendation(
            item_id=item_id, distance=d, raw_score=raw, adjusted_score=adjusted,
            band=band, bold=(d >= params.sigma), rank=rank,
        ))
    return out


def recommend(catalog: Catalog, profile: SeedProfile, params: KernelParams,
              lam: float, ledger: ExposureLedger, k: int,
              mode: str = "diverse") -> list[Recommendation]:
    """Top-k recommendations from a music catalog; records their exposure."""
    if profile.seed_ids is None:
        raise ProfileError("catalog recommendation needs a seed_ids profile")
    for seed_id in profile.seed_ids:
        catalog.item(seed_id)  # unknown seed -> KeyError naming it
    excluded = set(profile.seed_ids)
    candidates = []
    for item in catalog.items.values():
        if item.id in excluded:
            continue
        candidates.append((item.id, profile_distance(item, profile, catalog)))
    recs = rank_candidates(candidates, params, lam, ledger, k, mode)
    record_exposure(ledger, [r.item_id for r in recs])
    return recs


def recommend_vectors(vectors: Sequence[DocVector], profile: SeedProfile,
                      params: KernelParams, lam: float, ledger: ExposureLedger,
                      k: int, mode: str = "diverse") -> list[Recommendation]:
    """Top-k over an embedded corpus against the profile target; records exposure."""
    if profile.target is None:
        raise ProfileError("vector recommendation needs a target profile")
    excluded = set(profile.target_doc_ids)
    candidates = []
    for dv in vectors:
        if dv.id in excluded:
            continue
        candidates.append((dv.id, _target_distance(dv.vector, profile.target)))
    recs = rank_candidates(candidates, params, lam, ledger, k, mode)
    record_exposure(ledger, [r.item_id for r in recs])
    return recs
