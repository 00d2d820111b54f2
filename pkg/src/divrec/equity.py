"""Exposure tracking, under-exposure boosting, and fairness metrics.

The ledger counts how often each item has been *recommended* (not accepted).
Under-exposure is normalized by the current maximum count, so a fresh ledger
treats every item as maximally under-exposed, and the boost multiplies only
positive diversity scores: items the kernel deems too similar are never
promoted, equity only reorders the genuinely diverse candidates.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from .errors import DivrecError

DEFAULT_LAMBDA = 0.25


class UnknownItemError(DivrecError):
    """Exposure recorded or queried for an id outside the ledger universe."""


class ExposureLedger:
    """Per-item recommendation counts over a fixed id universe."""

    def __init__(self, item_ids: Iterable[str]):
        self._counts: dict[str, int] = {item_id: 0 for item_id in item_ids}
        self.total: int = 0

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._counts

    def __len__(self) -> int:
        return len(self._counts)

    def count(self, item_id: str) -> int:
        try:
            return self._counts[item_id]
        except KeyError:
            raise UnknownItemError(f"unknown item {item_id!r}") from None

    def record(self, ids: Iterable[str]) -> None:
        """Increment each listed id once per occurrence."""
        ids = list(ids)
        for item_id in ids:
            if item_id not in self._counts:
                raise UnknownItemError(f"unknown item {item_id!r}")
        for item_id in ids:
            self._counts[item_id] += 1
            self.total += 1

    def max_count(self) -> int:
        return max(self._counts.values(), default=0)

    def snapshot(self) -> dict[str, int]:
        """Copy of the counts map, for metrics on a consistent view."""
        return dict(self._counts)

    def counts(self) -> list[int]:
        return list(self._counts.values())


def record_exposure(ledger: ExposureLedger, ids: Iterable[str]) -> ExposureLedger:
    """Record one exposure per listed id; returns the ledger for chaining."""
    ledger.record(ids)
    return ledger


def underexposure(item_id: str, ledger: ExposureLedger) -> float:
    """1 - count/max_count in [0, 1]; 1 for every item on a fresh ledger."""
    count = ledger.count(item_id)
    c_max = ledger.max_count()
    if c_max == 0:
        return 1.0
    return 1.0 - count / c_max


def equity_adjust(score: float, u: float, lam: float) -> float:
    """Boost a positive score by (1 + lam*u); non-positive scores pass through."""
    if not (0.0 <= u <= 1.0):
        raise ValueError(f"underexposure must be in [0, 1], got {u!r}")
    if not math.isfinite(lam) or lam < 0.0:
        raise ValueError(f"lambda must be finite and >= 0, got {lam!r}")
    if score > 0.0:
        return score * (1.0 + lam * u)
    return score


def gini_from_counts(counts: Sequence[int]) -> float:
    """Gini coefficient of a count distribution (zeros included), in [0, 1]."""
    n = len(counts)
    total = sum(counts)
    if n == 0 or total == 0:
        return 0.0
    acc = 0
    for i, c in enumerate(sorted(counts), start=1):
        acc += (2 * i - n - 1) * c
    return acc / (n * total)


def gini(ledger: ExposureLedger) -> float:
    """Exposure concentration: 0 for perfectly even exposure."""
    return gini_from_counts(ledger.counts())


def coverage(ledger: ExposureLedger) -> float:
    """Fraction of the ledger universe with at least one exposure."""
    if len(ledger) == 0:
        return 0.0
    exposed = sum(1 for c in ledger.counts() if c > 0)
    return exposed / len(ledger)
