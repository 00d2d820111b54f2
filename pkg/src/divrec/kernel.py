"""Mexican-hat kernel and the diversity score built on it.

The wavelet here is the unit-peak Ricker form

    psi(t) = (1 - t^2/sigma^2) * exp(-t^2 / (2 sigma^2))

i.e. -sigma^2 times the second derivative of the Gaussian exp(-t^2/(2 sigma^2)).
The diversity score negates it and rescales by the trough depth 2*e^(-3/2) so
that the score peaks at exactly 1.0, reached at distance sqrt(3)*sigma:

    g(d) = -psi(d) / (2 e^(-3/2))

For d < sigma the score is negative (too similar), it crosses zero at d = sigma,
peaks at sqrt(3)*sigma, and decays to zero for remote items. All distances are
expected in normalized [0, 1] units, which is why sigma is clamped to a narrow
working range by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

SQRT3 = math.sqrt(3.0)

#: Depth of the wavelet trough at t = sqrt(3)*sigma; the score normalizer.
PEAK_NORM = 2.0 * math.exp(-1.5)

DEFAULT_SIGMA = 0.2
DEFAULT_THETA = 0.5
DEFAULT_SIGMA_MIN = 0.05
DEFAULT_SIGMA_MAX = 0.5


class Band(str, Enum):
    """Distance bands induced by the score: one label per candidate."""

    SIMILAR = "similar"
    NEAR = "near"
    OPTIMAL = "optimal"
    REMOTE = "remote"


def _check_sigma(sigma: float) -> None:
    if not math.isfinite(sigma) or sigma <= 0.0:
        raise ValueError(f"sigma must be finite and > 0, got {sigma!r}")


def mexican_hat(t: float, sigma: float) -> float:
    """Unit-peak Ricker wavelet: (1 - t^2/sigma^2) * exp(-t^2/(2 sigma^2)).

    Even in t, equals 1 at t=0, crosses zero at |t|=sigma and bottoms out
    at -2*e^(-3/2) when |t|=sqrt(3)*sigma.
    """
    _check_sigma(sigma)
    if not math.isfinite(t):
        raise ValueError(f"t must be finite, got {t!r}")
    r2 = (t * t) / (sigma * sigma)
    return (1.0 - r2) * math.exp(-r2 / 2.0)


def diversity_score(d: float, sigma: float) -> float:
    """Diversity score of an item at distance d: the negated wavelet, peak 1.

    Negative for d < sigma, zero at d = sigma, maximal (exactly 1) at
    d = sqrt(3)*sigma, and decaying toward 0 beyond. Range is
    [-e^(3/2)/2, 1].
    """
    if d < 0.0:
        raise ValueError(f"distance must be >= 0, got {d!r}")
    return -mexican_hat(d, sigma) / PEAK_NORM


def optimal_distance(sigma: float) -> float:
    """Distance at which the diversity score peaks: sqrt(3)*sigma."""
    _check_sigma(sigma)
    return SQRT3 * sigma

def sigma_for_optimal(d_star: float) -> float:
    """Inverse of optimal_distance: the sigma whose score peaks at d_star."""
    if not math.isfinite(d_star) or d_star <= 0.0:
        raise ValueError(f"d_star must be finite and > 0, got {d_star!r}")
    return d_star / SQRT3


def clamp_sigma(sigma: float, lo: float = DEFAULT_SIGMA_MIN,
                hi: float = DEFAULT_SIGMA_MAX) -> float:
    """Clamp sigma into the working range [lo, hi]."""
    if not (0.0 < lo <= hi):
        raise ValueError(f"bad clamp bounds [{lo}, {hi}]")
    return min(max(sigma, lo), hi)


@dataclass(frozen=True)
class KernelParams:
    """Kernel configuration: the diversity radius sigma and band threshold theta.

    sigma must already lie within [sigma_min, sigma_max]; callers that accept
    user-supplied values clamp first (see clamp_sigma).
    """

    sigma: float
    theta: float = DEFAULT_THETA
    sigma_min: float = DEFAULT_SIGMA_MIN
    sigma_max: float = DEFAULT_SIGMA_MAX

    def __post_init__(self) -> None:
        if not (0.0 < self.sigma_min <= self.sigma_max):
            raise ValueError(f"bad sigma bounds [{self.sigma_min}, {self.sigma_max}]")
        if not math.isfinite(self.sigma) or not (self.sigma_min <= self.sigma <= self.sigma_max):
            raise ValueError(
                f"sigma {self.sigma!r} outside clamp bounds "
                f"[{self.sigma_min}, {self.sigma_max}]"
            )
        if not (0.0 < self.theta <= 1.0):
            raise ValueError(f"theta must be in (0, 1], got {self.theta!r}")

    @property
    def optimal(self) -> float:
        """The distance of optimum diversity for this sigma."""
        return optimal_distance(self.sigma)

    def with_sigma(self, sigma: float) -> "KernelParams":
        """Copy with a new sigma, clamped into this instance's bounds."""
        return KernelParams(
            sigma=clamp_sigma(sigma, self.sigma_min, self.sigma_max),
            theta=self.theta,
            sigma_min=self.sigma_min,
            sigma_max=self.sigma_max,
        )


def band_classify(d: float, params: KernelParams) -> Band:
    """Classify a distance into exactly one band.

    Similar: d < sigma (negative score). Optimal: score >= theta. Near:
    between sigma and the peak but under theta. Remote: past the peak and
    under theta. The d = sigma boundary lands in Near (score is 0 < theta).
    """
    if d < 0.0:
        raise ValueError(f"distance must be >= 0, got {d!r}")
    if d < params.sigma:
        return Band.SIMILAR
    if diversity_score(d, params.sigma) >= params.theta:
        return Band.OPTIMAL
    if d < SQRT3 * params.sigma:
        return Band.NEAR
    return Band.REMOTE
