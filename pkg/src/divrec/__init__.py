"""divrec: diversity-first recommendations.

Scores candidates on a Mexican-hat curve over a multi-criteria distance, so
items that are neither near-duplicates nor alien land on top; steers the
ranking toward under-exposed items; adapts each user's diversity radius from
accept/reject feedback; and embeds document corpora for cross-disciplinary
retrieval. Ships as a library, CLI, HTTP service, and evaluation simulator.
"""

__version__ = "0.1.0"

from .errors import DivrecError, Issue, ValidationFailure, ValidationReport
from .kernel import (
    Band,
    KernelParams,
    band_classify,
    clamp_sigma,
    diversity_score,
    mexican_hat,
    optimal_distance,
    sigma_for_optimal,
)
from .distance import (
    CalibrationMap,
    CriterionKind,
    CriterionSpec,
    combined_distance,
    criterion_distance,
    genre_graph_distance,
)
from .catalog import (
    Catalog,
    GenreGraph,
    Item,
    dump_catalog,
    dump_genre_graph,
    load_catalog,
    load_distance_config,
    load_genre_graph,
)
from .equity import (
    ExposureLedger,
    coverage,
    equity_adjust,
    gini,
    gini_from_counts,
    record_exposure,
    underexposure,
)
from .textemb import (
    DocVector,
    Document,
    RingHit,
    build_vectors,
    load_corpus,
    load_vectors,
    ring_retrieve,
    seed_target,
    tokenize,
)
from .recommender import (
    Recommendation,
    SeedProfile,
    profile_distance,
    recommend,
    recommend_vectors,
)
from .session import (
    SessionDefaults,
    UserSession,
    apply_feedback,
    create_session,
    load_session,
    save_session,
)
from .simulator import PopulationSpec, evaluate_policies, run_simulation

__all__ = [name for name in dir() if not name.startswith("_")]
