"""Session adaptation and persistence tests."""

import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from divrec.recommender import Recommendation, SeedProfile
from divrec.kernel import Band
from divrec.session import (
    FeedbackError,
    SessionDecodeError,
    SessionDefaults,
    SessionNotFoundError,
    adapt_sigma,
    apply_feedback,
    create_session,
    list_sessions,
    load_session,
    record_recommendations,
    save_session,
)

PROFILE = SeedProfile.from_seed_ids(["seed-1"])


def rec(item_id: str, bold: bool, distance: float = 0.3) -> Recommendation:
    return Recommendation(item_id=item_id, distance=distance, raw_score=0.9,
                          adjusted_score=0.9, band=Band.OPTIMAL, bold=bold, rank=1)


def session_with(items: dict, sigma=0.2, eta=0.1):
    s = create_session(PROFILE, SessionDefaults(sigma=sigma, eta=eta), created_at=0.0)
    record_recommendations(s, [rec(i, bold) for i, bold in items.items()])
    return s


class TestCreateSession:
    def test_default_sigma(self):
        assert create_session(PROFILE).sigma == 0.2

    def test_explicit_sigma(self):
        assert create_session(PROFILE, sigma=0.3).sigma == 0.3

    def test_out_of_range_clamped_with_notice(self, caplog):
        with caplog.at_level(logging.WARNING, logger="divrec.session"):
            s = create_session(PROFILE, sigma=0.9)
        assert s.sigma == 0.5
        assert any("clamped" in r.message for r in caplog.records)

    def test_fresh_ids_unique(self):
        assert create_session(PROFILE).session_id != create_session(PROFILE).session_id


class TestApplyFeedback:
    def test_reject_bold_shrinks(self):
        s = session_with({"x": True})
        apply_feedback(s, "x", "reject", timestamp=1.0)
        assert s.sigma == pytest.approx(0.18, abs=1e-15)

    def test_accept_bold_grows(self):
        s = session_with({"x": True})
        apply_feedback(s, "x", "accept", timestamp=1.0)
        assert s.sigma == pytest.approx(0.22, abs=1e-15)

    def test_non_bold_feedback_logged_but_sigma_unchanged(self):
        s = session_with({"x": False})
        apply_feedback(s, "x", "reject", timestamp=1.0)
        apply_feedback(s, "x", "accept", timestamp=2.0)
        assert s.sigma == 0.2
        assert len(s.feedback_log) == 2

    def test_forty_bold_rejects_clamp_at_floor(self):
        s = session_with({"x": True})
        for i in range(40):
            apply_feedback(s, "x", "reject", timestamp=float(i))
        # 0.2 * 0.9^40 ~ 0.0029, far below the 0.05 floor
        assert s.sigma == 0.05
        assert 0.2 * 0.9 ** 40 < 0.05

    def test_bold_accepts_clamp_at_ceiling(self):
        s = session_with({"x": True})
        for i in range(40):
            apply_feedback(s, "x", "accept", timestamp=float(i))
        assert s.sigma == 0.5

    def test_never_recommended_item_rejected(self):
        s = session_with({"x": True})
        with pytest.raises(FeedbackError):
            apply_feedback(s, "ghost", "accept")

    def test_bad_verdict(self):
        s = session_with({"x": True})
        with pytest.raises(ValueError):
            apply_feedback(s, "x", "meh")

    def test_bold_flag_comes_from_recommendation_record(self):
        s = session_with({"x": True, "y": False})
        apply_feedback(s, "y", "reject", timestamp=1.0)
        assert s.sigma == 0.2
        apply_feedback(s, "x", "reject", timestamp=2.0)
        assert s.sigma == pytest.approx(0.18, abs=1e-15)


class TestAdaptationProperties:
    def test_monotone_under_bold_runs(self):
        s = session_with({"x": True})
        trajectory = [s.sigma]
        for i in range(10):
            apply_feedback(s, "x", "reject", timestamp=float(i))
            trajectory.append(s.sigma)
        assert all(b <= a for a, b in zip(trajectory, trajectory[1:]))
        s2 = session_with({"x": True})
        up = [s2.sigma]
        for i in range(10):
            apply_feedback(s2, "x", "accept", timestamp=float(i))
            up.append(s2.sigma)
        assert all(b >= a for a, b in zip(up, up[1:]))

    @given(verdicts=st.lists(st.sampled_from(["accept", "reject"]), max_size=12),
           sigma=st.floats(min_value=0.1, max_value=0.3),
           eta=st.floats(min_value=0.01, max_value=0.3))
    def test_unclamped_trajectories_commute(self, verdicts, sigma, eta):
        # Without clamping the update is a product of factors, so any
        # permutation of the same verdict multiset lands on the same sigma.
        def run(order):
            value = sigma
            for v in order:
                value = value * (1.0 - eta if v == "reject" else 1.0 + eta)
            return value
        assert run(verdicts) == pytest.approx(run(sorted(verdicts)), rel=1e-12)

    @given(verdicts=st.lists(st.sampled_from(["accept", "reject"]), max_size=30))
    def test_sigma_always_within_bounds(self, verdicts):
        s = session_with({"x": True})
        for i, v in enumerate(verdicts):
            apply_feedback(s, "x", v, timestamp=float(i))
            assert 0.05 <= s.sigma <= 0.5

    def test_adapt_sigma_is_pure_rule(self):
        assert adapt_sigma(0.2, True, "reject", 0.1, 0.05, 0.5) == pytest.approx(0.18)
        assert adapt_sigma(0.2, False, "reject", 0.1, 0.05, 0.5) == 0.2
        assert adapt_sigma(0.49, True, "accept", 0.1, 0.05, 0.5) == 0.5


class TestPersistence:
    def test_roundtrip_identity(self, tmp_path):
        s = session_with({"x": True, "y": False})
        apply_feedback(s, "x", "reject", timestamp=1.5)
        apply_feedback(s, "y", "accept", timestamp=2.5)
        save_session(tmp_path, s)
        loaded = load_session(tmp_path, s.session_id)
        assert loaded.session_id == s.session_id
        assert loaded.sigma == s.sigma
        assert loaded.sigma0 == s.sigma0
        assert loaded.eta == s.eta
        assert loaded.created_at == s.created_at
        assert loaded.profile.seed_ids == s.profile.seed_ids
        assert loaded.feedback_log == s.feedback_log
        assert loaded.recommended == s.recommended
        assert loaded.last_recommendations == s.last_recommendations
        assert loaded.last_recommendations[-1].item_id == "y"

    def test_roundtrip_target_profile(self, tmp_path):
        target = np.array([0.6, 0.8])
        profile = SeedProfile.from_target(target, target_doc_ids=["d1", "d2"])
        s = create_session(profile, created_at=0.0)
        save_session(tmp_path, s)
        loaded = load_session(tmp_path, s.session_id)
        np.testing.assert_array_equal(loaded.profile.target, target)
        assert loaded.profile.target_doc_ids == ("d1", "d2")

    def test_unknown_id_not_found(self, tmp_path):
        with pytest.raises(SessionNotFoundError):
            load_session(tmp_path, "deadbeef")

    def test_corrupted_event_names_offset(self, tmp_path):
        s = session_with({"x": True})
        path = save_session(tmp_path, s)
        lines = path.read_text().count("\n")
        path.write_text(path.read_text() + "{broken json\n")
        with pytest.raises(SessionDecodeError, match=rf"line {lines + 1} \(byte offset \d+\)"):
            load_session(tmp_path, s.session_id)

    def test_missing_header(self, tmp_path):
        s = session_with({"x": True})
        path = save_session(tmp_path, s)
        content = path.read_text().splitlines()[1:]
        path.write_text("\n".join(content) + "\n")
        with pytest.raises(SessionDecodeError, match="header"):
            load_session(tmp_path, s.session_id)

    def test_save_after_feedback_then_load_matches(self, tmp_path):
        s = session_with({"x": True})
        for i in range(5):
            apply_feedback(s, "x", "reject", timestamp=float(i))
            save_session(tmp_path, s)
        loaded = load_session(tmp_path, s.session_id)
        assert loaded.sigma == s.sigma
        assert math.isclose(loaded.sigma, 0.2 * 0.9 ** 5, rel_tol=1e-12)

    def test_list_sessions(self, tmp_path):
        a = session_with({"x": True})
        b = session_with({"x": True})
        save_session(tmp_path, a)
        save_session(tmp_path, b)
        assert list_sessions(tmp_path) == sorted([a.session_id, b.session_id])

    def test_path_traversal_rejected(self, tmp_path):
        with pytest.raises(SessionNotFoundError):
            load_session(tmp_path, "../../etc/passwd")
