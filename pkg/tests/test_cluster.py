import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from genutil import (brute_force_dbscan, canonical_clustering,
                     random_point_set)
from mevlift.cluster import (ClusterConfig, ClusterError, ClusterSession,
                             DuplicateDecisionError, NOISE,
                             PendingReviewError, ReviewItem,
                             SessionStateError, UnknownBundleError, _medoid,
                             advance_round, dbscan, is_explained,
                             load_session, new_session, prune,
                             sample_for_review, save_session,
                             session_from_json, session_to_json, submit_label)
from mevlift.hunter import hunt
from mevlift.synth import (BundleBuilder, rebase_backrun_bundle,
                           sandwich_bundle, tag_address)


class TestConfigValidation:
    def test_bounds(self):
        with pytest.raises(ClusterError):
            ClusterConfig(epsilon=0.0)
        with pytest.raises(ClusterError):
            ClusterConfig(eta=1.0)
        with pytest.raises(ClusterError):
            ClusterConfig(eta=0.0)
        with pytest.raises(ClusterError):
            ClusterConfig(min_pts=1)
        with pytest.raises(ClusterError):
            ClusterConfig(max_rounds=0)
        with pytest.raises(ClusterError):
            ClusterConfig(noise_sample_cap=-1)


class TestDbscan:
    def test_empty_and_singleton(self):
        assert dbscan([], 1.0) == []
        assert dbscan([(0.0,)], 1.0) == [NOISE]

    def test_boundary_distance_is_inside(self):
        assert dbscan([(0.0,), (1.0,)], 1.0, 2) == [0, 0]
        assert dbscan([(0.0,), (1.0 + 1e-9,)], 1.0, 2) == [NOISE, NOISE]

    def test_two_blobs(self):
        pts = [(0.0,), (0.25,), (10.0,), (10.25,), (50.0,)]
        assert dbscan(pts, 1.0, 2) == [0, 0, 1, 1, NOISE]

    def test_border_point_joins_lowest_index_core(self):
        # Two tight blobs with a non-core point exactly between their
        # nearest cores; it must pick the earlier-indexed one.
        b = [(2.5,), (2.75,), (3.0,), (3.25,)]
        a = [(0.0,), (0.25,), (0.5,), (0.75,)]
        border = [(1.625,)]
        labels = dbscan(b + a + border, 1.0, 4)
        assert labels == [0, 0, 0, 0, 1, 1, 1, 1, 0]

    def test_cluster_ids_follow_first_appearance(self):
        # The border point sits first in the list, attached to the
        # later-scanned blob, so renumbering has to flip the raw ids.
        pts = [(1.5,), (3.0,), (3.25,), (3.5,), (3.75,),
               (0.0,), (0.25,), (0.5,), (0.75,)]
        labels = dbscan(pts, 1.0, 4)
        assert labels == [0, 1, 1, 1, 1, 0, 0, 0, 0]

    def test_rejects_non_finite(self):
        with pytest.raises(ClusterError):
            dbscan([(0.0,), (float("nan"),)], 1.0)

    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_agrees_with_reference(self, seed):
        rng = np.random.default_rng(seed)
        pts, epsilon, min_pts = random_point_set(rng)
        got = dbscan(pts, epsilon, min_pts)
        want = brute_force_dbscan(pts, epsilon, min_pts)
        assert canonical_clustering(got) == canonical_clustering(want)
        assert [i for i, c in enumerate(got) if c == NOISE] == \
            [i for i, c in enumerate(want) if c == NOISE]


def test_medoid_prefers_central_then_first():
    pts = np.array([[0.0], [1.0], [2.0]])
    assert _medoid([0, 1, 2], pts) == 1
    assert _medoid([0, 1], pts) == 0  # symmetric pair, first member wins


def test_prune_semantics():
    sa = sandwich_bundle("pr-sa", 13_000_000).build_actions()
    rba = rebase_backrun_bundle("pr-rba", 13_000_001).build_actions()
    idle = BundleBuilder("pr-idle", 13_000_002)
    idle.tx(tag_address("nobody"), tag_address("nothing"))
    empty = idle.build_actions()
    corpus = {ba.bundle.ref: ba for ba in (sa, rba, empty)}
    survivors = prune(corpus, hunt, ["SA"])
    assert set(survivors) == {rba.bundle.ref}
    assert is_explained(empty, hunt, [])  # nothing reviewable inside
    assert not is_explained(sa, hunt, ["CA"])
    assert set(prune(corpus, hunt, ["SA", "RBA"])) == set()


def _corpus(n, start_block=13_100_000):
    bundles = {}
    for i in range(n):
        ba = rebase_backrun_bundle(f"cl{i}", start_block + i).build_actions()
        bundles[ba.bundle.ref] = ba
    return bundles


_GEOMETRY = [(0.0, 0.0), (0.5, 0.0), (10.0, 0.0), (10.5, 0.0),
             (30.0, 30.0), (-40.0, 5.0), (20.0, -20.0)]


def _session(corpus=None, **config_over):
    corpus = corpus if corpus is not None else _corpus(len(_GEOMETRY))
    embeddings = dict(zip(corpus, _GEOMETRY))
    defaults = dict(epsilon=1.0, eta=0.5, min_pts=2, max_rounds=8,
                    noise_sample_cap=2)
    defaults.update(config_over)
    session = new_session("sess-1", corpus, embeddings,
                          ClusterConfig(**defaults),
                          label_set=["SA", "CA", "LI"])
    return session, corpus, embeddings


def test_new_session_clusters_and_samples():
    session, corpus, _ = _session()
    refs = list(corpus)
    assert session.refs == refs
    assert session.epsilon == 1.0
    assert [session.assignments[r] for r in refs] == \
        [0, 0, 1, 1, NOISE, NOISE, NOISE]
    queued = [(item.ref, item.cluster) for item in session.queue]
    # Medoids for both clusters, then the two noise points nearest the
    # origin (the third noise point is beyond the cap).
    assert queued == [(refs[0], 0), (refs[2], 1),
                      (refs[6], NOISE), (refs[5], NOISE)]
    assert session.pending_refs() == [r for r, _ in queued]


def test_new_session_requires_embeddings():
    corpus = _corpus(2)
    with pytest.raises(ClusterError, match="missing embeddings"):
        new_session("sess-2", corpus, {}, ClusterConfig(),
                    label_set=["SA"])


def test_new_session_prunes_known_kinds():
    corpus = _corpus(3)
    sa = sandwich_bundle("known-sa", 13_200_000).build_actions()
    corpus[sa.bundle.ref] = sa
    embeddings = {ref: (float(i), 0.0) for i, ref in enumerate(corpus)}
    session = new_session("sess-3", corpus, embeddings,
                          label_set=["SA", "CA", "LI"])
    assert sa.bundle.ref not in session.refs
    assert len(session.refs) == 3


class TestSubmitLabel:
    def test_decision_matrix(self, tmp_path):
        session, _, _ = _session()
        first = session.queue[0].ref
        with pytest.raises(ClusterError, match="unknown decision kind"):
            submit_label(session, first, "approve")
        with pytest.raises(UnknownBundleError):
            submit_label(session, "999/9", "dismissed")
        with pytest.raises(ClusterError, match="carry no label"):
            submit_label(session, first, "dismissed", label="SA")
        with pytest.raises(ClusterError, match="requires a label"):
            submit_label(session, first, "new")
        with pytest.raises(ClusterError, match="not in the label set"):
            submit_label(session, first, "known", label="RBA")
        submit_label(session, first, "known", label="SA")
        with pytest.raises(DuplicateDecisionError):
            submit_label(session, first, "dismissed")
        assert session.reviewed_total == 1

    def test_new_label_grows_the_set_once(self):
        session, _, _ = _session()
        a, b = session.queue[0].ref, session.queue[1].ref
        submit_label(session, a, "new", label="RBA")
        assert session.label_set[-1] == "RBA"
        assert session.new_labels_this_round == ["RBA"]
        submit_label(session, b, "new", label="RBA")
        assert session.label_set.count("RBA") == 1
        assert session.new_labels_this_round == ["RBA"]

    def test_audit_trail(self, tmp_path):
        session, _, _ = _session()
        audit = tmp_path / "audit.ndjson"
        submit_label(session, session.queue[0].ref, "new", label="RBA",
                     actor="reviewer-7", audit_path=audit)
        submit_label(session, session.queue[1].ref, "dismissed",
                     audit_path=audit)
        lines = audit.read_text().splitlines()
        assert len(lines) == 2
        first = json.loads(lines[0])
        assert first["bundle"] == session.queue[0].ref
        assert first["decision"] == {"kind": "new", "label": "RBA"}
        assert first["actor"] == "reviewer-7"
        assert "T" in first["time"]
        assert json.loads(lines[1])["decision"]["label"] is None


def _resolve_queue(session, new_label=None):
    for i, item in enumerate(session.queue):
        if not item.pending:
            continue
        if new_label is not None and i == 0:
            submit_label(session, item.ref, "new", label=new_label)
        else:
            submit_label(session, item.ref, "dismissed")


class TestAdvanceRound:
    def test_requires_resolved_queue(self):
        session, corpus, embeddings = _session()
        with pytest.raises(PendingReviewError):
            advance_round(session, embeddings, corpus)

    def test_epsilon_decays_and_round_increments(self):
        session, corpus, embeddings = _session()
        _resolve_queue(session, new_label="XYZ")  # no detector covers it
        advance_round(session, embeddings, corpus)
        assert session.round == 1
        assert session.epsilon == 0.5
        assert not session.terminal
        assert session.new_labels_this_round == []
        assert session.queue, "a live session reclusters and resamples"

    def test_no_discovery_terminates_first(self):
        session, corpus, embeddings = _session()
        _resolve_queue(session)  # only dismissals
        advance_round(session, embeddings, corpus)
        assert session.terminal
        assert session.terminal_reason == "no-new-labels"
        assert session.refs, "survivors remain; the reason is the labels"
        assert session.assignments == {} and session.queue == []

    def test_covering_label_empties_the_corpus(self):
        session, corpus, embeddings = _session()
        _resolve_queue(session, new_label="RBA")
        advance_round(session, embeddings, corpus)
        assert session.terminal
        assert session.terminal_reason == "corpus-empty"
        assert session.refs == []

    def test_max_rounds_is_the_last_resort(self):
        session, corpus, embeddings = _session(max_rounds=1)
        _resolve_queue(session, new_label="XYZ")
        advance_round(session, embeddings, corpus)
        assert session.terminal
        assert session.terminal_reason == "max-rounds"

    def test_missing_embeddings_for_survivors(self):
        session, corpus, _ = _session()
        _resolve_queue(session, new_label="XYZ")
        with pytest.raises(ClusterError, match="missing embeddings"):
            advance_round(session, {}, corpus)

    def test_terminal_sessions_reject_everything(self):
        session, corpus, embeddings = _session()
        _resolve_queue(session)
        advance_round(session, embeddings, corpus)
        with pytest.raises(SessionStateError):
            submit_label(session, "1/0", "dismissed")
        with pytest.raises(SessionStateError):
            advance_round(session, embeddings, corpus)


def test_sample_for_review_replaces_queue():
    session, _, _ = _session(noise_sample_cap=0)
    queue = sample_for_review(session)
    assert queue is session.queue
    assert [item.cluster for item in queue] == [0, 1]  # no noise sampled


def test_session_json_roundtrip():
    session, _, _ = _session()
    submit_label(session, session.queue[0].ref, "new", label="RBA")
    text = session_to_json(session)
    again = session_from_json(text)
    assert again == session
    assert json.loads(text)["epsilon"] == 1.0


def test_session_file_roundtrip(tmp_path):
    session, _, _ = _session()
    path = tmp_path / "session.json"
    save_session(session, path)
    assert load_session(path) == session
    assert path.read_text().endswith("\n")


def test_session_alignment_validation():
    with pytest.raises(ClusterError):
        ClusterSession("bad", ClusterConfig(), ["SA"], refs=["1/0"],
                       features=[])
