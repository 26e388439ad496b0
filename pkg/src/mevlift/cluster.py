"""Iterative clustering loop around the learned bundle features.

Each round: DBSCAN over the surviving bundles' feature vectors, one
review item per cluster (the medoid) plus a few noise points, analyst
decisions that may grow the label set, then a round advance that decays
epsilon, prunes every bundle now explained by the label set, and
re-embeds the survivors.  The loop ends when a round discovers nothing
new, the corpus empties, or the round cap is hit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .bundles import BundleActions
from .hunter import KNOWN_ACTIVITIES, MevFinding, hunt

Detector = Callable[[BundleActions], Iterable[MevFinding]]

NOISE = -1

DECISION_KINDS = ("known", "new", "dismissed")


class ClusterError(ValueError):
    pass


class UnknownBundleError(ClusterError):
    """The bundle ref is not in the review queue."""


class DuplicateDecisionError(ClusterError):
    """The queue entry was already resolved."""


class PendingReviewError(ClusterError):
    """The round still has unresolved queue entries."""


class SessionStateError(ClusterError):
    """The session cannot accept this operation (e.g. already terminal)."""


@dataclass(frozen=True)
class ClusterConfig:
    epsilon: float = 16.0
    eta: float = 0.5
    min_pts: int = 2
    max_rounds: int = 8
    noise_sample_cap: int = 10

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ClusterError("epsilon must be positive")
        if not 0.0 < self.eta < 1.0:
            raise ClusterError("eta must lie strictly between 0 and 1")
        if self.min_pts < 2:
            raise ClusterError("min_pts must be at least 2")
        if self.max_rounds < 1 or self.noise_sample_cap < 0:
            raise ClusterError("bad round or sample limits")


@dataclass
class ReviewItem:
    ref: str
    cluster: int
    status: str = "pending"
    label: str | None = None

    @property
    def pending(self) -> bool:
        return self.status == "pending"


@dataclass
class ClusterSession:
    session_id: str
    config: ClusterConfig
    label_set: list[str]
    refs: list[str]
    features: list[tuple[float, ...]]
    round: int = 0
    epsilon: float | None = None
    assignments: dict[str, int] = field(default_factory=dict)
    queue: list[ReviewItem] = field(default_factory=list)
    new_labels_this_round: list[str] = field(default_factory=list)
    reviewed_total: int = 0
    terminal: bool = False
    terminal_reason: str | None = None

    def __post_init__(self) -> None:
        if self.epsilon is None:
            self.epsilon = self.config.epsilon
        if len(self.refs) != len(self.features):
            raise ClusterError("refs and features must align")

    def queue_item(self, ref: str) -> ReviewItem:
        for item in self.queue:
            if item.ref == ref:
                return item
        raise UnknownBundleError(f"bundle {ref} is not in the review queue")

    def pending_refs(self) -> list[str]:
        return [item.ref for item in self.queue if item.pending]


def dbscan(points, epsilon: float, min_pts: int = 2) -> list[int]:
    """Cluster ids per point; NOISE (-1) marks outliers.

    Euclidean distance, neighborhoods inclusive of the point itself and
    of the epsilon boundary.  Clusters are the connected components of
    the core points; a non-core point joins its lowest-index core
    neighbor.  Ids are renumbered so cluster 0 holds the lowest member
    index, then 1, and so on.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if n == 0:
        return []
    if pts.ndim != 2:
        pts = pts.reshape(n, -1)
    if not np.all(np.isfinite(pts)):
        raise ClusterError("feature vectors must be finite")
    diff = pts[:, None, :] - pts[None, :, :]
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    within = dist2 <= epsilon * epsilon
    neighbor_counts = within.sum(axis=1)
    core = neighbor_counts >= min_pts
    labels = [NOISE] * n
    component = 0
    for start in range(n):
        if not core[start] or labels[start] != NOISE:
            continue
        stack = [start]
        labels[start] = component
        while stack:
            i = stack.pop()
            for j in np.nonzero(within[i])[0]:
                if core[j] and labels[j] == NOISE:
                    labels[j] = component
                    stack.append(int(j))
        component += 1
    for i in range(n):
        if core[i] or labels[i] != NOISE:
            continue
        for j in np.nonzero(within[i])[0]:
            if core[j]:
                labels[i] = labels[j]
                break
    remap: dict[int, int] = {}
    for i in range(n):
        if labels[i] != NOISE and labels[i] not in remap:
            remap[labels[i]] = len(remap)
    return [NOISE if c == NOISE else remap[c] for c in labels]


def explained_ordinals(findings: Iterable[MevFinding],
                       label_set: Sequence[str]) -> set[tuple[int, int]]:
    allowed = set(label_set)
    covered: set[tuple[int, int]] = set()
    for f in findings:
        if f.activity.name in allowed:
            covered.update(f.covered)
    return covered


def is_explained(actions: BundleActions, detectors: Detector,
                 label_set: Sequence[str]) -> bool:
    """True when every action in the bundle is a witness of an activity
    whose name is in the label set.  Action-free bundles carry nothing
    reviewable and count as explained."""
    total = [(i, a.ordinal) for i, a in actions.iter_actions()]
    if not total:
        return True
    covered = explained_ordinals(detectors(actions), label_set)
    return all(key in covered for key in total)


def prune(corpus: Mapping[str, BundleActions], detectors: Detector,
          label_set: Sequence[str]) -> dict[str, BundleActions]:
    """Drops every bundle fully explained by the label set."""
    return {ref: ba for ref, ba in corpus.items()
            if not is_explained(ba, detectors, label_set)}


def _medoid(members: Sequence[int], pts: np.ndarray) -> int:
    best = members[0]
    best_cost = math.inf
    for i in members:
        cost = float(sum(np.linalg.norm(pts[i] - pts[j]) for j in members))
        if cost < best_cost:
            best, best_cost = i, cost
    return best


def sample_for_review(session: ClusterSession) -> list[ReviewItem]:
    """One medoid per cluster, then up to noise_sample_cap noise points
    ordered nearest to the origin.  Replaces the session queue."""
    pts = np.asarray(session.features, dtype=np.float64)
    labels = [session.assignments[ref] for ref in session.refs]
    queue: list[ReviewItem] = []
    cluster_ids = sorted({c for c in labels if c != NOISE})
    for cid in cluster_ids:
        members = [i for i, c in enumerate(labels) if c == cid]
        pick = _medoid(members, pts)
        queue.append(ReviewItem(session.refs[pick], cid))
    noise = [i for i, c in enumerate(labels) if c == NOISE]
    noise.sort(key=lambda i: (float(np.linalg.norm(pts[i])), i))
    for i in noise[:session.config.noise_sample_cap]:
        queue.append(ReviewItem(session.refs[i], NOISE))
    session.queue = queue
    return queue


def _recluster(session: ClusterSession) -> None:
    labels = dbscan(session.features, session.epsilon, session.config.min_pts)
    session.assignments = dict(zip(session.refs, labels))
    sample_for_review(session)


def new_session(session_id: str, bundles: Mapping[str, BundleActions],
                embeddings: Mapping[str, Sequence[float]],
                config: ClusterConfig = ClusterConfig(),
                label_set: Sequence[str] | None = None,
                detectors: Detector = hunt) -> ClusterSession:
    """Builds round 0: prune under the starting labels, cluster, sample."""
    labels = list(label_set) if label_set is not None else \
        [a.name for a in KNOWN_ACTIVITIES]
    survivors = prune(bundles, detectors, labels)
    refs = list(survivors)
    missing = [ref for ref in refs if ref not in embeddings]
    if missing:
        raise ClusterError(f"missing embeddings for {', '.join(missing[:5])}")
    session = ClusterSession(
        session_id=session_id,
        config=config,
        label_set=labels,
        refs=refs,
        features=[tuple(float(v) for v in embeddings[ref]) for ref in refs],
    )
    _recluster(session)
    return session


def _audit_entry(ref: str, kind: str, label: str | None, actor: str) -> dict:
    return {
        "time": datetime.now(timezone.utc).isoformat(),
        "bundle": ref,
        "decision": {"kind": kind, "label": label},
        "actor": actor,
    }


def append_audit(path, entry: dict) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(entry, separators=(",", ":")) + "\n")


def submit_label(session: ClusterSession, ref: str, kind: str,
                 label: str | None = None, actor: str = "analyst",
                 audit_path=None) -> ClusterSession:
    """Records one analyst decision for a pending queue entry.

    kind "new" grows the label set (idempotently); "known" tags the
    bundle with an existing label; "dismissed" needs no label.
    """
    if session.terminal:
        raise SessionStateError(f"session {session.session_id} is terminal")
    if kind not in DECISION_KINDS:
        raise ClusterError(f"unknown decision kind {kind!r}")
    item = session.queue_item(ref)
    if not item.pending:
        raise DuplicateDecisionError(f"bundle {ref} was already reviewed")
    if kind == "dismissed":
        if label is not None:
            raise ClusterError("dismissed decisions carry no label")
        item.status = "dismissed"
    else:
        if not label:
            raise ClusterError(f"decision {kind!r} requires a label")
        if kind == "known" and label not in session.label_set:
            raise ClusterError(f"label {label!r} is not in the label set")
        if kind == "new" and label not in session.label_set:
            session.label_set.append(label)
            session.new_labels_this_round.append(label)
        item.status = "labeled"
        item.label = label
    session.reviewed_total += 1
    if audit_path is not None:
        append_audit(audit_path, _audit_entry(ref, kind, label, actor))
    return session


def advance_round(session: ClusterSession,
                  embeddings: Mapping[str, Sequence[float]],
                  bundles: Mapping[str, BundleActions],
                  detectors: Detector = hunt) -> ClusterSession:
    """Closes the round: decay epsilon, prune, re-embed, re-cluster.

    Every queue entry must be resolved first.  The session turns
    terminal when the round added no label, the corpus pruned to
    nothing, or max_rounds is reached.
    """
    if session.terminal:
        raise SessionStateError(f"session {session.session_id} is terminal")
    pending = session.pending_refs()
    if pending:
        raise PendingReviewError(
            f"{len(pending)} queue entries still pending review")
    discovered = bool(session.new_labels_this_round)
    session.epsilon = session.epsilon * session.config.eta
    current = {ref: bundles[ref] for ref in session.refs}
    survivors = prune(current, detectors, session.label_set)
    session.round += 1
    session.refs = list(survivors)
    session.new_labels_this_round = []
    missing = [ref for ref in session.refs if ref not in embeddings]
    if missing:
        raise ClusterError(f"missing embeddings for {', '.join(missing[:5])}")
    session.features = [tuple(float(v) for v in embeddings[ref])
                        for ref in session.refs]
    if not discovered:
        session.terminal = True
        session.terminal_reason = "no-new-labels"
    elif not survivors:
        session.terminal = True
        session.terminal_reason = "corpus-empty"
    elif session.round >= session.config.max_rounds:
        session.terminal = True
        session.terminal_reason = "max-rounds"
    if session.terminal:
        session.assignments = {}
        session.queue = []
    else:
        _recluster(session)
    return session


def _config_to_dict(cfg: ClusterConfig) -> dict:
    return {"epsilon": cfg.epsilon, "eta": cfg.eta, "min_pts": cfg.min_pts,
            "max_rounds": cfg.max_rounds,
            "noise_sample_cap": cfg.noise_sample_cap}


def session_to_json(session: ClusterSession) -> str:
    doc = {
        "session_id": session.session_id,
        "config": _config_to_dict(session.config),
        "round": session.round,
        "epsilon": session.epsilon,
        "label_set": list(session.label_set),
        "corpus": [{"ref": ref, "features": list(feat)}
                   for ref, feat in zip(session.refs, session.features)],
        "assignments": dict(session.assignments),
        "queue": [{"ref": q.ref, "cluster": q.cluster, "status": q.status,
                   "label": q.label} for q in session.queue],
        "new_labels_this_round": list(session.new_labels_this_round),
        "reviewed_total": session.reviewed_total,
        "terminal": session.terminal,
        "terminal_reason": session.terminal_reason,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def session_from_json(text: str) -> ClusterSession:
    doc = json.loads(text)
    session = ClusterSession(
        session_id=doc["session_id"],
        config=ClusterConfig(**doc["config"]),
        label_set=list(doc["label_set"]),
        refs=[entry["ref"] for entry in doc["corpus"]],
        features=[tuple(entry["features"]) for entry in doc["corpus"]],
        round=doc["round"],
        epsilon=doc["epsilon"],
        assignments={k: int(v) for k, v in doc["assignments"].items()},
        queue=[ReviewItem(q["ref"], q["cluster"], q["status"], q["label"])
               for q in doc["queue"]],
        new_labels_this_round=list(doc["new_labels_this_round"]),
        reviewed_total=doc.get("reviewed_total", 0),
        terminal=doc["terminal"],
        terminal_reason=doc["terminal_reason"],
    )
    return session


def save_session(session: ClusterSession, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(session_to_json(session) + "\n")


def load_session(path) -> ClusterSession:
    with open(path, "r", encoding="utf-8") as fh:
        return session_from_json(fh.read())
