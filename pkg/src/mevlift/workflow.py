"""Glue between the stores, the encoder, the model, and the cluster loop.

The review loop retrains the representation each round: hunter findings
restricted to the current label set become the multi-label targets, a
fresh model trains on the encoded corpus, and its feature vectors feed
DBSCAN.  Both the CLI and the HTTP service drive rounds through here.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .bundles import BundleActions
from .cluster import Detector
from .hunter import hunt
from .matrix import (AssetIndex, BundleMatrix, MatrixConfig, bundle_amount_max,
                     encode_bundle)
from .nn import Model, ModelConfig, forward, train


def corpus_by_ref(items: Iterable[BundleActions]) -> dict[str, BundleActions]:
    corpus: dict[str, BundleActions] = {}
    for ba in items:
        corpus[ba.bundle.ref] = ba
    return corpus


def encode_corpus(bundles: Mapping[str, BundleActions],
                  config: MatrixConfig = MatrixConfig()
                  ) -> dict[str, BundleMatrix]:
    """Encodes every bundle against one shared asset index and amount
    scale so feature distances are comparable across the corpus."""
    assets = AssetIndex.from_corpus(bundles.values())
    amount_max = 0
    for ba in bundles.values():
        amount_max = max(amount_max, bundle_amount_max(ba))
    return {ref: encode_bundle(ba, config, assets, amount_max)
            for ref, ba in bundles.items()}


def activity_targets(bundles: Mapping[str, BundleActions],
                     label_set: Sequence[str],
                     detectors: Detector = hunt,
                     findings_cache: dict | None = None
                     ) -> dict[str, np.ndarray]:
    """Per-bundle binary vector: which label-set activities the hunter
    sees in it.  Labels without a detector simply stay zero."""
    targets: dict[str, np.ndarray] = {}
    for ref, ba in bundles.items():
        if findings_cache is not None and ref in findings_cache:
            findings = findings_cache[ref]
        else:
            findings = list(detectors(ba))
            if findings_cache is not None:
                findings_cache[ref] = findings
        present = {f.activity.name for f in findings}
        targets[ref] = np.array(
            [1.0 if name in present else 0.0 for name in label_set])
    return targets


def train_and_embed(bundles: Mapping[str, BundleActions],
                    label_set: Sequence[str],
                    model_config: ModelConfig,
                    matrix_config: MatrixConfig = MatrixConfig(),
                    detectors: Detector = hunt,
                    embed_refs: Sequence[str] | None = None
                    ) -> tuple[Model, dict[str, tuple[float, ...]], list[float]]:
    """Trains a fresh model on the corpus and returns feature vectors.

    The model's label head is sized to the label set; training targets
    come from the detectors.  Returns the model, the embeddings for
    embed_refs (default: the whole corpus), and the loss trace.
    """
    from dataclasses import replace

    matrices = encode_corpus(bundles, matrix_config)
    targets = activity_targets(bundles, label_set, detectors)
    if not label_set:
        targets = {ref: np.zeros(1) for ref in targets}
    config = replace(model_config,
                     input_height=matrix_config.height,
                     input_width=matrix_config.max_width,
                     label_count=max(1, len(label_set)))
    model = Model(config)
    dataset = [(matrices[ref], targets[ref]) for ref in bundles]
    trace: list[float] = []
    if dataset:
        model, trace = train(model, dataset)
    refs = list(bundles) if embed_refs is None else list(embed_refs)
    embeddings: dict[str, tuple[float, ...]] = {}
    for ref in refs:
        features, _ = forward(model, matrices[ref])
        embeddings[ref] = tuple(float(v) for v in features)
    return model, embeddings, trace


EmbedFn = Callable[[Mapping[str, BundleActions], Sequence[str]],
                   dict[str, tuple[float, ...]]]


def embed_with_model(model: Model,
                     bundles: Mapping[str, BundleActions],
                     matrix_config: MatrixConfig = MatrixConfig()
                     ) -> dict[str, tuple[float, ...]]:
    """Feature vectors for a corpus under an already trained model."""
    matrices = encode_corpus(bundles, matrix_config)
    out: dict[str, tuple[float, ...]] = {}
    for ref, matrix in matrices.items():
        features, _ = forward(model, matrix)
        out[ref] = tuple(float(v) for v in features)
    return out
