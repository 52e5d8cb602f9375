"""Entity and attribute fusion branches and the end-to-end pipeline.

The entity branch grounds the inputs in nouns: each modality retrieves
its nearest entity words from the noun bank, every retrieved word
contributes its embedding to one shared pool, and a modality's raw weight
is its mean cosine similarity to that pool, so modalities that agree with
the pooled entity evidence dominate the fused feature.

The attribute branch grounds properties instead: a single adjective set
is retrieved from the mean of all modality features, and a modality's raw
weight is its squared distance to the mean retrieved-adjective embedding,
so the outlying modalities (the ones carrying attribute information the
others lack) are amplified.

A variance threshold decides how the two fused features mix: balanced
when the modality features broadly agree, entity-heavy when they spread
out, which stabilizes entity identity under disparate inputs. Either
branch can be disabled, in which case the surviving fused feature passes
through untouched.
"""
from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bank import BankLike, EmbeddingBank, apply_adjective_filter
from .core import (
    ConditionBundle,
    FusionConfig,
    FusionWeights,
    ModalityFeature,
    ModalityTag,
    as_vector,
    mean_feature,
    normalize,
    ordered_features,
    total_variance,
)
from .errors import (
    DimMismatchError,
    DuplicateModalityError,
    EmptyAttributeSetError,
    EmptyEntitySetError,
    ImgAnyError,
    NoBranchesError,
    TagMismatchError,
    WrongKindError,
    ZeroVectorError,
)
from .retrieval import retrieve_top_k

WordVec = tuple[str, np.ndarray]


@dataclass(frozen=True, eq=False)
class EntityBranchResult:
    """Everything the entity branch produced for one input set."""

    words_per_modality: dict[ModalityTag, tuple[str, ...]]
    entity_features: tuple[WordVec, ...]
    weights: FusionWeights
    fused: np.ndarray
    c2: str


@dataclass(frozen=True, eq=False)
class AttributeBranchResult:
    """Everything the attribute branch produced for one input set."""

    words: tuple[str, ...]
    attribute_features: tuple[WordVec, ...]
    weights: FusionWeights
    fused: np.ndarray
    c3: str


def _bank_vector(bank: BankLike, index: int) -> np.ndarray:
    # stored rows are float32 with ~1e-7 norm slack; re-unitize in float64
    # (always dividing, no near-unit pass-through) so downstream dot
    # products stay within their nominal bounds
    row = bank.matrix[index].astype(np.float64)
    return row / float(np.linalg.norm(row))


def entity_retrieve(features: Sequence[ModalityFeature], noun_bank: BankLike,
                    k_entity: int) -> tuple[dict[ModalityTag, tuple[str, ...]], list[WordVec]]:
    """Per-modality top-k entity words plus their deduplicated embedding pool.

    The pool lists each word's bank embedding once, in first-occurrence
    order with modalities visited canonically, so its order (and therefore
    the c2 string) does not depend on input order.
    """
    feats = ordered_features(features)
    words_per_modality: dict[ModalityTag, tuple[str, ...]] = {}
    pool: list[WordVec] = []
    seen: set[str] = set()
    for f in feats:
        hits = retrieve_top_k(noun_bank, f.embedding, k_entity)
        words_per_modality[f.tag] = tuple(h.word for h in hits)
        for h in hits:
            if h.word not in seen:
                seen.add(h.word)
                pool.append((h.word, _bank_vector(noun_bank, h.bank_index)))
    return words_per_modality, pool


def entity_weights(features: Sequence[ModalityFeature],
                   entity_features: Sequence[WordVec]) -> FusionWeights:
    """Per-modality mean cosine similarity to the pooled entity embeddings."""
    if not entity_features:
        raise EmptyEntitySetError("no entity features to weigh")
    feats = ordered_features(features)
    pool = np.stack([vec for _, vec in entity_features])
    raw: dict[ModalityTag, float] = {}
    for f in feats:
        w = float((pool @ f.embedding).sum() / len(entity_features))
        raw[f.tag] = min(1.0, max(-1.0, w))
    return FusionWeights.from_raw("entity", raw)


def weighted_fuse(features: Sequence[ModalityFeature],
                  weights: FusionWeights) -> np.ndarray:
    """Weighted sum of the modality features under normalized weights, re-unitized.

    A weight of exactly one selects that modality's feature bit-for-bit.
    """
    feats = ordered_features(features)
    tags = [f.tag for f in feats]
    if len(set(tags)) != len(tags) or set(weights.normalized) != set(tags):
        raise TagMismatchError("weights do not cover exactly the feature tags")
    terms = [weights.normalized[f.tag] * f.embedding
             for f in feats if weights.normalized[f.tag] != 0.0]
    acc = terms[0]
    for t in terms[1:]:
        acc = acc + t
    try:
        return normalize(acc)
    except ZeroVectorError:
        raise ZeroVectorError(
            "weighted feature sum vanished (antipodal features with equal weights)") from None


def attribute_retrieve(features: Sequence[ModalityFeature], adjective_bank: BankLike,
                       k_attribute: int) -> tuple[tuple[str, ...], list[WordVec]]:
    """One shared adjective set retrieved from the mean modality feature."""
    feats = ordered_features(features)
    hits = retrieve_top_k(adjective_bank, mean_feature(feats), k_attribute)
    words = tuple(h.word for h in hits)
    vectors = [(h.word, _bank_vector(adjective_bank, h.bank_index)) for h in hits]
    return words, vectors


def attribute_weights(features: Sequence[ModalityFeature],
                      attribute_features: Sequence[WordVec]) -> FusionWeights:
    """Squared distance from each modality feature to the mean retrieved-adjective embedding."""
    if not attribute_features:
        raise EmptyAttributeSetError("no attribute features to weigh")
    feats = ordered_features(features)
    pool = np.stack([vec for _, vec in attribute_features])
    center = pool.sum(axis=0) / float(len(attribute_features))
    raw: dict[ModalityTag, float] = {}
    for f in feats:
        d = f.embedding - center
        w = float(np.dot(d, d))
        raw[f.tag] = min(4.0, max(0.0, w))
    return FusionWeights.from_raw("attribute", raw)


def threshold_fuse(entity_fused: np.ndarray | None, attribute_fused: np.ndarray | None,
                   features: Sequence[ModalityFeature],
                   config: FusionConfig) -> tuple[np.ndarray, float, float]:
    """Mix the branch features; the entity share rises when inputs disagree.

    Returns ``(c1, variance, alpha)`` where alpha is the entity share of
    the mix: ``balanced_weight`` below the variance threshold,
    ``entity_upweight`` at or above it, and pinned to 1.0 or 0.0 when only
    one branch ran (the surviving feature passes through bit-exact).
    """
    variance = total_variance(features)
    if entity_fused is None and attribute_fused is None:
        raise NoBranchesError("no fused feature from either branch")
    if attribute_fused is None:
        return as_vector(entity_fused), variance, 1.0
    if entity_fused is None:
        return as_vector(attribute_fused), variance, 0.0
    e = as_vector(entity_fused)
    a = as_vector(attribute_fused)
    if e.shape != a.shape:
        raise DimMismatchError(f"branch features disagree on dim: {e.shape[0]} != {a.shape[0]}")
    alpha = config.balanced_weight if variance < config.variance_threshold \
        else config.entity_upweight
    try:
        c1 = normalize(alpha * e + (1.0 - alpha) * a)
    except ZeroVectorError:
        raise ZeroVectorError("branch features are antipodal at this mix") from None
    return c1, variance, alpha


def assemble_conditions(entity_result: EntityBranchResult | None,
                        attribute_result: AttributeBranchResult | None,
                        c1: np.ndarray, variance: float, alpha: float,
                        config: FusionConfig) -> ConditionBundle:
    """Package the fused feature and the word strings with full diagnostics."""
    if entity_result is None and attribute_result is None:
        raise NoBranchesError("no branch results to assemble")
    return ConditionBundle(
        c1=c1,
        c2=entity_result.c2 if entity_result is not None else "",
        c3=attribute_result.c3 if attribute_result is not None else "",
        entity_weights=entity_result.weights if entity_result is not None else None,
        attribute_weights=attribute_result.weights if attribute_result is not None else None,
        variance=variance,
        alpha=alpha,
        config=config,
    )


def run_entity_branch(features: Sequence[ModalityFeature], noun_bank: BankLike,
                      config: FusionConfig) -> EntityBranchResult:
    words_per_modality, pool = entity_retrieve(features, noun_bank, config.k_entity)
    weights = entity_weights(features, pool)
    fused = weighted_fuse(features, weights)
    return EntityBranchResult(
        words_per_modality=words_per_modality,
        entity_features=tuple(pool),
        weights=weights,
        fused=fused,
        c2=", ".join(word for word, _ in pool),
    )


def run_attribute_branch(features: Sequence[ModalityFeature], adjective_bank: BankLike,
                         config: FusionConfig) -> AttributeBranchResult:
    words, vectors = attribute_retrieve(features, adjective_bank, config.k_attribute)
    weights = attribute_weights(features, vectors)
    fused = weighted_fuse(features, weights)
    return AttributeBranchResult(
        words=words,
        attribute_features=tuple(vectors),
        weights=weights,
        fused=fused,
        c3=", ".join(words),
    )


@contextmanager
def _stage(name: str):
    try:
        yield
    except ImgAnyError as err:
        if err.stage is None:
            err.stage = name
        raise


def run_pipeline(features: Sequence[ModalityFeature], noun_bank: EmbeddingBank,
                 adjective_bank: EmbeddingBank,
                 config: FusionConfig | None = None) -> ConditionBundle:
    """Full conditioning run: retrieval, both branches, threshold mix, bundle.

    Deterministic for fixed inputs and config; errors carry the pipeline
    stage that raised them.
    """
    if config is None:
        config = FusionConfig()
    with _stage("ingest"):
        feats = ordered_features(features)
        tags = [f.tag for f in feats]
        if len(set(tags)) != len(tags):
            dupes = sorted({t.label for t in tags if tags.count(t) > 1})
            raise DuplicateModalityError(f"duplicate modalities: {', '.join(dupes)}")
        if not (config.enable_entity_branch or config.enable_attribute_branch):
            raise NoBranchesError("at least one fusion branch must be enabled")
        if noun_bank.kind != "noun":
            raise WrongKindError(f"noun bank has kind {noun_bank.kind!r}")
        if adjective_bank.kind != "adjective":
            raise WrongKindError(f"adjective bank has kind {adjective_bank.kind!r}")
        if noun_bank.dim != adjective_bank.dim:
            raise DimMismatchError(
                f"banks disagree on dim: {noun_bank.dim} != {adjective_bank.dim}")
        if feats[0].dim != noun_bank.dim:
            raise DimMismatchError(
                f"feature dim {feats[0].dim} != bank dim {noun_bank.dim}")

    entity_result = None
    attribute_result = None
    if config.enable_entity_branch:
        with _stage("entity"):
            entity_result = run_entity_branch(feats, noun_bank, config)
    if config.enable_attribute_branch:
        with _stage("attribute"):
            view = apply_adjective_filter(adjective_bank, config.enable_adjective_filter)
            attribute_result = run_attribute_branch(feats, view, config)

    with _stage("combine"):
        c1, variance, alpha = threshold_fuse(
            entity_result.fused if entity_result is not None else None,
            attribute_result.fused if attribute_result is not None else None,
            feats, config)
        return assemble_conditions(entity_result, attribute_result,
                                   c1, variance, alpha, config)
