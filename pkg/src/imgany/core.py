"""Shared domain types and vector numerics.

Embeddings are plain 1-D numpy float64 arrays living in one shared
representation space. Modality features are unit-normalized when they are
constructed, and everything downstream is a pure function over immutable
values, so any number of pipelines can run concurrently over the same
objects without coordination.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimMismatchError,
    EmptyInputError,
    NoBranchesError,
    NonFiniteError,
    TagMismatchError,
    ValidationError,
    ZeroVectorError,
)

# Unit-norm tolerances: loose on ingest (upstream storage is float32),
# tight on anything produced by internal float64 arithmetic.
NORM_TOL_INGEST = 1e-6
NORM_TOL_INTERNAL = 1e-9
ZERO_NORM_EPS = 1e-12


class ModalityTag(enum.IntEnum):
    """Closed set of input channels; the numeric value is the canonical order."""

    TEXT = 0
    AUDIO = 1
    IMAGE = 2
    POINT_CLOUD = 3
    THERMAL = 4
    DEPTH = 5
    EVENT = 6

    @property
    def label(self) -> str:
        return _TAG_LABELS[self]

    @classmethod
    def from_name(cls, name: str) -> "ModalityTag":
        """Case-insensitive lookup; accepts 'PointCloud', 'point_cloud', etc."""
        if not isinstance(name, str):
            raise ValidationError(f"modality name must be a string, got {type(name).__name__}",
                                  code="UnknownModality")
        key = name.strip().lower().replace("_", "").replace("-", "")
        try:
            return _TAG_BY_NAME[key]
        except KeyError:
            raise ValidationError(f"unknown modality {name!r}", code="UnknownModality") from None


_TAG_LABELS = {
    ModalityTag.TEXT: "Text",
    ModalityTag.AUDIO: "Audio",
    ModalityTag.IMAGE: "Image",
    ModalityTag.POINT_CLOUD: "PointCloud",
    ModalityTag.THERMAL: "Thermal",
    ModalityTag.DEPTH: "Depth",
    ModalityTag.EVENT: "Event",
}
_TAG_BY_NAME = {label.lower(): tag for tag, label in _TAG_LABELS.items()}


def as_vector(values, *, dtype=np.float64) -> np.ndarray:
    """Coerce to a finite, nonempty 1-D float array."""
    try:
        v = np.asarray(values, dtype=dtype)
    except (TypeError, ValueError) as err:
        raise ValidationError(f"not a numeric vector: {err}", code="BadEmbedding") from None
    if v.ndim != 1:
        raise ValidationError(f"expected a 1-D vector, got shape {v.shape}", code="BadEmbedding")
    if v.size == 0:
        raise EmptyInputError("empty vector")
    if not np.all(np.isfinite(v)):
        raise NonFiniteError("vector contains NaN or Inf")
    return v


def normalize(v) -> np.ndarray:
    """Rescale to unit L2 norm, preserving direction.

    Vectors that are already unit within ``NORM_TOL_INTERNAL`` pass through
    unchanged, so selection identities (fusing with a weight of exactly one,
    single-branch ablations) stay bit-exact.
    """
    v = as_vector(v)
    n = float(np.linalg.norm(v))
    if not math.isfinite(n):
        # components are finite but their squares overflowed; rescale first
        v = v / float(np.max(np.abs(v)))
        n = float(np.linalg.norm(v))
    if n <= ZERO_NORM_EPS:
        raise ZeroVectorError(f"cannot normalize a vector with norm {n:.3e}")
    if abs(n - 1.0) <= NORM_TOL_INTERNAL:
        return v
    return v / n


@dataclass(frozen=True, eq=False)
class ModalityFeature:
    """One modality's embedding, unit-normalized at construction."""

    tag: ModalityTag
    embedding: np.ndarray

    def __post_init__(self):
        if not isinstance(self.tag, ModalityTag):
            object.__setattr__(self, "tag", ModalityTag(self.tag))
        vec = np.array(normalize(self.embedding), dtype=np.float64)
        vec.setflags(write=False)
        object.__setattr__(self, "embedding", vec)

    @property
    def dim(self) -> int:
        return int(self.embedding.shape[0])


def ordered_features(features: Sequence[ModalityFeature]) -> list[ModalityFeature]:
    """Validate a feature list and return it sorted in canonical modality order.

    Sorting here is what makes every downstream sum independent of the
    order the caller supplied the features in.
    """
    if features is None or len(features) == 0:
        raise EmptyInputError("no modality features")
    feats = sorted(features, key=lambda f: f.tag)
    dim = feats[0].dim
    for f in feats[1:]:
        if f.dim != dim:
            raise DimMismatchError(f"feature dims differ: {f.dim} != {dim}")
    return feats


def mean_feature(features: Sequence[ModalityFeature]) -> np.ndarray:
    """Elementwise arithmetic mean of the modality embeddings.

    Deliberately not renormalized: retrieval normalizes its query
    internally, which cannot change cosine rankings.
    """
    feats = ordered_features(features)
    rows = np.stack([f.embedding for f in feats])
    return rows.sum(axis=0) / float(len(feats))


def total_variance(features: Sequence[ModalityFeature]) -> float:
    """Spread of the unit-norm modality features, in [0, 1].

    Defined as 1 - ||mean||^2, which for unit-norm inputs equals the
    per-dimension biased variances summed over dimensions: exactly 0 for
    identical features, approaching 1 as they point every which way.
    Values below 1e-12 snap to 0.0 so the identical-feature case is exact
    despite rounding.
    """
    m = mean_feature(features)
    v = 1.0 - float(np.dot(m, m))
    if v <= ZERO_NORM_EPS:
        return 0.0
    return min(v, 1.0)


@dataclass(frozen=True)
class FusionConfig:
    """Knobs for one pipeline run. Immutable and validated on construction."""

    k_entity: int = 4
    k_attribute: int = 4
    variance_threshold: float = 0.8
    entity_upweight: float = 0.6
    balanced_weight: float = 0.5
    enable_entity_branch: bool = True
    enable_attribute_branch: bool = True
    enable_adjective_filter: bool = True

    def __post_init__(self):
        if self.k_entity < 1 or self.k_attribute < 1:
            raise ValidationError("k_entity and k_attribute must be >= 1", code="BadConfig")
        for name in ("variance_threshold", "entity_upweight", "balanced_weight"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and 0.0 <= float(value) <= 1.0):
                raise ValidationError(f"{name} must lie in [0, 1], got {value!r}", code="BadConfig")
        if not (self.enable_entity_branch or self.enable_attribute_branch):
            raise NoBranchesError("at least one fusion branch must be enabled")


WEIGHT_KINDS = ("entity", "attribute")


@dataclass(frozen=True)
class FusionWeights:
    """Per-modality fusion weights with their provenance.

    ``raw`` holds the branch formula's output; ``normalized`` is the
    clamped-linear rescaling actually used for the weighted sum: negatives
    clamp to zero, the rest divide by their total, and an all-zero total
    falls back to uniform weights.
    """

    kind: str
    raw: dict[ModalityTag, float]
    normalized: dict[ModalityTag, float]

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValidationError(f"weight kind must be one of {WEIGHT_KINDS}", code="BadWeights")
        if set(self.raw) != set(self.normalized):
            raise TagMismatchError("raw and normalized weights cover different modalities")
        values = list(self.normalized.values())
        if min(values) < 0.0 or abs(sum(values) - 1.0) > NORM_TOL_INTERNAL:
            raise ValidationError("normalized weights must be a probability vector",
                                  code="BadWeights")

    @classmethod
    def from_raw(cls, kind: str, raw: dict[ModalityTag, float]) -> "FusionWeights":
        tags = sorted(raw)
        clamped = [max(0.0, float(raw[t])) for t in tags]
        total = sum(clamped)
        if total <= NORM_TOL_INTERNAL:
            normalized = {t: 1.0 / len(tags) for t in tags}
        else:
            normalized = {t: c / total for t, c in zip(tags, clamped)}
        return cls(kind=kind, raw={t: float(raw[t]) for t in tags}, normalized=normalized)


@dataclass(frozen=True, eq=False)
class ConditionBundle:
    """The engine's sole product: one fused embedding plus two word strings.

    ``c1`` is the unit-norm fused feature, ``c2`` the comma-joined entity
    words, ``c3`` the comma-joined attribute words. Weight, variance and
    alpha diagnostics plus the exact config used ride along so any bundle
    can be reproduced.
    """

    c1: np.ndarray
    c2: str
    c3: str
    entity_weights: FusionWeights | None
    attribute_weights: FusionWeights | None
    variance: float
    alpha: float
    config: FusionConfig

    def __post_init__(self):
        vec = as_vector(self.c1)
        if abs(float(np.linalg.norm(vec)) - 1.0) > NORM_TOL_INGEST:
            raise ValidationError("c1 must be unit-normalized", code="BadBundle")
        if not 0.0 <= self.variance <= 1.0:
            raise ValidationError(f"variance {self.variance!r} outside [0, 1]", code="BadBundle")
        vec = np.array(vec, dtype=np.float64)
        vec.setflags(write=False)
        object.__setattr__(self, "c1", vec)
