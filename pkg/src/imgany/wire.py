"""Wire formats: canonical JSON plus (de)serialization of features,
configs, and condition bundles.

Canonical form: object keys sorted, floats rendered at nine significant
digits (%.9g), compact separators, UTF-8, one trailing newline on whole
documents. Equal in-memory values therefore serialize to equal bytes,
which is what makes the CLI-vs-service byte-equality contract testable.
"""
from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .core import ConditionBundle, FusionConfig, FusionWeights, ModalityFeature, ModalityTag
from .errors import (
    DimMismatchError,
    DuplicateModalityError,
    EmptyInputError,
    NonFiniteError,
    ParseError,
    ValidationError,
)

CONFIG_INT_FIELDS = ("k_entity", "k_attribute")
CONFIG_FLOAT_FIELDS = ("variance_threshold", "entity_upweight", "balanced_weight")
CONFIG_BOOL_FIELDS = ("enable_entity_branch", "enable_attribute_branch",
                      "enable_adjective_filter")


def format_float(value: float) -> str:
    if not math.isfinite(value):
        raise NonFiniteError("cannot serialize NaN or Inf")
    return format(float(value), ".9g")


def canonical_json(obj) -> str:
    out: list[str] = []
    _emit(obj, out)
    return "".join(out)


def _emit(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"object keys must be strings, got {type(key).__name__}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def document_bytes(obj) -> bytes:
    return (canonical_json(obj) + "\n").encode("utf-8")


# -- features ----------------------------------------------------------------

def parse_feature(obj, *, require_dim: bool = False) -> ModalityFeature:
    """{"modality": name, "embedding": [floats...]} with an optional "dim" echo."""
    if not isinstance(obj, dict):
        raise ValidationError("feature must be a JSON object", code="BadFeature")
    tag = ModalityTag.from_name(obj.get("modality"))
    emb = obj.get("embedding")
    if not isinstance(emb, list) or not emb or \
            not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in emb):
        raise ValidationError(f"{tag.label}: missing or non-numeric embedding",
                              code="BadEmbedding")
    if require_dim and "dim" not in obj:
        raise ValidationError(f"{tag.label}: missing \"dim\"", code="BadFeature")
    if "dim" in obj:
        dim = obj["dim"]
        if not isinstance(dim, int) or isinstance(dim, bool) or dim != len(emb):
            raise DimMismatchError(
                f"{tag.label}: declared dim {dim!r} != embedding length {len(emb)}")
    return ModalityFeature(tag, np.asarray(emb, dtype=np.float64))


def parse_features(objs, *, require_dim: bool = False) -> list[ModalityFeature]:
    if not isinstance(objs, list) or not objs:
        raise EmptyInputError("\"features\" must be a nonempty array")
    features = []
    seen: set[ModalityTag] = set()
    for obj in objs:
        feature = parse_feature(obj, require_dim=require_dim)
        if feature.tag in seen:
            raise DuplicateModalityError(f"modality {feature.tag.label} appears twice")
        seen.add(feature.tag)
        features.append(feature)
    return features


def load_feature_file(path) -> ModalityFeature:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as err:
            raise ParseError(f"{path}: {err.msg}", line=err.lineno) from None
    return parse_feature(obj, require_dim=True)


def load_features_path(path) -> list[ModalityFeature]:
    """One feature JSON file, or a directory of them (one file per modality)."""
    p = Path(path)
    files = sorted(p.glob("*.json")) if p.is_dir() else [p]
    if not files:
        raise EmptyInputError(f"no *.json feature files under {p}")
    features = []
    seen: dict[ModalityTag, Path] = {}
    for file in files:
        feature = load_feature_file(file)
        if feature.tag in seen:
            raise DuplicateModalityError(
                f"modality {feature.tag.label} appears in both {seen[feature.tag]} and {file}")
        seen[feature.tag] = file
        features.append(feature)
    return features


def feature_to_dict(feature: ModalityFeature) -> dict:
    return {
        "modality": feature.tag.label,
        "dim": feature.dim,
        "embedding": [float(x) for x in feature.embedding],
    }


# -- config ------------------------------------------------------------------

def config_from_dict(overrides, base: FusionConfig | None = None) -> FusionConfig:
    """Apply partial overrides onto a base config, with strict key/type checks."""
    if base is None:
        base = FusionConfig()
    if overrides is None:
        return base
    if not isinstance(overrides, dict):
        raise ValidationError("config must be a JSON object", code="BadConfig")
    clean = {}
    for key, value in overrides.items():
        if key in CONFIG_INT_FIELDS:
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValidationError(f"{key} must be an integer", code="BadConfig")
            clean[key] = value
        elif key in CONFIG_FLOAT_FIELDS:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValidationError(f"{key} must be a number", code="BadConfig")
            clean[key] = float(value)
        elif key in CONFIG_BOOL_FIELDS:
            if not isinstance(value, bool):
                raise ValidationError(f"{key} must be a boolean", code="BadConfig")
            clean[key] = value
        else:
            raise ValidationError(f"unknown config key {key!r}", code="UnknownConfigKey")
    return dataclasses.replace(base, **clean)


def config_to_dict(config: FusionConfig) -> dict:
    return {
        "k_entity": config.k_entity,
        "k_attribute": config.k_attribute,
        "variance_threshold": float(config.variance_threshold),
        "entity_upweight": float(config.entity_upweight),
        "balanced_weight": float(config.balanced_weight),
        "enable_entity_branch": config.enable_entity_branch,
        "enable_attribute_branch": config.enable_attribute_branch,
        "enable_adjective_filter": config.enable_adjective_filter,
    }


# -- bundles -----------------------------------------------------------------

def weights_to_dict(weights: FusionWeights | None) -> dict | None:
    if weights is None:
        return None
    return {
        "kind": weights.kind,
        "raw": {tag.label: float(v) for tag, v in weights.raw.items()},
        "normalized": {tag.label: float(v) for tag, v in weights.normalized.items()},
    }


def bundle_to_dict(bundle: ConditionBundle) -> dict:
    return {
        "c1": [float(x) for x in bundle.c1],
        "c2": bundle.c2,
        "c3": bundle.c3,
        "entity_weights": weights_to_dict(bundle.entity_weights),
        "attribute_weights": weights_to_dict(bundle.attribute_weights),
        "variance": float(bundle.variance),
        "alpha": float(bundle.alpha),
        "config": config_to_dict(bundle.config),
    }


def bundle_json_bytes(bundle: ConditionBundle) -> bytes:
    return document_bytes(bundle_to_dict(bundle))
