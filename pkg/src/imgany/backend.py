"""Encoder/decoder boundary: a deterministic mock encoder for fully
self-contained runs, plus thin HTTP clients for a real encoder and
diffusion decoder served elsewhere.

The mock encoder needs no media assets: it hashes (modality, payload
text) into the key of a counter-based generator, so the same inputs give
bit-identical features on every run. Remote features pass the exact same
normalization and finiteness gate as local ones before they can enter
the pipeline.
"""
from __future__ import annotations

import base64
import http.client
import json
import socket
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from hashlib import blake2b

import numpy as np

from .core import ConditionBundle, ModalityFeature, ModalityTag, as_vector
from .errors import (
    BadStatusError,
    DimMismatchError,
    EmptyInputError,
    NotPngError,
    TransportError,
    ValidationError,
)
from .wire import bundle_to_dict

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_MAX_RETRIES = 2  # idempotent requests only; total attempts = retries + 1
_BACKOFF_S = 0.2


@dataclass(frozen=True)
class EncodeRequest:
    """One payload to embed via a remote frozen encoder."""

    modality: ModalityTag
    payload: bytes
    payload_kind: str = "text/plain"

    def __post_init__(self):
        if not self.payload:
            raise EmptyInputError("encode payload must be nonempty")


@dataclass(frozen=True, eq=False)
class DecodeRequest:
    """One image to synthesize from a condition bundle."""

    bundle: ConditionBundle
    width: int = 512
    height: int = 512
    steps: int = 30
    seed: int = 0

    def __post_init__(self):
        for name in ("width", "height"):
            value = getattr(self, name)
            if value < 8 or value % 8 != 0:
                raise ValidationError(f"{name} must be a positive multiple of 8",
                                      code="BadDecodeRequest")
        if self.steps < 1:
            raise ValidationError("steps must be >= 1", code="BadDecodeRequest")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must fit in 64 unsigned bits",
                                  code="BadDecodeRequest")


def mock_encode(modality, payload_text: str, dim: int) -> ModalityFeature:
    """Deterministic stand-in for a frozen encoder.

    Seeds a counter-based generator (Philox) with a stable 64-bit digest
    of (modality name, payload text) and samples a unit gaussian
    direction. Identical inputs give bit-identical features across runs
    and platforms; different modalities decorrelate via the digest salt.
    """
    if dim < 2:
        raise ValidationError("dim must be >= 2", code="BadDim")
    tag = modality if isinstance(modality, ModalityTag) else ModalityTag.from_name(str(modality))
    digest = blake2b(f"{tag.label}\x00{payload_text}".encode("utf-8"), digest_size=8).digest()
    gen = np.random.Generator(np.random.Philox(key=int.from_bytes(digest, "little")))
    return ModalityFeature(tag, gen.standard_normal(dim))


def _post_json(url: str, obj, *, timeout: float) -> tuple[int, bytes]:
    body = json.dumps(obj).encode("utf-8")
    last_err = None
    for attempt in range(_MAX_RETRIES + 1):
        req = urllib.request.Request(url, data=body, method="POST",
                                     headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=timeout) as resp:
                return resp.status, resp.read()
        except urllib.error.HTTPError as err:
            return err.code, err.read()  # got a status line; not a transport failure
        except (urllib.error.URLError, http.client.HTTPException,
                ConnectionError, socket.timeout, TimeoutError, OSError) as err:
            last_err = err
            if attempt < _MAX_RETRIES:
                time.sleep(_BACKOFF_S * (2 ** attempt))
    raise TransportError(f"POST {url} failed after {_MAX_RETRIES + 1} attempts: {last_err}")


def encode_remote(request: EncodeRequest, endpoint: str, *,
                  expected_dim: int | None = None, timeout: float = 30.0) -> ModalityFeature:
    """Embed a payload via the remote encoder; the result passes the local ingest gate."""
    url = endpoint.rstrip("/") + "/v1/encode"
    status, body = _post_json(url, {
        "modality": request.modality.label,
        "payload": base64.b64encode(request.payload).decode("ascii"),
        "payload_kind": request.payload_kind,
    }, timeout=timeout)
    if status != 200:
        raise BadStatusError(f"{url} returned {status}: {body[:200]!r}", status=status)
    try:
        obj = json.loads(body)
    except json.JSONDecodeError as err:
        raise ValidationError(f"bad encoder response: {err}", code="BadResponse") from None
    if not isinstance(obj, dict) or "embedding" not in obj:
        raise ValidationError("encoder response lacks an embedding", code="BadResponse")
    echoed = obj.get("modality")
    if echoed is not None and ModalityTag.from_name(echoed) != request.modality:
        raise ValidationError(f"encoder echoed modality {echoed!r}, "
                              f"expected {request.modality.label!r}", code="BadResponse")
    vec = as_vector(obj["embedding"])
    if expected_dim is not None and vec.shape[0] != expected_dim:
        raise DimMismatchError(f"encoder returned dim {vec.shape[0]}, expected {expected_dim}")
    return ModalityFeature(request.modality, vec)


def decode_remote(request: DecodeRequest, endpoint: str, *,
                  timeout: float = 120.0) -> bytes:
    """Render the bundle via the remote diffusion decoder; returns PNG bytes."""
    url = endpoint.rstrip("/") + "/v1/decode"
    status, body = _post_json(url, {
        "bundle": bundle_to_dict(request.bundle),
        "width": request.width,
        "height": request.height,
        "steps": request.steps,
        "seed": request.seed,
    }, timeout=timeout)
    if status != 200:
        raise BadStatusError(f"{url} returned {status}: {body[:200]!r}", status=status)
    if not body.startswith(PNG_SIGNATURE):
        raise NotPngError(f"decoder returned non-PNG bytes ({body[:8]!r})")
    return body
