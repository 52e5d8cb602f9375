"""HTTP facade exposing the fusion pipeline.

Built on stdlib ``ThreadingHTTPServer``: immutable banks are shared
across handler threads without locks, responses are canonical JSON so
identical request bodies produce identical response bytes, and shutdown
lets in-flight requests finish before the server closes.

Endpoints:
    GET  /v1/health  -> {"status": "ok"} once banks are loaded, else 503
    GET  /v1/banks   -> per-bank kind/dim/count/filtered_count metadata
    POST /v1/fuse    -> {"features": [...], "config": {partial overrides}}
                        returns the canonical condition-bundle JSON

Errors are JSON bodies {"code", "message", "stage"} with 4xx/5xx status.
"""
from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .bank import apply_adjective_filter, load_bank
from .core import FusionConfig
from .errors import DimMismatchError, ImgAnyError, WrongKindError
from .fusion import run_pipeline
from .wire import bundle_json_bytes, config_from_dict, document_bytes, parse_features

_log = logging.getLogger("imgany.service")

DEFAULT_MAX_BODY_BYTES = 8 * 1024 * 1024


@dataclass
class ServiceConfig:
    noun_bank_path: str
    adjective_bank_path: str
    host: str = "127.0.0.1"
    port: int = 8080
    fusion: FusionConfig = field(default_factory=FusionConfig)
    decoder_endpoint: str | None = None
    max_body_bytes: int = DEFAULT_MAX_BODY_BYTES


class _Server(ThreadingHTTPServer):
    # non-daemon handler threads + block_on_close means server_close()
    # waits for in-flight requests
    daemon_threads = False
    block_on_close = True
    allow_reuse_address = True
    service: "FusionService"


class FusionService:
    """Owns the banks, the default config, and the HTTP server.

    Banks load separately from construction so the unready (503) window
    is observable; after ``load_banks`` every request path is read-only.
    """

    def __init__(self, config: ServiceConfig):
        self.config = config
        self._noun_bank = None
        self._adjective_bank = None
        self._ready = threading.Event()
        self._server = _Server((config.host, config.port), _Handler)
        self._server.service = self

    @property
    def ready(self) -> bool:
        return self._ready.is_set()

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._server.server_address[:2]
        return str(host), int(port)

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def load_banks(self) -> None:
        noun = load_bank(self.config.noun_bank_path)
        adjective = load_bank(self.config.adjective_bank_path)
        if noun.kind != "noun":
            raise WrongKindError(f"{self.config.noun_bank_path}: expected a noun bank")
        if adjective.kind != "adjective":
            raise WrongKindError(f"{self.config.adjective_bank_path}: expected an adjective bank")
        if noun.dim != adjective.dim:
            raise DimMismatchError(f"banks disagree on dim: {noun.dim} != {adjective.dim}")
        self._noun_bank = noun
        self._adjective_bank = adjective
        self._ready.set()
        _log.info("banks loaded: %d nouns, %d adjectives, dim %d",
                  noun.count, adjective.count, noun.dim)

    def fuse(self, features, config: FusionConfig):
        return run_pipeline(features, self._noun_bank, self._adjective_bank, config)

    def bank_metadata(self) -> dict:
        banks = {}
        for bank in (self._noun_bank, self._adjective_bank):
            if bank.kind == "adjective" and self.config.fusion.enable_adjective_filter:
                filtered = apply_adjective_filter(bank, True).count
            else:
                filtered = bank.count
            banks[bank.kind] = {"kind": bank.kind, "dim": bank.dim,
                                "count": bank.count, "filtered_count": filtered}
        return {"banks": banks}

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def shutdown(self) -> None:
        self._server.shutdown()

    def close(self) -> None:
        self._server.server_close()


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "imgany/0.1"

    def log_message(self, fmt, *args):
        _log.debug("%s %s", self.address_string(), fmt % args)

    def _send(self, status: int, payload: bytes,
              content_type: str = "application/json") -> None:
        self.close_connection = True
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.send_header("Connection", "close")
        self.end_headers()
        self.wfile.write(payload)

    def _send_error(self, status: int, code: str, message: str,
                    stage: str | None = None) -> None:
        self._send(status, document_bytes({"code": code, "message": message, "stage": stage}))

    @property
    def _service(self) -> FusionService:
        return self.server.service

    def do_GET(self):
        if self.path == "/v1/health":
            if self._service.ready:
                self._send(200, document_bytes({"status": "ok"}))
            else:
                self._send(503, document_bytes({"status": "loading"}))
        elif self.path == "/v1/banks":
            if not self._service.ready:
                self._send_error(503, "NotReady", "banks are not loaded yet")
            else:
                self._send(200, document_bytes(self._service.bank_metadata()))
        else:
            self._send_error(404, "NotFound", f"no such endpoint: {self.path}")

    def do_POST(self):
        if self.path != "/v1/fuse":
            self._send_error(404, "NotFound", f"no such endpoint: {self.path}")
            return
        if not self._service.ready:
            self._send_error(503, "NotReady", "banks are not loaded yet")
            return
        length_header = self.headers.get("Content-Length")
        if length_header is None:
            self._send_error(411, "LengthRequired", "Content-Length header is required")
            return
        try:
            length = int(length_header)
        except ValueError:
            self._send_error(400, "BadRequest", "malformed Content-Length header")
            return
        if length > self._service.config.max_body_bytes:
            self._send_error(413, "BodyTooLarge",
                             f"body exceeds {self._service.config.max_body_bytes} bytes")
            return
        body = self.rfile.read(length)
        try:
            obj = json.loads(body)
        except json.JSONDecodeError as err:
            self._send_error(400, "BadJson", str(err))
            return
        if not isinstance(obj, dict):
            self._send_error(400, "BadRequest", "request body must be a JSON object")
            return
        try:
            features = parse_features(obj.get("features"))
            config = config_from_dict(obj.get("config"), base=self._service.config.fusion)
            bundle = self._service.fuse(features, config)
        except ImgAnyError as err:
            self._send_error(400, err.code, str(err), err.stage)
            return
        except Exception:
            _log.exception("fuse request failed")
            self._send_error(500, "Internal", "internal error")
            return
        self._send(200, bundle_json_bytes(bundle))
