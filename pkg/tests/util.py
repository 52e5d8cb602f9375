"""Process/HTTP plumbing for the test suite."""
from __future__ import annotations

import contextlib
import json
import os
import subprocess
import sys
import threading
import time
import urllib.error
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from imgany import FusionService, ServiceConfig

REPO = Path(__file__).resolve().parents[1]


def run_cli(*args, cwd=None) -> subprocess.CompletedProcess:
    env = os.environ.copy()
    env["PYTHONPATH"] = str(REPO / "src") + os.pathsep + env.get("PYTHONPATH", "")
    return subprocess.run([sys.executable, "-m", "imgany", *args],
                          capture_output=True, text=True, env=env, cwd=cwd)


def http_get(url: str, timeout: float = 10.0) -> tuple[int, bytes]:
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as err:
        return err.code, err.read()


def http_post(url: str, payload, timeout: float = 30.0) -> tuple[int, bytes]:
    body = payload if isinstance(payload, bytes) else json.dumps(payload).encode("utf-8")
    req = urllib.request.Request(url, data=body, method="POST",
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as err:
        return err.code, err.read()


@contextlib.contextmanager
def service_running(noun_path, adjective_path, *, fusion=None, load=True,
                    max_body_bytes=None):
    kwargs = {}
    if fusion is not None:
        kwargs["fusion"] = fusion
    if max_body_bytes is not None:
        kwargs["max_body_bytes"] = max_body_bytes
    service = FusionService(ServiceConfig(
        noun_bank_path=str(noun_path), adjective_bank_path=str(adjective_path),
        host="127.0.0.1", port=0, **kwargs))
    if load:
        service.load_banks()
    thread = threading.Thread(target=service.serve_forever, daemon=True)
    thread.start()
    try:
        yield service
    finally:
        service.shutdown()
        service.close()
        thread.join(timeout=10)


@contextlib.contextmanager
def stub_server(respond):
    """Tiny HTTP stub; ``respond(path, body) -> (status, content_type, payload)``."""
    calls: list[str] = []

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):
            pass

        def do_POST(self):
            calls.append(self.path)
            length = int(self.headers.get("Content-Length", 0) or 0)
            body = self.rfile.read(length)
            status, content_type, payload = respond(self.path, body)
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(payload)))
            self.send_header("Connection", "close")
            self.end_headers()
            self.wfile.write(payload)

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{server.server_address[1]}"
    try:
        yield url, calls
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=10)


def wait_until(predicate, timeout: float = 10.0, interval: float = 0.05) -> bool:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(interval)
    return False
