"""Read-only local HTTP service for the exploration hub.

Endpoints: ``/api/cmap`` (the canonical document), ``/api/overlay?features=a,b``
(known/new statuses for a product configuration), and ``/api/asset/<path>``
(raw corpus files, jailed to the corpus root).  Everything else is served from
the optional viewer bundle directory.
"""

from __future__ import annotations

import json
import os
import sys
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, unquote, urlparse

from .cmap_document import CmapDocument, DocumentError, known_overlay, load_document, to_json_text
from .errors import SplcmapError


class ServerError(SplcmapError):
    """The service cannot start (missing document, busy port)."""


_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".mjs": "application/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".map": "application/json; charset=utf-8",
}

_FALLBACK_INDEX = """<!doctype html>
<html><head><meta charset="utf-8"><title>splcmap</title></head>
<body>
<h1>splcmap service</h1>
<p>No viewer bundle is configured. Available endpoints:</p>
<ul>
<li><a href="/api/cmap">/api/cmap</a></li>
<li>/api/overlay?features=a,b</li>
<li>/api/asset/&lt;corpus-relative-path&gt;</li>
</ul>
</body></html>
"""


def _resolve_jailed(base: Path, relative: str) -> Optional[Path]:
    """Resolve `relative` under `base`; None when it escapes the jail."""
    if "\0" in relative:
        return None
    candidate = (base / relative.lstrip("/")).resolve()
    base = base.resolve()
    if candidate == base or base in candidate.parents:
        return candidate
    return None


class CmapRequestHandler(BaseHTTPRequestHandler):
    server_version = "splcmap"

    def log_message(self, format: str, *args) -> None:  # noqa: A002
        if getattr(self.server, "verbose", False):
            sys.stderr.write("%s - %s\n" % (self.address_string(), format % args))

    def _send(self, status: int, content_type: str, body: bytes) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, payload: dict) -> None:
        body = (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")
        self._send(status, "application/json; charset=utf-8", body)

    def do_GET(self) -> None:  # noqa: N802
        parsed = urlparse(self.path)
        path = unquote(parsed.path)
        if path == "/api/cmap":
            self._send(
                200, "application/json; charset=utf-8", self.server.document_text.encode("utf-8")
            )
        elif path == "/api/overlay":
            self._handle_overlay(parsed.query)
        elif path.startswith("/api/asset/"):
            self._handle_asset(path[len("/api/asset/") :])
        elif path.startswith("/api/"):
            self._send_json(404, {"error": f"unknown endpoint: {path}"})
        else:
            self._handle_static(path)

    def _handle_overlay(self, query: str) -> None:
        params = parse_qs(query)
        raw = params.get("features", [""])[0]
        names = [n.strip() for n in raw.split(",") if n.strip()]
        try:
            overlay = known_overlay(self.server.document, names)
        except DocumentError as exc:
            self._send_json(400, {"error": str(exc)})
            return
        statuses = {cid: status.value for cid, status in sorted(overlay.statuses.items())}
        self._send_json(200, {"statuses": statuses})

    def _handle_asset(self, relative: str) -> None:
        corpus_root = self.server.corpus_root
        if corpus_root is None:
            self._send_json(404, {"error": "no corpus root configured"})
            return
        target = _resolve_jailed(corpus_root, relative)
        if target is None:
            self._send_json(403, {"error": "path escapes the corpus root"})
            return
        if not target.is_file():
            self._send_json(404, {"error": f"no such asset: {relative}"})
            return
        self._send(200, "text/plain; charset=utf-8", target.read_bytes())

    def _handle_static(self, path: str) -> None:
        viewer_dir = self.server.viewer_dir
        if path in ("", "/"):
            path = "/index.html"
        if viewer_dir is None:
            if path == "/index.html":
                self._send(200, "text/html; charset=utf-8", _FALLBACK_INDEX.encode("utf-8"))
            else:
                self._send_json(404, {"error": "no viewer bundle configured"})
            return
        target = _resolve_jailed(viewer_dir, path)
        if target is None:
            self._send_json(403, {"error": "path escapes the viewer bundle"})
            return
        if not target.is_file():
            self._send_json(404, {"error": f"not found: {path}"})
            return
        content_type = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self._send(200, content_type, target.read_bytes())


class CmapServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(
        self,
        address: tuple[str, int],
        document: CmapDocument,
        document_text: str,
        corpus_root: Optional[Path],
        viewer_dir: Optional[Path],
        verbose: bool = False,
    ):
        super().__init__(address, CmapRequestHandler)
        self.document = document
        self.document_text = document_text
        self.corpus_root = corpus_root
        self.viewer_dir = viewer_dir
        self.verbose = verbose


def make_server(
    doc_path: str | Path,
    corpus_root: Optional[str | Path] = None,
    viewer_dir: Optional[str | Path] = None,
    host: str = "127.0.0.1",
    port: int = 8750,
    verbose: bool = False,
) -> CmapServer:
    document = load_document(doc_path)
    document_text = to_json_text(document)
    corpus = Path(corpus_root) if corpus_root is not None else None
    if corpus is not None and not corpus.is_dir():
        raise ServerError(f"corpus root does not exist: {corpus}")
    viewer = Path(viewer_dir) if viewer_dir is not None else None
    if viewer is not None and not viewer.is_dir():
        raise ServerError(f"viewer bundle directory does not exist: {viewer}")
    try:
        return CmapServer((host, port), document, document_text, corpus, viewer, verbose)
    except OSError as exc:
        raise ServerError(f"cannot bind {host}:{port}: {exc}") from exc


def serve(
    doc_path: str | Path,
    corpus_root: Optional[str | Path] = None,
    viewer_dir: Optional[str | Path] = None,
    host: str = "127.0.0.1",
    port: int = 8750,
) -> None:
    """Serve until interrupted."""
    server = make_server(doc_path, corpus_root, viewer_dir, host, port, verbose=True)
    host, actual_port = server.server_address[:2]
    print(f"serving concept map on http://{host}:{actual_port}/ (Ctrl-C to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
