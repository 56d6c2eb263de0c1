"""Minimal local status endpoint for a gateway store.

GET /alerts            -> plain-text alert log
GET /reports           -> list of report dates
GET /reports/<date>    -> that day's missing-data report
"""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path


def make_handler(store: Path):
    class StatusHandler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # quiet
            pass

        def _send(self, code: int, body: str, content_type: str = "text/plain"):
            data = body.encode()
            self.send_response(code)
            self.send_header("Content-Type", f"{content_type}; charset=utf-8")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            if self.path == "/alerts":
                path = store / "alerts.log"
                self._send(200, path.read_text() if path.exists() else "")
            elif self.path == "/reports":
                rep_dir = store / "reports"
                dates = sorted(p.stem for p in rep_dir.glob("*.txt")) if rep_dir.exists() else []
                self._send(200, json.dumps({"dates": dates}), "application/json")
            elif self.path.startswith("/reports/"):
                date = self.path.rsplit("/", 1)[1]
                path = store / "reports" / f"{date}.txt"
                if path.exists():
                    self._send(200, path.read_text())
                else:
                    self._send(404, f"no report for {date}\n")
            else:
                self._send(404, "unknown path\n")

    return StatusHandler


def serve_status(store: Path, port: int) -> None:
    server = ThreadingHTTPServer(("127.0.0.1", port), make_handler(store))
    print(f"gateway status on http://127.0.0.1:{port}")
    server.serve_forever()
