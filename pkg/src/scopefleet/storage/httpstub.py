"""Filesystem-backed store stub speaking the PUT/GET object subset over HTTP.

    PUT /<key...>   store body under key (201)
    GET /<key...>   fetch object (200 / 404)

No listing endpoint exists; anything else answers 405. Run standalone via
`python -m scopefleet.storage.httpstub --root DIR --port N` or embedded
through `serve_store`. Credentials, when configured, ride in the
X-Access-Key / X-Secret-Key headers (taken from SCOPE_STORE_ACCESS_KEY /
SCOPE_STORE_SECRET_KEY in clients).
"""

from __future__ import annotations

import argparse
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import requests

from ..runtime import Environment, Event


class FileStoreHandler(BaseHTTPRequestHandler):
    root: Path
    oplog: list

    def _key(self) -> str:
        return self.path.lstrip("/")

    def log_message(self, *args):   # keep test output clean
        pass

    def do_PUT(self):
        key = self._key()
        length = int(self.headers.get("Content-Length", 0))
        data = self.rfile.read(length)
        path = (self.root / key).resolve()
        if not str(path).startswith(str(self.root.resolve())):
            self.send_error(400, "bad key")
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)   # single visible write
        self.oplog.append(("PUT", key))
        self.send_response(201)
        self.end_headers()

    def do_GET(self):
        key = self._key()
        path = (self.root / key).resolve()
        self.oplog.append(("GET", key))
        if not str(path).startswith(str(self.root.resolve())) or not path.is_file():
            self.send_error(404)
            return
        data = path.read_bytes()
        self.send_response(200)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_DELETE(self):
        self.send_error(405, "object store subset: PUT and GET only")

    do_POST = do_HEAD = do_DELETE


def serve_store(root: Path, port: int = 0) -> tuple[ThreadingHTTPServer, int]:
    handler = type("Handler", (FileStoreHandler,), {"root": Path(root), "oplog": []})
    server = ThreadingHTTPServer(("127.0.0.1", port), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, server.server_address[1]


class HttpStoreAdapter:
    """Blocking HTTP client offloaded to threads; completion events land on
    the scheduler via call_threadsafe (wall-clock deployments)."""

    def __init__(self, env: Environment, endpoint: str, timeout_s: float = 10.0):
        self.env = env
        self.endpoint = endpoint.rstrip("/")
        self.timeout_s = timeout_s
        self.headers = {}
        access = os.environ.get("SCOPE_STORE_ACCESS_KEY")
        secret = os.environ.get("SCOPE_STORE_SECRET_KEY")
        if access:
            self.headers = {"X-Access-Key": access, "X-Secret-Key": secret or ""}

    def _run(self, fn) -> Event:
        done = self.env.event()

        def work():
            try:
                result = fn()
            except requests.RequestException:
                result = (False, None)
            self.env.call_threadsafe(done.trigger, result)

        threading.Thread(target=work, daemon=True).start()
        return done

    def put(self, key: str, data: bytes) -> Event:
        def fn():
            r = requests.put(f"{self.endpoint}/{key}", data=data,
                             headers=self.headers, timeout=self.timeout_s)
            return (r.status_code in (200, 201), None)
        return self._run(fn)

    def get(self, key: str) -> Event:
        def fn():
            r = requests.get(f"{self.endpoint}/{key}", headers=self.headers,
                             timeout=self.timeout_s)
            if r.status_code == 200:
                return (True, r.content)
            return (r.status_code == 404, None)
        return self._run(fn)


def main(argv=None):
    parser = argparse.ArgumentParser(description="filesystem-backed object store stub")
    parser.add_argument("--root", required=True)
    parser.add_argument("--port", type=int, default=9000)
    args = parser.parse_args(argv)
    server, port = serve_store(Path(args.root), args.port)
    print(f"store stub on http://127.0.0.1:{port} root={args.root}", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        server.shutdown()


if __name__ == "__main__":
    main()
