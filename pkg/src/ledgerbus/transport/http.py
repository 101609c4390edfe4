"""HTTP/JSON binding of the wire protocol.

POST {base_path}/v1/{kind} with the message body as canonical JSON and an
X-Correlation-Id header; the response body is the reply body (status field
included) and the HTTP code mirrors the reply status. Built on the stdlib
threading HTTP server: one server per (host, port), many base paths.
"""
from __future__ import annotations

import http.client
import logging
import socket
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..encoding import canonical_json, from_json
from .wire import (DEFAULT_DEADLINE_S, BindError, ConnectionRefused, Endpoint,
                   HTTP_STATUS, MalformedReply, Reply, STATUS_HTTP,
                   TransportTimeout, WireKind, WireMessage)

log = logging.getLogger(__name__)

_KINDS = {k.value for k in WireKind}


class _Router:
    def __init__(self) -> None:
        self.handlers: dict[str, object] = {}  # base_path -> handler


def _make_request_handler(router: _Router):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet; use logging instead
            log.debug("http: " + fmt, *args)

        def do_POST(self):
            correlation = self.headers.get("X-Correlation-Id", "")
            status, body = self._dispatch(correlation)
            payload = canonical_json({"status": status, **body})
            self.send_response(STATUS_HTTP.get(status, 500))
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.send_header("X-Correlation-Id", correlation)
            self.end_headers()
            self.wfile.write(payload)

        def _dispatch(self, correlation: str) -> tuple[str, dict]:
            path = self.path.rstrip("/")
            base, sep, tail = path.rpartition("/v1/")
            if not sep or tail not in _KINDS:
                return "bad_request", {"reason": f"unknown path: {self.path}"}
            handler = router.handlers.get(base)
            if handler is None:
                return "bad_request", {"reason": f"no service at {base or '/'}"}
            try:
                length = int(self.headers.get("Content-Length", "0"))
                raw = self.rfile.read(length)
                body = from_json(raw) if raw else {}
                if not isinstance(body, dict):
                    raise ValueError("body must be an object")
            except Exception as err:
                return "bad_request", {"reason": f"malformed body: {err}"}
            msg = WireMessage(WireKind(tail), body, correlation or "-")
            try:
                reply = handler(msg)
            except Exception:
                log.exception("handler failed for %s", self.path)
                return "error", {"reason": "handler exception"}
            if not isinstance(reply, Reply):
                return "error", {"reason": "handler returned no reply"}
            return reply.status, reply.body

    return Handler


class _Server:
    def __init__(self, host: str, port: int):
        self.router = _Router()
        self.httpd = ThreadingHTTPServer((host, port), _make_request_handler(self.router))
        self.httpd.daemon_threads = True
        self.thread = threading.Thread(target=self.httpd.serve_forever,
                                       name=f"http-{port}", daemon=True)
        self.thread.start()

    def close(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        self.thread.join()


class HttpBinding:
    def __init__(self, transport: "HttpTransport", endpoint: Endpoint):
        self._transport = transport
        self.endpoint = endpoint

    def close(self) -> None:
        self._transport._unbind(self.endpoint)


class HttpTransport:
    def __init__(self) -> None:
        self._servers: dict[tuple[str, int], _Server] = {}
        self._lock = threading.Lock()

    def serve(self, endpoint: Endpoint, handler) -> HttpBinding:
        key = (endpoint.host, endpoint.port)
        with self._lock:
            server = self._servers.get(key)
            if server is None:
                try:
                    server = _Server(endpoint.host, endpoint.port)
                except OSError as err:
                    raise BindError(f"cannot bind {endpoint}: {err}") from err
                self._servers[key] = server
            if endpoint.base_path in server.router.handlers:
                raise BindError(f"endpoint already bound: {endpoint}")
            server.router.handlers[endpoint.base_path] = handler
        return HttpBinding(self, endpoint)

    def _unbind(self, endpoint: Endpoint) -> None:
        key = (endpoint.host, endpoint.port)
        with self._lock:
            server = self._servers.get(key)
            if server is None:
                return
            server.router.handlers.pop(endpoint.base_path, None)
            if not server.router.handlers:
                self._servers.pop(key)
                server.close()

    def close(self) -> None:
        with self._lock:
            servers = list(self._servers.values())
            self._servers.clear()
        for server in servers:
            server.close()

    def send(self, endpoint: Endpoint, msg: WireMessage,
             deadline_s: float = DEFAULT_DEADLINE_S) -> Reply:
        conn = http.client.HTTPConnection(endpoint.host, endpoint.port, timeout=deadline_s)
        path = f"{endpoint.base_path}/v1/{msg.kind.value}"
        try:
            conn.request("POST", path, body=msg.body_bytes(),
                         headers={"Content-Type": "application/json",
                                  "X-Correlation-Id": msg.correlation_id})
            resp = conn.getresponse()
            raw = resp.read()
        except socket.timeout as err:
            raise TransportTimeout(f"no reply from {endpoint} within {deadline_s}s") from err
        except ConnectionRefusedError as err:
            raise ConnectionRefused(f"connection refused: {endpoint}") from err
        except OSError as err:
            raise ConnectionRefused(f"cannot reach {endpoint}: {err}") from err
        finally:
            conn.close()
        try:
            body = from_json(raw)
            status = body.pop("status")
        except Exception as err:
            raise MalformedReply(f"undecodable reply from {endpoint}: {err}") from err
        if status not in STATUS_HTTP:
            raise MalformedReply(f"unknown reply status {status!r}")
        return Reply(status, body, msg.correlation_id)
