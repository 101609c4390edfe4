"""In-process simulated transport with latency and fault injection.

Handlers run inline on the sender's thread, so concurrency mirrors the
caller's. Per-endpoint profiles inject fixed latency, uniform jitter,
probabilistic drops, or a hard "down" state. Sending to an endpoint nobody
serves behaves like a black hole: the call times out at the deadline.
"""
from __future__ import annotations

import logging
import random
import threading
import time
from dataclasses import dataclass

from .wire import (DEFAULT_DEADLINE_S, BindError, ConnectionRefused, Endpoint,
                   Reply, TransportTimeout, WireMessage)

log = logging.getLogger(__name__)


@dataclass
class FaultProfile:
    latency_s: float = 0.0
    jitter_s: float = 0.0
    drop_probability: float = 0.0
    down: bool = False


class SimBinding:
    def __init__(self, transport: "SimTransport", endpoint: Endpoint):
        self._transport = transport
        self.endpoint = endpoint

    def close(self) -> None:
        self._transport._unbind(self.endpoint)


class SimTransport:
    def __init__(self, seed: int = 0):
        self._handlers: dict[Endpoint, object] = {}
        self._profiles: dict[Endpoint, FaultProfile] = {}
        self._lock = threading.Lock()
        self._rng = random.Random(seed)

    # -- wiring ------------------------------------------------------------

    def serve(self, endpoint: Endpoint, handler) -> SimBinding:
        with self._lock:
            if endpoint in self._handlers:
                raise BindError(f"endpoint already bound: {endpoint}")
            self._handlers[endpoint] = handler
        return SimBinding(self, endpoint)

    def _unbind(self, endpoint: Endpoint) -> None:
        with self._lock:
            self._handlers.pop(endpoint, None)

    def set_profile(self, endpoint: Endpoint, profile: FaultProfile) -> None:
        with self._lock:
            self._profiles[endpoint] = profile

    def clear_profile(self, endpoint: Endpoint) -> None:
        with self._lock:
            self._profiles.pop(endpoint, None)

    def close(self) -> None:
        with self._lock:
            self._handlers.clear()
            self._profiles.clear()

    # -- sending -----------------------------------------------------------

    def send(self, endpoint: Endpoint, msg: WireMessage,
             deadline_s: float = DEFAULT_DEADLINE_S) -> Reply:
        start = time.monotonic()
        with self._lock:
            handler = self._handlers.get(endpoint)
            profile = self._profiles.get(endpoint, _NO_FAULTS)
            roll = self._rng.random() if profile.drop_probability > 0 else 1.0
            jitter = self._rng.uniform(0, profile.jitter_s) if profile.jitter_s > 0 else 0.0

        if profile.down:
            raise ConnectionRefused(f"endpoint down: {endpoint}")
        if handler is None or roll < profile.drop_probability:
            time.sleep(deadline_s)
            raise TransportTimeout(f"no reply from {endpoint} within {deadline_s}s")

        time.sleep(profile.latency_s + jitter)
        try:
            reply = handler(msg)
        except Exception:
            log.exception("handler failed for %s", endpoint)
            reply = Reply("error", {"reason": "handler exception"}, msg.correlation_id)
        if not isinstance(reply, Reply):
            reply = Reply("error", {"reason": "handler returned no reply"}, msg.correlation_id)
        if time.monotonic() - start > deadline_s:
            # the peer processed the request, but the caller gave up
            raise TransportTimeout(f"no reply from {endpoint} within {deadline_s}s")
        return reply


_NO_FAULTS = FaultProfile()
