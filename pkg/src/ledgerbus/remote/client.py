"""Small client helper for talking to the broker over any transport."""
from __future__ import annotations

import time

from ..transport.wire import (DEFAULT_DEADLINE_S, Endpoint, Reply,
                              TransportTimeout, WireKind, WireMessage)


class BrokerRejected(Exception):
    def __init__(self, status: str, reason: str):
        super().__init__(f"{status}: {reason}")
        self.status = status
        self.reason = reason


def call_broker(transport, broker: Endpoint, kind: WireKind, body: dict,
                deadline_s: float = DEFAULT_DEADLINE_S,
                attempts: int = 1, backoff_s: float = 0.1) -> Reply:
    """Send a request, retrying transport timeouts; raise on non-ok replies."""
    last: TransportTimeout | None = None
    for attempt in range(max(1, attempts)):
        if attempt:
            time.sleep(backoff_s)
        try:
            reply = transport.send(broker, WireMessage(kind, body), deadline_s=deadline_s)
        except TransportTimeout as err:
            last = err
            continue
        if not reply.ok:
            raise BrokerRejected(reply.status, str(reply.body.get("reason", "")))
        return reply
    assert last is not None
    raise last
