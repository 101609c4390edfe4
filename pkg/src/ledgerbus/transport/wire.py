"""Wire message vocabulary shared by every transport.

Bodies are canonical JSON (sorted keys, compact), so request and reply
bytes are identical whichever transport carries them — that is what the
cross-transport conformance suite pins down.
"""
from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from enum import Enum

from ..encoding import canonical_json


class WireKind(str, Enum):
    ENROLL = "enroll"
    CREATE_TOPIC = "create_topic"
    SUBSCRIBE = "subscribe"
    UNSUBSCRIBE = "unsubscribe"
    PUBLISH = "publish"
    UPDATE_NOTIFY = "update_notify"
    QUERY = "query"
    REPLY = "reply"


# reply statuses and their HTTP binding
STATUS_HTTP = {
    "ok": 200,
    "bad_request": 400,
    "forbidden": 403,
    "rejected": 409,
    "overloaded": 429,
    "error": 500,
}
HTTP_STATUS = {v: k for k, v in STATUS_HTTP.items()}


def new_correlation_id() -> str:
    return uuid.uuid4().hex


@dataclass
class WireMessage:
    kind: WireKind
    body: dict
    correlation_id: str = field(default_factory=new_correlation_id)

    def body_bytes(self) -> bytes:
        return canonical_json(self.body)


@dataclass
class Reply:
    status: str
    body: dict
    correlation_id: str

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def body_bytes(self) -> bytes:
        """Self-contained reply body (status included), canonical bytes."""
        return canonical_json({"status": self.status, **self.body})


@dataclass(frozen=True)
class Endpoint:
    host: str
    port: int
    base_path: str = ""

    def url(self) -> str:
        return f"http://{self.host}:{self.port}{self.base_path}"


class TransportError(Exception):
    pass


class TransportTimeout(TransportError):
    """No reply within the deadline."""


class ConnectionRefused(TransportError):
    """Nothing is listening at the endpoint."""


class MalformedReply(TransportError):
    """Peer answered with bytes that do not decode as a reply."""


class BindError(TransportError):
    """Endpoint already has a handler bound."""


DEFAULT_DEADLINE_S = 2.0
