from .wire import (DEFAULT_DEADLINE_S, BindError, ConnectionRefused, Endpoint,
                   HTTP_STATUS, MalformedReply, Reply, STATUS_HTTP,
                   TransportError, TransportTimeout, WireKind, WireMessage,
                   new_correlation_id)
from .sim import FaultProfile, SimTransport
from .http import HttpTransport

__all__ = [
    "DEFAULT_DEADLINE_S", "BindError", "ConnectionRefused", "Endpoint",
    "HTTP_STATUS", "MalformedReply", "Reply", "STATUS_HTTP",
    "TransportError", "TransportTimeout", "WireKind", "WireMessage",
    "new_correlation_id",
    "FaultProfile", "SimTransport", "HttpTransport",
]
