"""Broker-side notification dispatch to subscriber networks.

For each subscriber the notifier builds a technology-appropriate update
request (an invoke-style call for FabricLike chains, a transaction-style
call using the enrolled address/ABI details for BesuLike chains), sends it
to the record's server_ip:port, and reports a per-subscriber delivery
status. Transport timeouts are retried per policy; definitive negative
acks are not. The registry is the extension point for new chain types.
"""
from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

from ..encoding import b64e
from ..contracts.chaintypes import BESU_LIKE, FABRIC_LIKE
from ..ledger.types import DELIVERED, failed
from ..transport.wire import (ConnectionRefused, Endpoint, MalformedReply, Reply,
                              TransportTimeout, WireKind, WireMessage)

log = logging.getLogger(__name__)

UpdateBuilder = Callable[[dict, str, bytes], tuple[Endpoint, WireMessage]]


def build_fabric_update(record: dict, topic_id: str, message: bytes) -> tuple[Endpoint, WireMessage]:
    extra = record.get("extra", {})
    endpoint = Endpoint(record["server_ip"], record["port"], FABRIC_LIKE.base_path)
    body = {
        "channel": extra.get("channel", ""),
        "contract": extra.get("contract", ""),
        "function": "ReceiveUpdate",
        "args": [topic_id, b64e(message)],
    }
    return endpoint, WireMessage(WireKind.UPDATE_NOTIFY, body)


def build_besu_update(record: dict, topic_id: str, message: bytes) -> tuple[Endpoint, WireMessage]:
    extra = record.get("extra", {})
    endpoint = Endpoint(record["server_ip"], record["port"], BESU_LIKE.base_path)
    body = {
        "to": extra.get("address", ""),
        "abi": extra.get("abi", ""),
        "method": "receiveUpdate",
        "params": [topic_id, "0x" + message.hex()],
    }
    return endpoint, WireMessage(WireKind.UPDATE_NOTIFY, body)


class NotifierRegistry:
    def __init__(self) -> None:
        self._builders: dict[str, UpdateBuilder] = {}

    def register(self, tag: str, builder: UpdateBuilder) -> None:
        self._builders[tag] = builder

    def builder_for(self, tag: str) -> UpdateBuilder | None:
        return self._builders.get(tag)


def default_registry() -> NotifierRegistry:
    registry = NotifierRegistry()
    registry.register(FABRIC_LIKE.tag, build_fabric_update)
    registry.register(BESU_LIKE.tag, build_besu_update)
    return registry


@dataclass
class RetryPolicy:
    attempts: int = 3
    backoff_s: float = 0.1
    deadline_s: float = 2.0


class Notifier:
    def __init__(self, transport, registry: NotifierRegistry | None = None,
                 policy: RetryPolicy | None = None, max_workers: int = 16):
        self.transport = transport
        self.registry = registry or default_registry()
        self.policy = policy or RetryPolicy()
        self._pool = ThreadPoolExecutor(max_workers=max_workers,
                                        thread_name_prefix="notifier")
        self._stop = threading.Event()

    def close(self) -> None:
        self._stop.set()
        self._pool.shutdown(wait=True)

    def dispatch(self, record: dict | None, topic_id: str, message: bytes) -> str:
        if not record or "chain_type" not in record:
            return failed("unknown chain")
        builder = self.registry.builder_for(record["chain_type"])
        if builder is None:
            return failed("unsupported")  # no network traffic for unknown tags
        endpoint, msg = builder(record, topic_id, message)
        last = "unreachable"
        for attempt in range(self.policy.attempts):
            if attempt and self._stop.wait(self.policy.backoff_s):
                break
            try:
                reply = self.transport.send(endpoint, msg, deadline_s=self.policy.deadline_s)
            except TransportTimeout:
                last = "timeout"
                continue
            except ConnectionRefused:
                last = "unreachable"
                continue
            except MalformedReply:
                return failed("protocol")
            return self._ack_status(reply)
        return failed(last)

    @staticmethod
    def _ack_status(reply: Reply) -> str:
        if reply.ok and reply.body.get("ack") == "applied":
            return DELIVERED
        reason = reply.body.get("reason") or reply.body.get("ack") or reply.status
        return failed(str(reason))

    def dispatch_all(self, records: list[dict | None], topic_id: str, message: bytes) -> list[str]:
        """Dispatch to many subscribers of one publish concurrently, results
        returned in subscription order."""
        if len(records) == 1:
            return [self.dispatch(records[0], topic_id, message)]
        futures = [self._pool.submit(self.dispatch, rec, topic_id, message) for rec in records]
        return [f.result() for f in futures]


class RecordingNotifier:
    """Test/demo stand-in: records every dispatch and reports success."""

    def __init__(self, status: str = DELIVERED):
        self.status = status
        self.calls: list[tuple[str, str, bytes]] = []

    def dispatch_all(self, records, topic_id, message):
        out = []
        for rec in records:
            chain_id = (rec or {}).get("chain_id", "?")
            self.calls.append((chain_id, topic_id, message))
            out.append(self.status)
        return out
