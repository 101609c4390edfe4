"""Broker-side topics contract: topic registry and publish with fan-out.

World-state layout: "topic:<id>" -> canonical JSON with fields topic_id,
name, publisher, subscribers (insertion-ordered, no duplicates), and the
latest message as base64. Publishing persists the new message first, then
notifies every subscriber in subscription order through the injected
notifier; delivery failures never roll back the topic update.
"""
from __future__ import annotations

from ..encoding import b64d, b64e, canonical_json, from_json
from ..ledger.engine import ContractError, TxContext
from .base import BaseContract, want_args
from .connector import CHAIN_PREFIX, can_publish, can_subscribe
from .chaintypes import chain_type

TOPIC_PREFIX = "topic:"
INIT_MARKER = "topics:_initialized"

DEFAULT_MAX_MESSAGE_BYTES = 64 * 1024


class TopicsContract(BaseContract):
    name = "topics"

    def __init__(self, max_message_bytes: int = DEFAULT_MAX_MESSAGE_BYTES):
        super().__init__()
        self.max_message_bytes = max_message_bytes
        self.register("InitLedger", self._init_ledger)
        self.register("CreateTopic", self._create)
        self.register("QueryTopic", self._query)
        self.register("QueryAllTopics", self._query_all)
        self.register("SubscribeToTopic", self._subscribe)
        self.register("UnsubscribeFromTopic", self._unsubscribe)
        self.register("PublishToTopic", self._publish)

    # -- helpers -----------------------------------------------------------

    def _check_message(self, message: bytes) -> None:
        if len(message) > self.max_message_bytes:
            raise ContractError(f"message too large ({len(message)} > {self.max_message_bytes} bytes)")

    def _load_topic(self, ctx: TxContext, topic_id: str) -> dict:
        raw = ctx.get_state(TOPIC_PREFIX + topic_id)
        if raw is None:
            raise ContractError("topic not found")
        return from_json(raw)

    @staticmethod
    def _load_chain(ctx: TxContext, chain_id: str) -> dict | None:
        try:
            return from_json(ctx.call_contract("connector", "QueryBlockchain", [chain_id.encode()]))
        except ContractError:
            return None

    # -- operations ---------------------------------------------------------

    def _init_ledger(self, ctx: TxContext, args: list[bytes]) -> bytes:
        if ctx.get_state(INIT_MARKER) is not None:
            raise ContractError("already initialized")
        ctx.put_state(INIT_MARKER, b"1")
        return canonical_json({"initialized": 0})

    def _create(self, ctx: TxContext, args: list[bytes]) -> bytes:
        topic_id, name, publisher = want_args(args, 3, "CreateTopic")
        message = args[3] if len(args) > 3 else b""
        if not topic_id:
            raise ContractError("topic_id must be non-empty")
        self._check_message(message)
        if ctx.get_state(TOPIC_PREFIX + topic_id) is not None:
            raise ContractError("topic exists")
        record = self._load_chain(ctx, publisher)
        if record is None:
            raise ContractError("publisher not enrolled")
        if not can_publish(record):
            raise ContractError("not enrolled as publisher")
        topic = {
            "topic_id": topic_id,
            "name": name,
            "publisher": publisher,
            "subscribers": [],
            "message_b64": b64e(message),
        }
        ctx.put_state(TOPIC_PREFIX + topic_id, canonical_json(topic))
        return topic_id.encode()

    def _query(self, ctx: TxContext, args: list[bytes]) -> bytes:
        (topic_id,) = want_args(args, 1, "QueryTopic")
        raw = ctx.get_state(TOPIC_PREFIX + topic_id)
        if raw is None:
            raise ContractError("topic not found")
        return raw

    def _query_all(self, ctx: TxContext, args: list[bytes]) -> bytes:
        pairs = ctx.get_all(TOPIC_PREFIX)
        return b"[" + b",".join(v for _, v in pairs) + b"]"

    def _subscribe(self, ctx: TxContext, args: list[bytes]) -> bytes:
        topic_id, chain_id = want_args(args, 2, "SubscribeToTopic")
        topic = self._load_topic(ctx, topic_id)
        record = self._load_chain(ctx, chain_id)
        if record is None:
            raise ContractError("subscriber not enrolled")
        if not can_subscribe(record):
            raise ContractError("not enrolled as subscriber")
        if chain_id not in topic["subscribers"]:  # idempotent
            topic["subscribers"].append(chain_id)
            ctx.put_state(TOPIC_PREFIX + topic_id, canonical_json(topic))
        return canonical_json({"subscribers": len(topic["subscribers"])})

    def _unsubscribe(self, ctx: TxContext, args: list[bytes]) -> bytes:
        topic_id, chain_id = want_args(args, 2, "UnsubscribeFromTopic")
        topic = self._load_topic(ctx, topic_id)
        if chain_id in topic["subscribers"]:  # removing a non-subscriber is a no-op
            topic["subscribers"].remove(chain_id)
            ctx.put_state(TOPIC_PREFIX + topic_id, canonical_json(topic))
        return canonical_json({"subscribers": len(topic["subscribers"])})

    def _publish(self, ctx: TxContext, args: list[bytes]) -> bytes:
        (topic_id,) = want_args(args, 1, "PublishToTopic")
        message = args[1] if len(args) > 1 else b""
        topic = self._load_topic(ctx, topic_id)
        if ctx.caller != topic["publisher"]:
            raise ContractError("not topic publisher")
        self._check_message(message)

        # update first, then notify: the topic state is authoritative even
        # if some deliveries fail
        topic["message_b64"] = b64e(message)
        ctx.put_state(TOPIC_PREFIX + topic_id, canonical_json(topic))

        records: list[dict | None] = []
        for sub_id in topic["subscribers"]:
            rec = self._load_chain(ctx, sub_id)
            if rec is not None and chain_type(rec["chain_type"]) is None:
                rec = {**rec, "chain_type": rec["chain_type"]}
            records.append(rec if rec is not None else {"chain_id": sub_id})

        notifier = ctx.services.notifier
        if topic["subscribers"]:
            if notifier is None:
                statuses = ["failed:no-notifier"] * len(records)
            else:
                statuses = notifier.dispatch_all(records, topic_id, message)
        else:
            statuses = []
        for sub_id, status in zip(topic["subscribers"], statuses):
            ctx.record_delivery(sub_id, status)
        return canonical_json({"deliveries": [[s, st] for s, st in zip(topic["subscribers"], statuses)]})


def parse_topic(raw: bytes) -> dict:
    """Decode a stored topic record, exposing the message as bytes."""
    topic = from_json(raw)
    topic["message"] = b64d(topic.pop("message_b64"))
    return topic
