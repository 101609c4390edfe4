"""The runnable broker: contracts + pipeline behind a transport endpoint.

Maps wire requests to contract transactions (query kinds bypass ordering),
persists the block log under the data directory, and recovers state by
replaying it on startup. Replies carry commit results synchronously,
including per-subscriber delivery outcomes for publishes.
"""
from __future__ import annotations

import logging
import os

from ..encoding import b64d, canonical_json, from_json
from ..contracts import broker_contracts
from ..ledger.blocklog import BlockStore, replay
from ..ledger.engine import Engine, Services
from ..ledger.pipeline import LedgerPipeline
from ..ledger.types import TxKind, TxReceipt, TxStatus
from ..remote.notifier import Notifier, NotifierRegistry
from ..transport.wire import Reply, WireKind, WireMessage
from .config import BrokerConfig

log = logging.getLogger(__name__)

BLOCK_LOG_NAME = "blocks.log"

# rejection reasons that map to "forbidden" on the wire
_FORBIDDEN = {"not topic publisher"}


class Broker:
    def __init__(self, config: BrokerConfig, transport,
                 notifier_registry: NotifierRegistry | None = None):
        self.config = config
        self.transport = transport
        self._registry = notifier_registry
        self.pipeline: LedgerPipeline | None = None
        self.notifier: Notifier | None = None
        self._store: BlockStore | None = None
        self._binding = None

    @property
    def log_path(self) -> str:
        return os.path.join(self.config.data_dir, BLOCK_LOG_NAME)

    # -- lifecycle -----------------------------------------------------------

    def start(self, serve: bool = True) -> "Broker":
        os.makedirs(self.config.data_dir, exist_ok=True)
        self.notifier = Notifier(self.transport, self._registry,
                                 policy=self.config.notifier)
        cap = self.config.capacity
        engine = Engine(broker_contracts(self.config.max_message_bytes),
                        services=Services(notifier=self.notifier),
                        publish_base_cost=cap.publish_base_cost,
                        publish_per_subscriber_cost=cap.publish_per_subscriber_cost)
        store = BlockStore(self.log_path, fsync=self.config.fsync)
        if os.path.exists(self.log_path):
            recovered = replay(self.log_path, engine)
            log.info("recovered %d blocks from %s", recovered.blocks, self.log_path)
            store.open_existing()
        else:
            recovered = None
            store.open_fresh()
        self._store = store
        self.pipeline = LedgerPipeline(engine, cap, store=store, recovered=recovered)
        self.pipeline.start()
        if serve:
            self._binding = self.transport.serve(self.config.listen, self.handle_request)
        return self

    def stop(self) -> None:
        if self._binding is not None:
            self._binding.close()
            self._binding = None
        if self.pipeline is not None:
            self.pipeline.stop(drain=True)
            self.pipeline = None
        if self.notifier is not None:
            self.notifier.close()
            self.notifier = None
        if self._store is not None:
            self._store.close()
            self._store = None

    def init_sample(self) -> dict:
        """Run both contracts' InitLedger with the configured sample set."""
        assert self.pipeline is not None, "broker not started"
        sample = canonical_json(self.config.init_sample_chains)
        conn = self.pipeline.invoke("connector", "InitLedger", [sample],
                                    timeout=self.config.request_timeout_s)
        topics = self.pipeline.invoke("topics", "InitLedger", [],
                                      timeout=self.config.request_timeout_s)
        return {"connector": conn.status.value, "topics": topics.status.value,
                "chains": len(self.config.init_sample_chains)}

    # -- request handling ------------------------------------------------------

    def handle_request(self, msg: WireMessage) -> Reply:
        try:
            mapped = self._map_request(msg)
        except _BadRequest as err:
            return Reply("bad_request", {"reason": str(err)}, msg.correlation_id)
        if mapped is None:
            return Reply("bad_request", {"reason": f"kind not accepted: {msg.kind.value}"},
                         msg.correlation_id)
        kind, contract, operation, args, caller = mapped
        assert self.pipeline is not None
        handle = self.pipeline.submit(kind, contract, operation, args,
                                      caller=caller, tx_id=msg.correlation_id)
        try:
            receipt = handle.result(timeout=self.config.request_timeout_s)
        except TimeoutError:
            return Reply("error", {"reason": "commit timeout"}, msg.correlation_id)
        return self._reply_for(receipt, msg.correlation_id)

    def _map_request(self, msg: WireMessage):
        body = msg.body
        if not isinstance(body, dict):
            raise _BadRequest("body must be an object")
        get = _field_reader(body)
        caller = str(body.get("caller", "external")) or "external"
        if msg.kind is WireKind.ENROLL:
            record = body.get("record")
            if not isinstance(record, dict):
                raise _BadRequest("enroll needs a 'record' object")
            return (TxKind.INVOKE, "connector", "EnrollBlockchain",
                    [canonical_json(record)], str(body.get("caller", record.get("chain_id", "external"))))
        if msg.kind is WireKind.CREATE_TOPIC:
            return (TxKind.INVOKE, "topics", "CreateTopic",
                    [get("topic_id"), get("name"), caller.encode(), _message(body)], caller)
        if msg.kind is WireKind.SUBSCRIBE:
            return (TxKind.INVOKE, "topics", "SubscribeToTopic",
                    [get("topic_id"), get("chain_id")], caller)
        if msg.kind is WireKind.UNSUBSCRIBE:
            return (TxKind.INVOKE, "topics", "UnsubscribeFromTopic",
                    [get("topic_id"), get("chain_id")], caller)
        if msg.kind is WireKind.PUBLISH:
            return (TxKind.INVOKE, "topics", "PublishToTopic",
                    [get("topic_id"), _message(body)], caller)
        if msg.kind is WireKind.QUERY:
            contract = str(body.get("contract", "topics"))
            operation = body.get("operation")
            if not isinstance(operation, str):
                raise _BadRequest("query needs an 'operation' string")
            raw_args = body.get("args", [])
            if not isinstance(raw_args, list):
                raise _BadRequest("query 'args' must be a list")
            args = []
            for a in raw_args:
                if isinstance(a, str):
                    args.append(a.encode())
                elif isinstance(a, dict) and isinstance(a.get("b64"), str):
                    args.append(_b64_field(a["b64"]))
                else:
                    raise _BadRequest("query args must be strings or {'b64': ...}")
            return (TxKind.QUERY, contract, operation, args, caller)
        return None

    @staticmethod
    def _reply_for(receipt: TxReceipt, correlation_id: str) -> Reply:
        if receipt.status in (TxStatus.COMMITTED, TxStatus.QUERY_OK):
            body = {"tx_id": receipt.tx_id, "result": _decode_payload(receipt.payload)}
            if receipt.status is TxStatus.COMMITTED:
                body["block_height"] = receipt.block_height
                body["deliveries"] = [[c, s] for c, s in receipt.deliveries]
            return Reply("ok", body, correlation_id)
        if receipt.status is TxStatus.DROPPED:
            return Reply("overloaded", {"reason": receipt.reason or "overload",
                                        "tx_id": receipt.tx_id}, correlation_id)
        status = "forbidden" if receipt.reason in _FORBIDDEN else "rejected"
        return Reply(status, {"reason": receipt.reason or "", "tx_id": receipt.tx_id},
                     correlation_id)


class _BadRequest(Exception):
    pass


def _field_reader(body: dict):
    def get(key: str) -> bytes:
        value = body.get(key)
        if not isinstance(value, str):
            raise _BadRequest(f"missing or non-string field: {key}")
        return value.encode()
    return get


def _b64_field(text: str) -> bytes:
    try:
        return b64d(text)
    except Exception as err:
        raise _BadRequest(f"invalid base64: {err}") from None


def _message(body: dict) -> bytes:
    value = body.get("message_b64", "")
    if not isinstance(value, str):
        raise _BadRequest("message_b64 must be a string")
    return _b64_field(value)


def _decode_payload(payload: bytes | None):
    if payload is None:
        return None
    try:
        return from_json(payload)
    except Exception:
        pass
    try:
        return payload.decode("utf-8")
    except UnicodeDecodeError:
        from ..encoding import b64e
        return {"b64": b64e(payload)}
