"""Simulated remote ledgers standing in for real publisher/subscriber chains.

Two flavors are provided. They differ in commit latency profile, in the
path shape the broker must call, in the enrollment details they require,
and in how update requests are encoded — enough heterogeneity to prove the
broker treats remote technologies behind one notifier interface.

Each SimChain runs a private ledger pipeline hosting a local connector
contract that tracks subscriptions (latest message per topic) and, for
publishers, owned topics and publish intents. Update notifications commit
locally before they are acknowledged; applied updates are appended to an
application-facing event log.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable

from ..encoding import b64d, b64e, canonical_json, from_json
from ..contracts.base import BaseContract, want_args
from ..contracts.chaintypes import BESU_LIKE, FABRIC_LIKE, ChainType
from ..ledger.engine import ContractError, Engine, TxContext
from ..ledger.pipeline import LedgerPipeline
from ..ledger.types import CapacityModel, TxStatus
from ..transport.wire import Endpoint, Reply, WireKind, WireMessage

log = logging.getLogger(__name__)

SUB_PREFIX = "sub:"
OWN_PREFIX = "own:"
PUB_PREFIX = "pub:"


class LocalConnectorContract(BaseContract):
    """Connector contract deployed on a remote (simulated) network."""

    name = "local"

    def __init__(self) -> None:
        super().__init__()
        self.register("RecordSubscription", self._record_sub)
        self.register("RemoveSubscription", self._remove_sub)
        self.register("ApplyUpdate", self._apply_update)
        self.register("RecordTopic", self._record_topic)
        self.register("RecordPublish", self._record_publish)
        self.register("GetSubscription", self._get_sub)
        self.register("ListSubscriptions", self._list_subs)
        self.register("ListOwnedTopics", self._list_owned)

    # subscriptions are tombstoned rather than deleted: the state API is
    # append/overwrite only, like the substrate it runs on
    def _record_sub(self, ctx: TxContext, args: list[bytes]) -> bytes:
        (topic_id,) = want_args(args, 1, "RecordSubscription")
        entry = {"topic_id": topic_id, "active": True, "message_b64": "", "updates": 0}
        existing = ctx.get_state(SUB_PREFIX + topic_id)
        if existing is not None:
            entry = from_json(existing)
            entry["active"] = True
        ctx.put_state(SUB_PREFIX + topic_id, canonical_json(entry))
        return b"ok"

    def _remove_sub(self, ctx: TxContext, args: list[bytes]) -> bytes:
        (topic_id,) = want_args(args, 1, "RemoveSubscription")
        existing = ctx.get_state(SUB_PREFIX + topic_id)
        if existing is not None:
            entry = from_json(existing)
            entry["active"] = False
            entry["message_b64"] = ""
            ctx.put_state(SUB_PREFIX + topic_id, canonical_json(entry))
        return b"ok"

    def _apply_update(self, ctx: TxContext, args: list[bytes]) -> bytes:
        (topic_id,) = want_args(args, 1, "ApplyUpdate")
        message = args[1] if len(args) > 1 else b""
        raw = ctx.get_state(SUB_PREFIX + topic_id)
        if raw is None:
            raise ContractError("unknown_topic")
        entry = from_json(raw)
        if not entry.get("active"):
            raise ContractError("unknown_topic")
        encoded = b64e(message)
        if entry["updates"] > 0 and entry["message_b64"] == encoded:
            return canonical_json({"applied": False, "duplicate": True})
        entry["message_b64"] = encoded
        entry["updates"] += 1
        ctx.put_state(SUB_PREFIX + topic_id, canonical_json(entry))
        return canonical_json({"applied": True, "duplicate": False})

    def _record_topic(self, ctx: TxContext, args: list[bytes]) -> bytes:
        topic_id, name = want_args(args, 2, "RecordTopic")
        if ctx.get_state(OWN_PREFIX + topic_id) is not None:
            raise ContractError("topic exists")
        ctx.put_state(OWN_PREFIX + topic_id, canonical_json({"topic_id": topic_id, "name": name}))
        return b"ok"

    def _record_publish(self, ctx: TxContext, args: list[bytes]) -> bytes:
        (topic_id,) = want_args(args, 1, "RecordPublish")
        message = args[1] if len(args) > 1 else b""
        if ctx.get_state(OWN_PREFIX + topic_id) is None:
            raise ContractError("not topic owner")
        raw = ctx.get_state(PUB_PREFIX + topic_id)
        entry = from_json(raw) if raw else {"topic_id": topic_id, "count": 0, "last_b64": ""}
        entry["count"] += 1
        entry["last_b64"] = b64e(message)
        ctx.put_state(PUB_PREFIX + topic_id, canonical_json(entry))
        return b"ok"

    def _get_sub(self, ctx: TxContext, args: list[bytes]) -> bytes:
        (topic_id,) = want_args(args, 1, "GetSubscription")
        raw = ctx.get_state(SUB_PREFIX + topic_id)
        if raw is None or not from_json(raw).get("active"):
            raise ContractError("not subscribed")
        return raw

    def _list_subs(self, ctx: TxContext, args: list[bytes]) -> bytes:
        active = [v for _, v in ctx.get_all(SUB_PREFIX) if from_json(v).get("active")]
        return b"[" + b",".join(active) + b"]"

    def _list_owned(self, ctx: TxContext, args: list[bytes]) -> bytes:
        return b"[" + b",".join(v for _, v in ctx.get_all(OWN_PREFIX)) + b"]"


# -- flavors ----------------------------------------------------------------

def _parse_fabric_update(body: dict) -> tuple[str, bytes]:
    if body.get("function") != "ReceiveUpdate":
        raise ValueError(f"unsupported function: {body.get('function')!r}")
    args = body.get("args") or []
    if len(args) < 2:
        raise ValueError("ReceiveUpdate needs [topic_id, message_b64]")
    return str(args[0]), b64d(str(args[1]))


def _parse_besu_update(body: dict) -> tuple[str, bytes]:
    if body.get("method") != "receiveUpdate":
        raise ValueError(f"unsupported method: {body.get('method')!r}")
    params = body.get("params") or []
    if len(params) < 2 or not str(params[1]).startswith("0x"):
        raise ValueError("receiveUpdate needs [topic_id, 0x<message hex>]")
    return str(params[0]), bytes.fromhex(str(params[1])[2:])


@dataclass(frozen=True)
class Flavor:
    chain_type: ChainType
    default_capacity: Callable[[], CapacityModel]
    make_extra: Callable[[str], dict]
    parse_update: Callable[[dict], tuple[str, bytes]]

    @property
    def tag(self) -> str:
        return self.chain_type.tag


FABRIC_FLAVOR = Flavor(
    chain_type=FABRIC_LIKE,
    default_capacity=lambda: CapacityModel(invoke_service_rate=200.0, query_service_rate=1000.0,
                                           queue_capacity=256, block_interval_ms=40.0, max_block_size=16),
    make_extra=lambda chain_id: {"channel": "shared", "contract": f"{chain_id}-connector"},
    parse_update=_parse_fabric_update,
)

BESU_FLAVOR = Flavor(
    chain_type=BESU_LIKE,
    default_capacity=lambda: CapacityModel(invoke_service_rate=80.0, query_service_rate=500.0,
                                           queue_capacity=256, block_interval_ms=150.0, max_block_size=16),
    make_extra=lambda chain_id: {
        "address": "0x" + chain_id.encode().hex().rjust(40, "0")[:40],
        "abi": f"{chain_id}-connector-abi-v1",
        "private_key": "0x" + ("11" * 32),
    },
    parse_update=_parse_besu_update,
)

FLAVORS = {f.tag: f for f in (FABRIC_FLAVOR, BESU_FLAVOR)}

_auto_port = itertools.count(21000)


@dataclass
class AppEvent:
    """Application notification recorded when an update is applied locally."""

    topic_id: str
    message: bytes
    local_height: int
    seq: int


class SimChain:
    def __init__(self, chain_id: str, flavor: Flavor, transport,
                 host: str = "127.0.0.1", port: int | None = None,
                 name: str | None = None, capacity: CapacityModel | None = None):
        self.chain_id = chain_id
        self.flavor = flavor
        self.transport = transport
        self.name = name or chain_id
        self.endpoint = Endpoint(host, port if port is not None else next(_auto_port),
                                 flavor.chain_type.base_path)
        engine = Engine({"local": LocalConnectorContract()})
        self.pipeline = LedgerPipeline(engine, capacity or flavor.default_capacity())
        self.events: list[AppEvent] = []
        self._binding = None
        self._event_seq = itertools.count(1)

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> "SimChain":
        self.pipeline.start()
        self._binding = self.transport.serve(self.endpoint, self.handle_request)
        return self

    def stop(self) -> None:
        if self._binding is not None:
            self._binding.close()
            self._binding = None
        self.pipeline.stop(drain=True)

    # -- enrollment record ----------------------------------------------------

    def make_record(self, role: str) -> dict:
        return {
            "chain_id": self.chain_id,
            "name": self.name,
            "chain_type": self.flavor.tag,
            "server_ip": self.endpoint.host,
            "port": self.endpoint.port,
            "extra": self.flavor.make_extra(self.chain_id),
            "role": role,
        }

    # -- wire handler ----------------------------------------------------------

    def handle_request(self, msg: WireMessage) -> Reply:
        if msg.kind is not WireKind.UPDATE_NOTIFY:
            return Reply("bad_request", {"reason": f"unsupported kind: {msg.kind.value}"},
                         msg.correlation_id)
        try:
            topic_id, message = self.flavor.parse_update(msg.body)
        except (ValueError, TypeError) as err:
            return Reply("bad_request", {"reason": str(err)}, msg.correlation_id)
        ack, reason = self.receive_update(topic_id, message)
        if ack:
            return Reply("ok", {"ack": "applied"}, msg.correlation_id)
        return Reply("rejected", {"reason": reason}, msg.correlation_id)

    # -- local behavior ---------------------------------------------------------

    def receive_update(self, topic_id: str, message: bytes) -> tuple[bool, str]:
        """Apply a topic update to local state; (True, "") on positive ack."""
        receipt = self.pipeline.invoke("local", "ApplyUpdate", [topic_id.encode(), message],
                                       caller="broker")
        if receipt.status is not TxStatus.COMMITTED:
            return False, receipt.reason or "rejected"
        result = from_json(receipt.payload)
        if result.get("applied"):
            self.events.append(AppEvent(topic_id, message, receipt.block_height or 0,
                                        next(self._event_seq)))
        return True, ""

    def subscription(self, topic_id: str) -> dict | None:
        """Local view of one subscription: latest message and update height."""
        receipt = self.pipeline.query("local", "GetSubscription", [topic_id.encode()])
        if receipt.status is not TxStatus.QUERY_OK:
            return None
        entry = from_json(receipt.payload)
        heights = [e.local_height for e in self.events if e.topic_id == topic_id]
        return {
            "topic_id": topic_id,
            "message": b64d(entry["message_b64"]),
            "updates": entry["updates"],
            "last_updated": heights[-1] if heights else None,
        }

    def subscriptions(self) -> list[str]:
        receipt = self.pipeline.query("local", "ListSubscriptions", [])
        return [e["topic_id"] for e in from_json(receipt.payload)]
