"""Naive in-memory reference model of the broker contracts.

Plain dicts and lists, the same rules, written independently of the
contract code: the oracle for randomized equivalence testing. apply()
returns (accepted, reason) and mutates the model only on acceptance,
mirroring transaction atomicity.
"""
from __future__ import annotations

import base64
import json

MAX_MESSAGE = 64 * 1024
REQUIRED_EXTRA = {
    "FabricLike": ("channel", "contract"),
    "BesuLike": ("address", "abi", "private_key"),
}
ROLES = ("publisher", "subscriber", "both")


class RefModel:
    def __init__(self) -> None:
        self.chains: dict[str, dict] = {}
        self.topics: dict[str, dict] = {}
        self.conn_init = False
        self.topics_init = False

    # -- record validation (deliberately re-stated, not imported) ----------

    @staticmethod
    def _check_record(record: dict) -> str | None:
        for f in ("chain_id", "name", "chain_type", "server_ip", "port", "role"):
            if f not in record:
                return f"missing field: {f}"
        if not isinstance(record["chain_id"], str) or not record["chain_id"]:
            return "chain_id must be a non-empty string"
        if record["chain_type"] not in REQUIRED_EXTRA:
            return "unsupported type"
        port = record["port"]
        if not isinstance(port, int) or isinstance(port, bool) or not (1 <= port <= 65535):
            return f"invalid port: {port!r}"
        if record["role"] not in ROLES:
            return f"invalid role: {record['role']!r}"
        extra = record.get("extra") or {}
        if not isinstance(extra, dict):
            return "extra must be a string map"
        for key in REQUIRED_EXTRA[record["chain_type"]]:
            if key not in extra:
                return f"missing extra: {key}"
        return None

    @staticmethod
    def _normalize(record: dict) -> dict:
        return {
            "chain_id": record["chain_id"],
            "name": record["name"],
            "chain_type": record["chain_type"],
            "server_ip": record["server_ip"],
            "port": record["port"],
            "extra": {str(k): str(v) for k, v in (record.get("extra") or {}).items()},
            "role": record["role"],
        }

    # -- operations ----------------------------------------------------------

    def apply(self, contract: str, op: str, args: list[bytes], caller: str) -> tuple[bool, str]:
        fn = getattr(self, f"_{contract}_{op}", None)
        if fn is None:
            return False, f"unknown operation: {op}"
        return fn(args, caller)

    def _connector_InitLedger(self, args, caller):
        if self.conn_init:
            return False, "already initialized"
        samples = json.loads(args[0]) if args and args[0] else []
        staged = {}
        for raw in samples:
            err = self._check_record(raw)
            if err:
                return False, err
            cid = raw["chain_id"]
            if cid in self.chains or cid in staged:
                return False, "already enrolled"
            staged[cid] = self._normalize(raw)
        self.chains.update(staged)
        self.conn_init = True
        return True, ""

    def _connector_EnrollBlockchain(self, args, caller):
        if not args:
            return False, "EnrollBlockchain: expected record"
        try:
            record = json.loads(args[0])
        except Exception:
            return False, "bad json"
        err = self._check_record(record)
        if err:
            return False, err
        if record["chain_id"] in self.chains:
            return False, "already enrolled"
        self.chains[record["chain_id"]] = self._normalize(record)
        return True, ""

    def _connector_QueryBlockchain(self, args, caller):
        if len(args) < 1:
            return False, "QueryBlockchain: expected 1 args, got 0"
        cid = args[0].decode("utf-8", errors="replace")
        if cid not in self.chains:
            return False, "not found"
        return True, ""

    def _connector_QueryAllBlockchains(self, args, caller):
        return True, ""

    def _topics_InitLedger(self, args, caller):
        if self.topics_init:
            return False, "already initialized"
        self.topics_init = True
        return True, ""

    def _topics_CreateTopic(self, args, caller):
        if len(args) < 3:
            return False, f"CreateTopic: expected 3 args, got {len(args)}"
        topic_id = args[0].decode("utf-8", errors="replace")
        name = args[1].decode("utf-8", errors="replace")
        publisher = args[2].decode("utf-8", errors="replace")
        message = args[3] if len(args) > 3 else b""
        if not topic_id:
            return False, "topic_id must be non-empty"
        if len(message) > MAX_MESSAGE:
            return False, f"message too large ({len(message)} > {MAX_MESSAGE} bytes)"
        if topic_id in self.topics:
            return False, "topic exists"
        record = self.chains.get(publisher)
        if record is None:
            return False, "publisher not enrolled"
        if record["role"] not in ("publisher", "both"):
            return False, "not enrolled as publisher"
        self.topics[topic_id] = {"name": name, "publisher": publisher,
                                 "subscribers": [], "message": message}
        return True, ""

    def _topics_QueryTopic(self, args, caller):
        if len(args) < 1:
            return False, "QueryTopic: expected 1 args, got 0"
        topic_id = args[0].decode("utf-8", errors="replace")
        if topic_id not in self.topics:
            return False, "topic not found"
        return True, ""

    def _topics_QueryAllTopics(self, args, caller):
        return True, ""

    def _topics_SubscribeToTopic(self, args, caller):
        if len(args) < 2:
            return False, f"SubscribeToTopic: expected 2 args, got {len(args)}"
        topic_id = args[0].decode("utf-8", errors="replace")
        chain_id = args[1].decode("utf-8", errors="replace")
        topic = self.topics.get(topic_id)
        if topic is None:
            return False, "topic not found"
        record = self.chains.get(chain_id)
        if record is None:
            return False, "subscriber not enrolled"
        if record["role"] not in ("subscriber", "both"):
            return False, "not enrolled as subscriber"
        if chain_id not in topic["subscribers"]:
            topic["subscribers"].append(chain_id)
        return True, ""

    def _topics_UnsubscribeFromTopic(self, args, caller):
        if len(args) < 2:
            return False, f"UnsubscribeFromTopic: expected 2 args, got {len(args)}"
        topic_id = args[0].decode("utf-8", errors="replace")
        chain_id = args[1].decode("utf-8", errors="replace")
        topic = self.topics.get(topic_id)
        if topic is None:
            return False, "topic not found"
        if chain_id in topic["subscribers"]:
            topic["subscribers"].remove(chain_id)
        return True, ""

    def _topics_PublishToTopic(self, args, caller):
        if len(args) < 1:
            return False, "PublishToTopic: expected 1 args, got 0"
        topic_id = args[0].decode("utf-8", errors="replace")
        message = args[1] if len(args) > 1 else b""
        topic = self.topics.get(topic_id)
        if topic is None:
            return False, "topic not found"
        if caller != topic["publisher"]:
            return False, "not topic publisher"
        if len(message) > MAX_MESSAGE:
            return False, f"message too large ({len(message)} > {MAX_MESSAGE} bytes)"
        topic["message"] = message
        return True, ""

    # -- state dump ------------------------------------------------------------

    def state(self) -> dict:
        return {
            "conn_init": self.conn_init,
            "topics_init": self.topics_init,
            "chains": {k: dict(v) for k, v in self.chains.items()},
            "topics": {
                k: {"name": t["name"], "publisher": t["publisher"],
                    "subscribers": list(t["subscribers"]),
                    "message": t["message"]}
                for k, t in self.topics.items()
            },
        }


def ledger_state(world_entries: dict[bytes, bytes]) -> dict:
    """Parse a ledger world-state snapshot into the same shape as RefModel.state()."""
    out = {"conn_init": False, "topics_init": False, "chains": {}, "topics": {}}
    for key, value in world_entries.items():
        k = key.decode("utf-8", errors="replace")
        if k == "connector:_initialized":
            out["conn_init"] = True
        elif k == "topics:_initialized":
            out["topics_init"] = True
        elif k.startswith("chain:"):
            out["chains"][k[len("chain:"):]] = json.loads(value)
        elif k.startswith("topic:"):
            t = json.loads(value)
            out["topics"][k[len("topic:"):]] = {
                "name": t["name"], "publisher": t["publisher"],
                "subscribers": list(t["subscribers"]),
                "message": base64.b64decode(t["message_b64"]),
            }
    return out
