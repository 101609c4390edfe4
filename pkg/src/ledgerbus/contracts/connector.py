"""Broker-side connector contract: enrollment records for remote networks.

World-state layout: "chain:<id>" -> canonical JSON record with fields
chain_id, name, chain_type, server_ip, port, extra (string map), role.
"""
from __future__ import annotations

from ..encoding import canonical_json, from_json
from ..ledger.engine import ContractError, TxContext
from .base import BaseContract, want_args
from .chaintypes import chain_type

CHAIN_PREFIX = "chain:"
INIT_MARKER = "connector:_initialized"

ROLES = ("publisher", "subscriber", "both")


def can_publish(record: dict) -> bool:
    return record.get("role") in ("publisher", "both")


def can_subscribe(record: dict) -> bool:
    return record.get("role") in ("subscriber", "both")


def validate_record(record: dict) -> dict:
    for field in ("chain_id", "name", "chain_type", "server_ip", "port", "role"):
        if field not in record:
            raise ContractError(f"missing field: {field}")
    if not isinstance(record["chain_id"], str) or not record["chain_id"]:
        raise ContractError("chain_id must be a non-empty string")
    ct = chain_type(record["chain_type"])
    if ct is None:
        raise ContractError("unsupported type")
    port = record["port"]
    if not isinstance(port, int) or not (1 <= port <= 65535):
        raise ContractError(f"invalid port: {port!r}")
    if record["role"] not in ROLES:
        raise ContractError(f"invalid role: {record['role']!r}")
    extra = record.get("extra") or {}
    if not isinstance(extra, dict):
        raise ContractError("extra must be a string map")
    for key in ct.required_extra:
        if key not in extra:
            raise ContractError(f"missing extra: {key}")
    return {
        "chain_id": record["chain_id"],
        "name": record["name"],
        "chain_type": record["chain_type"],
        "server_ip": record["server_ip"],
        "port": port,
        "extra": {str(k): str(v) for k, v in extra.items()},
        "role": record["role"],
    }


class ConnectorContract(BaseContract):
    name = "connector"

    def __init__(self) -> None:
        super().__init__()
        self.register("InitLedger", self._init_ledger)
        self.register("EnrollBlockchain", self._enroll)
        self.register("QueryBlockchain", self._query)
        self.register("QueryAllBlockchains", self._query_all)

    def _init_ledger(self, ctx: TxContext, args: list[bytes]) -> bytes:
        if ctx.get_state(INIT_MARKER) is not None:
            raise ContractError("already initialized")
        samples = from_json(args[0]) if args and args[0] else []
        for raw in samples:
            record = validate_record(raw)
            key = CHAIN_PREFIX + record["chain_id"]
            if ctx.get_state(key) is not None:
                raise ContractError("already enrolled")
            ctx.put_state(key, canonical_json(record))
        ctx.put_state(INIT_MARKER, b"1")
        return canonical_json({"initialized": len(samples)})

    def _enroll(self, ctx: TxContext, args: list[bytes]) -> bytes:
        if not args:
            raise ContractError("EnrollBlockchain: expected record")
        record = validate_record(from_json(args[0]))
        key = CHAIN_PREFIX + record["chain_id"]
        if ctx.get_state(key) is not None:
            raise ContractError("already enrolled")
        ctx.put_state(key, canonical_json(record))
        return record["chain_id"].encode()

    def _query(self, ctx: TxContext, args: list[bytes]) -> bytes:
        (chain_id,) = want_args(args, 1, "QueryBlockchain")
        raw = ctx.get_state(CHAIN_PREFIX + chain_id)
        if raw is None:
            raise ContractError("not found")
        return raw

    def _query_all(self, ctx: TxContext, args: list[bytes]) -> bytes:
        pairs = ctx.get_all(CHAIN_PREFIX)  # sorted by key == sorted by chain_id
        return b"[" + b",".join(v for _, v in pairs) + b"]"
