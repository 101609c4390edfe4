"""Shared helpers for ledger contracts."""
from __future__ import annotations

from ..encoding import canonical_json, from_json
from ..ledger.engine import ContractError, TxContext


class BaseContract:
    """Dispatches operation names to registered handlers."""

    name = "base"

    def __init__(self) -> None:
        self._ops = {}

    def register(self, operation: str, fn) -> None:
        self._ops[operation] = fn

    def operations(self) -> set[str]:
        return set(self._ops)

    def execute(self, ctx: TxContext, operation: str, args: list[bytes]) -> bytes:
        try:
            fn = self._ops[operation]
        except KeyError:
            raise ContractError(f"unknown operation: {operation}") from None
        return fn(ctx, args)


def want_args(args: list[bytes], n: int, op: str) -> list[str]:
    if len(args) < n:
        raise ContractError(f"{op}: expected {n} args, got {len(args)}")
    return [a.decode("utf-8", errors="replace") for a in args[:n]]


def load_record(ctx: TxContext, key: str, missing: str) -> dict:
    raw = ctx.get_state(key)
    if raw is None:
        raise ContractError(missing)
    return from_json(raw)


def store_record(ctx: TxContext, key: str, record: dict) -> None:
    ctx.put_state(key, canonical_json(record))
