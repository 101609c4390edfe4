"""Deterministic transaction execution over the world state.

The engine knows nothing about timing: it takes ordered transactions and
produces write sets, payloads, and per-tx outcomes. The threaded pipeline
and the synchronous DirectLedger both drive it, which is what makes block
replay reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Protocol

from ..encoding import canonical_json, sha256
from .state import WorldState, prefix_scan
from .types import Block, Transaction, TxKind, TxReceipt, TxStatus


class ContractError(Exception):
    """Raised by contract code to reject the transaction with a reason."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class Contract(Protocol):
    name: str

    def operations(self) -> set[str]: ...

    def execute(self, ctx: "TxContext", operation: str, args: list[bytes]) -> bytes: ...


class NotifierLike(Protocol):
    def dispatch_all(self, records: list[dict | None], topic_id: str, message: bytes) -> list[str]: ...


@dataclass
class Services:
    """Side-effect providers injected into contract execution."""

    notifier: NotifierLike | None = None


def _as_key(key: str | bytes) -> bytes:
    return key.encode("utf-8") if isinstance(key, str) else key


class TxContext:
    """State view handed to contract code for one transaction.

    Reads see committed state, earlier transactions in the same block, and
    the transaction's own writes, in that order of precedence (reversed).
    Writes stay buffered until the transaction succeeds.
    """

    def __init__(
        self,
        engine: "Engine",
        committed: dict[bytes, bytes],
        block_buffer: dict[bytes, bytes],
        caller: str,
        read_only: bool,
        services: Services,
    ):
        self._engine = engine
        self._committed = committed
        self._block_buffer = block_buffer
        self._tx_buffer: dict[bytes, bytes] = {}
        self.caller = caller
        self.read_only = read_only
        self.services = services
        self.deliveries: list[tuple[str, str]] = []

    def get_state(self, key: str | bytes) -> bytes | None:
        k = _as_key(key)
        if k in self._tx_buffer:
            return self._tx_buffer[k]
        if k in self._block_buffer:
            return self._block_buffer[k]
        return self._committed.get(k)

    def put_state(self, key: str | bytes, value: bytes) -> None:
        if self.read_only:
            raise ContractError("state mutation in read-only context")
        self._tx_buffer[_as_key(key)] = value

    def get_all(self, prefix: str | bytes) -> list[tuple[bytes, bytes]]:
        p = _as_key(prefix)
        merged = dict(self._committed)
        merged.update(self._block_buffer)
        merged.update(self._tx_buffer)
        return prefix_scan(merged, p)

    def call_contract(self, contract: str, operation: str, args: list[bytes]) -> bytes:
        """Read-only inter-contract query over the same state view."""
        target = self._engine.contract(contract)
        sub = TxContext(self._engine, self._committed, self._block_buffer, self.caller, True, self.services)
        # expose this tx's own buffered writes to the sub-query
        sub._tx_buffer = dict(self._block_buffer)
        sub._tx_buffer.update(self._tx_buffer)
        return target.execute(sub, operation, args)

    def record_delivery(self, chain_id: str, status: str) -> None:
        self.deliveries.append((chain_id, status))

    def take_writes(self) -> dict[bytes, bytes]:
        return self._tx_buffer


@dataclass
class TxOutcome:
    tx: Transaction
    status: TxStatus
    reason: str | None = None
    payload: bytes | None = None
    deliveries: list[tuple[str, str]] = field(default_factory=list)
    service_units: float = 1.0


@dataclass
class BlockResult:
    outcomes: list[TxOutcome]
    write_set: dict[bytes, bytes]
    total_units: float


class Engine:
    """Executes transactions against registered contracts."""

    # invokes whose service cost scales with fan-out
    FANOUT_OPERATION = "PublishToTopic"

    def __init__(self, contracts: dict[str, Contract], services: Services | None = None,
                 publish_base_cost: float = 1.0, publish_per_subscriber_cost: float = 0.1):
        self._contracts = dict(contracts)
        self.services = services or Services()
        self.publish_base_cost = publish_base_cost
        self.publish_per_subscriber_cost = publish_per_subscriber_cost

    def contract(self, name: str) -> Contract:
        try:
            return self._contracts[name]
        except KeyError:
            raise ContractError(f"unknown contract: {name}") from None

    def knows_operation(self, contract: str, operation: str) -> bool:
        c = self._contracts.get(contract)
        return c is not None and operation in c.operations()

    def _units_for(self, tx: Transaction, deliveries: list[tuple[str, str]]) -> float:
        if tx.operation == self.FANOUT_OPERATION:
            return self.publish_base_cost + self.publish_per_subscriber_cost * len(deliveries)
        return 1.0

    def execute_one(self, tx: Transaction, committed: dict[bytes, bytes],
                    block_buffer: dict[bytes, bytes]) -> TxOutcome:
        ctx = TxContext(self, committed, block_buffer, tx.caller, tx.kind is TxKind.QUERY, self.services)
        try:
            contract = self.contract(tx.contract)
            if tx.operation not in contract.operations():
                raise ContractError(f"unknown operation: {tx.operation}")
            payload = contract.execute(ctx, tx.operation, tx.args)
        except ContractError as err:
            return TxOutcome(tx, TxStatus.REJECTED, reason=err.reason,
                             deliveries=ctx.deliveries,
                             service_units=self._units_for(tx, []))
        if tx.kind is TxKind.INVOKE:
            block_buffer.update(ctx.take_writes())
            return TxOutcome(tx, TxStatus.COMMITTED, payload=payload,
                             deliveries=ctx.deliveries,
                             service_units=self._units_for(tx, ctx.deliveries))
        return TxOutcome(tx, TxStatus.QUERY_OK, payload=payload, service_units=1.0)

    def execute_block(self, txs: list[Transaction], world: WorldState) -> BlockResult:
        """Run invokes in order; failed ones roll back their own writes only."""
        committed = world.snapshot()
        block_buffer: dict[bytes, bytes] = {}
        outcomes = [self.execute_one(tx, committed, block_buffer) for tx in txs]
        total = sum(o.service_units for o in outcomes)
        return BlockResult(outcomes, block_buffer, total)

    def execute_query(self, tx: Transaction, world: WorldState) -> TxOutcome:
        return self.execute_one(tx, world.snapshot(), {})


def block_digest(height: int, prev_hash: bytes, txs: list[Transaction]) -> bytes:
    """Chain digest over logical content only (no timestamps), so two runs
    fed the same ordered transactions produce identical digests."""
    parts: list[Any] = [height, prev_hash.hex()]
    for tx in txs:
        parts.append([tx.tx_id, tx.kind.value, tx.contract, tx.operation,
                      tx.caller, [a.hex() for a in tx.args]])
    return sha256(canonical_json(parts))


class DirectLedger:
    """Synchronous ledger: no threads, no capacity timing, no persistence.

    Used by contract tests, the reference-model oracle, and log replay.
    Batching is deterministic: each submit_block call is one block.
    """

    def __init__(self, engine: Engine):
        self.engine = engine
        self.world = WorldState()
        self.height = 0
        self.prev_hash: bytes | None = None  # set by callers that chain digests
        self.blocks: list[Block] = []

    def submit_block(self, txs: list[Transaction]) -> list[TxOutcome]:
        result = self.engine.execute_block(txs, self.world)
        self.world.apply(result.write_set)
        self.height += 1
        self.blocks.append(Block(self.height, b"", list(txs)))
        return result.outcomes

    def invoke(self, contract: str, operation: str, args: list[bytes],
               caller: str = "external", tx_id: str | None = None) -> TxOutcome:
        tx = Transaction(tx_id or f"tx-{self.height + 1}", TxKind.INVOKE, contract, operation, args, caller=caller)
        return self.submit_block([tx])[0]

    def query(self, contract: str, operation: str, args: list[bytes],
              caller: str = "external") -> TxOutcome:
        tx = Transaction("q", TxKind.QUERY, contract, operation, args, caller=caller)
        return self.engine.execute_query(tx, self.world)
