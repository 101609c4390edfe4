"""Core ledger domain types: transactions, receipts, blocks, capacity model."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class TxKind(str, Enum):
    INVOKE = "invoke"
    QUERY = "query"


class TxStatus(str, Enum):
    COMMITTED = "committed"
    QUERY_OK = "query_ok"
    REJECTED = "rejected"
    DROPPED = "dropped"


# Delivery outcomes are plain strings so they serialize unchanged into
# receipts and wire replies: "delivered" or "failed:<reason>".
DELIVERED = "delivered"


def failed(reason: str) -> str:
    return f"failed:{reason}"


@dataclass
class Transaction:
    tx_id: str
    kind: TxKind
    contract: str
    operation: str
    args: list[bytes]
    submitted_at: int = 0  # monotonic ns, stamped at submission
    caller: str = "external"


@dataclass
class TxReceipt:
    tx_id: str
    status: TxStatus
    latency_ns: int = 0
    reason: str | None = None          # set for REJECTED / DROPPED
    block_height: int | None = None    # set for COMMITTED
    payload: bytes | None = None       # set for QUERY_OK (and invoke results)
    deliveries: list[tuple[str, str]] = field(default_factory=list)
    service_units: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status in (TxStatus.COMMITTED, TxStatus.QUERY_OK)


@dataclass
class Block:
    height: int
    prev_hash: bytes
    txs: list[Transaction]
    committed_at: int = 0  # monotonic ns


@dataclass
class CapacityModel:
    """Service parameters of the two-path transaction pipeline.

    Invokes drain from a bounded FIFO queue at invoke_service_rate units/s;
    a normal invoke costs 1 unit, a publish costs
    publish_base_cost + publish_per_subscriber_cost * fan_out units.
    Queries are served immediately at query_service_rate each.
    """

    invoke_service_rate: float = 100.0
    query_service_rate: float = 500.0
    publish_base_cost: float = 1.0
    publish_per_subscriber_cost: float = 0.1
    queue_capacity: int = 256
    block_interval_ms: float = 100.0
    max_block_size: int = 8

    def validate(self) -> None:
        positive = {
            "invoke_service_rate": self.invoke_service_rate,
            "query_service_rate": self.query_service_rate,
            "publish_base_cost": self.publish_base_cost,
            "publish_per_subscriber_cost": self.publish_per_subscriber_cost,
            "block_interval_ms": self.block_interval_ms,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValueError(f"{name} must be > 0 (got {value})")
        if self.max_block_size < 1:
            raise ValueError("max_block_size must be >= 1")
        if self.queue_capacity < self.max_block_size:
            raise ValueError("queue_capacity must be >= max_block_size")

    @classmethod
    def from_dict(cls, raw: dict) -> "CapacityModel":
        model = cls(**raw)
        model.validate()
        return model

    def to_dict(self) -> dict:
        return {
            "invoke_service_rate": self.invoke_service_rate,
            "query_service_rate": self.query_service_rate,
            "publish_base_cost": self.publish_base_cost,
            "publish_per_subscriber_cost": self.publish_per_subscriber_cost,
            "queue_capacity": self.queue_capacity,
            "block_interval_ms": self.block_interval_ms,
            "max_block_size": self.max_block_size,
        }
