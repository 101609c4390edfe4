"""Registry of remote chain technology tags.

Enrollment validates a record's type against this registry, including the
per-type required `extra` connection details. New chain technologies are
added by registering a tag here (and a request builder with the notifier).
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ChainType:
    tag: str
    required_extra: tuple[str, ...]
    # path prefix the broker uses when calling this kind of chain
    base_path: str


FABRIC_LIKE = ChainType("FabricLike", ("channel", "contract"), "/connector")
BESU_LIKE = ChainType("BesuLike", ("address", "abi", "private_key"), "/rpc")

_REGISTRY: dict[str, ChainType] = {}


def register_chain_type(ct: ChainType) -> None:
    if ct.tag in _REGISTRY:
        raise ValueError(f"chain type already registered: {ct.tag}")
    _REGISTRY[ct.tag] = ct


def chain_type(tag: str) -> ChainType | None:
    return _REGISTRY.get(tag)


def registered_tags() -> list[str]:
    return sorted(_REGISTRY)


for _ct in (FABRIC_LIKE, BESU_LIKE):
    register_chain_type(_ct)
