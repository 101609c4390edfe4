"""Key-value world state with snapshot-on-commit semantics.

Commits replace the backing dict atomically, so readers that grab a
snapshot never observe a half-applied block. Version increases by exactly
one per committed block.
"""
from __future__ import annotations


class WorldState:
    def __init__(self) -> None:
        self._entries: dict[bytes, bytes] = {}
        self.version = 0

    def snapshot(self) -> dict[bytes, bytes]:
        """Current committed entries. Treated as immutable by readers."""
        return self._entries

    def apply(self, write_set: dict[bytes, bytes]) -> None:
        """Commit one block's writes atomically and bump the version."""
        merged = dict(self._entries)
        merged.update(write_set)
        self._entries = merged
        self.version += 1

    def get(self, key: bytes) -> bytes | None:
        return self._entries.get(key)

    def __len__(self) -> int:
        return len(self._entries)


def prefix_scan(entries: dict[bytes, bytes], prefix: bytes) -> list[tuple[bytes, bytes]]:
    """All (key, value) pairs under prefix, sorted by key bytes."""
    return sorted((k, v) for k, v in entries.items() if k.startswith(prefix))
