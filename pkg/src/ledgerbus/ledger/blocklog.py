"""Append-only block log: length-prefixed binary records with recovery.

Record 0 is a genesis header naming the digest algorithm; record N holds
block N. Each frame carries a checksum over its raw bytes; an interior
checksum failure is corruption (reported with its height), while a bad or
incomplete final frame is treated as a torn tail from a crash and dropped.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from typing import BinaryIO, Callable, Iterator

from ..encoding import (ZERO_DIGEST, FrameCorruption, FrameTruncation,
                        canonical_json, from_json, read_frames, sha256, write_frame)
from .engine import Engine, block_digest
from .state import WorldState
from .types import Block, Transaction, TxKind

_GENESIS_TAG = b"G"
_BLOCK_TAG = b"B"
_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")
_I64 = struct.Struct(">q")

GENESIS_HEADER = {"digest": "sha256", "format": 1}


def genesis_payload() -> bytes:
    return _GENESIS_TAG + canonical_json(GENESIS_HEADER)


def genesis_digest() -> bytes:
    return sha256(genesis_payload())


class CorruptLogError(Exception):
    def __init__(self, height: int, message: str):
        super().__init__(f"block log corrupt at height {height}: {message}")
        self.height = height


def _pack_bytes(out: io.BytesIO, data: bytes) -> None:
    out.write(_U32.pack(len(data)))
    out.write(data)


def _unpack_bytes(buf: memoryview, off: int) -> tuple[bytes, int]:
    (n,) = _U32.unpack_from(buf, off)
    off += _U32.size
    return bytes(buf[off:off + n]), off + n


def encode_block(block: Block) -> bytes:
    out = io.BytesIO()
    out.write(_BLOCK_TAG)
    out.write(_U64.pack(block.height))
    out.write(block.prev_hash)
    out.write(_I64.pack(block.committed_at))
    out.write(_U32.pack(len(block.txs)))
    for tx in block.txs:
        _pack_bytes(out, tx.tx_id.encode("utf-8"))
        out.write(b"\x01" if tx.kind is TxKind.INVOKE else b"\x00")
        _pack_bytes(out, tx.contract.encode("utf-8"))
        _pack_bytes(out, tx.operation.encode("utf-8"))
        _pack_bytes(out, tx.caller.encode("utf-8"))
        out.write(_I64.pack(tx.submitted_at))
        out.write(_U32.pack(len(tx.args)))
        for arg in tx.args:
            _pack_bytes(out, arg)
    return out.getvalue()


def decode_block(payload: bytes) -> Block:
    buf = memoryview(payload)
    off = 1  # tag
    (height,) = _U64.unpack_from(buf, off)
    off += _U64.size
    prev_hash = bytes(buf[off:off + 32])
    off += 32
    (committed_at,) = _I64.unpack_from(buf, off)
    off += _I64.size
    (ntx,) = _U32.unpack_from(buf, off)
    off += _U32.size
    txs = []
    for _ in range(ntx):
        tx_id, off = _unpack_bytes(buf, off)
        kind = TxKind.INVOKE if buf[off] == 1 else TxKind.QUERY
        off += 1
        contract, off = _unpack_bytes(buf, off)
        operation, off = _unpack_bytes(buf, off)
        caller, off = _unpack_bytes(buf, off)
        (submitted_at,) = _I64.unpack_from(buf, off)
        off += _I64.size
        (nargs,) = _U32.unpack_from(buf, off)
        off += _U32.size
        args = []
        for _ in range(nargs):
            arg, off = _unpack_bytes(buf, off)
            args.append(arg)
        txs.append(Transaction(tx_id.decode(), kind, contract.decode(), operation.decode(),
                               args, submitted_at, caller.decode()))
    return Block(height, prev_hash, txs, committed_at)


@dataclass
class Recovered:
    world: WorldState
    height: int
    prev_hash: bytes
    blocks: int


class BlockStore:
    """File-backed block log. append() flushes before returning, so a block
    whose receipts were delivered is always recoverable."""

    def __init__(self, path: str, fsync: bool = False):
        self.path = path
        self._fsync = fsync
        self._fh: BinaryIO | None = None

    def open_fresh(self) -> None:
        self._fh = open(self.path, "wb")
        write_frame(self._fh, genesis_payload())
        self._fh.flush()

    def open_existing(self) -> None:
        self._fh = open(self.path, "ab")

    def append(self, block: Block) -> None:
        assert self._fh is not None, "store not open"
        write_frame(self._fh, encode_block(block))
        self._fh.flush()
        if self._fsync:
            import os
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def read_blocks(path: str) -> Iterator[Block]:
    """Blocks from an intact prefix; torn tail tolerated, corruption fatal."""
    with open(path, "rb") as fh:
        frames = read_frames(fh)
        index = 0
        while True:
            try:
                payload = next(frames)
            except StopIteration:
                return
            except FrameTruncation:
                return  # crash artifact: drop the torn tail
            except FrameCorruption as err:
                # A bad *final* frame is indistinguishable from a torn write;
                # only an interior bad frame is real corruption.
                if fh.read(1) == b"":
                    return
                raise CorruptLogError(err.index, "checksum mismatch") from err
            if index == 0:
                if not payload.startswith(_GENESIS_TAG):
                    raise CorruptLogError(0, "missing genesis header")
                header = from_json(payload[1:])
                if header.get("digest") != "sha256":
                    raise CorruptLogError(0, f"unsupported digest {header.get('digest')!r}")
            else:
                if not payload.startswith(_BLOCK_TAG):
                    raise CorruptLogError(index, "bad record tag")
                yield decode_block(payload)
            index += 1


def replay(path: str, engine: Engine,
           on_block: Callable[[Block], None] | None = None) -> Recovered:
    """Rebuild world state by re-executing the logged invoke sequence.

    Verifies the prev_hash chain as it goes; a digest mismatch is reported
    with the offending height.
    """
    world = WorldState()
    prev = genesis_digest()
    height = 0
    count = 0
    for block in read_blocks(path):
        if block.height != height + 1:
            raise CorruptLogError(block.height, f"height gap after {height}")
        if block.prev_hash != prev:
            raise CorruptLogError(block.height, "prev_hash chain mismatch")
        result = engine.execute_block(block.txs, world)
        world.apply(result.write_set)
        prev = block_digest(block.height, block.prev_hash, block.txs)
        height = block.height
        count += 1
        if on_block:
            on_block(block)
    return Recovered(world, height, prev, count)


def dump_json_lines(path: str, out) -> int:
    """Emit the log as JSON lines (one genesis line, then one per block)."""
    from ..encoding import b64e
    with open(path, "rb") as fh:
        frames = read_frames(fh)
        n = 0
        for index, payload in enumerate(frames):
            if index == 0:
                rec = {"record": "genesis", **from_json(payload[1:])}
            else:
                block = decode_block(payload)
                rec = {
                    "record": "block",
                    "height": block.height,
                    "prev_hash": block.prev_hash.hex(),
                    "committed_at": block.committed_at,
                    "txs": [
                        {
                            "tx_id": tx.tx_id,
                            "kind": tx.kind.value,
                            "contract": tx.contract,
                            "operation": tx.operation,
                            "caller": tx.caller,
                            "submitted_at": tx.submitted_at,
                            "args_b64": [b64e(a) for a in tx.args],
                        }
                        for tx in block.txs
                    ],
                }
            out.write(canonical_json(rec).decode("ascii") + "\n")
            n += 1
        return n
