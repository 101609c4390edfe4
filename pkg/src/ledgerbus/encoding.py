"""Canonical byte encodings: deterministic JSON, digests, framed records.

Everything that is persisted or compared against golden files goes through
these helpers so that replays are bit-stable across runs and platforms.
"""
from __future__ import annotations

import base64
import hashlib
import json
import struct
from typing import Any, BinaryIO, Iterator

_FRAME_LEN = struct.Struct(">I")
DIGEST_SIZE = 32
ZERO_DIGEST = b"\x00" * DIGEST_SIZE


def canonical_json(obj: Any) -> bytes:
    """JSON with sorted keys and no insignificant whitespace, ASCII-only."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode("ascii")


def from_json(data: bytes | str) -> Any:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return json.loads(data)


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def b64e(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def b64d(text: str) -> bytes:
    return base64.b64decode(text.encode("ascii"))


class FrameError(Exception):
    """Base class for framed-record read failures."""

    def __init__(self, index: int, message: str):
        super().__init__(f"record {index}: {message}")
        self.index = index


class FrameCorruption(FrameError):
    """A complete interior frame failed its checksum."""


class FrameTruncation(FrameError):
    """The file ends mid-frame (torn tail from a crash)."""


def write_frame(fh: BinaryIO, payload: bytes) -> None:
    fh.write(_FRAME_LEN.pack(len(payload)))
    fh.write(payload)
    fh.write(sha256(payload))


def read_frames(fh: BinaryIO) -> Iterator[bytes]:
    """Yield frame payloads in order.

    Raises FrameTruncation for an incomplete trailing frame and
    FrameCorruption for a checksum mismatch. Callers decide whether a bad
    final frame is tolerable (crash recovery) or fatal (corruption).
    """
    index = 0
    while True:
        head = fh.read(_FRAME_LEN.size)
        if not head:
            return
        if len(head) < _FRAME_LEN.size:
            raise FrameTruncation(index, "incomplete length prefix")
        (length,) = _FRAME_LEN.unpack(head)
        body = fh.read(length + DIGEST_SIZE)
        if len(body) < length + DIGEST_SIZE:
            raise FrameTruncation(index, "incomplete frame body")
        payload, digest = body[:length], body[length:]
        if sha256(payload) != digest:
            raise FrameCorruption(index, "checksum mismatch")
        yield payload
        index += 1
