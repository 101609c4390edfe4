"""Block log persistence: round trips, dumps, torn tails, corruption."""
import io

import pytest

from ledgerbus.encoding import canonical_json
from ledgerbus.ledger import (Block, BlockStore, CorruptLogError, DirectLedger,
                              Engine, Transaction, TxKind, block_digest,
                              dump_json_lines, genesis_digest, read_blocks, replay)
from ledgerbus.ledger.blocklog import decode_block, encode_block
from ledgerbus.contracts import broker_contracts
from ledgerbus.ledger import Services

from conftest import chain_record, make_direct


def _tx(i: int, op: str = "EnrollBlockchain", args=None, caller="external") -> Transaction:
    return Transaction(f"tx-{i}", TxKind.INVOKE, "connector", op,
                       args or [canonical_json(chain_record(f"c{i}"))],
                       submitted_at=1000 + i, caller=caller)


def _write_chain(path: str, n_blocks: int) -> list[Block]:
    store = BlockStore(path)
    store.open_fresh()
    prev = genesis_digest()
    blocks = []
    for h in range(1, n_blocks + 1):
        block = Block(h, prev, [_tx(h)], committed_at=h * 10)
        store.append(block)
        prev = block_digest(h, prev, block.txs)
        blocks.append(block)
    store.close()
    return blocks


def test_block_encode_decode_round_trip():
    tx = Transaction("id-1", TxKind.INVOKE, "topics", "PublishToTopic",
                     [b"T1", bytes(range(256))], submitted_at=42, caller="P1")
    block = Block(7, b"\xab" * 32, [tx], committed_at=123456789)
    decoded = decode_block(encode_block(block))
    assert decoded == block


def test_log_round_trip(tmp_path):
    path = str(tmp_path / "blocks.log")
    written = _write_chain(path, 5)
    read = list(read_blocks(path))
    assert read == written


def test_replay_rebuilds_state(tmp_path):
    path = str(tmp_path / "blocks.log")
    _write_chain(path, 3)
    engine = Engine(broker_contracts(), services=Services())
    recovered = replay(path, engine)
    assert recovered.blocks == 3
    assert recovered.height == 3
    expected = make_direct()
    for h in range(1, 4):
        expected.submit_block([_tx(h)])
    assert recovered.world.snapshot() == expected.world.snapshot()


def test_torn_tail_recovers_prefix(tmp_path):
    path = str(tmp_path / "blocks.log")
    _write_chain(path, 4)
    with open(path, "rb") as fh:
        data = fh.read()
    with open(path, "wb") as fh:
        fh.write(data[:-7])  # cut into the final frame
    blocks = list(read_blocks(path))
    assert [b.height for b in blocks] == [1, 2, 3]


def test_interior_corruption_reports_height(tmp_path):
    path = str(tmp_path / "blocks.log")
    _write_chain(path, 4)
    with open(path, "rb") as fh:
        data = bytearray(fh.read())
    # flip one byte roughly in the middle of the file (inside block 2 or 3)
    data[len(data) // 2] ^= 0x01
    with open(path, "wb") as fh:
        fh.write(bytes(data))
    engine = Engine(broker_contracts(), services=Services())
    with pytest.raises(CorruptLogError) as err:
        replay(path, engine)
    assert 1 <= err.value.height <= 4


def test_dump_json_lines(tmp_path):
    path = str(tmp_path / "blocks.log")
    _write_chain(path, 2)
    out = io.StringIO()
    n = dump_json_lines(path, out)
    lines = out.getvalue().strip().split("\n")
    assert n == 3  # genesis + 2 blocks
    import json
    records = [json.loads(line) for line in lines]
    assert records[0]["record"] == "genesis"
    assert records[0]["digest"] == "sha256"
    assert [r["height"] for r in records[1:]] == [1, 2]
    assert records[1]["txs"][0]["operation"] == "EnrollBlockchain"


def test_replay_detects_chain_gap(tmp_path):
    path = str(tmp_path / "blocks.log")
    store = BlockStore(path)
    store.open_fresh()
    store.append(Block(1, genesis_digest(), [_tx(1)], committed_at=1))
    store.append(Block(3, b"\x01" * 32, [_tx(3)], committed_at=3))  # gap
    store.close()
    engine = Engine(broker_contracts(), services=Services())
    with pytest.raises(CorruptLogError):
        replay(path, engine)
