"""Two-path transaction pipeline with a configurable capacity model.

Invokes enter a bounded FIFO queue and are cut into blocks every
block_interval_ms or when max_block_size accumulate, whichever comes
first; a single committer thread executes each block in order, consumes
service time (total units / invoke_service_rate), commits atomically, and
resolves receipts. When the queue is full, submission fails immediately
with a Dropped(overload) receipt — that is the overload regime.

Queries bypass ordering entirely: they run on the calling thread against
the latest committed snapshot, costing 1/query_service_rate seconds.
"""
from __future__ import annotations

import itertools
import logging
import threading
import time
from collections import deque
from concurrent.futures import Future
from dataclasses import dataclass, field

from .blocklog import BlockStore, Recovered, genesis_digest
from .engine import Engine, block_digest
from .state import WorldState
from .types import Block, CapacityModel, Transaction, TxKind, TxReceipt, TxStatus

log = logging.getLogger(__name__)


class PipelineStopped(RuntimeError):
    pass


@dataclass
class TxHandle:
    """Asynchronous completion of a submitted transaction."""

    tx_id: str
    _future: Future = field(repr=False, default_factory=Future)

    def result(self, timeout: float | None = None) -> TxReceipt:
        return self._future.result(timeout)

    def done(self) -> bool:
        return self._future.done()


@dataclass
class PipelineStats:
    submitted: int = 0
    committed: int = 0
    query_ok: int = 0
    rejected: int = 0
    dropped: int = 0
    units_consumed: float = 0.0

    @property
    def terminal(self) -> int:
        return self.committed + self.query_ok + self.rejected + self.dropped


class LedgerPipeline:
    def __init__(
        self,
        engine: Engine,
        capacity: CapacityModel,
        store: BlockStore | None = None,
        recovered: Recovered | None = None,
    ):
        capacity.validate()
        self.engine = engine
        self.capacity = capacity
        self.store = store
        if recovered is not None:
            self.world = recovered.world
            self._height = recovered.height
            self._prev_hash = recovered.prev_hash
        else:
            self.world = WorldState()
            self._height = 0
            self._prev_hash = genesis_digest()

        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._pending: deque[tuple[Transaction, Future]] = deque()
        self._cut_deadline: float | None = None
        self._stopping = False
        self._drain = True
        self._abort_sleep = threading.Event()
        self._thread: threading.Thread | None = None
        self._listeners: list = []
        self._seq = itertools.count(1)
        self.stats = PipelineStats()

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        if self._thread is not None:
            raise RuntimeError("pipeline already started")
        self._thread = threading.Thread(target=self._run, name="ledger-committer", daemon=True)
        self._thread.start()

    def stop(self, drain: bool = True) -> None:
        with self._cond:
            self._stopping = True
            self._drain = drain
            self._cond.notify_all()
        if not drain:
            self._abort_sleep.set()
        if self._thread is not None:
            self._thread.join()
            self._thread = None
        # anything still queued resolves as rejected on non-drain teardown
        leftovers = []
        with self._lock:
            while self._pending:
                leftovers.append(self._pending.popleft())
        for tx, fut in leftovers:
            self.stats.rejected += 1
            fut.set_result(self._receipt(tx, TxStatus.REJECTED, reason="shutdown"))

    def add_commit_listener(self, fn) -> None:
        """fn(block) is called after each commit; the committed-block stream."""
        self._listeners.append(fn)

    @property
    def height(self) -> int:
        return self._height

    # -- submission --------------------------------------------------------

    def next_tx_id(self) -> str:
        return f"tx-{next(self._seq):08d}"

    def submit_tx(self, tx: Transaction) -> TxHandle:
        tx.submitted_at = time.monotonic_ns()
        handle = TxHandle(tx.tx_id)
        if not self.engine.knows_operation(tx.contract, tx.operation):
            self._finish(handle, self._receipt(tx, TxStatus.REJECTED,
                                               reason=f"unknown operation: {tx.contract}.{tx.operation}"))
            with self._lock:
                self.stats.submitted += 1
                self.stats.rejected += 1
            return handle

        if tx.kind is TxKind.QUERY:
            with self._lock:
                self.stats.submitted += 1
            self._serve_query(tx, handle)
            return handle

        with self._cond:
            self.stats.submitted += 1
            if len(self._pending) >= self.capacity.queue_capacity:
                self.stats.dropped += 1
                receipt = self._receipt(tx, TxStatus.DROPPED, reason="overload")
            else:
                if not self._pending:
                    self._cut_deadline = time.monotonic() + self.capacity.block_interval_ms / 1000.0
                self._pending.append((tx, handle._future))
                self._cond.notify_all()
                return handle
        self._finish(handle, receipt)
        return handle

    def submit(self, kind: TxKind, contract: str, operation: str, args: list[bytes],
               caller: str = "external", tx_id: str | None = None) -> TxHandle:
        tx = Transaction(tx_id or self.next_tx_id(), kind, contract, operation, list(args), caller=caller)
        return self.submit_tx(tx)

    def invoke(self, contract: str, operation: str, args: list[bytes],
               caller: str = "external", tx_id: str | None = None, timeout: float | None = 60.0) -> TxReceipt:
        return self.submit(TxKind.INVOKE, contract, operation, args, caller, tx_id).result(timeout)

    def query(self, contract: str, operation: str, args: list[bytes],
              caller: str = "external", tx_id: str | None = None) -> TxReceipt:
        return self.submit(TxKind.QUERY, contract, operation, args, caller, tx_id).result()

    # -- internals ---------------------------------------------------------

    def _receipt(self, tx: Transaction, status: TxStatus, **kw) -> TxReceipt:
        latency = max(1, time.monotonic_ns() - tx.submitted_at)
        return TxReceipt(tx.tx_id, status, latency_ns=latency, **kw)

    @staticmethod
    def _finish(handle: TxHandle, receipt: TxReceipt) -> None:
        handle._future.set_result(receipt)

    def _serve_query(self, tx: Transaction, handle: TxHandle) -> None:
        time.sleep(1.0 / self.capacity.query_service_rate)
        outcome = self.engine.execute_query(tx, self.world)
        if outcome.status is TxStatus.QUERY_OK:
            with self._lock:
                self.stats.query_ok += 1
            receipt = self._receipt(tx, TxStatus.QUERY_OK, payload=outcome.payload,
                                    service_units=outcome.service_units)
        else:
            with self._lock:
                self.stats.rejected += 1
            receipt = self._receipt(tx, TxStatus.REJECTED, reason=outcome.reason)
        self._finish(handle, receipt)

    def _take_batch(self) -> list[tuple[Transaction, Future]] | None:
        """Block until a batch is due (size or interval trigger) or stop."""
        with self._cond:
            while True:
                n = len(self._pending)
                if self._stopping and (not self._drain or n == 0):
                    return None
                if n >= self.capacity.max_block_size:
                    break
                if n > 0:
                    if self._stopping:  # draining: no need to wait out the interval
                        break
                    now = time.monotonic()
                    if self._cut_deadline is not None and now >= self._cut_deadline:
                        break
                    self._cond.wait(timeout=max(0.0, (self._cut_deadline or now) - now))
                else:
                    self._cond.wait(timeout=0.5)
            batch = [self._pending.popleft() for _ in range(min(len(self._pending), self.capacity.max_block_size))]
            if self._pending:
                self._cut_deadline = time.monotonic() + self.capacity.block_interval_ms / 1000.0
            else:
                self._cut_deadline = None
            return batch

    def _run(self) -> None:
        while True:
            batch = self._take_batch()
            if batch is None:
                return
            txs = [tx for tx, _ in batch]
            result = self.engine.execute_block(txs, self.world)
            # service time: the pipeline drains at invoke_service_rate units/s
            self._abort_sleep.wait(timeout=result.total_units / self.capacity.invoke_service_rate)

            height = self._height + 1
            block = Block(height, self._prev_hash, txs, committed_at=time.monotonic_ns())
            self.world.apply(result.write_set)
            if self.store is not None:
                self.store.append(block)
            self._prev_hash = block_digest(height, block.prev_hash, txs)
            self._height = height
            with self._lock:
                self.stats.units_consumed += result.total_units

            for (tx, fut), outcome in zip(batch, result.outcomes):
                if outcome.status is TxStatus.COMMITTED:
                    with self._lock:
                        self.stats.committed += 1
                    receipt = self._receipt(tx, TxStatus.COMMITTED, block_height=height,
                                            payload=outcome.payload, deliveries=outcome.deliveries,
                                            service_units=outcome.service_units)
                else:
                    with self._lock:
                        self.stats.rejected += 1
                    receipt = self._receipt(tx, TxStatus.REJECTED, reason=outcome.reason,
                                            deliveries=outcome.deliveries,
                                            service_units=outcome.service_units)
                fut.set_result(receipt)
            for fn in self._listeners:
                try:
                    fn(block)
                except Exception:  # listeners must not kill the committer
                    log.exception("commit listener failed")
