"""Open-loop fixed-rate benchmark runner.

Workers jointly emit send_rate requests per second on a uniform
inter-arrival schedule, regardless of how many requests are outstanding
(open loop: that is what exposes queue growth under saturation). Requests
are dispatched through a thread pool so a slow reply never delays the
schedule. Rounds run back to back against one live target, so backlog
carries over exactly as it does when a rate controller steps up the send
rate against a running network.
"""
from __future__ import annotations

import datetime as _dt
import logging
import shutil
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from ..ledger.types import CapacityModel
from ..service.broker import Broker
from ..service.config import BrokerConfig
from ..transport.sim import SimTransport
from ..transport.http import HttpTransport
from ..transport.wire import (ConnectionRefused, Endpoint, Reply, TransportError,
                              TransportTimeout, WireKind, WireMessage)
from .report import BenchReport, RoundRow
from .workload import OpFactory, RoundSpec, Workload, provision

log = logging.getLogger(__name__)

# outcome classes
_OK, _REJECTED, _DROPPED, _TIMEOUT = "ok", "rejected", "dropped", "timeout"


class InprocTarget:
    """Broker behind the simulated transport, all in this process."""

    def __init__(self, capacity: CapacityModel, max_message_bytes: int = 64 * 1024,
                 data_dir: str | None = None, seed: int = 0):
        self.transport = SimTransport(seed=seed)
        self._own_dir = data_dir is None
        self.data_dir = data_dir or tempfile.mkdtemp(prefix="ledgerbus-bench-")
        self.endpoint = Endpoint("127.0.0.1", 9000, "/broker")
        config = BrokerConfig(listen=self.endpoint, capacity=capacity,
                              data_dir=self.data_dir,
                              max_message_bytes=max_message_bytes)
        self.broker = Broker(config, self.transport).start()

    def describe(self) -> str:
        return "inproc"

    def send(self, msg: WireMessage, deadline_s: float = 60.0) -> Reply:
        return self.transport.send(self.endpoint, msg, deadline_s=deadline_s)

    def serve_dummy(self, endpoint: Endpoint, handler) -> None:
        self.transport.serve(endpoint, handler)

    def close(self) -> None:
        self.broker.stop()
        self.transport.close()
        if self._own_dir:
            shutil.rmtree(self.data_dir, ignore_errors=True)


class RemoteTarget:
    """Broker reachable over HTTP; dummy subscriber endpoints are served
    locally, so the broker must be able to reach this host."""

    def __init__(self, url: str):
        from urllib.parse import urlparse
        parsed = urlparse(url)
        if parsed.scheme not in ("http", ""):
            raise ValueError(f"unsupported target url: {url}")
        self.endpoint = Endpoint(parsed.hostname or "127.0.0.1", parsed.port or 80,
                                 parsed.path.rstrip("/") or "/broker")
        self.transport = HttpTransport()

    def describe(self) -> str:
        return self.endpoint.url()

    def send(self, msg: WireMessage, deadline_s: float = 60.0) -> Reply:
        return self.transport.send(self.endpoint, msg, deadline_s=deadline_s)

    def serve_dummy(self, endpoint: Endpoint, handler) -> None:
        self.transport.serve(endpoint, handler)

    def close(self) -> None:
        self.transport.close()


@dataclass
class _Outcome:
    index: int
    status: str
    submit_t: float
    done_t: float


def _classify(reply: Reply) -> str:
    if reply.ok:
        return _OK
    if reply.status == "overloaded":
        return _DROPPED
    return _REJECTED


class _Collector:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._items: list[_Outcome] = []

    def add(self, outcome: _Outcome) -> None:
        with self._lock:
            self._items.append(outcome)

    def snapshot(self) -> list[_Outcome]:
        with self._lock:
            return list(self._items)

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)


def _run_round(target, factory: OpFactory, spec: RoundSpec, round_idx: int,
               pool: ThreadPoolExecutor, grace_s: float, deadline_s: float,
               workload: Workload) -> RoundRow:
    n = max(1, int(round(spec.send_rate * spec.duration_s)))
    interval = 1.0 / spec.send_rate
    collector = _Collector()
    t0 = time.perf_counter()
    submit_times: list[float | None] = [None] * n

    def send_one(index: int, submit_t: float) -> None:
        msg = factory(round_idx, index)
        try:
            reply = target.send(msg, deadline_s=deadline_s)
            status = _classify(reply)
        except (TransportTimeout, ConnectionRefused):
            status = _TIMEOUT
        except TransportError:
            status = _REJECTED
        collector.add(_Outcome(index, status, submit_t, time.perf_counter()))

    def worker(worker_idx: int) -> None:
        for index in range(worker_idx, n, spec.workers):
            scheduled = t0 + index * interval
            delay = scheduled - time.perf_counter()
            if delay > 0:
                time.sleep(delay)
            submit_t = time.perf_counter()
            submit_times[index] = submit_t
            pool.submit(send_one, index, submit_t)

    threads = [threading.Thread(target=worker, args=(w,), daemon=True,
                                name=f"bench-w{w}") for w in range(spec.workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    cutoff = t0 + spec.duration_s + grace_s
    while len(collector) < n and time.perf_counter() < cutoff:
        time.sleep(0.02)

    outcomes = collector.snapshot()
    counts = {_OK: 0, _REJECTED: 0, _DROPPED: 0, _TIMEOUT: 0}
    latencies: list[float] = []
    last_terminal = t0
    for o in outcomes:
        counts[o.status] += 1
        last_terminal = max(last_terminal, o.done_t)
        if o.status in (_OK, _REJECTED):
            latencies.append((o.done_t - o.submit_t) * 1000.0)

    submitted = n
    pending = submitted - len(outcomes)
    terminal = submitted - pending
    committed = counts[_OK]
    span = max(last_terminal - t0, spec.duration_s)
    issued = [s for s in submit_times if s is not None]
    if len(issued) >= 2:
        offered = (len(issued) - 1) / max(1e-9, max(issued) - min(issued))
    else:
        offered = spec.send_rate
    return RoundRow(
        workload=workload.name,
        operation=workload.operation,
        round=round_idx,
        send_rate=spec.send_rate,
        duration_s=spec.duration_s,
        offered_rate=offered,
        submitted=submitted,
        committed=committed,
        rejected=counts[_REJECTED],
        dropped=counts[_DROPPED],
        timed_out=counts[_TIMEOUT],
        pending=pending,
        throughput_tps=committed / span,
        latency_min_ms=min(latencies) if latencies else None,
        latency_avg_ms=sum(latencies) / len(latencies) if latencies else None,
        latency_max_ms=max(latencies) if latencies else None,
        success_rate_pct=(100.0 * committed / terminal) if terminal else 0.0,
    )


def run(rounds: list[RoundSpec], workload: Workload, target,
        *, grace_s: float = 5.0, send_deadline_s: float = 60.0,
        pool_size: int = 256, seed: int | None = None,
        config_digest: str = "", warmup: int = 3) -> BenchReport:
    """Execute the rounds against the target and assemble the report."""
    for spec in rounds:
        spec.validate()
    factory = provision(workload, target)
    report = BenchReport(
        workload=workload.name,
        operation=workload.operation,
        seed=seed if seed is not None else workload.seed,
        config_digest=config_digest,
        target=target.describe(),
        started_at=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        workers=rounds[0].workers if rounds else 0,
        grace_s=grace_s,
    )
    pool = ThreadPoolExecutor(max_workers=pool_size, thread_name_prefix="bench-io")
    try:
        for _ in range(warmup):  # prime pool threads and code paths
            try:
                target.send(WireMessage(WireKind.QUERY, {
                    "contract": "topics", "operation": "QueryAllTopics", "args": []}),
                    deadline_s=send_deadline_s)
            except TransportError:
                pass
        for idx, spec in enumerate(rounds):
            row = _run_round(target, factory, spec, idx, pool, grace_s,
                             send_deadline_s, workload)
            report.rounds.append(row)
            log.info("round %d rate=%.3g: thr=%.3g tps, avg=%s ms, success=%.1f%%, pending=%d",
                     idx, row.send_rate, row.throughput_tps,
                     f"{row.latency_avg_ms:.1f}" if row.latency_avg_ms is not None else "-",
                     row.success_rate_pct, row.pending)
            if row.submitted > 0 and row.timed_out == row.submitted:
                report.incomplete = True  # target unreachable: abort with partial report
                log.error("target unreachable in round %d; aborting run", idx)
                break
    finally:
        pool.shutdown(wait=False)
    return report
