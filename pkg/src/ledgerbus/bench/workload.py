"""Workload definitions, argument generation, and target provisioning.

Argument content is a pure function of (seed, op index), so runs with the
same seed generate identical request streams regardless of worker timing.
Publish workloads pre-provision a topic with `fanout` dummy subscriber
endpoints that acknowledge updates immediately, keeping the measurement
focused on the broker (remote networks receive dummy traffic only).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable

from ..encoding import b64e, canonical_json, sha256
from ..ledger.types import CapacityModel
from ..transport.wire import Endpoint, Reply, WireKind, WireMessage

OPERATIONS = ("CreateTopic", "QueryTopic", "SubscribeToTopic",
              "UnsubscribeFromTopic", "PublishToTopic")


@dataclass
class RoundSpec:
    send_rate: float
    duration_s: float
    workers: int = 5

    def validate(self) -> None:
        if self.send_rate <= 0:
            raise ValueError("send_rate must be > 0")
        if self.duration_s <= 0:
            raise ValueError("duration_s must be > 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class Workload:
    name: str
    operation: str
    seed: int = 42
    fanout: int = 0            # pre-provisioned subscribers for publish
    topic_count: int = 4       # topics rotated through by query/subscribe ops
    subscriber_pool: int = 8   # enrolled chains rotated through by subscribe ops
    message_bytes: int = 64

    def validate(self) -> None:
        if self.operation not in OPERATIONS:
            raise ValueError(f"unknown operation {self.operation!r}")
        if self.fanout < 0 or self.topic_count < 1 or self.subscriber_pool < 1:
            raise ValueError("bad workload counts")


def _payload(seed: int, index: int, size: int) -> bytes:
    blob = f"m-{seed}-{index}-".encode()
    while len(blob) < size:
        blob += hashlib.sha256(blob).hexdigest().encode()
    return blob[:size]


OpFactory = Callable[[int, int], WireMessage]  # (round, op index) -> request


class ProvisionError(RuntimeError):
    pass


def _must(reply: Reply, what: str) -> Reply:
    if not reply.ok:
        raise ProvisionError(f"provisioning failed at {what}: "
                             f"{reply.status} {reply.body.get('reason', '')}")
    return reply


def _ack_handler(msg: WireMessage) -> Reply:
    return Reply("ok", {"ack": "applied"}, msg.correlation_id)


def provision(workload: Workload, target) -> OpFactory:
    """Set up chains/topics the workload needs; return the request factory."""
    workload.validate()
    pub_id = f"bench-pub-{workload.seed}"
    record = {
        "chain_id": pub_id,
        "name": "bench publisher",
        "chain_type": "FabricLike",
        "server_ip": "127.0.0.1",
        "port": 29000,
        "extra": {"channel": "bench", "contract": "bench-connector"},
        "role": "both",
    }
    _must(target.send(WireMessage(WireKind.ENROLL, {"record": record})), "enroll publisher")

    op = workload.operation
    topic_ids = [f"bench-{workload.seed}-t{i}" for i in range(workload.topic_count)]

    def create(topic_id: str) -> None:
        _must(target.send(WireMessage(WireKind.CREATE_TOPIC, {
            "caller": pub_id, "topic_id": topic_id, "name": topic_id,
            "message_b64": b64e(_payload(workload.seed, 0, workload.message_bytes)),
        })), f"create {topic_id}")

    def enroll_subscriber(chain_id: str, port: int, served: bool) -> None:
        endpoint = Endpoint("127.0.0.1", port, "/connector")
        if served:
            target.serve_dummy(endpoint, _ack_handler)
        rec = {
            "chain_id": chain_id, "name": chain_id, "chain_type": "FabricLike",
            "server_ip": endpoint.host, "port": endpoint.port,
            "extra": {"channel": "bench", "contract": f"{chain_id}-connector"},
            "role": "subscriber",
        }
        _must(target.send(WireMessage(WireKind.ENROLL, {"record": rec})), f"enroll {chain_id}")

    if op == "CreateTopic":
        def factory(rnd: int, i: int) -> WireMessage:
            return WireMessage(WireKind.CREATE_TOPIC, {
                "caller": pub_id,
                "topic_id": f"bench-{workload.seed}-r{rnd}-{i}",
                "name": f"bench topic {i}",
                "message_b64": b64e(_payload(workload.seed, i, workload.message_bytes)),
            }, correlation_id=f"{workload.name}-r{rnd}-{i:06d}")
        return factory

    if op == "QueryTopic":
        for t in topic_ids:
            create(t)

        def factory(rnd: int, i: int) -> WireMessage:
            return WireMessage(WireKind.QUERY, {
                "contract": "topics", "operation": "QueryTopic",
                "args": [topic_ids[i % len(topic_ids)]],
            }, correlation_id=f"{workload.name}-r{rnd}-{i:06d}")
        return factory

    if op in ("SubscribeToTopic", "UnsubscribeFromTopic"):
        subs = [f"bench-sub-{workload.seed}-{j}" for j in range(workload.subscriber_pool)]
        for t in topic_ids:
            create(t)
        for j, s in enumerate(subs):
            enroll_subscriber(s, 29100 + j, served=False)
        if op == "UnsubscribeFromTopic":  # give unsubscribes something to remove
            for t in topic_ids:
                for s in subs:
                    _must(target.send(WireMessage(WireKind.SUBSCRIBE, {
                        "caller": s, "topic_id": t, "chain_id": s})), "pre-subscribe")
        kind = WireKind.SUBSCRIBE if op == "SubscribeToTopic" else WireKind.UNSUBSCRIBE

        def factory(rnd: int, i: int) -> WireMessage:
            topic = topic_ids[i % len(topic_ids)]
            sub = subs[(i // len(topic_ids)) % len(subs)]
            return WireMessage(kind, {"caller": sub, "topic_id": topic, "chain_id": sub},
                               correlation_id=f"{workload.name}-r{rnd}-{i:06d}")
        return factory

    # PublishToTopic
    topic = f"bench-{workload.seed}-pub"
    create(topic)
    for j in range(workload.fanout):
        sub = f"bench-dummy-{workload.seed}-{j}"
        enroll_subscriber(sub, 29200 + j, served=True)
        _must(target.send(WireMessage(WireKind.SUBSCRIBE, {
            "caller": sub, "topic_id": topic, "chain_id": sub})), f"subscribe {sub}")

    def factory(rnd: int, i: int) -> WireMessage:
        return WireMessage(WireKind.PUBLISH, {
            "caller": pub_id, "topic_id": topic,
            "message_b64": b64e(_payload(workload.seed, i, workload.message_bytes)),
        }, correlation_id=f"{workload.name}-r{rnd}-{i:06d}")
    return factory


# -- bench config file ---------------------------------------------------------


@dataclass
class BenchWorkloadConfig:
    workload: Workload
    rounds: list[RoundSpec]


@dataclass
class BenchConfig:
    seed: int
    workers: int
    grace_s: float
    send_deadline_s: float
    capacity: CapacityModel
    workloads: list[BenchWorkloadConfig]
    max_message_bytes: int = 64 * 1024

    def digest(self) -> str:
        doc = {
            "seed": self.seed,
            "workers": self.workers,
            "grace_s": self.grace_s,
            "send_deadline_s": self.send_deadline_s,
            "capacity": self.capacity.to_dict(),
            "max_message_bytes": self.max_message_bytes,
            "workloads": [
                {
                    "name": w.workload.name,
                    "operation": w.workload.operation,
                    "seed": w.workload.seed,
                    "fanout": w.workload.fanout,
                    "message_bytes": w.workload.message_bytes,
                    "rounds": [[r.send_rate, r.duration_s, r.workers] for r in w.rounds],
                }
                for w in self.workloads
            ],
        }
        return sha256(canonical_json(doc)).hex()


def load_bench_config(path: str, seed_override: int | None = None) -> BenchConfig:
    from ..service.config import ConfigError, load_yaml_with_lines
    data, lines = load_yaml_with_lines(path)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1: top level must be a mapping")

    def fail(key: str, msg: str) -> ConfigError:
        return ConfigError(f"{path}:{lines.get(key, 1)}: {key}: {msg}")

    seed = seed_override if seed_override is not None else int(data.get("seed", 42))
    workers = int(data.get("workers", 5))
    grace = float(data.get("grace_s", 5.0))
    deadline = float(data.get("send_deadline_s", 60.0))
    try:
        capacity = CapacityModel.from_dict(data.get("capacity") or {})
    except (TypeError, ValueError) as err:
        raise fail("capacity", str(err)) from err

    workloads = []
    raw_workloads = data.get("workloads")
    if not isinstance(raw_workloads, list) or not raw_workloads:
        raise fail("workloads", "expected a non-empty list")
    for idx, raw in enumerate(raw_workloads):
        key = f"workloads[{idx}]"
        if not isinstance(raw, dict):
            raise fail(key, "expected a mapping")
        try:
            workload = Workload(
                name=str(raw["name"]),
                operation=str(raw["operation"]),
                seed=int(raw.get("seed", seed)),
                fanout=int(raw.get("fanout", 0)),
                topic_count=int(raw.get("topic_count", 4)),
                subscriber_pool=int(raw.get("subscriber_pool", 8)),
                message_bytes=int(raw.get("message_bytes", 64)),
            )
            workload.validate()
            rounds = []
            for r in raw.get("rounds", []):
                spec = RoundSpec(float(r["rate"]), float(r["duration"]),
                                 int(r.get("workers", workers)))
                spec.validate()
                rounds.append(spec)
            if not rounds:
                raise ValueError("no rounds")
        except (KeyError, ValueError, TypeError) as err:
            raise fail(key, str(err)) from err
        workloads.append(BenchWorkloadConfig(workload, rounds))

    return BenchConfig(seed=seed, workers=workers, grace_s=grace,
                       send_deadline_s=deadline, capacity=capacity,
                       workloads=workloads,
                       max_message_bytes=int(data.get("max_message_bytes", 64 * 1024)))
