"""Subscriber-side connector: enrollment plus topic subscription flows.

Subscribe/unsubscribe go to the broker first; only on success is the local
subscription table updated, so local state never claims a subscription the
broker does not know about.
"""
from __future__ import annotations

from ..encoding import b64e
from ..transport.wire import DEFAULT_DEADLINE_S, Endpoint, WireKind
from .client import BrokerRejected, call_broker
from .simchain import SimChain


class SubscriberConnector:
    def __init__(self, chain: SimChain, broker: Endpoint, transport=None,
                 deadline_s: float = DEFAULT_DEADLINE_S):
        self.chain = chain
        self.broker = broker
        self.transport = transport or chain.transport
        self.deadline_s = deadline_s

    def enroll(self, role: str = "subscriber") -> None:
        call_broker(self.transport, self.broker, WireKind.ENROLL,
                    {"record": self.chain.make_record(role)}, self.deadline_s)

    def subscribe(self, topic_id: str) -> None:
        call_broker(self.transport, self.broker, WireKind.SUBSCRIBE,
                    {"caller": self.chain.chain_id, "topic_id": topic_id,
                     "chain_id": self.chain.chain_id}, self.deadline_s)
        self.chain.pipeline.invoke("local", "RecordSubscription", [topic_id.encode()],
                                   caller=self.chain.chain_id)

    def unsubscribe(self, topic_id: str) -> None:
        call_broker(self.transport, self.broker, WireKind.UNSUBSCRIBE,
                    {"caller": self.chain.chain_id, "topic_id": topic_id,
                     "chain_id": self.chain.chain_id}, self.deadline_s)
        self.chain.pipeline.invoke("local", "RemoveSubscription", [topic_id.encode()],
                                   caller=self.chain.chain_id)

    def latest(self, topic_id: str) -> bytes | None:
        entry = self.chain.subscription(topic_id)
        return None if entry is None else entry["message"]
