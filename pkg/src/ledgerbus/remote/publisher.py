"""Publisher-side connector: topic creation and publishing through the broker.

Publishing records the intent on the local chain first, then forwards to
the broker, retrying transport timeouts per policy; the broker's receipt
(including per-subscriber deliveries) is kept for the application.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..encoding import b64e
from ..transport.wire import DEFAULT_DEADLINE_S, Endpoint, Reply, WireKind
from .client import BrokerRejected, call_broker
from .simchain import SimChain


@dataclass
class PublisherRetry:
    attempts: int = 3
    backoff_s: float = 0.1


class NotTopicOwner(Exception):
    pass


class PublisherConnector:
    def __init__(self, chain: SimChain, broker: Endpoint, transport=None,
                 deadline_s: float = DEFAULT_DEADLINE_S,
                 retry: PublisherRetry | None = None):
        self.chain = chain
        self.broker = broker
        self.transport = transport or chain.transport
        self.deadline_s = deadline_s
        self.retry = retry or PublisherRetry()
        self.owned_topics: set[str] = set()
        self.last_results: dict[str, Reply] = {}

    def enroll(self, role: str = "publisher") -> None:
        call_broker(self.transport, self.broker, WireKind.ENROLL,
                    {"record": self.chain.make_record(role)}, self.deadline_s)

    def create_topic(self, topic_id: str, name: str, initial_message: bytes = b"") -> None:
        call_broker(self.transport, self.broker, WireKind.CREATE_TOPIC,
                    {"caller": self.chain.chain_id, "topic_id": topic_id, "name": name,
                     "message_b64": b64e(initial_message)}, self.deadline_s)
        self.chain.pipeline.invoke("local", "RecordTopic",
                                   [topic_id.encode(), name.encode()],
                                   caller=self.chain.chain_id)
        self.owned_topics.add(topic_id)

    def publish(self, topic_id: str, message: bytes) -> list[tuple[str, str]]:
        """Returns per-subscriber delivery outcomes from the broker receipt."""
        if topic_id not in self.owned_topics:
            raise NotTopicOwner(topic_id)  # local rejection, no transport call
        self.chain.pipeline.invoke("local", "RecordPublish",
                                   [topic_id.encode(), message],
                                   caller=self.chain.chain_id)
        reply = call_broker(self.transport, self.broker, WireKind.PUBLISH,
                            {"caller": self.chain.chain_id, "topic_id": topic_id,
                             "message_b64": b64e(message)},
                            self.deadline_s, attempts=self.retry.attempts,
                            backoff_s=self.retry.backoff_s)
        self.last_results[topic_id] = reply
        return [tuple(d) for d in reply.body.get("deliveries", [])]
