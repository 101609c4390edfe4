"""Topics contract: create/query/subscribe/unsubscribe/publish semantics."""
import json

import pytest

from ledgerbus.encoding import b64e, canonical_json
from ledgerbus.ledger import TxStatus
from ledgerbus.contracts import parse_topic

from conftest import chain_record


@pytest.fixture
def ledger(direct):
    direct.invoke("connector", "EnrollBlockchain", [canonical_json(chain_record("P1", role="publisher"))])
    direct.invoke("connector", "EnrollBlockchain", [canonical_json(chain_record("S1", role="subscriber"))])
    direct.invoke("connector", "EnrollBlockchain", [canonical_json(chain_record("S2", role="subscriber"))])
    direct.invoke("connector", "EnrollBlockchain", [canonical_json(chain_record("S3", role="subscriber"))])
    direct.invoke("connector", "EnrollBlockchain", [canonical_json(chain_record("B1", role="both"))])
    return direct


def create(ledger, topic="T1", publisher="P1", message=b"init"):
    return ledger.invoke("topics", "CreateTopic",
                         [topic.encode(), b"weather", publisher.encode(), message],
                         caller=publisher)


def topic_state(ledger, topic="T1"):
    out = ledger.query("topics", "QueryTopic", [topic.encode()])
    assert out.status is TxStatus.QUERY_OK
    return parse_topic(out.payload)


def test_create_and_query(ledger):
    assert create(ledger).status is TxStatus.COMMITTED
    topic = topic_state(ledger)
    assert topic["message"] == b"init"
    assert topic["subscribers"] == []
    assert topic["publisher"] == "P1"
    assert topic["name"] == "weather"


def test_create_unenrolled_publisher_rejected(ledger):
    out = ledger.invoke("topics", "CreateTopic", [b"T9", b"x", b"ghost", b""], caller="ghost")
    assert out.status is TxStatus.REJECTED
    assert out.reason == "publisher not enrolled"


def test_create_subscriber_role_cannot_publish(ledger):
    out = ledger.invoke("topics", "CreateTopic", [b"T9", b"x", b"S1", b""], caller="S1")
    assert out.status is TxStatus.REJECTED
    assert out.reason == "not enrolled as publisher"


def test_create_duplicate_rejected(ledger):
    create(ledger)
    out = create(ledger)
    assert out.status is TxStatus.REJECTED
    assert out.reason == "topic exists"


def test_query_unknown_topic(ledger):
    out = ledger.query("topics", "QueryTopic", [b"ghost"])
    assert out.status is TxStatus.REJECTED
    assert out.reason == "topic not found"


def test_query_all_counts(ledger):
    for i in range(3):
        create(ledger, topic=f"T{i}")
    topics = json.loads(ledger.query("topics", "QueryAllTopics", []).payload)
    assert len(topics) == 3


def test_subscribe_idempotent(ledger):
    create(ledger)
    for _ in range(2):
        out = ledger.invoke("topics", "SubscribeToTopic", [b"T1", b"S1"], caller="S1")
        assert out.status is TxStatus.COMMITTED
    assert topic_state(ledger)["subscribers"] == ["S1"]


def test_subscribe_missing_topic_or_chain(ledger):
    out = ledger.invoke("topics", "SubscribeToTopic", [b"nope", b"S1"], caller="S1")
    assert out.status is TxStatus.REJECTED and out.reason == "topic not found"
    create(ledger)
    out = ledger.invoke("topics", "SubscribeToTopic", [b"T1", b"ghost"], caller="ghost")
    assert out.status is TxStatus.REJECTED and out.reason == "subscriber not enrolled"


def test_subscribe_requires_capability(ledger):
    create(ledger)
    out = ledger.invoke("topics", "SubscribeToTopic", [b"T1", b"P1"], caller="P1")
    assert out.status is TxStatus.REJECTED
    assert out.reason == "not enrolled as subscriber"
    # role=both may subscribe, including to its own topics
    out = ledger.invoke("topics", "SubscribeToTopic", [b"T1", b"B1"], caller="B1")
    assert out.status is TxStatus.COMMITTED


def test_subscription_order_preserved(ledger):
    create(ledger)
    for sub in ("S1", "S2", "S3"):
        ledger.invoke("topics", "SubscribeToTopic", [b"T1", sub.encode()], caller=sub)
    assert topic_state(ledger)["subscribers"] == ["S1", "S2", "S3"]


def test_unsubscribe_paths(ledger):
    create(ledger)
    for sub in ("S1", "S2"):
        ledger.invoke("topics", "SubscribeToTopic", [b"T1", sub.encode()], caller=sub)
    out = ledger.invoke("topics", "UnsubscribeFromTopic", [b"T1", b"S1"], caller="S1")
    assert out.status is TxStatus.COMMITTED
    assert topic_state(ledger)["subscribers"] == ["S2"]
    # removing a non-subscriber is a no-op success
    out = ledger.invoke("topics", "UnsubscribeFromTopic", [b"T1", b"S3"], caller="S3")
    assert out.status is TxStatus.COMMITTED
    assert topic_state(ledger)["subscribers"] == ["S2"]
    out = ledger.invoke("topics", "UnsubscribeFromTopic", [b"ghost", b"S1"], caller="S1")
    assert out.status is TxStatus.REJECTED and out.reason == "topic not found"


def test_publish_zero_subscribers(ledger):
    create(ledger)
    out = ledger.invoke("topics", "PublishToTopic", [b"T1", b"fresh"], caller="P1")
    assert out.status is TxStatus.COMMITTED
    assert out.deliveries == []
    assert topic_state(ledger)["message"] == b"fresh"


def test_publish_absent_topic_rejected_no_state_change(ledger):
    before = dict(ledger.world.snapshot())
    version = ledger.world.version
    out = ledger.invoke("topics", "PublishToTopic", [b"ghost", b"m"], caller="P1")
    assert out.status is TxStatus.REJECTED
    assert out.reason == "topic not found"
    assert dict(ledger.world.snapshot()) == before


def test_publish_wrong_caller_forbidden(ledger):
    create(ledger)
    out = ledger.invoke("topics", "PublishToTopic", [b"T1", b"m"], caller="S1")
    assert out.status is TxStatus.REJECTED
    assert out.reason == "not topic publisher"
    assert topic_state(ledger)["message"] == b"init"


def test_publish_notifies_in_subscription_order(ledger, notifier):
    create(ledger)
    for sub in ("S2", "S1", "S3"):
        ledger.invoke("topics", "SubscribeToTopic", [b"T1", sub.encode()], caller=sub)
    out = ledger.invoke("topics", "PublishToTopic", [b"T1", b"m"], caller="P1")
    assert [d[0] for d in out.deliveries] == ["S2", "S1", "S3"]
    assert all(status == "delivered" for _, status in out.deliveries)
    assert [c[0] for c in notifier.calls] == ["S2", "S1", "S3"]
    assert all(c[2] == b"m" for c in notifier.calls)


def test_publish_state_commits_even_if_deliveries_fail(direct, notifier):
    notifier.status = "failed:timeout"
    direct.invoke("connector", "EnrollBlockchain", [canonical_json(chain_record("P1"))])
    direct.invoke("connector", "EnrollBlockchain", [canonical_json(chain_record("S1", role="subscriber"))])
    create(direct)
    direct.invoke("topics", "SubscribeToTopic", [b"T1", b"S1"], caller="S1")
    out = direct.invoke("topics", "PublishToTopic", [b"T1", b"m"], caller="P1")
    assert out.status is TxStatus.COMMITTED
    assert out.deliveries == [("S1", "failed:timeout")]
    assert topic_state(direct)["message"] == b"m"


def test_message_size_cap(ledger):
    big = b"x" * (64 * 1024 + 1)
    out = ledger.invoke("topics", "CreateTopic", [b"T9", b"n", b"P1", big], caller="P1")
    assert out.status is TxStatus.REJECTED and "message too large" in out.reason
    create(ledger)
    out = ledger.invoke("topics", "PublishToTopic", [b"T1", big], caller="P1")
    assert out.status is TxStatus.REJECTED and "message too large" in out.reason
    assert topic_state(ledger)["message"] == b"init"


def test_storage_layout_canonical(ledger):
    """Stored values are canonical JSON at documented keys."""
    create(ledger)
    raw = ledger.world.get(b"topic:T1")
    assert raw is not None
    assert raw == canonical_json({
        "message_b64": b64e(b"init"), "name": "weather", "publisher": "P1",
        "subscribers": [], "topic_id": "T1",
    })
    assert ledger.world.get(b"chain:P1") is not None


def test_referential_integrity_no_dangling_refs(ledger):
    """No committed topic may reference a chain absent from the connector."""
    create(ledger)
    for sub in ("S1", "S2"):
        ledger.invoke("topics", "SubscribeToTopic", [b"T1", sub.encode()], caller=sub)
    snapshot = ledger.world.snapshot()
    chains = {k.decode()[len("chain:"):] for k in snapshot if k.startswith(b"chain:")}
    for key, value in snapshot.items():
        if key.startswith(b"topic:"):
            topic = json.loads(value)
            assert topic["publisher"] in chains
            assert set(topic["subscribers"]) <= chains
