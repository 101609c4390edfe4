from .notifier import (Notifier, NotifierRegistry, RecordingNotifier, RetryPolicy,
                       build_besu_update, build_fabric_update, default_registry)
from .simchain import (BESU_FLAVOR, FABRIC_FLAVOR, FLAVORS, AppEvent, Flavor,
                       LocalConnectorContract, SimChain)
from .client import BrokerRejected, call_broker
from .subscriber import SubscriberConnector
from .publisher import NotTopicOwner, PublisherConnector, PublisherRetry

__all__ = [
    "Notifier", "NotifierRegistry", "RecordingNotifier", "RetryPolicy",
    "build_besu_update", "build_fabric_update", "default_registry",
    "BESU_FLAVOR", "FABRIC_FLAVOR", "FLAVORS", "AppEvent", "Flavor",
    "LocalConnectorContract", "SimChain",
    "BrokerRejected", "call_broker",
    "SubscriberConnector",
    "NotTopicOwner", "PublisherConnector", "PublisherRetry",
]
