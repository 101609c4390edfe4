from .base import BaseContract
from .chaintypes import (BESU_LIKE, FABRIC_LIKE, ChainType, chain_type,
                         register_chain_type, registered_tags)
from .connector import (CHAIN_PREFIX, ConnectorContract, can_publish,
                        can_subscribe, validate_record)
from .topics import DEFAULT_MAX_MESSAGE_BYTES, TOPIC_PREFIX, TopicsContract, parse_topic


def broker_contracts(max_message_bytes: int = DEFAULT_MAX_MESSAGE_BYTES) -> dict:
    """The two contracts every broker ledger runs."""
    return {
        "connector": ConnectorContract(),
        "topics": TopicsContract(max_message_bytes=max_message_bytes),
    }


__all__ = [
    "BaseContract",
    "ChainType", "FABRIC_LIKE", "BESU_LIKE", "chain_type", "register_chain_type",
    "registered_tags",
    "ConnectorContract", "CHAIN_PREFIX", "can_publish", "can_subscribe", "validate_record",
    "TopicsContract", "TOPIC_PREFIX", "DEFAULT_MAX_MESSAGE_BYTES", "parse_topic",
    "broker_contracts",
]
