import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ledgerbus.contracts import broker_contracts
from ledgerbus.ledger import CapacityModel, DirectLedger, Engine, Services
from ledgerbus.remote.notifier import RecordingNotifier


def fast_capacity(**overrides) -> CapacityModel:
    base = dict(invoke_service_rate=500.0, query_service_rate=5000.0,
                publish_base_cost=1.0, publish_per_subscriber_cost=0.1,
                queue_capacity=512, block_interval_ms=10.0, max_block_size=32)
    base.update(overrides)
    return CapacityModel(**base)


@pytest.fixture
def notifier():
    return RecordingNotifier()


@pytest.fixture
def direct(notifier) -> DirectLedger:
    engine = Engine(broker_contracts(), services=Services(notifier=notifier))
    return DirectLedger(engine)


def make_direct(notifier=None) -> DirectLedger:
    engine = Engine(broker_contracts(), services=Services(notifier=notifier or RecordingNotifier()))
    return DirectLedger(engine)


def chain_record(chain_id: str, role: str = "both", chain_type: str = "FabricLike",
                 port: int = 7051, **extra_overrides) -> dict:
    extra = {"channel": "ch1", "contract": "connector"}
    if chain_type == "BesuLike":
        extra = {"address": "0xabc", "abi": "abi-v1", "private_key": "0xkey"}
    extra.update(extra_overrides)
    return {
        "chain_id": chain_id,
        "name": f"chain {chain_id}",
        "chain_type": chain_type,
        "server_ip": "10.0.0.5",
        "port": port,
        "extra": extra,
        "role": role,
    }
