"""ledgerbus: a cross-ledger publish/subscribe broker at desk scale.

A deterministic permissioned-ledger substrate runs topics and connector
contracts behind pluggable transports; simulated remote chains of two
flavors enroll, subscribe, and receive fan-out notifications; a fixed-rate
open-loop benchmark harness measures throughput, latency, and success rate
per operation.
"""

from .ledger import (Block, CapacityModel, DirectLedger, Engine, LedgerPipeline,
                     Services, Transaction, TxKind, TxReceipt, TxStatus)
from .contracts import ConnectorContract, TopicsContract, broker_contracts, parse_topic
from .transport import Endpoint, HttpTransport, Reply, SimTransport, WireKind, WireMessage
from .remote import (Notifier, PublisherConnector, RecordingNotifier, SimChain,
                     SubscriberConnector, BESU_FLAVOR, FABRIC_FLAVOR)
from .service import Broker, BrokerConfig
from .bench import BenchReport, InprocTarget, RoundSpec, Workload, emit, run

__version__ = "0.1.0"
