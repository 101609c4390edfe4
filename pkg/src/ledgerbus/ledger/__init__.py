from .types import (Block, CapacityModel, Transaction, TxKind, TxReceipt, TxStatus,
                    DELIVERED, failed)
from .state import WorldState, prefix_scan
from .engine import (BlockResult, Contract, ContractError, DirectLedger, Engine,
                     Services, TxContext, TxOutcome, block_digest)
from .blocklog import (BlockStore, CorruptLogError, Recovered, dump_json_lines,
                       genesis_digest, read_blocks, replay)
from .pipeline import LedgerPipeline, PipelineStats, PipelineStopped, TxHandle

__all__ = [
    "Block", "CapacityModel", "Transaction", "TxKind", "TxReceipt", "TxStatus",
    "DELIVERED", "failed",
    "WorldState", "prefix_scan",
    "BlockResult", "Contract", "ContractError", "DirectLedger", "Engine",
    "Services", "TxContext", "TxOutcome", "block_digest",
    "BlockStore", "CorruptLogError", "Recovered", "dump_json_lines",
    "genesis_digest", "read_blocks", "replay",
    "LedgerPipeline", "PipelineStats", "PipelineStopped", "TxHandle",
]
