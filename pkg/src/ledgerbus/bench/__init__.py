from .report import (BenchReport, RoundRow, SCHEMA_VERSION, emit, to_csv_bytes,
                     to_json_bytes, to_svg_bytes)
from .workload import (BenchConfig, BenchWorkloadConfig, OPERATIONS, RoundSpec,
                       Workload, load_bench_config, provision)
from .runner import InprocTarget, RemoteTarget, run

__all__ = [
    "BenchReport", "RoundRow", "SCHEMA_VERSION", "emit", "to_csv_bytes",
    "to_json_bytes", "to_svg_bytes",
    "BenchConfig", "BenchWorkloadConfig", "OPERATIONS", "RoundSpec",
    "Workload", "load_bench_config", "provision",
    "InprocTarget", "RemoteTarget", "run",
]
