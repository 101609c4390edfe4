"""Benchmark report model and deterministic emitters (json, csv, svg).

Round accounting (documented because the paper's tool leaves it implicit):
receipts are attributed to the round that submitted them; collection stops
at round end + grace, and outcomes still outstanding at that cutoff are
counted as pending. Throughput is successes divided by the span from round
start to the last terminal receipt observed; success rate is successes
over terminal outcomes only (pending excluded); dropped and timed-out
requests contribute to success rate but not to latency statistics.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

SCHEMA_VERSION = 1

CSV_COLUMNS = [
    "workload", "operation", "round", "send_rate", "duration_s", "offered_rate",
    "submitted", "committed", "rejected", "dropped", "timed_out", "pending",
    "throughput_tps", "latency_min_ms", "latency_avg_ms", "latency_max_ms",
    "success_rate_pct",
]


@dataclass
class RoundRow:
    workload: str
    operation: str
    round: int
    send_rate: float
    duration_s: float
    offered_rate: float
    submitted: int
    committed: int
    rejected: int
    dropped: int
    timed_out: int
    pending: int
    throughput_tps: float
    latency_min_ms: float | None
    latency_avg_ms: float | None
    latency_max_ms: float | None
    success_rate_pct: float


@dataclass
class BenchReport:
    workload: str
    operation: str
    seed: int
    config_digest: str
    target: str
    started_at: str  # wall clock, ISO 8601; everything else is monotonic
    workers: int
    grace_s: float
    rounds: list[RoundRow] = field(default_factory=list)
    incomplete: bool = False
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def to_json_bytes(report: BenchReport) -> bytes:
    return (json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n").encode("ascii")


def to_csv_bytes(report: BenchReport) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.rounds:
        record = asdict(row)
        writer.writerow([_fmt(record[col if col != "round" else "round"]) for col in CSV_COLUMNS])
    return out.getvalue().encode("ascii")


# -- svg ---------------------------------------------------------------------

_PANEL_W, _PANEL_H, _MARGIN, _GAP = 600, 110, 60, 34


def _panel_svg(title: str, values: list[float], offset_y: int) -> list[str]:
    lo = min(values) if values else 0.0
    hi = max(values) if values else 1.0
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    n = len(values)
    xs = [_MARGIN + (_PANEL_W * (i / max(1, n - 1)) if n > 1 else _PANEL_W / 2) for i in range(n)]
    ys = [offset_y + _PANEL_H - (_PANEL_H * (v - lo) / (hi - lo)) for v in values]
    pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in zip(xs, ys))
    parts = [
        f'<text x="{_MARGIN}" y="{offset_y - 8}" class="title">{title}</text>',
        f'<rect x="{_MARGIN}" y="{offset_y}" width="{_PANEL_W}" height="{_PANEL_H}" class="frame"/>',
        f'<text x="{_MARGIN - 6}" y="{offset_y + 10}" class="ylab">{_fmt(hi)}</text>',
        f'<text x="{_MARGIN - 6}" y="{offset_y + _PANEL_H}" class="ylab">{_fmt(lo)}</text>',
        f'<polyline class="series" points="{pts}"/>',
    ]
    parts.extend(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="2.5" class="dot"/>' for x, y in zip(xs, ys))
    return parts


def to_svg_bytes(report: BenchReport) -> bytes:
    """One panel per metric (send rate, throughput, avg latency, success rate),
    one series per panel, plotted against round index."""
    panels = [
        ("send rate (tps)", [r.send_rate for r in report.rounds]),
        ("throughput (tps)", [r.throughput_tps for r in report.rounds]),
        ("avg latency (ms)", [r.latency_avg_ms or 0.0 for r in report.rounds]),
        ("success rate (%)", [r.success_rate_pct for r in report.rounds]),
    ]
    height = _MARGIN + len(panels) * (_PANEL_H + _GAP) + 20
    width = _PANEL_W + 2 * _MARGIN
    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        "<style>.title{font:13px monospace}.ylab{font:10px monospace;text-anchor:end}"
        ".xlab{font:10px monospace;text-anchor:middle}.frame{fill:none;stroke:#999}"
        ".series{fill:none;stroke:#1f77b4;stroke-width:1.5}.dot{fill:#1f77b4}</style>",
        f'<text x="{_MARGIN}" y="20" class="title">{report.workload} '
        f'({report.operation}) seed={report.seed}</text>',
    ]
    y = _MARGIN
    for title, values in panels:
        body.extend(_panel_svg(title, values, y))
        y += _PANEL_H + _GAP
    n = len(report.rounds)
    for i in range(n):
        x = _MARGIN + (_PANEL_W * (i / max(1, n - 1)) if n > 1 else _PANEL_W / 2)
        body.append(f'<text x="{x:.1f}" y="{y - _GAP + 14}" class="xlab">r{i}</text>')
    body.append("</svg>")
    return ("\n".join(body) + "\n").encode("ascii")


_EMITTERS = {"json": to_json_bytes, "csv": to_csv_bytes, "svg": to_svg_bytes}


def emit(report: BenchReport, formats: list[str], out_dir: str) -> list[str]:
    """Write the report in the requested formats; deterministic bytes given
    an identical report."""
    import os
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for fmt in formats:
        try:
            render = _EMITTERS[fmt]
        except KeyError:
            raise ValueError(f"unknown format: {fmt} (choose from {sorted(_EMITTERS)})") from None
        path = os.path.join(out_dir, f"{report.workload}.report.{fmt}")
        with open(path, "wb") as fh:
            fh.write(render(report))
        paths.append(path)
    return paths
