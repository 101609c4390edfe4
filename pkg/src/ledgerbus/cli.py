"""Command-line entry points: broker, bench, and ledger tools."""
from __future__ import annotations

import argparse
import logging
import os
import signal
import sys
import threading

from .bench.report import emit
from .bench.runner import InprocTarget, RemoteTarget, run
from .bench.workload import load_bench_config
from .ledger.blocklog import dump_json_lines
from .service.broker import BLOCK_LOG_NAME, Broker
from .service.config import BrokerConfig, ConfigError
from .transport.http import HttpTransport
from .transport.sim import SimTransport


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def broker_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="broker", description="Run and inspect the pub/sub broker.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="serve the broker over HTTP")
    serve.add_argument("--config", required=True)

    dump = sub.add_parser("dump-ledger", help="emit the block log as JSON lines")
    group = dump.add_mutually_exclusive_group(required=True)
    group.add_argument("--config")
    group.add_argument("--data-dir")

    init = sub.add_parser("init-sample", help="initialize contracts with the configured sample set")
    init.add_argument("--config", required=True)

    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        if args.command == "serve":
            return _broker_serve(args.config)
        if args.command == "dump-ledger":
            data_dir = args.data_dir or BrokerConfig.load(args.config).data_dir
            return _dump(os.path.join(data_dir, BLOCK_LOG_NAME))
        if args.command == "init-sample":
            return _broker_init_sample(args.config)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


def _broker_serve(config_path: str) -> int:
    config = BrokerConfig.load(config_path)
    broker = Broker(config, HttpTransport())
    broker.start()
    print(f"broker listening on {config.listen.url()} (data: {config.data_dir})")
    stop = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: stop.set())
    try:
        stop.wait()
    finally:
        broker.stop()
        print("broker stopped")
    return 0


def _broker_init_sample(config_path: str) -> int:
    config = BrokerConfig.load(config_path)
    broker = Broker(config, SimTransport())
    broker.start(serve=False)
    try:
        result = broker.init_sample()
    finally:
        broker.stop()
    print(f"initialized: connector={result['connector']} topics={result['topics']} "
          f"sample chains={result['chains']}")
    return 0 if result["connector"] == "committed" else 1


def _dump(log_path: str) -> int:
    if not os.path.exists(log_path):
        print(f"error: no block log at {log_path}", file=sys.stderr)
        return 1
    dump_json_lines(log_path, sys.stdout)
    return 0


def ledger_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ledger", description="Block log tools.")
    sub = parser.add_subparsers(dest="command", required=True)
    dump = sub.add_parser("dump", help="emit a block log file as JSON lines")
    dump.add_argument("log_path")
    args = parser.parse_args(argv)
    if args.command == "dump":
        return _dump(args.log_path)
    return 0


def bench_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="bench", description="Fixed-rate benchmark runner.")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run the configured workloads and emit reports")
    runp.add_argument("--config", required=True)
    runp.add_argument("--out", required=True)
    runp.add_argument("--seed", type=int, default=None)
    runp.add_argument("--target", default="inproc", help="'inproc' or a broker URL")
    runp.add_argument("--formats", default="json,csv,svg")
    runp.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)

    try:
        config = load_bench_config(args.config, seed_override=args.seed)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    digest = config.digest()

    exit_code = 0
    for wl in config.workloads:
        if args.target == "inproc":
            target = InprocTarget(config.capacity, config.max_message_bytes)
        else:
            target = RemoteTarget(args.target)
        try:
            report = run(wl.rounds, wl.workload, target, grace_s=config.grace_s,
                         send_deadline_s=config.send_deadline_s, seed=config.seed,
                         config_digest=digest)
        finally:
            target.close()
        paths = emit(report, formats, args.out)
        marker = " (INCOMPLETE)" if report.incomplete else ""
        print(f"{wl.workload.name}: {len(report.rounds)} rounds{marker} -> "
              + ", ".join(paths))
        if report.incomplete:
            exit_code = 1
    return exit_code


if __name__ == "__main__":
    sys.exit(broker_main())
