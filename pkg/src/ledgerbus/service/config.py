"""Broker configuration: YAML with line-numbered validation errors."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import yaml

from ..ledger.types import CapacityModel
from ..remote.notifier import RetryPolicy
from ..transport.wire import Endpoint


class ConfigError(Exception):
    pass


def load_yaml_with_lines(path: str) -> tuple[Any, dict[str, int]]:
    """Parse YAML, returning plain data plus a map of key-path -> line number."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            root = yaml.compose(fh)
        except yaml.YAMLError as err:
            mark = getattr(err, "problem_mark", None)
            line = (mark.line + 1) if mark else 1
            raise ConfigError(f"{path}:{line}: invalid YAML: {err}") from err
    lines: dict[str, int] = {}

    def convert(node, prefix: str):
        if node is None:
            return None
        lines[prefix or "."] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            out = {}
            for key_node, value_node in node.value:
                key = str(key_node.value)
                child = f"{prefix}.{key}" if prefix else key
                lines[child] = key_node.start_mark.line + 1
                out[key] = convert(value_node, child)
            return out
        if isinstance(node, yaml.SequenceNode):
            return [convert(item, f"{prefix}[{i}]") for i, item in enumerate(node.value)]
        return yaml.safe_load(yaml.serialize(node))

    return convert(root, ""), lines


class _Checker:
    def __init__(self, path: str, lines: dict[str, int]):
        self.path = path
        self.lines = lines

    def fail(self, key: str, message: str) -> ConfigError:
        line = self.lines.get(key)
        if line is None:  # fall back to the nearest known parent
            parts = key.replace("[", ".").split(".")
            while parts and line is None:
                parts.pop()
                line = self.lines.get(".".join(parts) or ".")
        return ConfigError(f"{self.path}:{line or 1}: {key}: {message}")

    def require(self, data: dict, key: str, kind, parent: str = "") -> Any:
        full = f"{parent}.{key}" if parent else key
        if not isinstance(data, dict) or key not in data:
            raise self.fail(parent or ".", f"missing required key '{key}'")
        value = data[key]
        if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
            raise self.fail(full, f"expected {kind.__name__}, got {type(value).__name__}")
        return value

    def optional(self, data: dict, key: str, kind, default, parent: str = "") -> Any:
        if not isinstance(data, dict) or key not in data or data[key] is None:
            return default
        return self.require(data, key, kind, parent)


@dataclass
class BrokerConfig:
    listen: Endpoint
    capacity: CapacityModel
    data_dir: str
    init_sample_chains: list[dict] = field(default_factory=list)
    notifier: RetryPolicy = field(default_factory=RetryPolicy)
    max_message_bytes: int = 64 * 1024
    request_timeout_s: float = 120.0
    fsync: bool = False

    @classmethod
    def load(cls, path: str) -> "BrokerConfig":
        data, lines = load_yaml_with_lines(path)
        if not isinstance(data, dict):
            raise ConfigError(f"{path}:1: top level must be a mapping")
        chk = _Checker(path, lines)

        listen_raw = chk.require(data, "listen", dict)
        host = chk.require(listen_raw, "host", str, "listen")
        port = chk.require(listen_raw, "port", int, "listen")
        if not (1 <= port <= 65535):
            raise chk.fail("listen.port", f"port must be in 1..65535, got {port}")
        base_path = chk.optional(listen_raw, "base_path", str, "/broker", "listen")
        listen = Endpoint(host, port, base_path)

        cap_raw = chk.require(data, "capacity", dict)
        try:
            capacity = CapacityModel.from_dict(cap_raw)
        except TypeError as err:
            raise chk.fail("capacity", f"unknown capacity field ({err})") from err
        except ValueError as err:
            field_name = str(err).split(" ", 1)[0]
            raise chk.fail(f"capacity.{field_name}", str(err)) from err

        data_dir = chk.require(data, "data_dir", str)

        sample = chk.optional(data, "init_sample", dict, {})
        chains = sample.get("chains", []) if sample else []
        if not isinstance(chains, list):
            raise chk.fail("init_sample.chains", "expected a list of records")

        notifier_raw = chk.optional(data, "notifier", dict, {})
        notifier = RetryPolicy(
            attempts=chk.optional(notifier_raw, "attempts", int, 3, "notifier"),
            backoff_s=chk.optional(notifier_raw, "backoff_ms", (int, float), 100, "notifier") / 1000.0,
            deadline_s=chk.optional(notifier_raw, "deadline_ms", (int, float), 2000, "notifier") / 1000.0,
        )
        if notifier.attempts < 1:
            raise chk.fail("notifier.attempts", "attempts must be >= 1")

        max_message = chk.optional(data, "max_message_bytes", int, 64 * 1024)
        if max_message < 1:
            raise chk.fail("max_message_bytes", "must be >= 1")
        timeout = float(chk.optional(data, "request_timeout_s", (int, float), 120.0))
        fsync = chk.optional(data, "fsync", bool, False)

        return cls(listen=listen, capacity=capacity, data_dir=data_dir,
                   init_sample_chains=chains, notifier=notifier,
                   max_message_bytes=max_message, request_timeout_s=timeout,
                   fsync=fsync)
