"""Flat ``key = value`` text files with dotted keys.

Values are JSON literals (numbers, strings, lists, true/false/null); a value
that is not valid JSON is taken as a bare string. ``#`` starts a comment
outside quoted strings. Dotted keys build nested dictionaries::

    game = MP
    steps = 600000
    learner.algorithm = "MBL-DPU"
    learner.M = 0.05
    player.1.M = 0.1
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    pass


def _strip_comment(line: str) -> str:
    quoted = False
    for i, ch in enumerate(line):
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:i]
    return line


def _value(raw: str) -> Any:
    raw = raw.strip()
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_kv(text: str) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = _strip_comment(line).strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = line.split("=", 1)
        parts = [p.strip() for p in key.strip().split(".")]
        if not all(parts):
            raise ConfigError(f"line {lineno}: malformed key {key.strip()!r}")
        node = out
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"line {lineno}: {part!r} is both a value and a section")
            node = child
        if parts[-1] in node:
            raise ConfigError(f"line {lineno}: duplicate key {key.strip()!r}")
        node[parts[-1]] = _value(raw)
    return out


def load_kv(path: str | Path) -> dict[str, Any]:
    return parse_kv(Path(path).read_text())


def _format(value: Any) -> str:
    return json.dumps(value)


def dump_kv(data: dict[str, Any], prefix: str = "") -> str:
    lines = []
    for key, value in data.items():
        full = f"{prefix}{key}"
        if isinstance(value, dict):
            lines.append(dump_kv(value, full + ".").rstrip("\n"))
        elif value is not None:
            lines.append(f"{full} = {_format(value)}")
    return "\n".join(line for line in lines if line) + "\n"
