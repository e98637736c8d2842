"""Flat ``key = value`` configuration files.

Values may be quoted (shell rules) so expressions can contain spaces or
``#``.  Keys are case-insensitive and ``-``/``_`` are interchangeable.
Precedence when merging is flags > file > defaults.
"""

from __future__ import annotations

import shlex
from pathlib import Path

from .errors import GasketError


class ConfigError(GasketError, ValueError):
    code = "config_error"
    exit_status = 2


def normalise_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        try:
            parts = shlex.split(value, comments=True)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        if len(parts) > 1:
            raise ConfigError(f"{source}:{lineno}: quote values that contain spaces")
        key = normalise_key(key)
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        out[key] = parts[0] if parts else ""
    return out


def load_config(path) -> dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {str(p)!r} does not exist")
    return parse_config(p.read_text(encoding="utf-8"), str(p))


def merge(flags: dict, file_values: dict, defaults: dict) -> dict:
    """Combine settings; a flag value of ``None`` means "not given"."""
    out = dict(defaults)
    out.update({k: v for k, v in file_values.items()})
    out.update({k: v for k, v in flags.items() if v is not None})
    return out
