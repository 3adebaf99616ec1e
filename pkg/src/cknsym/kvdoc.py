"""Tiny `key: value` document format used for configs and reports.

One pair per line, `#` starts a comment, blank lines are skipped.  Order is
preserved so that emitted documents are byte-stable across runs.  This is
deliberately dumber than TOML/YAML: every value is a string and the caller
owns the parsing, which keeps round-trips exact.
"""

from __future__ import annotations


class DocumentError(ValueError):
    """Malformed key-value document."""


def parse_kv(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise DocumentError(f"line {lineno}: expected 'key: value', got {raw!r}")
        key, value = line.split(":", 1)
        key = key.strip()
        if not key:
            raise DocumentError(f"line {lineno}: empty key")
        if key in pairs:
            raise DocumentError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value.strip()
    return pairs


def format_kv(pairs: dict[str, str]) -> str:
    lines = [f"{key}: {value}" for key, value in pairs.items()]
    return "\n".join(lines) + "\n"


def require_keys(pairs: dict[str, str], required: tuple[str, ...],
                 optional: tuple[str, ...] = ()) -> None:
    """Reject missing required keys and any key outside required+optional."""
    missing = [k for k in required if k not in pairs]
    if missing:
        raise DocumentError(f"missing keys: {', '.join(missing)}")
    allowed = set(required) | set(optional)
    unknown = [k for k in pairs if k not in allowed]
    if unknown:
        raise DocumentError(f"unknown keys: {', '.join(sorted(unknown))}")
