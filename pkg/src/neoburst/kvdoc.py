"""Versioned key-value documents for model persistence.

Models are stored as plain UTF-8 text, one `key = value` pair per line,
with a mandatory leading `format = <name>/<version>` line.  Floats are
written with repr (17 significant digits), so a load of a dump restores
values bit-exactly.  Blank lines and `#` comments are tolerated on read.
"""

from __future__ import annotations

import numpy as np


class ModelFormatError(ValueError):
    """Raised when a model document is malformed or the wrong format."""


def dump_kv(format_name: str, pairs: dict[str, str]) -> str:
    """Render a document; the format line always comes first."""
    lines = [f"format = {format_name}"]
    for key, value in pairs.items():
        if "=" in key or "\n" in key or not key.strip():
            raise ValueError(f"invalid key {key!r}")
        if "\n" in value:
            raise ValueError(f"value for {key!r} contains a newline")
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def parse_kv(text: str, expected_format: str | None = None) -> dict[str, str]:
    """Parse a document back to an ordered key -> value mapping.

    expected_format, when given, is checked against the format line and
    a mismatch (or a missing line) raises ModelFormatError.
    """
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ModelFormatError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in pairs:
            raise ModelFormatError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value.strip()
    if expected_format is not None:
        found = pairs.get("format")
        if found != expected_format:
            raise ModelFormatError(
                f"expected format {expected_format!r}, found {found!r}"
            )
    return pairs


def require(pairs: dict[str, str], key: str) -> str:
    if key not in pairs:
        raise ModelFormatError(f"missing required key {key!r}")
    return pairs[key]


def format_float(x: float) -> str:
    return repr(float(x))


def format_floats(xs) -> str:
    return " ".join(repr(float(x)) for x in np.asarray(xs, dtype=np.float64).ravel())


def parse_float(text: str, key: str = "") -> float:
    try:
        return float(text)
    except ValueError:
        raise ModelFormatError(f"key {key!r}: not a number: {text!r}") from None


def parse_floats(text: str, key: str = "") -> np.ndarray:
    if not text.strip():
        return np.empty(0)
    try:
        return np.array([float(t) for t in text.split()], dtype=np.float64)
    except ValueError:
        raise ModelFormatError(f"key {key!r}: not a number list: {text!r}") from None


def parse_int(text: str, key: str = "") -> int:
    try:
        return int(text)
    except ValueError:
        raise ModelFormatError(f"key {key!r}: not an integer: {text!r}") from None


def parse_ints(text: str, key: str = "") -> list[int]:
    if not text.strip():
        return []
    try:
        return [int(t) for t in text.split()]
    except ValueError:
        raise ModelFormatError(f"key {key!r}: not an integer list: {text!r}") from None
