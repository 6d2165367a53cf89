"""Low-level TSV plumbing: field escaping, strict row iteration, atomic writes.

All toolkit files are UTF-8 with LF line endings and one record per line.
Fields escape backslash, tab, newline and carriage return (as ``\\\\``,
``\\t``, ``\\n``, ``\\r``) so that any text round-trips bit-exactly through
a single-line record.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

from .errors import ParseError

_ESCAPE = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPE = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def escape_field(value: str) -> str:
    """Escape a field for embedding in a single TSV cell."""
    if not any(c in value for c in "\\\t\n\r"):
        return value
    return "".join(_ESCAPE.get(c, c) for c in value)


def unescape_field(value: str) -> str:
    """Invert :func:`escape_field`. Raises ValueError on a dangling or
    unknown escape so corrupt files fail loudly."""
    if "\\" not in value:
        return value
    out: list[str] = []
    i = 0
    n = len(value)
    while i < n:
        c = value[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        if i + 1 >= n:
            raise ValueError("dangling backslash at end of field")
        marker = value[i + 1]
        if marker not in _UNESCAPE:
            raise ValueError(f"unknown escape sequence '\\{marker}'")
        out.append(_UNESCAPE[marker])
        i += 2
    return "".join(out)


def read_lines(path: str | Path) -> list[str]:
    """Read a UTF-8 file and split strictly on LF (no universal newlines)."""
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8: {exc}", path=str(path)) from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def iter_rows(path: str | Path, header: str, n_columns: int):
    """Yield ``(line_number, raw_fields)`` for each data row.

    Validates the header line and the per-row column count; fields are the
    raw (still escaped) cell strings.
    """
    lines = read_lines(path)
    if not lines:
        raise ParseError("file is empty, expected a header line", path=str(path), line=1)
    if lines[0] != header:
        raise ParseError(
            f"bad header: expected {header!r}, found {lines[0]!r}",
            path=str(path),
            line=1,
        )
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != n_columns:
            raise ParseError(
                f"expected {n_columns} tab-separated columns, found {len(fields)}",
                path=str(path),
                line=lineno,
            )
        yield lineno, fields


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write a file atomically: temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
