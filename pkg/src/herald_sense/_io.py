"""Atomic file writing and the CSV dialect shared by sampler and CLI.

Every CSV written by this package starts with a single comment line
``# herald-sense <version>`` followed by one header row; floats are
rendered with 17 significant digits so files re-ingest bit-identically.
All writes go through a temporary file in the destination directory and
an atomic rename.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

from ._version import VERSION

COMMENT_PREFIX = "# herald-sense"


def version_comment() -> str:
    return f"{COMMENT_PREFIX} {VERSION}"


def format_float(x: float) -> str:
    return f"{x:.17g}"


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows) -> None:
    """Write a comment line, a header row, and data rows atomically."""
    import io

    buf = io.StringIO()
    buf.write(version_comment() + "\r\n")
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])
    atomic_write_text(path, buf.getvalue())


def write_json(path, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def meta_sidecar_path(path) -> Path:
    return Path(path).with_suffix(".meta.json")
