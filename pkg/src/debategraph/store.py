"""Byte-stable JSON output helpers for run directories."""

from __future__ import annotations

import json
import os
import re
import tempfile
from pathlib import Path


def canonical_json(payload: object) -> str:
    """Stable rendering: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def atomic_write_json(path: str | Path, payload: object) -> None:
    atomic_write_text(path, canonical_json(payload))


def safe_filename(identifier: str) -> str:
    """Filesystem-safe stand-in for an arbitrary identifier."""
    cleaned = re.sub(r"[^A-Za-z0-9._-]", "_", identifier)
    return cleaned or "_"
