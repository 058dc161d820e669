"""Small JSONL helpers shared by the pipeline stages.

Pipeline artifacts start with a single ``{"_meta": {...}}`` line carrying
the config hash; readers here skip meta records transparently.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator


def write_jsonl(path: str | Path, records: Iterable[dict], meta: dict | None = None) -> int:
    """Write records one per line; returns the number of data lines."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(json.dumps({"_meta": meta}, ensure_ascii=False, separators=(",", ":")) + "\n")
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n")
            count += 1
    return count


def read_jsonl(path: str | Path) -> Iterator[dict]:
    """Yield data records, skipping blank lines and the meta header."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            if isinstance(doc, dict) and "_meta" in doc:
                continue
            yield doc


def read_meta(path: str | Path) -> dict | None:
    """Return the meta header of a JSONL artifact, if it has one."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            if isinstance(doc, dict) and "_meta" in doc:
                return doc["_meta"]
            return None
    return None
