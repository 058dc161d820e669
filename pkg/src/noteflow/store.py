"""Durable append-only event store.

One JSONL file per deployment holds every accepted event wrapped with its
receipt metadata.  A sidecar index maps each session to the byte offsets
and client sequence numbers of its entries, so reopening a large store does
not require a rescan and deduplication state survives restarts.

Accepted events are never updated or deleted.  An event whose
(session_id, seq) pair was already stored is acknowledged but not stored
again, which makes delivery retries harmless.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .events import RawEvent, event_from_dict


@dataclass
class Ack:
    stored: bool
    deduplicated: bool


class EventStore:
    """Append-only log of RawEvent plus receipt metadata."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.index_path = Path(str(self.path) + ".idx.json")
        self._lock = threading.Lock()
        self._sessions: dict[str, list[tuple[int, int]]] = {}  # session -> [(offset, seq)]
        self._seen: set[tuple[str, int]] = set()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.touch(exist_ok=True)
        self._load_index()
        self._fh = open(self.path, "a", encoding="utf-8")

    def _load_index(self) -> None:
        size = self.path.stat().st_size
        if self.index_path.exists():
            try:
                doc = json.loads(self.index_path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError):
                doc = None
            if doc and doc.get("size") == size:
                self._sessions = {
                    session: [(int(off), int(seq)) for off, seq in entries]
                    for session, entries in doc["sessions"].items()
                }
                self._seen = {
                    (session, seq)
                    for session, entries in self._sessions.items()
                    for _, seq in entries
                }
                return
        self._rebuild_index()

    def _rebuild_index(self) -> None:
        self._sessions = {}
        self._seen = set()
        with open(self.path, "rb") as fh:
            offset = 0
            for raw in fh:
                line = raw.decode("utf-8").strip()
                if line:
                    entry = json.loads(line)
                    event = entry["event"]
                    key = (event["session_id"], event["seq"])
                    self._sessions.setdefault(event["session_id"], []).append((offset, event["seq"]))
                    self._seen.add(key)
                offset += len(raw)

    def _write_index(self) -> None:
        doc = {
            "size": self.path.stat().st_size,
            "sessions": {s: [[off, seq] for off, seq in v] for s, v in self._sessions.items()},
        }
        tmp = Path(str(self.index_path) + ".tmp")
        tmp.write_text(json.dumps(doc), encoding="utf-8")
        os.replace(tmp, self.index_path)

    def accept(self, event: RawEvent, source: str | None = None) -> Ack:
        """Durably append one validated event, or deduplicate it.

        The entry is flushed and fsynced before the acknowledgment is
        returned, so an acknowledged event survives a crash.
        """
        key = (event.session_id, event.seq)
        with self._lock:
            if key in self._seen:
                return Ack(stored=False, deduplicated=True)
            entry = {
                "event": event.to_dict(),
                "received_at": int(time.time() * 1000),
                "source_hash": hashlib.sha256((source or "").encode("utf-8")).hexdigest()[:16],
            }
            offset = self._fh.tell()
            self._fh.write(json.dumps(entry, ensure_ascii=False, separators=(",", ":")) + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._sessions.setdefault(event.session_id, []).append((offset, event.seq))
            self._seen.add(key)
            return Ack(stored=True, deduplicated=False)

    def __len__(self) -> int:
        return len(self._seen)

    def _read_entry(self, offset: int) -> dict:
        with open(self.path, "rb") as fh:
            fh.seek(offset)
            return json.loads(fh.readline().decode("utf-8"))

    def export(
        self,
        session: str | None = None,
        user: str | None = None,
        notebook: str | None = None,
        ts_from: int | None = None,
        ts_to: int | None = None,
    ) -> Iterator[RawEvent]:
        """Yield stored events in (session_id, seq) order.

        Filters combine conjunctively; time bounds are inclusive.  An empty
        result is an empty iterator, not an error.
        """
        with self._lock:
            sessions = {s: list(entries) for s, entries in self._sessions.items()}
        for session_id in sorted(sessions):
            if session is not None and session_id != session:
                continue
            for offset, _seq in sorted(sessions[session_id], key=lambda item: item[1]):
                event = event_from_dict(self._read_entry(offset)["event"])
                if user is not None and event.user_id != user:
                    continue
                if notebook is not None and event.notebook_name != notebook:
                    continue
                if ts_from is not None and event.timestamp < ts_from:
                    continue
                if ts_to is not None and event.timestamp > ts_to:
                    continue
                yield event

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.flush()
                os.fsync(self._fh.fileno())
                self._fh.close()
            self._write_index()

    def __enter__(self) -> "EventStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
