"""In-memory message bus / document store with per-key revisions."""

from __future__ import annotations

import copy
import threading
from dataclasses import dataclass

from ..errors import AbilityError


@dataclass(frozen=True)
class BusDoc:
    topic: str
    key: str
    payload: object  # any JSON value
    revision: int

    def to_json(self) -> dict:
        return {"topic": self.topic, "key": self.key, "payload": self.payload, "revision": self.revision}


class BusStore:
    """Concurrent publishers are fine; revisions increment atomically per key."""

    def __init__(self):
        self._lock = threading.Lock()
        self._docs: dict[tuple[str, str], BusDoc] = {}

    def publish(self, topic: str, key: str, payload) -> int:
        with self._lock:
            prev = self._docs.get((topic, key))
            revision = (prev.revision if prev else 0) + 1
            self._docs[(topic, key)] = BusDoc(topic, key, copy.deepcopy(payload), revision)
            return revision

    def retrieve(self, topic: str, key: str) -> BusDoc:
        with self._lock:
            doc = self._docs.get((topic, key))
            if doc is None:
                raise AbilityError("not_found", f"no document at {topic!r}/{key!r}")
            return BusDoc(doc.topic, doc.key, copy.deepcopy(doc.payload), doc.revision)
