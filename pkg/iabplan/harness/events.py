from __future__ import annotations

import datetime
import json
import logging
import threading
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

logger = logging.getLogger(__name__)

RUN_STARTED = "RUN_STARTED"
INSTANCE_SAMPLED = "INSTANCE_SAMPLED"
QUEEN_UPDATED = "QUEEN_UPDATED"
INSTANCE_FINISHED = "INSTANCE_FINISHED"
RUN_SUCCEEDED = "RUN_SUCCEEDED"
RUN_FAILED = "RUN_FAILED"
RUN_REFUSED = "RUN_REFUSED"

EVENTS_FILE = "events.jsonl"


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0).isoformat().replace("+00:00", "Z")


class Event:
    def __init__(self, run_id: str, ts: str, event_type: str, payload: Dict[str, Any]):
        self.run_id = run_id
        self.ts = ts
        self.event_type = event_type
        self.payload = payload

    def to_dict(self) -> Dict[str, Any]:
        return {"ts": self.ts, "run_id": self.run_id, "event_type": self.event_type, "payload": self.payload}


Subscriber = Callable[[Event], None]


class EventBus:
    """
    Run event log:
    - appends events to <base_dir>/<run_id>/events.jsonl
    - supports replay(run_id)
    - optional in-process subscribe(run_id, callback)
    Without a base_dir events are only logged and dispatched.
    """

    def __init__(self, base_dir: Optional[str] = None):
        self.base_dir = Path(base_dir) if base_dir else None
        self._subscribers: Dict[str, List[Subscriber]] = {}
        self._lock = threading.Lock()

    def _path(self, run_id: str) -> Optional[Path]:
        if self.base_dir is None:
            return None
        return self.base_dir / run_id / EVENTS_FILE

    def publish(self, run_id: str, event_type: str, payload: Dict[str, Any]) -> Event:
        evt = Event(run_id=run_id, ts=_now(), event_type=event_type, payload=payload)
        logger.info("%s %s %s", run_id, event_type, json.dumps(payload, default=str, sort_keys=True))
        path = self._path(run_id)
        if path is not None:
            with self._lock:
                path.parent.mkdir(parents=True, exist_ok=True)
                with open(path, "a", encoding="utf-8") as f:
                    f.write(json.dumps(evt.to_dict(), default=str) + "\n")

        for callback in self._subscribers.get(run_id, []) + self._subscribers.get("*", []):
            try:
                callback(evt)
            except Exception:
                # best-effort only
                logger.exception("event subscriber failed for %s", event_type)
        return evt

    def replay(self, run_id: str, limit: int = 1000) -> List[Event]:
        path = self._path(run_id)
        if path is None or not path.exists():
            return []
        out: List[Event] = []
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                if len(out) >= limit:
                    break
                try:
                    raw = json.loads(line)
                except json.JSONDecodeError:
                    raw = {"ts": "", "event_type": "UNPARSEABLE", "payload": {"raw": line.strip()}}
                out.append(Event(run_id, raw.get("ts", ""), raw.get("event_type", ""), raw.get("payload", {})))
        return out

    def subscribe(self, run_id: str, callback: Subscriber) -> None:
        """Register a callback for one run id, or for every run with "*"."""
        self._subscribers.setdefault(run_id, []).append(callback)
