import json, os, threading, time
from datetime import datetime, timezone
from typing import Iterator, Optional

import config

_LOCK = threading.Lock()
LOG_DIR = config.LOG_DIR


def _log_path(day: Optional[str] = None):
    day = day or datetime.now(timezone.utc).strftime("%Y%m%d")
    return os.path.join(LOG_DIR, f"provenance_{day}.jsonl")


def log_event(kind: str, payload: dict):
    if not LOG_DIR:
        return
    rec = {
        "ts": time.time(),
        "kind": kind,
        **payload
    }
    # numpy scalar -> float
    line = json.dumps(rec, ensure_ascii=False, default=float) + "\n"
    # i trial girano nel pool: una riga per volta
    with _LOCK:
        os.makedirs(LOG_DIR, exist_ok=True)
        with open(_log_path(), "a", encoding="utf-8") as f:
            f.write(line)


def read_events(kind: Optional[str] = None, day: Optional[str] = None) -> Iterator[dict]:
    """Eventi del giorno (default oggi, UTC), filtrati per kind."""
    path = _log_path(day)
    if not LOG_DIR or not os.path.exists(path):
        return
    with open(path, encoding="utf-8") as f:
        for ln in f:
            rec = json.loads(ln)
            if kind is None or rec.get("kind") == kind:
                yield rec
