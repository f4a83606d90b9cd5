# export.py
import csv
import json
import os
from typing import Iterable

from errors import InputError
from models import EstimateMeta, RunRecord
from skewlin import write_matrix

CSV_COLUMNS = ("trial", "verdict_or_error", "shots", "seed_stream")


def _ensure_dir(path: str):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)


def save_json(record: RunRecord, path: str):
    _ensure_dir(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(record.to_json(indent=2))
        f.write("\n")


def _csv_rows(record: RunRecord):
    if record.sub_records:
        # sweep: una riga per trial di ogni punto
        for sub in record.sub_records:
            yield from _csv_rows(sub)
        return
    for r in record.results:
        yield [r.trial, r.outcome, r.shots, r.seed_stream]


def save_csv(record: RunRecord, path: str):
    _ensure_dir(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        w.writerows(_csv_rows(record))


def save_record(record: RunRecord, path: str, fmt: str = "json"):
    if fmt == "csv":
        save_csv(record, path)
    else:
        save_json(record, path)


def save_shot_records(rows: Iterable[dict], path: str) -> int:
    """Una riga JSON per shot; ritorna il numero di righe scritte."""
    _ensure_dir(path)
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
            count += 1
    return count


def save_estimate(est, path: str, seed: int):
    """Γ̂ nel formato matrice di testo, metadati nell'header '#'."""
    meta = EstimateMeta(
        scheme=est.scheme, shots=est.shots_used, eps_stat=est.eps_stat, delta=est.delta,
        seed=seed, bound_shots=est.bound_shots or None,
    )
    _ensure_dir(path)
    write_matrix(path, est.gamma_hat, header=meta.json(exclude_none=True))


def read_estimate_meta(path: str) -> EstimateMeta:
    with open(path, encoding="utf-8") as f:
        first = f.readline()
    if not first.startswith("#"):
        raise InputError(f"{path}: missing '#' metadata header")
    return EstimateMeta.parse_raw(first.lstrip("#").strip())
