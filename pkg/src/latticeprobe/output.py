"""CSV/JSON emission and run manifests.

Floats are written with repr (shortest round-trip form), so a given set
of computed values always produces byte-identical files.  Every command
writes a manifest holding its fully resolved configuration; feeding a
manifest back as --config reproduces the run.
"""

from __future__ import annotations

import csv
import datetime
import json
from pathlib import Path


def format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def write_json_rows(path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = [dict(zip(header, row)) for row in rows]
    with open(path, "w") as f:
        json.dump(records, f, indent=2)
        f.write("\n")


def write_table(path, header: list[str], rows, fmt: str) -> Path:
    """Write rows as CSV or JSON depending on fmt; returns the path used."""
    path = Path(path)
    if fmt == "json":
        path = path.with_suffix(".json")
        write_json_rows(path, header, rows)
    else:
        path = path.with_suffix(".csv")
        write_csv(path, header, rows)
    return path


def read_csv_columns(path, columns: list[str]) -> dict:
    """Load selected numeric columns from a CSV written by write_csv."""
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        data = {c: [] for c in columns}
        for record in reader:
            for c in columns:
                data[c].append(float(record[c]))
    return {c: vals for c, vals in data.items()}


def write_manifest(path, command: str, config: dict, outputs: list[str],
                   extra: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config": config,
        "outputs": sorted(str(o) for o in outputs),
        "timestamp_utc": datetime.datetime.now(datetime.timezone.utc)
                         .isoformat(timespec="seconds"),
    }
    if extra:
        manifest.update(extra)
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def load_config(path) -> dict:
    """Read a config file; a manifest is accepted and unwrapped."""
    with open(path) as f:
        data = json.load(f)
    if "config" in data and "command" in data:
        return data["config"]
    return data
