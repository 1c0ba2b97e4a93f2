from __future__ import annotations

import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Iterable, Mapping, Optional, Sequence

from median_risk.serialization import format_value, json_default


@dataclass(frozen=True)
class RunManifest:
    command: str
    parameters: Mapping[str, Any]
    seed: Optional[int]
    version: str
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def header_lines(self) -> list[str]:
        entries = [
            ("command", self.command),
            ("parameters", json.dumps(dict(self.parameters), sort_keys=True, default=json_default)),
            ("seed", "" if self.seed is None else str(self.seed)),
            ("version", self.version),
            ("timestamp", self.timestamp),
        ]
        return [f"# {key}: {value}" for key, value in entries]


@dataclass
class TableStats:
    command: str
    rows: int = 0
    not_reached: int = 0

    def to_log_line(self) -> str:
        return f"{self.command} | rows={self.rows} not_reached={self.not_reached}"


def render_csv(manifest: RunManifest, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> str:
    buf = io.StringIO()
    for line in manifest.header_lines():
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(col)) for col in columns])
    return buf.getvalue()


def write_csv(
    out_path: Optional[str],
    manifest: RunManifest,
    columns: Sequence[str],
    rows: Iterable[Mapping[str, Any]],
) -> None:
    """Write to ``out_path``, or to stdout when it is None or '-'."""
    text = render_csv(manifest, columns, rows)
    if out_path is None or out_path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    out_dir = os.path.dirname(out_path)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
