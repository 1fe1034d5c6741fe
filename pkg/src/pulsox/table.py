"""Tabular experiment output with reproducibility metadata.

Tables are rectangular, purely numeric, and carry a flat string metadata
block (resolved config echo plus code version).  Serialization is
deterministic, so re-running an experiment from the echoed config reproduces
the file byte for byte.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

__all__ = ["ResultTable"]


def _fmt(v: float) -> str:
    return repr(float(v))


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list[float]]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        ncol = len(self.columns)
        for r in self.rows:
            if len(r) != ncol:
                raise ValueError("ragged row in result table")
        self.rows = [[float(v) for v in r] for r in self.rows]

    def column(self, name: str) -> list[float]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    # -- CSV ---------------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.metadata):
            buf.write(f"# {key} = {self.metadata[key]}\n")
        writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        metadata: dict[str, str] = {}
        lines = []
        for line in text.splitlines():
            if line.startswith("# "):
                key, _, value = line[2:].partition(" = ")
                metadata[key] = value
            elif line.strip():
                lines.append(line)
        reader = csv.reader(lines)
        columns = next(reader)
        rows = [[float(v) for v in row] for row in reader]
        return cls(columns=columns, rows=rows, metadata=metadata)

    # -- JSON --------------------------------------------------------------

    def to_json(self) -> str:
        payload = {"metadata": dict(sorted(self.metadata.items())),
                   "columns": self.columns, "rows": self.rows}
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        payload = json.loads(text)
        return cls(columns=list(payload["columns"]),
                   rows=[list(map(float, r)) for r in payload["rows"]],
                   metadata={str(k): str(v) for k, v in payload["metadata"].items()})

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown table format {fmt!r}")
