"""Deterministic JSON and CSV report files."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

SCHEMA_VERSION = "1.0"


@dataclass
class SuiteResult:
    """Outcome of one suite: a verdict, JSON records and optional CSV tables."""

    name: str
    records: list[dict] = field(default_factory=list)
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)
    verdict: bool | None = None

    def add(self, record: dict) -> dict:
        self.records.append(record)
        return record

    def add_table(self, name: str, header, rows) -> None:
        self.tables[name] = (list(header), [list(r) for r in rows])

    @property
    def passed(self) -> bool:
        if self.verdict is not None:
            return bool(self.verdict)
        return all(bool(r.get("verdict", True)) for r in self.records)

    def to_dict(self) -> dict:
        return {"verdict": self.passed, "records": self.records,
                "tables": sorted(f"{self.name}_{t}.csv" for t in self.tables)}


def plain(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays and tuples to JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def report_document(results: list[SuiteResult], config: dict, seed: int) -> dict:
    return plain({
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "config": config,
        "suites": {r.name: r.to_dict() for r in results},
        "verdict": all(r.passed for r in results),
    })


def emit_report(results: list[SuiteResult], out_dir, config: dict | None = None, seed: int = 0) -> Path:
    """Write ``report.json`` (sorted keys, no timestamps) and one CSV per table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = report_document(results, config or {}, seed)
    path = out / "report.json"
    path.write_text(json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    for r in results:
        for name, (header, rows) in r.tables.items():
            with open(out / f"{r.name}_{name}.csv", "w", newline="", encoding="utf-8") as fh:
                wr = csv.writer(fh)
                wr.writerow(header)
                for row in rows:
                    wr.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                                 for v in row])
    return path
