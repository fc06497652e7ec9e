"""Serialization of experiment outputs with parameter-hash provenance."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence


def canonical(params: dict[str, Any]) -> str:
    return json.dumps(params, sort_keys=True, separators=(",", ":"), default=str)


def parameter_hash(params: dict[str, Any]) -> str:
    return hashlib.sha256(canonical(params).encode()).hexdigest()[:16]


def fmt(x: Any) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence[Any]], phash: str) -> Path:
    """CSV with a leading ``# parameter_hash=...`` comment line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# parameter_hash={phash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _jsonable(x: Any) -> Any:
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "tolist"):
        return _jsonable(x.tolist())
    return x


def write_json(path: str | Path, payload: dict[str, Any], phash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = dict(payload, parameter_hash=phash)
    path.write_text(json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n")
    return path


@dataclass
class RunManifest:
    command: str
    parameters: dict[str, Any]
    seed: int | None = None
    output_paths: list[str] = field(default_factory=list)
    parameter_hash: str = ""
    started: float = field(default_factory=time.time)

    def __post_init__(self) -> None:
        if not self.parameter_hash:
            self.parameter_hash = parameter_hash({"command": self.command, **self.parameters})

    def to_json(self) -> str:
        return json.dumps(
            _jsonable(
                {
                    "command": self.command,
                    "parameters": self.parameters,
                    "seed": self.seed,
                    "output_paths": self.output_paths,
                    "parameter_hash": self.parameter_hash,
                    "timestamp": self.started,
                }
            ),
            sort_keys=True,
        )
