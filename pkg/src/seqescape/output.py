"""CSV/JSON writers and readers for result bundles.

Floats are written with ``repr`` (shortest string that round-trips), so the
same numbers always produce the same bytes.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__

__all__ = ["fmt", "write_csv", "read_csv", "write_json", "ResultsBundle", "provenance"]


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> list[dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2) + "\n", encoding="utf-8")
    return path


def provenance(cfg, command: str) -> dict:
    """Reproducibility block embedded in every JSON payload (no timestamp)."""
    return {
        "command": command,
        "package_version": __version__,
        "master_seed": cfg.sim.master_seed,
        "config": cfg.to_ini(),
    }


@dataclass
class ResultsBundle:
    directory: Path
    command: str
    provenance: dict
    files: dict[str, Path] = field(default_factory=dict)
    data: dict[str, Any] = field(default_factory=dict)

    def add(self, path: Path):
        self.files[path.name] = path
        return path

    def finalize(self) -> Path:
        """Write ``provenance.json`` listing every file with its SHA-256."""
        manifest = dict(self.provenance)
        manifest["created"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        manifest["files"] = {
            name: hashlib.sha256(p.read_bytes()).hexdigest() for name, p in sorted(self.files.items())
        }
        return write_json(self.directory / f"provenance_{self.command}.json", manifest)
