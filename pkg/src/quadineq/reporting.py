"""Bit-stable CSV and JSON reports with an embedded run manifest."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__
from .errors import DomainError


def deterministic_timestamp(stamp: str | None = None) -> str:
    """An explicit stamp, else SOURCE_DATE_EPOCH as ISO UTC, else empty.

    Wall-clock time is never used so that identical runs give identical bytes.
    """
    if stamp:
        return stamp
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        try:
            return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()
        except ValueError as exc:
            raise DomainError(f"SOURCE_DATE_EPOCH is not an integer: {epoch!r}") from exc
    return ""


@dataclass(frozen=True)
class RunManifest:
    command: str
    argv: tuple[str, ...]
    transform: Any
    seed: int
    tolerances: Mapping[str, float] = field(default_factory=dict)
    output: str = "-"
    timestamp: str = ""
    version: str = __version__

    def to_json(self) -> dict:
        d = asdict(self)
        d["argv"] = list(self.argv)
        d["tolerances"] = dict(self.tolerances)
        return d


def _clean(x):
    """Plain JSON-compatible values; non-finite floats become None."""
    if isinstance(x, Mapping):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (Mapping, list, tuple)):
        return json.dumps(_clean(x), sort_keys=True, separators=(",", ":"))
    return str(x)


def render(results, fmt: str, manifest: RunManifest, columns: Sequence[str] | None = None) -> str:
    """Report text.  CSV results are a list of row mappings; JSON takes anything."""
    if results is None or (hasattr(results, "__len__") and len(results) == 0):
        raise DomainError("nothing to report")
    man = _clean(manifest.to_json())
    if fmt == "json":
        doc = {"manifest": man, "results": _clean(results)}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        if isinstance(results, Mapping):
            results = [results]
        cols = list(columns) if columns is not None else list(results[0].keys())
        buf = io.StringIO()
        buf.write("# manifest: " + json.dumps(man, sort_keys=True, separators=(",", ":")) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in results:
            w.writerow([_cell(row[c]) for c in cols])
        return buf.getvalue()
    raise DomainError(f"unknown format {fmt!r}")


def emit_report(results, fmt: str, path: str | None, manifest: RunManifest,
                columns: Sequence[str] | None = None) -> None:
    """Write the report to ``path`` or stdout when path is None or '-'."""
    text = render(results, fmt, manifest, columns)
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)
