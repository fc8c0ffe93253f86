"""Canonical JSON reading/writing.

Every artifact the pipeline emits goes through canonical_dumps so reruns with
identical inputs produce byte-identical files: sorted keys, two-space indent,
trailing newline, floats via repr (exact round-trip).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any


def canonical_dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_json(path: str | Path, doc: Any) -> None:
    Path(path).write_text(canonical_dumps(doc), encoding="utf-8")


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))
