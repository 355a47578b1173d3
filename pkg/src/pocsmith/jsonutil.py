"""Canonical JSON helpers.

All persisted artifacts (trajectories, run summaries, verdicts) go through
canonical_dumps so that serialize -> deserialize -> serialize is
byte-identical.
"""

from __future__ import annotations

import json
from decimal import Decimal
from typing import Any


def _default(obj: Any) -> Any:
    if isinstance(obj, Decimal):
        # USD amounts round-trip as strings; float would drift.
        return str(obj)
    raise TypeError(f"not JSON-serializable: {type(obj).__name__}")


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, default=_default)


def canonical_dump_line(obj: Any) -> str:
    return canonical_dumps(obj) + "\n"


def loads(text: str) -> Any:
    return json.loads(text)
