"""Byte-stable JSON serialization for all persisted artifacts.

Artifacts must survive serialize -> parse -> serialize byte-identically, so
every writer in the toolkit goes through :func:`dumps_stable` (sorted keys,
fixed separators, UTF-8, trailing newline).
"""

from __future__ import annotations

import json
from typing import Any


def dumps_stable(obj: Any) -> bytes:
    text = json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def loads(data: bytes | str) -> Any:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return json.loads(data)
