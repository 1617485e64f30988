"""Content-addressed cache for datasets, checkpoints and run results.

Keys are sha256 digests of canonical JSON payloads; entries live under
``<root>/<kind>/<key><suffix>``. The root comes from the SPECTRA_XFER_CACHE
environment variable (default ``~/.cache/spectra_xfer``). All writes are
atomic (temp file + rename) so concurrent runs can share a cache.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

CACHE_ENV_VAR = "SPECTRA_XFER_CACHE"


def cache_root(override=None) -> Path:
    if override is not None:
        root = Path(override)
    else:
        root = Path(os.environ.get(CACHE_ENV_VAR, "~/.cache/spectra_xfer"))
    return root.expanduser()


def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def content_key(payload) -> str:
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


def entry_path(root, kind: str, key: str, suffix: str = ".json") -> Path:
    return cache_root(root) / kind / f"{key}{suffix}"


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(text)
    tmp.replace(path)


def json_get(root, kind: str, key: str):
    path = entry_path(root, kind, key)
    if not path.exists():
        return None
    return json.loads(path.read_text())


def json_put(root, kind: str, key: str, payload) -> Path:
    path = entry_path(root, kind, key)
    atomic_write_text(path, canonical_json(payload))
    return path
