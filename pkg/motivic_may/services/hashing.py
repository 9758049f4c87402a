"""Content hashes for cache keys."""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict

FORMAT_NAME = "motivic-may-page"
FORMAT_VERSION = 1


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def dataset_hash(root: Path) -> str:
    """SHA-256 over the sorted relative paths and bytes of every file under ``root``."""
    root = Path(root)
    digest = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        rel = path.relative_to(root).as_posix()
        if rel.startswith(".") or "/__pycache__/" in f"/{rel}":
            continue
        digest.update(rel.encode("utf-8"))
        digest.update(b"\0")
        digest.update(path.read_bytes())
        digest.update(b"\0")
    return digest.hexdigest()


def cache_key(profile: str, page: int, bounds: Dict[str, int], data_hash: str) -> str:
    """Key of one cached page: any change of format, bounds or data gives a new key."""
    return sha256_hex(canonical_json({
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "profile": profile,
        "page": page,
        "bounds": bounds,
        "dataset_hash": data_hash,
    }).encode("utf-8"))
