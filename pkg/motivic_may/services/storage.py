"""Page cache: locked JSON files with a self-describing header."""

import fcntl
import json
import logging
import os
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from motivic_may.services.coeff import EchelonBasis, HVec
from motivic_may.services.hashing import FORMAT_NAME, FORMAT_VERSION, cache_key

logger = logging.getLogger(__name__)

INDEX_FILE = "index.json"
LOCK_RETRIES = 10


class PageStorage:
    """JSON storage with file locking, holding one file per cached page."""

    def __init__(self, cache_dir: str = ".may-cache"):
        self.cache_dir = str(cache_dir)
        os.makedirs(self.cache_dir, exist_ok=True)

    def _get_file_path(self, filename: str) -> str:
        return os.path.join(self.cache_dir, filename)

    def _get_lock_path(self, filename: str) -> str:
        return os.path.join(self.cache_dir, f"{filename}.lock")

    @contextmanager
    def _file_lock(self, filename: str):
        """Exclusive advisory lock on ``filename``, non-blocking with bounded retry."""
        lock_path = self._get_lock_path(filename)
        lock_file = None
        try:
            lock_file = open(lock_path, "w")
            for _ in range(LOCK_RETRIES):
                try:
                    fcntl.flock(lock_file.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
                    break
                except OSError:
                    time.sleep(0.1)
            else:
                raise OSError(f"could not lock {filename}")
            yield
        finally:
            if lock_file:
                try:
                    fcntl.flock(lock_file.fileno(), fcntl.LOCK_UN)
                    lock_file.close()
                except OSError:
                    pass
                try:
                    os.remove(lock_path)
                except OSError:
                    pass

    def _read(self, file_path: str) -> Dict[str, Any]:
        if not os.path.exists(file_path):
            return {}
        with open(file_path, "r") as f:
            return json.load(f)

    def _write(self, file_path: str, data: Dict[str, Any]) -> None:
        tmp_path = file_path + ".tmp"
        with open(tmp_path, "w") as f:
            json.dump(data, f, indent=1, sort_keys=True, ensure_ascii=False)
        os.replace(tmp_path, file_path)

    def read_json(self, filename: str) -> Dict[str, Any]:
        with self._file_lock(filename):
            return self._read(self._get_file_path(filename))

    def write_json(self, filename: str, data: Dict[str, Any]) -> None:
        with self._file_lock(filename):
            self._write(self._get_file_path(filename), data)

    def update_json(self, filename: str, update_func: Callable[[Dict[str, Any]], Dict[str, Any]]
                    ) -> Dict[str, Any]:
        """Read, transform and write back under one lock."""
        file_path = self._get_file_path(filename)
        with self._file_lock(filename):
            updated = update_func(self._read(file_path))
            self._write(file_path, updated)
            return updated

    # -- cache entries -----------------------------------------------------------

    @staticmethod
    def header(profile: str, page: int, bounds: Dict[str, int], data_hash: str) -> Dict[str, Any]:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "key": cache_key(profile, page, bounds, data_hash),
            "profile": profile,
            "page": page,
            "bounds": dict(bounds),
            "dataset_hash": data_hash,
        }

    def load_entry(self, profile: str, page: int, bounds: Dict[str, int], data_hash: str
                   ) -> Optional[Dict[str, Any]]:
        """Payload of a cached page, or None when absent or stale."""
        expected = self.header(profile, page, bounds, data_hash)
        try:
            data = self.read_json(f"{expected['key']}.json")
        except (OSError, json.JSONDecodeError) as exc:
            logger.warning("Unreadable cache entry for %s E%d: %s", profile, page, exc)
            return None
        if not data:
            return None
        if data.get("header") != expected:
            logger.warning("Cache entry for %s E%d has a mismatched header; ignoring it", profile, page)
            return None
        logger.info("Cache hit: %s E%d", profile, page)
        return data.get("payload")

    def store_entry(self, profile: str, page: int, bounds: Dict[str, int], data_hash: str,
                    payload: Dict[str, Any]) -> str:
        header = self.header(profile, page, bounds, data_hash)
        key = header["key"]
        self.write_json(f"{key}.json", {"header": header, "payload": payload})

        def add_to_index(index: Dict[str, Any]) -> Dict[str, Any]:
            entries = index.setdefault("entries", {})
            entries[key] = {"profile": profile, "page": page, "bounds": dict(bounds),
                            "dataset_hash": data_hash}
            return index

        self.update_json(INDEX_FILE, add_to_index)
        logger.info("Cached %s E%d as %s", profile, page, key[:12])
        return key

    def cached_pages(self, profile: str, bounds: Dict[str, int], data_hash: str) -> List[int]:
        entries = self.read_json(INDEX_FILE).get("entries", {})
        return sorted(e["page"] for e in entries.values()
                      if e["profile"] == profile and e["bounds"] == dict(bounds)
                      and e["dataset_hash"] == data_hash)


# ---------------------------------------------------------------------------
# Page payloads
# ---------------------------------------------------------------------------

def _basis_payload(basis: Optional[EchelonBasis]) -> Optional[List[List[Any]]]:
    if basis is None:
        return None
    return [[vec.weight, sorted(vec.support)] for vec in basis.basis()]


def _basis_from(rows: Optional[List[List[Any]]], row_weights) -> Optional[EchelonBasis]:
    if rows is None:
        return None
    basis = EchelonBasis(row_weights)
    for weight, support in rows:
        basis.insert(HVec(int(weight), frozenset(int(i) for i in support)))
    return basis


def page_payload(page, same_as: Optional[int] = None) -> Dict[str, Any]:
    """JSON form of a page: cells keyed ``"s,f"`` with cycles and boundaries as [weight, support]."""
    if same_as is not None:
        return {"same_as": same_as}
    return {"cells": {f"{s},{f}": {"z": _basis_payload(pc.z), "b": _basis_payload(pc.b)}
                      for (s, f), pc in sorted(page.items())}}


def page_from_payload(payload: Dict[str, Any], seq) -> Dict:
    from motivic_may.services.pages import PageCell

    page = {}
    for key, cell in payload["cells"].items():
        s, f = (int(x) for x in key.split(","))
        weights = seq.rows((s, f)).weights
        page[(s, f)] = PageCell(s, f, _basis_from(cell["z"], weights), _basis_from(cell["b"], weights))
    return page


def sequence_bounds(seq) -> Dict[str, int]:
    return {"s_max": seq.s_max, "f_max": seq.f_max, "through": seq.through}


def save_sequence(storage: PageStorage, seq, data_hash: str) -> List[str]:
    """Store every computed page; pages equal to their predecessor are stored by reference."""
    bounds = sequence_bounds(seq)
    keys = []
    previous = None
    for r in sorted(seq.pages):
        page = seq.pages[r]
        same = previous if previous is not None and seq.pages[previous] is page else None
        payload = page_payload(page, same)
        if r == max(seq.pages):
            payload["diagnostics"] = list(seq.diagnostics)
        keys.append(storage.store_entry(seq.profile.name, r, bounds, data_hash, payload))
        previous = r
    return keys


def load_sequence(storage: PageStorage, seq, data_hash: str) -> bool:
    """Restore pages E1 through ``seq.through`` from the cache; False on any miss."""
    from motivic_may.services.pages import PAGE_KEYS

    bounds = sequence_bounds(seq)
    pages = {}
    last = None
    for r in PAGE_KEYS:
        if r > seq.through:
            break
        payload = storage.load_entry(seq.profile.name, r, bounds, data_hash)
        if payload is None:
            return False
        if "same_as" in payload:
            pages[r] = pages[payload["same_as"]]
        else:
            pages[r] = page_from_payload(payload, seq)
        seq.diagnostics = list(payload.get("diagnostics", seq.diagnostics))
        last = r
    if last is None:
        return False
    seq.pages = pages
    return True
