import os
import shutil
import tempfile

import pytest

from motivic_may.config import DEFAULT_DATASET_DIR
from motivic_may.services.e1 import build_e1, get_profile
from motivic_may.services.hashing import cache_key, dataset_hash
from motivic_may.services.pages import build_sequence
from motivic_may.services.storage import INDEX_FILE, PageStorage, load_sequence, save_sequence
from motivic_may.services.tables import load_dataset

BOUNDS = {"s_max": 3, "f_max": 2, "through": 2}


@pytest.fixture
def temp_storage():
    """Create a temporary cache for testing."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield PageStorage(temp_dir)


@pytest.fixture(scope="module")
def dataset():
    return load_dataset(DEFAULT_DATASET_DIR)


def small_sequence(dataset):
    prof = get_profile("motivic")
    return build_sequence(prof, build_e1(prof, 3, 2), dataset, 3, 2, 2)


def test_read_write_json(temp_storage):
    temp_storage.write_json("test.json", {"key": "value", "number": 42})
    assert temp_storage.read_json("test.json") == {"key": "value", "number": 42}


def test_read_nonexistent_file(temp_storage):
    assert temp_storage.read_json("nonexistent.json") == {}


def test_update_json(temp_storage):
    temp_storage.write_json("update_test.json", {"counter": 0})

    def increment_counter(data):
        data["counter"] += 1
        return data

    assert temp_storage.update_json("update_test.json", increment_counter)["counter"] == 1
    assert temp_storage.read_json("update_test.json")["counter"] == 1


def test_file_locking_creates_lock_file(temp_storage):
    """The lock file exists while the lock is held and is removed afterwards."""
    lock_path = temp_storage._get_lock_path("lock_test.json")
    with temp_storage._file_lock("lock_test.json"):
        assert os.path.exists(lock_path)
    assert not os.path.exists(lock_path)


def test_entry_round_trip(temp_storage):
    payload = {"cells": {"0,0": {"z": [[0, [0]]], "b": []}}}
    key = temp_storage.store_entry("motivic", 2, BOUNDS, "abc", payload)
    assert key == cache_key("motivic", 2, BOUNDS, "abc")
    assert temp_storage.load_entry("motivic", 2, BOUNDS, "abc") == payload
    assert temp_storage.cached_pages("motivic", BOUNDS, "abc") == [2]
    assert key in temp_storage.read_json(INDEX_FILE)["entries"]


def test_stale_entries_miss(temp_storage):
    temp_storage.store_entry("motivic", 2, BOUNDS, "abc", {"cells": {}})
    assert temp_storage.load_entry("motivic", 2, BOUNDS, "other") is None
    assert temp_storage.load_entry("motivic", 4, BOUNDS, "abc") is None
    assert temp_storage.load_entry("classical", 2, BOUNDS, "abc") is None


def test_tampered_header_is_ignored(temp_storage):
    key = temp_storage.store_entry("motivic", 2, BOUNDS, "abc", {"cells": {}})
    data = temp_storage.read_json(f"{key}.json")
    data["header"]["version"] = 0
    temp_storage.write_json(f"{key}.json", data)
    assert temp_storage.load_entry("motivic", 2, BOUNDS, "abc") is None


def test_corrupt_entry_is_a_miss(temp_storage):
    key = cache_key("motivic", 2, BOUNDS, "abc")
    with open(os.path.join(temp_storage.cache_dir, f"{key}.json"), "w") as f:
        f.write("{not json")
    assert temp_storage.load_entry("motivic", 2, BOUNDS, "abc") is None


def test_cache_keys_differ():
    base = cache_key("motivic", 2, BOUNDS, "abc")
    assert base != cache_key("motivic", 4, BOUNDS, "abc")
    assert base != cache_key("motivic", 2, dict(BOUNDS, s_max=4), "abc")
    assert base != cache_key("motivic", 2, BOUNDS, "abd")
    assert base == cache_key("motivic", 2, dict(reversed(list(BOUNDS.items()))), "abc")


def test_dataset_hash_tracks_content():
    with tempfile.TemporaryDirectory() as temp_dir:
        root = os.path.join(temp_dir, "data")
        shutil.copytree(DEFAULT_DATASET_DIR, root)
        before = dataset_hash(root)
        assert dataset_hash(root) == before
        with open(os.path.join(root, "generators", "e2.txt"), "a") as f:
            f.write("# trailing comment\n")
        assert dataset_hash(root) != before


def test_sequence_round_trip(temp_storage, dataset):
    seq = small_sequence(dataset)
    seq.run_all()
    keys = save_sequence(temp_storage, seq, "abc")
    assert len(keys) == 2

    restored = small_sequence(dataset)
    assert load_sequence(temp_storage, restored, "abc")
    assert sorted(restored.pages) == [1, 2]
    for s in range(4):
        for f in range(3):
            for w in range(-2, 4):
                assert restored.f2_dimension(2, s, f, w) == seq.f2_dimension(2, s, f, w)


def test_sequence_miss(temp_storage, dataset):
    assert not load_sequence(temp_storage, small_sequence(dataset), "abc")
