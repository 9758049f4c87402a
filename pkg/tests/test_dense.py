import numpy as np
import pytest

from motivic_may.services.dense import gf2_nullspace, gf2_rank, gf2_rref


def test_rank_over_gf2():
    assert gf2_rank([[1, 1], [1, 1]]) == 1
    assert gf2_rank([[1, 0], [0, 1]]) == 2
    assert gf2_rank(np.zeros((0, 3), dtype=np.uint8)) == 0
    # 1 + 1 = 0, so the third row is dependent
    assert gf2_rank([[1, 1, 0], [0, 1, 1], [1, 0, 1]]) == 2


def test_rref_rejects_vectors():
    with pytest.raises(ValueError):
        gf2_rref([1, 0, 1])


def test_nullspace_of_single_row():
    basis = gf2_nullspace([[1, 1]])
    assert basis.tolist() == [[1, 1]]


def test_nullspace_without_rows():
    assert gf2_nullspace(np.zeros((0, 2), dtype=np.uint8)).tolist() == [[1, 0], [0, 1]]


def test_rank_nullity_on_random_matrices():
    rng = np.random.default_rng(11)
    for _ in range(25):
        m, n = rng.integers(1, 8, size=2)
        A = rng.integers(0, 2, size=(m, n), dtype=np.uint8)
        N = gf2_nullspace(A)
        assert gf2_rank(A) + len(N) == n
        if len(N):
            assert not ((A.astype(int) @ N.T.astype(int)) % 2).any()
