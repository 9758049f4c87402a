import random

import numpy as np
import pytest

from motivic_may.services.coeff import (
    EchelonBasis, HVec, ModuleShape, Summand, TauMatrix, TauPoly, f2_dimension, kernel_and_image,
    smith_decompose,
)
from motivic_may.services.dense import gf2_rank


def tp(*exps):
    return TauPoly(frozenset(exps))


def test_tau_poly_arithmetic():
    """Addition cancels in characteristic 2 and multiplication distributes."""
    a = tp(0, 1)
    assert (a + a).is_zero()
    assert a * a == tp(0, 2)
    assert tp(2).shift(3) == tp(5)
    assert TauPoly.power(2).is_monomial()
    assert TauPoly.one().is_unit()
    assert not tp(1).is_unit()


def test_tau_poly_divmod():
    q, r = tp(3, 0).divmod(tp(1, 0))
    assert q * tp(1, 0) + r == tp(3, 0)
    assert r.degree is None or r.degree < 1
    with pytest.raises(ZeroDivisionError):
        tp(1).divmod(TauPoly.zero())


def test_negative_exponent_needs_localization():
    with pytest.raises(ValueError):
        TauPoly(frozenset({-1}))
    assert TauPoly.power(-1).localized


def test_hvec_plus_requires_higher_weight():
    low = HVec(0, frozenset({0}))
    high = HVec(1, frozenset({0, 1}))
    assert low.plus(high).support == frozenset({1})
    with pytest.raises(ValueError):
        high.plus(low)
    assert high.times_tau(2).weight == -1


def test_echelon_insert_and_rank():
    """rank_at counts stored vectors of weight at least w."""
    basis = EchelonBasis([2, 1, 0])
    assert basis.insert(HVec(0, frozenset({0, 2})))
    assert basis.insert(HVec(1, frozenset({1})))
    assert not basis.insert(HVec(0, frozenset({1})))
    assert basis.rank_at(0) == 2
    assert basis.rank_at(1) == 1
    assert basis.rank_at(2) == 0
    assert basis.contains(HVec(-3, frozenset({0, 2})))
    assert not basis.contains(HVec(0, frozenset({0})))


def test_echelon_coordinates():
    basis = EchelonBasis([1, 1])
    basis.insert(HVec(1, frozenset({0})))
    basis.insert(HVec(1, frozenset({1})))
    assert basis.coordinates(HVec(1, frozenset({0, 1}))) == frozenset({0, 1})
    assert basis.coordinates(HVec(2, frozenset({0}))) is None


def test_kernel_and_image():
    """Two equal columns give one kernel element made of both."""
    image, kernel = kernel_and_image([HVec(1, frozenset({0})), HVec(1, frozenset({0}))], [1])
    assert len(image) == 1
    assert kernel == [(1, frozenset({0, 1}))]


def test_kernel_uses_tau_multiples():
    # column 0 has weight 2, column 1 weight 1; tau * column 0 equals column 1
    _, kernel = kernel_and_image([HVec(2, frozenset({0})), HVec(1, frozenset({0}))], [2])
    assert kernel == [(1, frozenset({0, 1}))]


def test_smith_single_torsion():
    shape = smith_decompose(TauMatrix(1, 1, {(0, 0): TauPoly.power(2)})).shape
    assert shape == ModuleShape(0, (2,))


def test_smith_free_and_torsion_summands():
    m = TauMatrix(2, 1, {(0, 0): TauPoly.power(1)}, row_weights=(3, 5), col_weights=(2,))
    result = smith_decompose(m)
    assert result.shape == ModuleShape(1, (1,))
    free = [s for s in result.summands if s.is_free]
    assert free[0].weight == 5


def test_smith_euclidean_path():
    """A non-monomial entry has a non-tau factor recorded separately."""
    result = smith_decompose(TauMatrix.from_rows([[tp(0, 1)]]))
    assert result.shape.free_rank == 0
    assert result.shape.torsion == ()
    assert result.shape.other == ("t + 1",)


def _random_graded(rng, n_rows, n_cols):
    rows = [rng.randint(0, 4) for _ in range(n_rows)]
    cols = [rng.randint(-2, 2) for _ in range(n_cols)]
    entries = {}
    for i in range(n_rows):
        for j in range(n_cols):
            if rows[i] >= cols[j] and rng.random() < 0.5:
                entries[(i, j)] = TauPoly.power(rows[i] - cols[j])
    return TauMatrix(n_rows, n_cols, entries, tuple(rows), tuple(cols))


def test_smith_shape_is_permutation_invariant():
    rng = random.Random(7)
    for _ in range(40):
        n_rows, n_cols = rng.randint(1, 5), rng.randint(1, 5)
        m = _random_graded(rng, n_rows, n_cols)
        row_perm = list(range(n_rows))
        col_perm = list(range(n_cols))
        rng.shuffle(row_perm)
        rng.shuffle(col_perm)
        assert smith_decompose(m).shape == smith_decompose(m.permuted(row_perm, col_perm)).shape


def test_f2_dimension_of_summands():
    summands = [Summand(4, None), Summand(3, 2)]
    assert f2_dimension(summands, 4) == 1
    assert f2_dimension(summands, 3) == 2
    assert f2_dimension(summands, 2) == 2
    assert f2_dimension(summands, 1) == 1


def _random_poly(rng):
    return TauPoly(frozenset(e for e in range(6) if rng.random() < 0.4))


def test_tau_poly_ring_laws():
    rng = random.Random(3)
    for _ in range(200):
        a, b, c = _random_poly(rng), _random_poly(rng), _random_poly(rng)
        assert a + b == b + a
        assert a * b == b * a
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a * TauPoly.one() == a
        assert (a * TauPoly.zero()).is_zero()
        assert a.shift(2) == a * TauPoly.power(2)
        if not b.is_zero():
            q, r = a.divmod(b)
            assert q * b + r == a
            assert r.is_zero() or r.degree < b.degree


def _cokernel_dimension(m, weight):
    """F2-dimension of the cokernel in ``weight``, from the plain GF(2) matrix of that weight."""
    rows = [i for i in range(m.n_rows) if m.row_weights[i] >= weight]
    cols = [j for j in range(m.n_cols) if m.col_weights[j] >= weight]
    if not rows:
        return 0
    dense = np.zeros((len(rows), max(len(cols), 1)), dtype=np.uint8)
    for a, i in enumerate(rows):
        for b, j in enumerate(cols):
            if not m.entry(i, j).is_zero():
                dense[a, b] = 1
    return len(rows) - gf2_rank(dense)


def test_smith_summands_match_dimensions_weight_by_weight():
    rng = random.Random(19)
    for _ in range(60):
        m = _random_graded(rng, rng.randint(1, 6), rng.randint(1, 6))
        summands = smith_decompose(m).summands
        for w in range(-4, 7):
            assert f2_dimension(summands, w) == _cokernel_dimension(m, w), (m, w)
