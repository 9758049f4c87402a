import itertools

import pytest

from motivic_may.errors import ConsistencyError
from motivic_may.services.coeff import Summand
from motivic_may.services.resolution import (
    Resolution, SteenrodElem, adem_reduce, adem_terms, admissibles, compute_ext, is_admissible, sq, summand_rows,
)


@pytest.fixture(scope="module")
def resolution():
    res = Resolution(8)
    res.resolve_through(5)
    return res


def test_adem_relations():
    assert sq(1, 1).is_zero()
    assert str(sq(2, 2)) == "t Sq3 Sq1"
    assert str(sq(2, 1)) == "Sq2 Sq1"
    assert str(sq(1, 2)) == "Sq3"
    assert sq(2, 3).terms == {(5,), (4, 1)}
    assert sq(3, 2).is_zero()


def test_adem_pair_bounds():
    with pytest.raises(ValueError):
        adem_terms(4, 2)
    with pytest.raises(ValueError):
        adem_reduce((1, -1))


def test_elements_check_bidegree():
    with pytest.raises(ValueError):
        SteenrodElem(2, 1, frozenset({(1, 1)}))
    with pytest.raises(ConsistencyError):
        SteenrodElem(3, 0, frozenset({(2, 1)}))
    with pytest.raises(ConsistencyError):
        sq(1) + sq(2)


def test_reduction_is_confluent():
    """Rewriting from the left or from the right reaches the same normal form."""
    for length in (2, 3):
        for word in itertools.product(range(1, 9), repeat=length):
            if sum(word) > 24:
                continue
            left = adem_reduce(word)
            right = adem_reduce(word, from_right=True)
            assert left == right, word
            assert all(is_admissible(m) for m in left.terms)


def test_product_is_associative():
    for a, b, c in itertools.product(range(1, 7), repeat=3):
        x, y, z = sq(a), sq(b), sq(c)
        assert (x * y) * z == x * (y * z), (a, b, c)


def test_tau_power_is_carried():
    assert adem_reduce((2, 2), tau=2).tau_exponent((3, 1)) == 3
    assert str(adem_reduce((2,), tau=1)) == "t Sq2"


def test_admissible_basis():
    assert admissibles(0) == ((),)
    assert admissibles(4) == ((4,), (3, 1))
    assert all(is_admissible(m) for t in range(12) for m in admissibles(t) if m)


def test_resolution_is_a_complex(resolution):
    for f in range(1, 5):
        for t in range(9):
            assert resolution.check_exact(f, t), (f, t)


def test_hopf_classes(resolution):
    dims = resolution.ext_dimensions(8, 4)
    assert dims[(0, 0, 0)] == 1
    assert dims[(0, 1, 0)] == 1
    assert dims[(1, 1, 1)] == 1
    assert dims[(3, 1, 2)] == 1
    assert dims[(7, 1, 4)] == 1
    assert (1, 1, 2) not in dims


def test_h1_four_is_tau_torsion(resolution):
    summands = resolution.ext_summands(4, 4)
    assert [(p.weight, p.order) for p in summands[(4, 4)]] == [(4, 1)]
    assert [(p.weight, p.order) for p in summands[(3, 3)]] == [(3, None)]
    assert [(p.weight, p.order) for p in summands[(0, 3)]] == [(0, None)]


def test_compute_ext_warns_on_truncation(caplog):
    _, dims = compute_ext(3, 2, 2)
    assert (0, 2, 0) in dims
    assert "uncomputed" in caplog.text


def test_summand_rows_group_by_weight():
    rows = summand_rows({(4, 4): [Summand(4, 1), Summand(4, None), Summand(3, 2)], (1, 1): [Summand(1, None)]})
    assert [(r["s"], r["f"], r["w"]) for r in rows] == [(1, 1, 1), (4, 4, 3), (4, 4, 4)]
    assert rows[2]["free_rank"] == 1
    assert rows[2]["torsion_orders"] == [1]
    assert rows[1]["torsion_orders"] == [2]
