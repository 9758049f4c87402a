import pytest

from motivic_may.errors import MayError
from motivic_may.services.algebra import AlgElem, Degree, Monomial, degree_of
from motivic_may.services.e1 import (
    PROFILES, build_e1, d1_matrix, d1_value, get_profile, h_degree,
)


@pytest.fixture(scope="module")
def motivic_e1():
    return build_e1(get_profile("motivic"), 12, 4)


def test_h_degrees():
    assert h_degree(1, 0) == Degree(1, 0, 1, 0)
    assert h_degree(1, 1) == Degree(1, 1, 1, 1)
    assert h_degree(1, 2) == Degree(1, 3, 1, 2)
    assert h_degree(2, 0) == Degree(2, 2, 1, 1)
    assert h_degree(2, 1) == Degree(2, 5, 1, 3)
    assert h_degree(3, 0) == Degree(3, 6, 1, 3)


def test_unknown_profile():
    with pytest.raises(MayError):
        get_profile("bogus")


def test_bad_bounds():
    with pytest.raises(MayError):
        build_e1(PROFILES["motivic"], 4, 0)


def test_d1_of_h20(motivic_e1):
    reg = motivic_e1.registry
    assert d1_value(motivic_e1, "h20").format(reg) == "h10 h11"
    assert d1_value(motivic_e1, "h10").is_zero()


def test_d1_squares_to_zero(motivic_e1):
    """d1(d1(x)) vanishes on every generator."""
    for index in range(len(motivic_e1.registry)):
        total = AlgElem.zero()
        for term in motivic_e1.d1[index].terms:
            total = total + motivic_e1.differential(term)
        assert total.is_zero(), motivic_e1.registry.generators[index].name


def test_d1_shifts_degree(motivic_e1):
    reg = motivic_e1.registry
    shift = PROFILES["motivic"].d_shift(1)
    for index, value in motivic_e1.d1.items():
        for term in value.terms:
            assert degree_of(reg, term) == reg.degree(index) + shift


def test_even_exponents_are_cycles(motivic_e1):
    square = Monomial.of({motivic_e1.registry.index("h20"): 2})
    assert motivic_e1.differential(square).is_zero()


def test_d1_matrix_is_tau_free_on_h20(motivic_e1):
    m = d1_matrix(motivic_e1, 2, 1)
    assert m.n_cols == 1
    assert sum(1 for e in m.entries.values() if not e.is_zero()) == 1


def test_classical_profile_has_zero_weight():
    e1 = build_e1(get_profile("classical"), 8, 2)
    assert all(g.degree.w == 0 for g in e1.registry)
    assert not get_profile("classical").uses_tau


def test_local_profile_quotients_h1():
    local = get_profile("a3-h1local")
    assert local.normalize(Degree(1, 7, 1, 4)) == Degree(0, 6, 0, 3)
    e1 = build_e1(local, 70, 1)
    assert "b40'" in e1.registry
    reg = e1.registry
    killed = Monomial.of({reg.index("h3"): 1, reg.index("h0(1)"): 1})
    assert not e1.is_basis(killed)


def test_a3_profile_excludes_large_generators():
    e1 = build_e1(get_profile("a3"), 20, 4)
    names = set(e1.registry.names())
    assert "h40" in names
    assert "h50" not in names
    assert "h41" not in names
