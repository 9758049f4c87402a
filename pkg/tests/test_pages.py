import pytest

from motivic_may.config import DEFAULT_DATASET_DIR
from motivic_may.errors import MayError
from motivic_may.services.e1 import build_e1, get_profile
from motivic_may.services.pages import E_INFINITY, build_sequence, next_page, page_key
from motivic_may.services.tables import load_dataset, serialize


@pytest.fixture(scope="module")
def dataset():
    return load_dataset(DEFAULT_DATASET_DIR)


def make_sequence(dataset, profile="motivic", s_max=6, f_max=3, through=2):
    prof = get_profile(profile)
    seq = build_sequence(prof, build_e1(prof, s_max, f_max), dataset, s_max, f_max, through, workers=1)
    seq.run_all()
    return seq


@pytest.fixture(scope="module")
def e2(dataset):
    return make_sequence(dataset)


def test_page_keys():
    assert page_key(1) == 1
    assert page_key(3) == 4
    assert page_key(4) == 4
    assert page_key(99) == E_INFINITY
    assert next_page(1) == 2
    assert next_page(2) == 4
    with pytest.raises(MayError):
        page_key(0)


def test_e1_is_free(e2):
    """E1(0, f) is spanned by h10^f in weight 0."""
    for f in range(4):
        assert e2.f2_dimension(1, 0, f, 0) == 1


def test_e2_low_cells(e2):
    assert e2.f2_dimension(2, 0, 2, 0) == 1
    assert e2.f2_dimension(2, 0, 2, -3) == 1
    assert e2.f2_dimension(2, 1, 1, 1) == 1
    assert e2.f2_dimension(2, 1, 1, 2) == 0
    assert e2.f2_dimension(2, 3, 1, 2) == 1
    assert e2.f2_dimension(2, 4, 2, 2) == 1


def test_h0_h1_dies_on_e2(e2):
    product = e2.element_of("h0 h1")
    assert e2.page_of_death(product) == 2
    assert e2.class_is_zero(2, product)
    assert not e2.class_is_zero(2, e2.element_of("h1^2"))


def test_relation_holds_on_e2(e2):
    assert e2.class_is_zero(2, e2.element_of("h1 h2"))


def test_summands_of_free_cell(e2):
    summands = e2.summands(2, 1, 1)
    assert len(summands) == 1
    summand, generator = summands[0]
    assert summand.is_free and summand.weight == 1
    assert e2.format(generator, (1, 1)) == "h11"


def test_labels_name_page_monomials(e2):
    assert e2.labels(2, 2, 2) == {2: ["h1^2"]}


def test_dense_recompute_agrees(e2):
    for s in range(e2.s_max + 1):
        for f in range(e2.f_max + 1):
            for r in (1, 2):
                for w, dim in e2.dense_recompute_cell(r, s, f).items():
                    assert dim == e2.f2_dimension(r, s, f, w), (r, s, f, w)


def test_queries_outside_range(e2):
    with pytest.raises(MayError):
        e2.cell(2, 40, 1)
    with pytest.raises(MayError):
        e2.page(4)


def test_classical_e2_ignores_weight(dataset):
    seq = make_sequence(dataset, "classical", s_max=4, f_max=3)
    assert seq.f2_dimension(2, 1, 1, 0) == 1
    assert seq.f2_dimension(2, 1, 1, 1) == 0
    assert seq.class_is_zero(2, seq.element_of("h0 h1"))


@pytest.mark.slow
def test_tau_h1_four_dies_on_e4(dataset):
    seq = make_sequence(dataset, s_max=8, f_max=5, through=4)
    assert seq.page_of_death(seq.element_of("t h1^4")) == 4
    assert not seq.class_is_zero(4, seq.element_of("h1^4"))


@pytest.mark.slow
def test_boundaries_are_cycles_on_every_page(dataset):
    seq = make_sequence(dataset, s_max=12, f_max=6, through=E_INFINITY)
    assert seq.diagnostics == []
    assert seq.page_of_death(seq.element_of("h0^4 h3")) == 6
    for key, page in seq.pages.items():
        for cell in sorted(seq.core):
            pc = page[cell]
            for vec in pc.b.basis():
                assert pc.z.contains(vec), (key, cell)


@pytest.mark.slow
@pytest.mark.parametrize("target, s_max, f_max, page", [
    ("h1^4 h4", 20, 5, 6),
    ("h1^8 h5", 40, 9, 10),
    ("h0^16 h5", 32, 17, 18),
])
def test_differentials_kill_their_targets(dataset, target, s_max, f_max, page):
    seq = make_sequence(dataset, s_max=s_max, f_max=f_max, through=page)
    assert seq.page_of_death(seq.element_of(target)) == page


def test_last_differential_is_on_p8(dataset):
    # (64, 32) -> (63, 33) is far outside any range a test can compute
    rule = dataset.rule(32)
    assert {name: serialize(value) for name, value in rule.assignments.items()} == {"{P^8}": "h0^32 h6"}
    assert page_key(32 + 1) == E_INFINITY
    assert dataset.rule(34).is_empty()
