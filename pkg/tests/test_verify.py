from dataclasses import replace

import pytest

from motivic_may.config import DEFAULT_DATASET_DIR
from motivic_may.services.e1 import build_e1, get_profile
from motivic_may.services.pages import E_INFINITY, build_sequence
from motivic_may.services.resolution import compute_ext
from motivic_may.services.tables import (
    ChartData, ChartSymbol, DrRule, HiddenExtension, Relation, load_dataset, parse_expr, parse_relation,
)
from motivic_may.services.verify import (
    CheckReport, ExtSummand, _chart_cell, apply_hidden_tau, chart_weights, chow_stem, chow_zero_compare,
    compare_chart, error_report, hidden_substitution, localized_d2, oracle_compare, product_symbols,
    verify_e2_presentation, verify_h1_local,
)


@pytest.fixture(scope="module")
def dataset():
    return load_dataset(DEFAULT_DATASET_DIR)


def small_sequence(dataset, through=2, run=True):
    prof = get_profile("motivic")
    seq = build_sequence(prof, build_e1(prof, 6, 3), dataset, 6, 3, through)
    if run:
        seq.run_all()
    return seq


def tau_extension(s, f, w):
    return HiddenExtension("tau", s, f, w, parse_expr("x"), parse_expr("y"))


def test_check_report_keeps_first_failure():
    report = CheckReport("demo")
    report.record("a", True)
    report.record("a", False, cell=[1, 2])
    report.record("a", True)
    report.skip("b")
    data = report.to_dict()
    assert data["report"]["summary"] == "fail"
    assert data["report"]["checks"] == {"a": "fail", "b": "skipped"}
    assert data["report"]["counts"] == {"a": 3}
    assert data["failures"] == [{"check": "a", "cell": [1, 2]}]


def test_error_report_layout():
    assert error_report("PAGE_MISSING", ["need E34"]) == {"error": {"code": "PAGE_MISSING", "details": ["need E34"]}}


def test_summand_dimensions():
    assert ExtSummand(4, None).dimension(-10) == 1
    assert ExtSummand(4, None).dimension(5) == 0
    torsion = ExtSummand(4, 2)
    assert [torsion.dimension(w) for w in (2, 3, 4, 5)] == [0, 1, 1, 0]


def test_hidden_tau_merges_torsion():
    einf = {(30, 11): [ExtSummand(16, 1, ("a",)), ExtSummand(17, 1, ("b",))]}
    ext, missing = apply_hidden_tau(einf, [tau_extension(30, 11, 16)])
    assert missing == []
    assert ext[(30, 11)] == [ExtSummand(17, 2, ("b", "a"))]


def test_hidden_tau_onto_free_summand():
    einf = {(1, 1): [ExtSummand(1, None), ExtSummand(2, 1)]}
    ext, _ = apply_hidden_tau(einf, [tau_extension(1, 1, 1)])
    assert ext[(1, 1)] == [ExtSummand(2, None)]


def test_hidden_tau_reports_missing_endpoints():
    ext, missing = apply_hidden_tau({}, [tau_extension(5, 5, 5)])
    assert ext == {}
    assert missing[0]["missing"] == "source"
    assert missing[0]["cell"] == [5, 5, 5]


def test_chart_cell_expands_towers():
    chart = ChartData([
        ChartSymbol("dot", 0, 0, "tauzero"),
        ChartSymbol("square", 3, 2, "tauone"),
        ChartSymbol("tower", 0, 3, "hzerotower", (0, 3.7)),
        ChartSymbol("tower", 4, 4, "honetower", (4.7, 4.7)),
    ])
    assert _chart_cell(chart, (0, 0), 10) == ([(None, None)], 1)
    assert _chart_cell(chart, (3, 2), 10) == ([(None, 1)], 2)
    assert _chart_cell(chart, (0, 5), 10) == ([(None, None)], 1)
    assert _chart_cell(chart, (6, 6), 10) == ([(None, 1)], 1)
    assert _chart_cell(chart, (0, 12), 8) == ([], 0)
    weights = {(0.0, 3.0): 0, (4.0, 4.0): 4}
    assert _chart_cell(chart, (0, 5), 10, weights) == ([(0, None)], 1)
    assert _chart_cell(chart, (6, 6), 10, weights) == ([(6, 1)], 1)


def test_chart_panels_and_tower_shadows():
    assert ChartData.covers(38, 18)
    assert not ChartData.covers(39, 19)
    assert ChartData.covers(40, 19)
    assert not ChartData.covers(40, 37)
    assert ChartData.tower_shadowed(40, 24)
    assert ChartData.tower_shadowed(40, 20)
    assert not ChartData.tower_shadowed(40, 19)
    assert not ChartData.tower_shadowed(41, 20)
    assert not ChartData.tower_shadowed(20, 10)


def test_chart_labels_resolve_to_drawn_classes(dataset):
    chart = dataset.chart
    classes = {c.position: c for c in chart.symbols if c.kind in ("dot", "square")}
    labels = chart.labels()
    assert labels
    for pos, text in labels.items():
        degree = dataset.label_degree(text)
        assert degree is not None, text
        assert (degree.s, degree.f) == (classes[pos].s, classes[pos].f), text


def test_label_degree_prefers_braced_generators(dataset):
    assert dataset.label_degree("t g^2").w == 23
    assert dataset.label_degree("h2 g^2").w == 26
    assert dataset.label_degree("nothing here") is None


def test_chart_weights_follow_tau_lines(dataset):
    weights = chart_weights(dataset)
    assert weights[(40.0, 8.0)] == 23
    # h2 times tau g^2 is tau times the square at (43, 9), which sits one weight up
    assert weights[(43.0, 9.0)] == 26


def test_chart_weights_propagate_and_drop_conflicts(dataset):
    symbols = [
        ChartSymbol("dot", 1, 1, "tauzero"),
        ChartSymbol("dot", 2, 2, "tauzero"),
        ChartSymbol("dot", 5, 3, "tauzero"),
        ChartSymbol("dot", 5, 4, "tauzero"),
        ChartSymbol("line", 1, 1, "tauzero", (2, 2)),
        ChartSymbol("line", 2, 2, "htwotau", (5, 3)),
        ChartSymbol("line", 5, 3, "tauzero", (5, 4)),
        ChartSymbol("line", 1, 1, "tauzero", (5, 4), dotted=True),
        ChartSymbol("label", 1, 1, "", point=(1, 1), name="h1"),
    ]
    data = replace(dataset, chart=ChartData(symbols))
    assert chart_weights(data) == {(1.0, 1.0): 1, (2.0, 2.0): 2, (5.0, 3.0): 5, (5.0, 4.0): 5}
    clash = ChartData(symbols + [ChartSymbol("line", 1, 1, "honetau", (2, 2))])
    weights = chart_weights(replace(dataset, chart=clash))
    assert (2.0, 2.0) not in weights
    assert weights[(1.0, 1.0)] == 1



def test_compare_chart_checks_weights(dataset):
    seq = small_sequence(dataset, E_INFINITY)
    chart = ChartData([
        ChartSymbol("dot", 0, 0, "tauzero"),
        ChartSymbol("dot", 1, 1, "tauzero"),
        ChartSymbol("dot", 2, 2, "tauzero"),
        ChartSymbol("dot", 3, 1, "tauzero"),
        ChartSymbol("dot", 3, 2, "tauzero"),
        ChartSymbol("dot", 6, 2, "tauzero"),
        ChartSymbol("tower", 0, 0, "hzerotower", (0, 0.7)),
    ])
    weights = {(0.0, 0.0): 0, (1.0, 1.0): 1, (2.0, 2.0): 2, (3.0, 1.0): 2, (3.0, 2.0): 2,
               (6.0, 2.0): 4}
    report = compare_chart(seq, chart, "dims", weights)
    assert report["report"]["checks"]["dimension_by_weight"] == "pass", report["failures"][:3]
    weights[(6.0, 2.0)] = 3
    report = compare_chart(seq, chart, "shapes", weights)
    assert report["report"]["checks"]["weighted_shapes"] == "fail"
    assert [f["cell"] for f in report["failures"] if f["check"] == "weighted_shapes"] == [[6, 2]]


def test_compare_chart_rejects_unknown_mode(dataset):
    report = compare_chart(small_sequence(dataset, run=False), dataset.chart, "colors")
    assert report["error"]["code"] == "BAD_MODE"


def test_missing_pages_give_error_report(dataset):
    report = verify_e2_presentation(small_sequence(dataset, run=False), dataset)
    assert report["error"]["code"] == "PAGE_MISSING"


def test_e2_presentation_in_low_stems(dataset):
    report = verify_e2_presentation(small_sequence(dataset), dataset)
    assert report["report"]["summary"] == "pass", report["failures"][:3]
    assert report["report"]["checks"]["generators"] == "pass"
    assert report["report"]["counts"]["d2_values"] >= 1


def test_product_symbols_from_braced_names(dataset):
    assert (6, "P", "i", "{P i}") in product_symbols(dataset)
    assert all(len(item) == 4 for item in product_symbols(dataset))


def test_check_report_incomplete_is_not_a_pass():
    report = CheckReport("demo")
    report.record("a", True)
    report.incomplete("a", cell=[9, 9])
    data = report.to_dict()
    assert data["report"]["summary"] == "incomplete"
    assert data["report"]["checks"] == {"a": "incomplete"}
    assert data["report"]["counts"] == {"a": 1, "a_incomplete": 1}
    report.record("a", False)
    assert report.to_dict()["report"]["summary"] == "fail"


@pytest.fixture(scope="module")
def chow_pair(dataset):
    def run(profile, s_max, f_max):
        prof = get_profile(profile)
        seq = build_sequence(prof, build_e1(prof, s_max, f_max), dataset, s_max, f_max, E_INFINITY)
        seq.run_all()
        return seq
    return run("motivic", 6, 3), run("classical", 4, 3)


def test_chow_stem_covers_whole_columns(chow_pair):
    motivic, classical = chow_pair
    assert chow_stem(motivic, classical) == 1


def test_chow_zero_in_low_stems(chow_pair):
    report = chow_zero_compare(*chow_pair)
    assert report["report"]["summary"] == "pass", report["failures"][:3]
    assert report["report"]["counts"]["chow_zero"] == 8
    assert report["report"]["counts"]["max_classical_stem"] == 1


def test_chow_cells_outside_motivic_range_are_incomplete(chow_pair):
    report = chow_zero_compare(*chow_pair, max_stem=3)
    assert report["report"]["summary"] == "incomplete"
    assert report["report"]["checks"]["chow_zero"] == "incomplete"
    outside = [f["classical"] for f in report["failures"] if f.get("incomplete")]
    assert [2, 3] in outside and [3, 1] in outside
    assert [1, 3] not in outside and [3, 0] not in outside


@pytest.fixture(scope="module")
def local_sequence(dataset):
    prof = get_profile("a3-h1local")
    seq = build_sequence(prof, build_e1(prof, 30, 1), dataset, 30, 1, E_INFINITY)
    seq.run_all()
    return seq


def test_localized_d2_drops_h1_annihilated_terms(dataset):
    assert str(localized_d2(dataset, "b20")) == "t h1^3"
    assert str(localized_d2(dataset, "b21")) == "h1^2 h3"


def test_hidden_relation_rewrites_b40_prime(local_sequence, dataset):
    registry, values = hidden_substitution(local_sequence, dataset.local)
    assert values["b40'"].format(registry) in ("e0^2 + c0^2 g", "c0^2 g + e0^2")
    assert values["g"].format(registry) == "g"


def test_h1_local_suite_passes(local_sequence, dataset):
    report = verify_h1_local(local_sequence, dataset)
    assert report["report"]["summary"] == "pass", report["failures"][:3]
    checks = report["report"]["checks"]
    for name in ("d2_values", "d2_matches_global", "einf_generators", "einf_presentation", "basis_after_hidden"):
        assert checks[name] == "pass"
    assert report["report"]["counts"]["d2_matches_global"] == 2


def test_h1_local_suite_catches_wrong_hidden_relation(local_sequence, dataset):
    wrong = parse_relation("c0^2 g = h1^4 b40'")
    local = replace(dataset.local, hidden_relations=[Relation(wrong[0], wrong[1])])
    report = verify_h1_local(local_sequence, replace(dataset, local=local))
    assert report["report"]["checks"]["basis_after_hidden"] == "fail"
    bad = [f for f in report["failures"] if f["check"] == "basis_after_hidden"]
    assert [26, 12] in [f["degree"] for f in bad]


def test_h1_local_suite_catches_wrong_d2(local_sequence, dataset):
    rule = DrRule(2, {"b20": parse_expr("h1^2 h3"), "b21": parse_expr("h1^2 h3")})
    report = verify_h1_local(local_sequence, replace(dataset, local=replace(dataset.local, rule=rule)))
    assert report["report"]["checks"]["d2_matches_global"] == "fail"
    assert [f["name"] for f in report["failures"] if f["check"] == "d2_matches_global"] == ["b20"]


@pytest.fixture(scope="module")
def low_stems(dataset):
    prof = get_profile("motivic")
    seq = build_sequence(prof, build_e1(prof, 10, 5), dataset, 10, 5, E_INFINITY)
    seq.run_all()
    return seq


@pytest.mark.parametrize("mode", ["dims", "shapes"])
def test_shipped_chart_agrees_in_low_stems(low_stems, dataset, mode):
    report = compare_chart(low_stems, dataset.chart, mode, chart_weights(dataset))
    assert report["report"]["summary"] == "pass", report["failures"][:3]
    counts = report["report"]["counts"]
    assert "unweighted_cells" not in counts
    assert counts["dimension_by_weight" if mode == "dims" else "weighted_shapes"] >= 20


@pytest.fixture(scope="module")
def default_range(dataset):
    prof = get_profile("motivic")
    seq = build_sequence(prof, build_e1(prof, 40, 24), dataset, 40, 24, E_INFINITY)
    seq.run_all()
    return seq


@pytest.mark.slow
@pytest.mark.parametrize("mode", ["dims", "shapes"])
def test_shipped_chart_agrees_at_default_bounds(default_range, dataset, mode):
    report = compare_chart(default_range, dataset.chart, mode, chart_weights(dataset))
    assert report["report"]["summary"] == "pass", report["failures"][:5]
    counts = report["report"]["counts"]
    # stems below 40 above filtration 18 are on no panel
    assert counts["not_drawn"] == 40 * 6
    assert counts["partly_drawn"] >= 1


@pytest.mark.slow
def test_resolution_oracle_agrees_through_stem_20(dataset):
    prof = get_profile("motivic")
    seq = build_sequence(prof, build_e1(prof, 20, 12), dataset, 20, 12, E_INFINITY)
    seq.run_all()
    _, dims = compute_ext(20, 12, 34)
    report = oracle_compare(seq, dims, 20, 12)
    assert report["report"]["summary"] == "pass", report["failures"][:5]
    assert report["report"]["counts"]["ext_dimensions"] > 100
