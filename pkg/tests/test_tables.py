import os
import tempfile
from pathlib import Path

import pytest

from motivic_may.config import DEFAULT_DATASET_DIR
from motivic_may.errors import DatasetError, ParseError
from motivic_may.services.algebra import Degree
from motivic_may.services.tables import (
    HIDDEN_MULTIPLIERS, braced_parts, load_dataset, iter_records, parse_expr, parse_record_line, serialize,
)


@pytest.fixture(scope="module")
def dataset():
    return load_dataset(DEFAULT_DATASET_DIR)


@pytest.fixture
def data_dir():
    with tempfile.TemporaryDirectory() as tmpdir:
        os.makedirs(os.path.join(tmpdir, "generators"))
        os.makedirs(os.path.join(tmpdir, "differentials"))
        yield tmpdir


def write(root, relpath, text):
    with open(os.path.join(root, relpath), "w") as f:
        f.write(text)


def test_parse_and_serialize():
    ast = parse_expr("t h1^3 + h0^2 h2")
    assert serialize(ast) == "t h1^3 + h0^2 h2"
    assert len(ast.terms) == 2
    assert ast.terms[0].tau_exp == 1
    assert ast.names() == {"h0", "h1", "h2"}


def test_parse_merges_repeated_factors():
    assert serialize(parse_expr("h0 * h0 h1")) == "h0^2 h1"
    assert serialize(parse_expr("tau^2 h1")) == "t^2 h1"


def test_parse_zero_and_special_names():
    assert parse_expr("0").is_zero()
    assert serialize(parse_expr("h0(1) b40'")) == "h0(1) b40'"


def test_braced_names_are_normalized():
    ast = parse_expr("{h0   h1} h2")
    assert ast.terms[0].factors[0].name == "{h0 h1}"
    assert serialize(braced_parts("{h0 h1}")) == "h0 h1"
    assert braced_parts("h0") is None


@pytest.mark.parametrize("text", ["", "h0 +", "h0^0", "+ h1", "0 + h1"])
def test_malformed_expressions(text):
    with pytest.raises(ParseError):
        parse_expr(text)


def test_record_lines():
    assert parse_record_line("name: h0 | deg: (1,0,1,0)") == {"name": "h0", "deg": "(1,0,1,0)"}
    with pytest.raises(ValueError):
        parse_record_line("name: h0 | name: h1")
    with pytest.raises(ValueError):
        parse_record_line("name h0")


def test_iter_records_reports_line_numbers(data_dir):
    write(data_dir, "generators/e2.txt", "# comment\n\nname: h0 | deg: (1,0,1,0)\nbroken\n")
    records = iter_records(os.path.join(data_dir, "generators/e2.txt"))
    assert next(records) == (3, {"name": "h0", "deg": "(1,0,1,0)"})
    with pytest.raises(DatasetError) as info:
        next(records)
    assert info.value.line == 4


def test_minimal_dataset_loads(data_dir):
    write(data_dir, "generators/e2.txt", "name: h0 | deg: (1,0,1,0) | desc: h10 | page: 2\n")
    data = load_dataset(data_dir)
    assert serialize(data.symbols["h0"].desc) == "h10"
    assert data.rule(2).is_empty()
    assert data.chart.symbols == []


def test_dangling_reference_is_rejected(data_dir):
    write(data_dir, "generators/e2.txt", "name: h0 | deg: (1,0,1,0) | desc: h10 | page: 2\n")
    write(data_dir, "differentials/d2.txt", "source: h0 | value: h1\n")
    with pytest.raises(DatasetError) as info:
        load_dataset(data_dir)
    assert "h1" in str(info.value)


def test_description_degree_is_checked(data_dir):
    write(data_dir, "generators/e2.txt", "name: h0 | deg: (1,0,1,0) | desc: h11 | page: 2\n")
    with pytest.raises(DatasetError):
        load_dataset(data_dir)


def test_unknown_field_is_rejected(data_dir):
    write(data_dir, "generators/e2.txt", "name: h0 | deg: (1,0,1,0) | colour: red\n")
    with pytest.raises(DatasetError):
        load_dataset(data_dir)


def test_missing_generators_folder():
    with tempfile.TemporaryDirectory() as tmpdir:
        with pytest.raises(DatasetError):
            load_dataset(tmpdir)


def test_shipped_dataset(dataset):
    assert serialize(dataset.symbols["h1"].desc) == "h11"
    assert serialize(dataset.symbols["h2"].desc) == "h12"
    assert serialize(dataset.rule(2).assignments["b20"]) == "t h1^3 + h0^2 h2"
    first = dataset.relations[0]
    assert str(first) == "h0 h1 = 0"
    assert first.degree == Degree(2, 1, 2, 1)


def test_shipped_chart_and_hidden(dataset):
    chart = dataset.chart
    assert chart.classes_at(0, 0)
    assert {line.multiplier for line in chart.lines()} >= {"h0", "h1", "h2"}
    for ext in chart.hidden:
        assert ext.kind in HIDDEN_MULTIPLIERS
    tau = chart.hidden_of("tau")
    assert tau and tau[0].source_degree == (30, 11, 17)


def test_shipped_local_data(dataset):
    local = dataset.local
    assert serialize(local.rule.assignments["b20"]) == "t h1^3"
    assert "P" in local.symbols
    assert local.ext_names


def test_parenthesized_sums_distribute():
    assert serialize(parse_expr("P (A+A')")) == "P A + P A'"
    assert serialize(parse_expr("h3 (A + A') h0")) == serialize(parse_expr("h3 A h0 + h3 A' h0"))
    assert serialize(braced_parts("{P(A+A')}")) == "P A + P A'"
    with pytest.raises(ParseError):
        parse_expr("P (A + A'")


def _shipped_expressions():
    for path in sorted(Path(DEFAULT_DATASET_DIR).rglob("*.txt")):
        for number, rec in iter_records(path):
            where = f"{path.name}:{number}"
            for key in ("desc", "value", "source", "target"):
                if rec.get(key, "").strip():
                    yield where, rec[key]
            if rec.get("kind") == "label":
                yield where, rec["name"]
            if "relation" in rec:
                lhs, _, rhs = rec["relation"].partition("=")
                yield where, lhs
                if rhs:
                    yield where, rhs


def test_every_shipped_expression_parses_and_round_trips():
    seen = 0
    for where, text in _shipped_expressions():
        ast = parse_expr(text)
        assert parse_expr(serialize(ast)) == ast, where
        seen += 1
    assert seen > 800


def test_shipped_rows_have_consistent_degrees(dataset):
    symbols = dataset.symbols
    assert symbols["{P e0}"].degree == symbols["P"].degree + symbols["e0"].degree == Degree(16, 25, 8, 14)
    lm = next(h for h in dataset.chart.hidden_of("h0") if serialize(h.source) == "l m")
    assert lm.target_degree == (67, 15, 38)
    assert lm.source_degree == (67, 14, 38)
