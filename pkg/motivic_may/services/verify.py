"""Acceptance checks over computed pages.

Every suite follows the same validate/run pattern: malformed input yields
``{"error": {"code": ..., "details": [...]}}``, otherwise the result carries a
``checks`` mapping of check name to ``pass``/``fail`` and a list of
per-cell failures.  Checks never raise for a failing cell.
"""

import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from motivic_may.errors import MayError
from motivic_may.services.algebra import AlgElem, GenRegistry, Generator, Monomial, MonomialEnumerator, degree_of
from motivic_may.services.dense import gf2_rank
from motivic_may.services.pages import E_INFINITY, OutsideProfile, SpectralSequence, page_key
from motivic_may.services.tables import (
    ChartData, Dataset, ExprAst, HiddenExtension, LocalData, Relation, braced_parts, evaluate, serialize,
)

logger = logging.getLogger(__name__)

E2_COMPLETENESS_STEM = 46
CHOW_STEM = 20


@dataclass
class CheckReport:
    """Outcome of one suite: named checks and the failures behind them."""

    suite: str
    checks: Dict[str, str] = field(default_factory=dict)
    failures: List[Dict[str, Any]] = field(default_factory=list)
    counts: Dict[str, int] = field(default_factory=dict)

    def record(self, check: str, ok: bool, **details) -> None:
        if check not in self.checks or self.checks[check] == "pass":
            self.checks[check] = "pass" if ok else "fail"
        self.counts[check] = self.counts.get(check, 0) + 1
        if not ok:
            self.failures.append({"check": check, **details})

    def count(self, key: str) -> None:
        self.counts[key] = self.counts.get(key, 0) + 1

    def skip(self, check: str) -> None:
        self.checks.setdefault(check, "skipped")

    def incomplete(self, check: str, **details) -> None:
        """``check`` could not cover every case it was asked about."""
        if self.checks.get(check) != "fail":
            self.checks[check] = "incomplete"
        key = f"{check}_incomplete"
        self.counts[key] = self.counts.get(key, 0) + 1
        self.failures.append({"check": check, "incomplete": True, **details})

    @property
    def passed(self) -> bool:
        return all(v in ("pass", "skipped") for v in self.checks.values())

    @property
    def summary(self) -> str:
        statuses = set(self.checks.values())
        if "fail" in statuses:
            return "fail"
        return "incomplete" if "incomplete" in statuses else "pass"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "report": {
                "summary": self.summary,
                "checks": dict(sorted(self.checks.items())),
                "counts": dict(sorted(self.counts.items())),
            },
            "failures": self.failures,
        }


def error_report(code: str, details: Iterable[str]) -> Dict[str, Any]:
    return {"error": {"code": code, "details": list(details)}}


def _needs(seq: SpectralSequence, page: int, suite: str) -> List[str]:
    if page not in seq.pages:
        return [f"{suite} needs E{page} of profile {seq.profile.name}; computed through E{seq.last_page}"]
    return []


def _cell_of(seq: SpectralSequence, elem) -> Optional[Tuple[Tuple[int, int], int]]:
    if elem.is_zero():
        return None
    return seq.locate(elem)


# ---------------------------------------------------------------------------
# E2 presentation
# ---------------------------------------------------------------------------

def verify_e2_presentation(seq: SpectralSequence, dataset: Dataset,
                           completeness_stem: int = E2_COMPLETENESS_STEM) -> Dict[str, Any]:
    """Generators are nonzero E2 classes, relations hold, E2 generators span, d2 values are cycles."""
    problems = _needs(seq, 2, "verify e2")
    if problems:
        return error_report("PAGE_MISSING", problems)
    report = CheckReport("e2")
    page = seq.pages[2]

    for sym in sorted((s for s in dataset.symbols.values() if 2 in s.pages), key=lambda s: s.name):
        degree = seq.normalized(sym)
        cell = (degree.s, degree.f)
        if cell not in seq.core:
            continue
        try:
            rep = seq.rep(sym.name)
        except OutsideProfile:
            continue
        vec = seq.vector(rep, cell, degree.w)
        ok = not vec.is_zero() and page[cell].z.contains(vec) and not page[cell].b.contains(vec)
        report.record("generators", ok, name=sym.name, cell=list(cell), weight=degree.w)

    for rel in dataset.relations:
        try:
            diff = seq.evaluate(rel.difference)
        except OutsideProfile:
            continue
        located = _cell_of(seq, diff)
        if located is None:
            report.record("relations", True)
            continue
        cell, w = located
        if cell not in seq.core:
            continue
        vec = seq.vector(diff, cell, w)
        report.record("relations", page[cell].b.contains(vec), relation=str(rel), cell=list(cell),
                      witness=seq.format(vec, cell))

    if any(s.generates(2) for s in seq.data.symbols.values()):
        for cell in sorted(seq.core):
            if cell[0] > completeness_stem:
                continue
            missing = seq.completeness_witness(2, cell)
            report.record("completeness", missing is None, cell=list(cell),
                          witness=seq.format(missing, cell) if missing is not None else None)
    else:
        report.skip("completeness")

    rule = seq.data.rule(2)
    for name, ast in sorted(rule.assignments.items()):
        sym = seq.data.symbols[name]
        degree = seq.normalized(sym)
        try:
            value = seq.evaluate(ast)
        except OutsideProfile:
            continue
        target = seq.target((degree.s, degree.f))
        if target not in seq.core or value.is_zero():
            continue
        vec = seq.vector(value, target, degree.w + seq.dw)
        report.record("d2_values", page[target].z.contains(vec), name=name, value=serialize(ast),
                      cell=list(target))
    logger.info("verify e2: %s", report.checks)
    return report.to_dict()


# ---------------------------------------------------------------------------
# Hidden tau overlay and chart comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtSummand:
    """A cyclic F2[tau]-summand of Ext: generated in ``weight``, ``order`` None when free."""

    weight: int
    order: Optional[int]
    labels: Tuple[str, ...] = ()

    def dimension(self, w: int) -> int:
        if self.order is None:
            return int(w <= self.weight)
        return int(self.weight - self.order < w <= self.weight)


def einf_summands(seq: SpectralSequence, cells: Optional[Iterable[Tuple[int, int]]] = None
                  ) -> Dict[Tuple[int, int], List[ExtSummand]]:
    """Cyclic summands of E-infinity per (s, f), before any hidden extension."""
    r = seq.last_page
    out: Dict[Tuple[int, int], List[ExtSummand]] = {}
    for cell in sorted(cells if cells is not None else seq.core):
        parts = [ExtSummand(s.weight, s.order) for s, _ in seq.summands(r, *cell)]
        if parts:
            out[cell] = sorted(parts, key=lambda p: (p.weight, p.order or 0))
    return out


def apply_hidden_tau(einf: Dict[Tuple[int, int], List[ExtSummand]], hidden: Iterable[HiddenExtension],
                     ) -> Tuple[Dict[Tuple[int, int], List[ExtSummand]], List[Dict[str, Any]]]:
    """Merge summands joined by hidden tau extensions; returns the Ext summands and missing endpoints."""
    out = {cell: list(parts) for cell, parts in einf.items()}
    missing: List[Dict[str, Any]] = []
    for ext in sorted(hidden, key=lambda h: (h.s, h.f, h.w, serialize(h.source))):
        if ext.kind != "tau":
            continue
        cell = (ext.s, ext.f)
        parts = out.get(cell, [])
        source = next((p for p in parts if p.order is not None and p.weight - p.order == ext.w), None)
        target = next((p for p in parts if p.weight == ext.w and p is not source), None)
        if source is None or target is None:
            missing.append({"cell": [ext.s, ext.f, ext.w], "source": serialize(ext.source),
                            "target": serialize(ext.target),
                            "missing": "source" if source is None else "target"})
            continue
        order = None if target.order is None else source.order + target.order
        merged = ExtSummand(source.weight, order, source.labels + target.labels)
        parts = [p for p in parts if p is not source and p is not target] + [merged]
        out[cell] = sorted(parts, key=lambda p: (p.weight, p.order or 0))
    return out, missing


Position = Tuple[float, float]
DrawnClass = Tuple[Optional[int], Optional[int]]

# Lines colored for a tau multiple: h x = tau^k y.
LINE_TAU_SHIFT = {"hzerotau": 1, "honetau": 1, "htwotau": 1, "hzeromoretau": 2, "honemoretau": 2}
MULTIPLIER_WEIGHT = {"h0": 0, "h1": 1, "h2": 2}


def chart_weights(dataset: Dataset) -> Dict[Position, int]:
    """Weight of each drawn dot or square, read from labels and carried along product lines.

    A line from x to y drawn for ``h x = tau^k y`` puts y at the weight of x
    plus the weight of h plus k.  Dotted lines are hidden extensions and carry
    nothing.  Unlabelled classes reached with two different weights are left out.
    """
    chart = dataset.chart
    classes = {c.position: c for c in chart.symbols if c.kind in ("dot", "square")}
    weights: Dict[Position, int] = {}
    for pos, text in chart.labels().items():
        sym = classes.get(pos)
        degree = dataset.label_degree(text)
        if sym is None or degree is None or (degree.s, degree.f) != (sym.s, sym.f):
            logger.debug("chart label %r at %s names no drawn class", text, pos)
            continue
        weights[pos] = degree.w
    labelled = set(weights)
    edges: Dict[Position, List[Tuple[Position, int]]] = {}
    for line in chart.lines():
        mult = line.multiplier
        a, b = line.position, line.end_position
        if line.dotted or mult is None or a not in classes or b not in classes:
            continue
        step = MULTIPLIER_WEIGHT[mult] + LINE_TAU_SHIFT.get(line.color, 0)
        edges.setdefault(a, []).append((b, step))
        edges.setdefault(b, []).append((a, -step))
    conflicts = set()
    queue = deque(sorted(weights))
    while queue:
        pos = queue.popleft()
        for other, step in edges.get(pos, []):
            w = weights[pos] + step
            if other not in weights:
                weights[other] = w
                queue.append(other)
            elif weights[other] != w:
                if other in labelled:
                    logger.debug("line into %s disagrees with its label: %d != %d", other, w, weights[other])
                else:
                    conflicts.add(other)
    return {pos: w for pos, w in weights.items() if pos not in conflicts}


def _chart_cell(chart: ChartData, cell: Tuple[int, int], f_max: int,
                weights: Optional[Dict[Position, int]] = None) -> Tuple[List[DrawnClass], int]:
    """(weight, torsion order) of each class drawn at ``cell``, towers expanded, and the symbol count.

    The weight is None where ``weights`` does not place the class.
    """
    weights = weights or {}
    drawn: List[DrawnClass] = []
    symbols = 0
    for sym in chart.classes_at(*cell):
        drawn.append((weights.get(sym.position), sym.order))
        symbols += 2 if sym.kind == "square" else 1
    for tower in chart.towers():
        step = {"hzerotower": 0, "honetower": 1}.get(tower.color)
        if step is None:
            continue
        k = cell[1] - tower.f
        if k >= 1 and k <= f_max and cell[0] == tower.s + k * step:
            origin = weights.get(tower.position)
            if origin is not None:
                origin += k * step
            drawn.append((origin, None if step == 0 else 1))
            symbols += 1
    return drawn, symbols


def compare_chart(seq: SpectralSequence, chart: ChartData, mode: str = "dims",
                  weights: Optional[Dict[Position, int]] = None) -> Dict[str, Any]:
    """Compare E-infinity (dims) or Ext after the hidden tau overlay (shapes) with the chart.

    Cells off the panels are counted as ``not_drawn``.  A cell an h1 tower
    from off the panels runs through may hold undrawn classes, so there the
    drawn classes only have to be among the computed ones.  Cells whose
    classes all carry a weight are also compared weight by weight.
    """
    if mode not in ("dims", "shapes"):
        return error_report("BAD_MODE", [f"mode must be dims or shapes, got {mode!r}"])
    problems = _needs(seq, E_INFINITY, f"verify charts-{mode}")
    if problems:
        return error_report("PAGE_MISSING", problems)
    report = CheckReport(f"charts-{mode}")
    weights = weights if seq.profile.uses_tau else None
    cells = []
    for cell in sorted(seq.core):
        if chart.covers(*cell):
            cells.append(cell)
        else:
            report.count("not_drawn")
    einf = einf_summands(seq, cells)
    if mode == "shapes":
        parts_of, missing = apply_hidden_tau(einf, (h for h in chart.hidden if chart.covers(h.s, h.f)
                                                    and (h.s, h.f) in seq.core))
        for item in missing:
            report.record("hidden_tau_endpoints", False, **item)
    else:
        parts_of = einf
    for cell in cells:
        parts = parts_of.get(cell, [])
        drawn, symbols = _chart_cell(chart, cell, seq.f_max, weights)
        if chart.tower_shadowed(*cell):
            missing_orders = Counter(o or 0 for _, o in drawn) - Counter(p.order or 0 for p in parts)
            report.record("partly_drawn", not missing_orders, cell=list(cell),
                          not_computed=_shape_text(missing_orders))
            continue
        if mode == "dims":
            free = sum(1 for p in parts if p.order is None)
            black = sum(1 for _, o in drawn if o is None)
            report.record("summand_count", len(parts) == symbols, cell=list(cell),
                          computed=len(parts), chart=symbols)
            report.record("free_rank", free == black, cell=list(cell), computed=free, chart=black)
        else:
            computed = Counter(p.order or 0 for p in parts)
            shown = Counter(o or 0 for _, o in drawn)
            report.record("torsion_shapes", computed == shown, cell=list(cell),
                          computed=_shape_text(computed), chart=_shape_text(shown))
        if weights is None or not drawn:
            continue
        if any(w is None for w, _ in drawn):
            report.count("unweighted_cells")
            continue
        if mode == "dims":
            _compare_weights(report, seq, cell, drawn, parts)
        else:
            computed = Counter((p.weight, p.order or 0) for p in parts)
            shown = Counter((w, o or 0) for w, o in drawn)
            report.record("weighted_shapes", computed == shown, cell=list(cell),
                          computed=sorted(computed.elements()), chart=sorted(shown.elements()))
    logger.info("verify charts-%s: %s", mode, report.checks)
    return report.to_dict()


def _compare_weights(report: CheckReport, seq: SpectralSequence, cell: Tuple[int, int],
                     drawn: List[DrawnClass], parts: List[ExtSummand]) -> None:
    summands = [ExtSummand(w, o) for w, o in drawn]
    tops = [p.weight for p in summands + parts]
    depth = max([p.order or 0 for p in summands + parts] + [0])
    for w in range(min(tops) - depth - 1, max(tops) + 2):
        ours = seq.f2_dimension(E_INFINITY, cell[0], cell[1], w)
        theirs = sum(p.dimension(w) for p in summands)
        report.record("dimension_by_weight", ours == theirs, cell=[cell[0], cell[1], w],
                      computed=ours, chart=theirs)


def _shape_text(counter: Counter) -> str:
    free = counter.get(0, 0)
    torsion = sorted(k for k, n in counter.items() if k for _ in range(n))
    return f"free={free} torsion={torsion}"


def ext_summands(seq: SpectralSequence, chart: ChartData) -> Dict[Tuple[int, int], List[ExtSummand]]:
    """Ext per (s, f) with labels, after the hidden tau overlay."""
    r = seq.last_page
    einf: Dict[Tuple[int, int], List[ExtSummand]] = {}
    for cell in sorted(seq.core):
        parts = seq.summands(r, *cell)
        if not parts:
            continue
        labels = seq.labels(r, *cell)
        einf[cell] = sorted((ExtSummand(s.weight, s.order, tuple(labels.get(s.weight, ())))
                             for s, _ in parts), key=lambda p: (p.weight, p.order or 0))
    ext, missing = apply_hidden_tau(einf, (h for h in chart.hidden if (h.s, h.f) in seq.core))
    for item in missing:
        logger.warning("hidden tau extension without endpoint: %s", item)
    return ext


# ---------------------------------------------------------------------------
# Hidden h0, h1, h2 extensions
# ---------------------------------------------------------------------------

def check_hidden_extensions(seq: SpectralSequence, chart: ChartData) -> Dict[str, Any]:
    """Both endpoints of every hidden extension are nonzero in E-infinity."""
    problems = _needs(seq, E_INFINITY, "verify hidden")
    if problems:
        return error_report("PAGE_MISSING", problems)
    report = CheckReport("hidden")
    for ext in chart.hidden:
        for end, (s, f, w) in (("source", ext.source_degree), ("target", ext.target_degree)):
            if (s, f) not in seq.core:
                continue
            ok = seq.f2_dimension(E_INFINITY, s, f, w) > 0
            report.record(f"hidden_{ext.kind}", ok, end=end, cell=[s, f, w],
                          source=serialize(ext.source), target=serialize(ext.target))
    return report.to_dict()


# ---------------------------------------------------------------------------
# Chow degree zero
# ---------------------------------------------------------------------------

def chow_stem(motivic: SpectralSequence, classical: SpectralSequence) -> int:
    """Largest classical stem whose whole column maps into the motivic rectangle; -1 if none."""
    if classical.f_max > motivic.f_max:
        return -1
    return min(CHOW_STEM, classical.s_max, (motivic.s_max - classical.f_max) // 2)


def chow_zero_compare(motivic: SpectralSequence, classical: SpectralSequence,
                      max_stem: Optional[int] = None) -> Dict[str, Any]:
    """Classical E-infinity at (s, f) against motivic E-infinity at (2s + f, f, s + f).

    Without ``max_stem`` the comparison covers the stems both rectangles
    reach.  A requested classical cell whose image falls outside the motivic
    rectangle makes the check incomplete, never a pass.
    """
    problems = _needs(motivic, E_INFINITY, "verify chow") + _needs(classical, E_INFINITY, "verify chow")
    if problems:
        return error_report("PAGE_MISSING", problems)
    if max_stem is None:
        max_stem = chow_stem(motivic, classical)
    report = CheckReport("chow")
    if max_stem < 0:
        report.incomplete("chow_zero", reason="classical filtration range exceeds the motivic one",
                          classical_f_max=classical.f_max, motivic_f_max=motivic.f_max)
        return report.to_dict()
    for s in range(max_stem + 1):
        for f in range(classical.f_max + 1):
            cell = (2 * s + f, f)
            if (s, f) not in classical.core or cell not in motivic.core:
                report.incomplete("chow_zero", classical=[s, f], motivic=[cell[0], f, s + f])
                continue
            cl = classical.f2_dimension(E_INFINITY, s, f, 0)
            mot = motivic.f2_dimension(E_INFINITY, cell[0], f, s + f)
            report.record("chow_zero", cl == mot, classical=[s, f], motivic=[cell[0], f, s + f],
                          classical_dim=cl, motivic_dim=mot)
    report.counts["max_classical_stem"] = max_stem
    return report.to_dict()


# ---------------------------------------------------------------------------
# h1-local A(3)
# ---------------------------------------------------------------------------

def _class_zero(seq: SpectralSequence, r: int, rel: Relation) -> Tuple[bool, str]:
    diff = seq.evaluate(rel.difference)
    located = _cell_of(seq, diff)
    if located is None:
        return True, "0"
    cell, w = located
    if cell not in seq.core:
        return True, "out of range"
    vec = seq.vector(diff, cell, w)
    return seq.page(r)[cell].b.contains(vec), seq.format(vec, cell)


def local_monomial_counts(seq: SpectralSequence, names: Iterable[str], local: LocalData,
                          exclude_square_of: Optional[str] = None) -> Counter:
    """Monomials in ``names`` per normalized (s, w), optionally without multiples of a square."""
    gens = [Generator(n, seq.normalized(local.symbols[n])) for n in names]
    registry = GenRegistry(gens)
    enumerator = MonomialEnumerator(registry)
    skip = registry.index(exclude_square_of) if exclude_square_of else None
    counts: Counter = Counter()
    for s in range(seq.s_max + 1):
        for mono in enumerator.monomials_in_cell(s, 0):
            if skip is not None and mono.exponent(skip) >= 2:
                continue
            counts[(s, degree_of(registry, mono).w)] += 1
    return counts


def localized_d2(dataset: Dataset, name: str) -> Optional[ExprAst]:
    """The global d2 of ``name`` after inverting h1; None when it leaves the local generators.

    Terms with a factor x such that h1 x = 0 in E2 (h0, h2) vanish once h1
    is a unit.
    """
    annihilated = set()
    for rel in dataset.relations:
        if rel.rhs is None and len(rel.lhs.terms) == 1:
            names = [f.name for f in rel.lhs.terms[0].factors if f.exponent == 1]
            if len(names) == 2 and "h1" in names:
                annihilated.update(n for n in names if n != "h1")
    value = dataset.rule(2).assignments.get(name)
    if value is None:
        return ExprAst()
    kept = tuple(t for t in value.terms if not annihilated.intersection(t.names()))
    allowed = set(dataset.local.symbols) | {"h1"}
    if any(n not in allowed for t in kept for n in t.names()):
        return None
    return ExprAst(kept)


def _same_terms(a: ExprAst, b: ExprAst) -> bool:
    def key(ast):
        return Counter((t.tau_exp, frozenset((f.name, f.exponent) for f in t.factors)) for t in ast.terms)
    return key(a) == key(b)


def hidden_substitution(seq: SpectralSequence, local: LocalData) -> Tuple[GenRegistry, Dict[str, AlgElem]]:
    """Every E-infinity generator written in the free Ext generators.

    A hidden relation ``lhs = h1^k x`` makes ``x`` decomposable in Ext: it
    becomes ``lhs`` with h1 set to 1.
    """
    free_reg = GenRegistry(Generator(n, seq.normalized(local.symbols[n])) for n in local.ext_names)

    def free_value(name: str) -> AlgElem:
        if name in seq.data.unit_names:
            return AlgElem.one()
        if name not in free_reg:
            raise MayError(f"{name} is neither a unit nor a free Ext generator")
        return AlgElem.of(Monomial.of({free_reg.index(name): 1}))

    values = {n: free_value(n) for n in local.ext_names}
    for rel in local.hidden_relations:
        if rel.rhs is None or len(rel.rhs.terms) != 1:
            raise MayError(f"hidden relation {rel} does not name a single class")
        targets = [n for n in rel.rhs.terms[0].names() if n not in seq.data.unit_names]
        if len(targets) != 1:
            raise MayError(f"hidden relation {rel} does not name a single class")
        values[targets[0]] = evaluate(rel.lhs, free_value, use_tau=False)
    return free_reg, values


def verify_h1_local(seq: SpectralSequence, dataset: Dataset) -> Dict[str, Any]:
    """E-infinity of h1-local A(3) against its presentation and, after the hidden relations, the free algebra."""
    local = dataset.local
    problems = _needs(seq, E_INFINITY, "verify h1local")
    if not local.einf:
        problems.append("dataset has no h1-local records")
    if problems:
        return error_report("PAGE_MISSING", problems)
    report = CheckReport("h1local")
    for rel in local.relations:
        ok, witness = _class_zero(seq, 2, rel)
        report.record("e2_relations", ok, relation=str(rel), witness=witness)
    for name, ast in sorted(local.rule.assignments.items()):
        value = seq.evaluate(ast)
        report.record("d2_values", not value.is_zero(), name=name, value=serialize(ast))
        expected = localized_d2(dataset, name)
        report.record("d2_matches_global", expected is not None and _same_terms(ast, expected),
                      name=name, tabulated=serialize(ast),
                      localized=serialize(expected) if expected is not None else None)
    einf_page = seq.pages[E_INFINITY]
    for sym in local.einf:
        degree = seq.normalized(sym)
        cell = (degree.s, degree.f)
        if cell not in seq.core:
            continue
        vec = seq.vector(seq.rep(sym.name), cell, degree.w)
        ok = not vec.is_zero() and einf_page[cell].z.contains(vec) and not einf_page[cell].b.contains(vec)
        report.record("einf_generators", ok, name=sym.name, cell=list(cell))
    for rel in local.einf_relations:
        ok, witness = _class_zero(seq, E_INFINITY, rel)
        report.record("einf_relations", ok, relation=str(rel), witness=witness)

    einf_names = [s.name for s in local.einf]
    relation_square = _relation_square(local)
    expected_counts = local_monomial_counts(seq, einf_names, local, exclude_square_of=relation_square)
    computed: Counter = Counter()
    for s in range(seq.s_max + 1):
        for summand, _ in seq.summands(E_INFINITY, s, 0):
            computed[(s, summand.weight)] += 1
            report.record("tau_torsion_order", summand.order == 1, cell=[s, 0, summand.weight],
                          order=summand.order)
    for key in sorted(set(expected_counts) | set(computed)):
        report.record("einf_presentation", expected_counts[key] == computed[key], degree=list(key),
                      computed=computed[key], expected=expected_counts[key])
    _check_basis_after_hidden(seq, local, einf_names, relation_square, report)
    logger.info("verify h1local: %s", report.checks)
    return report.to_dict()


def _check_basis_after_hidden(seq: SpectralSequence, local: LocalData, einf_names: List[str],
                              relation_square: Optional[str], report: CheckReport) -> None:
    """The E-infinity monomial basis, rewritten in the free generators, is a basis in every degree."""
    free_reg, values = hidden_substitution(seq, local)
    einf_reg = GenRegistry(Generator(n, seq.normalized(local.symbols[n])) for n in einf_names)
    skip = einf_reg.index(relation_square) if relation_square else None
    einf_enum, free_enum = MonomialEnumerator(einf_reg), MonomialEnumerator(free_reg)
    for s in range(seq.s_max + 1):
        images: Dict[int, List[AlgElem]] = {}
        for mono in einf_enum.monomials_in_cell(s, 0):
            if skip is not None and mono.exponent(skip) >= 2:
                continue
            value = AlgElem.one()
            for i, e in mono.exps:
                value = value * values[einf_reg.generators[i].name].power(e)
            images.setdefault(degree_of(einf_reg, mono).w, []).append(value)
        basis: Dict[int, List[Monomial]] = {}
        for mono in free_enum.monomials_in_cell(s, 0):
            basis.setdefault(degree_of(free_reg, mono).w, []).append(mono)
        for w in sorted(set(images) | set(basis)):
            rows, column = images.get(w, []), {m: j for j, m in enumerate(basis.get(w, []))}
            matrix = np.zeros((len(rows), len(column)), dtype=np.uint8)
            stray = 0
            for i, value in enumerate(rows):
                for mono in value.terms:
                    if mono in column:
                        matrix[i, column[mono]] = 1
                    else:
                        stray += 1
            rank = gf2_rank(matrix) if rows and column else 0
            ok = stray == 0 and rank == len(rows) == len(column)
            report.record("basis_after_hidden", ok, degree=[s, w], rank=rank, einf=len(rows),
                          free=len(column), stray_terms=stray)


def _relation_square(local: LocalData) -> Optional[str]:
    """The generator whose square leads the E-infinity relation (e0 in h1^2 e0^2 + c0^2 g)."""
    for rel in local.einf_relations:
        for term in rel.lhs.terms:
            for factor in term.factors:
                if factor.exponent == 2 and factor.name in local.symbols and factor.name != "h1":
                    return factor.name
    return None


# ---------------------------------------------------------------------------
# Resolution oracle
# ---------------------------------------------------------------------------

def oracle_compare(seq: SpectralSequence, ext_dims: Dict[Tuple[int, int, int], int],
                   max_stem: int, max_f: int) -> Dict[str, Any]:
    """Ext dimensions from the minimal resolution against E-infinity dimensions."""
    problems = _needs(seq, E_INFINITY, "verify oracle")
    if problems:
        return error_report("PAGE_MISSING", problems)
    report = CheckReport("oracle")
    weights = sorted({w for (_, _, w) in ext_dims})
    for s in range(max_stem + 1):
        for f in range(max_f + 1):
            if (s, f) not in seq.core:
                continue
            for w in weights:
                ours = seq.f2_dimension(E_INFINITY, s, f, w)
                theirs = ext_dims.get((s, f, w), 0)
                if ours or theirs:
                    report.record("ext_dimensions", ours == theirs, cell=[s, f, w],
                                  resolution=theirs, einf=ours)
    return report.to_dict()


def product_symbols(dataset: Dataset) -> List[Tuple[int, str, str, str]]:
    """(page, x, y, name) for every braced two-factor symbol that carries its own description."""
    out = []
    for name, sym in sorted(dataset.symbols.items()):
        parts = braced_parts(name)
        if parts is None or sym.desc is None or len(parts.terms) != 1 or parts.terms[0].tau_exp:
            continue
        factors = parts.terms[0].factors
        names = [f.name for f in factors for _ in range(f.exponent)]
        if len(names) == 2 and sym.first_page is not None:
            out.append((sym.first_page, names[0], names[1], name))
    return out


def check_multiplications(seq: SpectralSequence, items: Iterable[Tuple[int, str, str, str]]) -> Dict[str, Any]:
    """Products of page generators agree with their product-named symbols, page by page."""
    report = CheckReport("products")
    for page, x, y, name in items:
        if page_key(page) not in seq.pages:
            continue
        degree = seq.normalized(seq.data.symbols[name])
        if (degree.s, degree.f) not in seq.core:
            continue
        try:
            ok = seq.check_multiplicative(page, x, y, name)
        except OutsideProfile:
            continue
        except MayError as exc:
            report.record("products", False, x=x, y=y, product=name, page=page, error=str(exc))
            continue
        report.record("products", ok, x=x, y=y, product=name, page=page)
    if "products" not in report.checks:
        report.skip("products")
    logger.info("verify products: %s", report.checks)
    return report.to_dict()
