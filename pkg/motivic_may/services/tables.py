"""Dataset loading: expression grammar, record files and cross-reference checks.

Every table of the dataset is a line-oriented text file.  A record is one
line of ``key: value`` fields separated by `` | ``; blank lines and lines
starting with ``#`` are ignored.  Algebra expressions inside the fields are
sums of products of named elements, for example ``t h1^3 + h0^2 h2``.
"""

import logging
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from motivic_may.errors import DatasetError, DegreeMismatchError, ParseError
from motivic_may.services.algebra import TAU_DEGREE, AlgElem, Degree
from motivic_may.services.e1 import LOCAL_GENERATORS, h_degree

logger = logging.getLogger(__name__)

TAU_NAMES = ("t", "tau")
E1_NAME = re.compile(r"^h(\d)(\d)$")


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Factor:
    name: str
    exponent: int = 1

    def __str__(self) -> str:
        return self.name if self.exponent == 1 else f"{self.name}^{self.exponent}"


@dataclass(frozen=True)
class Term:
    """tau^tau_exp times a product of named factors."""

    tau_exp: int = 0
    factors: Tuple[Factor, ...] = ()

    def names(self) -> List[str]:
        return [f.name for f in self.factors]

    def __str__(self) -> str:
        parts = []
        if self.tau_exp:
            parts.append("t" if self.tau_exp == 1 else f"t^{self.tau_exp}")
        parts.extend(str(f) for f in self.factors)
        return " ".join(parts) or "1"


@dataclass(frozen=True)
class ExprAst:
    """Sum of terms; the empty sum is zero."""

    terms: Tuple[Term, ...] = ()

    def is_zero(self) -> bool:
        return not self.terms

    def names(self) -> FrozenSet[str]:
        return frozenset(n for term in self.terms for n in term.names())

    def __str__(self) -> str:
        return serialize(self)


def _factor_action(s, loc, toks):
    exponent = int(toks[1]) if len(toks) > 1 else 1
    if exponent < 1:
        raise ParseError("malformed exponent", s, loc)
    name = toks[0]
    if name.startswith("{"):
        name = "{" + " ".join(name[1:-1].split()) + "}"
    return Factor(name, exponent)


def _term_action(s, loc, toks):
    # a parenthesized sum multiplies out, so one term may expand into several
    partial: List[Tuple[int, Tuple[Factor, ...]]] = [(0, ())]
    for token in toks:
        if isinstance(token, ExprAst):
            choices = [(t.tau_exp, t.factors) for t in token.terms]
        elif token.name in TAU_NAMES:
            choices = [(token.exponent, ())]
        else:
            choices = [(0, (token,))]
        partial = [(tau + extra, factors + more) for tau, factors in partial for extra, more in choices]
    return [_merge_factors(tau, factors) for tau, factors in partial]


def _merge_factors(tau: int, factors: Iterable[Factor]) -> Term:
    order: List[str] = []
    exps: Dict[str, int] = {}
    for factor in factors:
        if factor.name not in exps:
            order.append(factor.name)
            exps[factor.name] = 0
        exps[factor.name] += factor.exponent
    return Term(tau, tuple(Factor(n, exps[n]) for n in order))


def _group_action(s, loc, toks):
    return ExprAst(tuple(toks))


def _expr_action(s, loc, toks):
    if len(toks) == 1 and toks[0] == "0":
        return ExprAst()
    return ExprAst(tuple(toks))


def make_grammar():
    from pyparsing import Forward, Literal, Optional, Regex, StringEnd, Suppress, Word, ZeroOrMore, nums

    name = Regex(r"\{[^{}]+\}") | Regex(r"[A-Za-z][A-Za-z0-9]*(\(\d+(,\d+)*\))?'*")
    exponent = Suppress(Literal("^")) + Word(nums)
    factor = name + Optional(exponent)
    total = Forward()
    group = Suppress(Literal("(")) + total + Suppress(Literal(")"))
    atom = factor | group
    term = atom + ZeroOrMore(Optional(Suppress(Literal("*"))) + atom)
    total <<= term + ZeroOrMore(Suppress(Literal("+")) + term)
    expr = (Literal("0") | total) + StringEnd()

    factor.set_parse_action(_factor_action)
    term.set_parse_action(_term_action)
    group.set_parse_action(_group_action)
    expr.set_parse_action(_expr_action)
    return expr


_GRAMMAR = None


@lru_cache(maxsize=4096)
def parse_expr(text: str) -> ExprAst:
    """Parse ``text`` into an :class:`ExprAst`; 't' and 'tau' denote tau."""
    from pyparsing import ParseBaseException

    global _GRAMMAR
    if _GRAMMAR is None:
        _GRAMMAR = make_grammar()
    text = text.strip()
    if not text:
        raise ParseError("empty expression", text, 0)
    try:
        return _GRAMMAR.parse_string(text, parse_all=True)[0]
    except ParseBaseException as exc:
        raise ParseError(exc.msg, text, exc.col)


def serialize(ast: ExprAst) -> str:
    if not ast.terms:
        return "0"
    return " + ".join(str(term) for term in ast.terms)


def braced_parts(name: str) -> Optional[ExprAst]:
    """The product named by ``{a b c}``, or None for a plain name."""
    if not name.startswith("{"):
        return None
    return parse_expr(name[1:-1])


def evaluate(ast: ExprAst, lookup: Callable[[str], AlgElem], use_tau: bool = True) -> AlgElem:
    """Value of ``ast`` with names resolved by ``lookup``; tau is dropped when ``use_tau`` is False."""
    total = AlgElem.zero()
    for term in ast.terms:
        value = AlgElem.one()
        for factor in term.factors:
            value = value * lookup(factor.name).power(factor.exponent)
        if use_tau and term.tau_exp:
            value = value.times_tau(term.tau_exp)
        total = total + value
    return total


def expression_degree(ast: ExprAst, degree_of_name: Callable[[str], Degree]) -> Optional[Degree]:
    """Common degree of the terms of ``ast``; None for zero."""
    found = None
    for term in ast.terms:
        degree = TAU_DEGREE.scale(term.tau_exp)
        for factor in term.factors:
            degree = degree + degree_of_name(factor.name).scale(factor.exponent)
        if found is not None and degree != found:
            raise DegreeMismatchError(f"inhomogeneous expression {serialize(ast)}: {found} and {degree}")
        found = degree
    return found


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

def parse_degree(text: str, size: int) -> Tuple[int, ...]:
    parts = text.strip().strip("()").split(",")
    if len(parts) != size:
        raise ValueError(f"expected {size} integers in {text!r}")
    return tuple(int(p) for p in parts)


def parse_record_line(line: str) -> Dict[str, str]:
    """``key: value | key: value`` into a dict."""
    fields: Dict[str, str] = {}
    for chunk in line.split(" | "):
        key, sep, value = chunk.partition(":")
        if not sep or not key.strip():
            raise ValueError(f"field {chunk.strip()!r} has no 'key:' prefix")
        key = key.strip()
        if key in fields:
            raise ValueError(f"duplicate field {key!r}")
        fields[key] = value.strip()
    return fields


def iter_records(path: Path) -> Iterable[Tuple[int, Dict[str, str]]]:
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                yield number, parse_record_line(line)
            except ValueError as exc:
                raise DatasetError(str(exc), str(path), number)


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SymbolRecord(_Record):
    name: str
    deg: Tuple[int, int, int, int]
    desc: Optional[str] = None
    page: Optional[int] = None
    occurs: Optional[int] = None

    @field_validator("deg", mode="before")
    @classmethod
    def _deg(cls, value):
        return parse_degree(value, 4) if isinstance(value, str) else value

    @field_validator("desc", mode="before")
    @classmethod
    def _blank_desc(cls, value):
        return value or None


class RelationRecord(_Record):
    relation: str
    deg: Optional[Tuple[int, int, int, int]] = None
    sfw: Optional[Tuple[int, int, int]] = None

    @field_validator("deg", mode="before")
    @classmethod
    def _deg(cls, value):
        return parse_degree(value, 4) if isinstance(value, str) else value

    @field_validator("sfw", mode="before")
    @classmethod
    def _sfw(cls, value):
        return parse_degree(value, 3) if isinstance(value, str) else value


class DifferentialRecord(_Record):
    source: str
    value: str


class HiddenRecord(_Record):
    sfw: Tuple[int, int, int]
    source: str
    target: str

    @field_validator("sfw", mode="before")
    @classmethod
    def _sfw(cls, value):
        return parse_degree(value, 3) if isinstance(value, str) else value


class ChartRecord(_Record):
    """One drawn symbol; the file key ``from`` is read as ``source``."""

    kind: str
    color: str = ""
    at: Optional[str] = None
    source: Optional[str] = None
    to: Optional[str] = None
    dotted: Optional[str] = None
    name: Optional[str] = None

    @field_validator("kind")
    @classmethod
    def _kind(cls, value):
        if value not in {"dot", "square", "tower", "line", "label"}:
            raise ValueError(f"unknown chart symbol kind {value!r}")
        return value


class LocalRecord(_Record):
    record: str
    source: Optional[str] = None
    value: Optional[str] = None
    relation: Optional[str] = None
    name: Optional[str] = None
    deg: Optional[Tuple[int, int, int, int]] = None
    desc: Optional[str] = None
    names: Optional[str] = None

    @field_validator("deg", mode="before")
    @classmethod
    def _deg(cls, value):
        return parse_degree(value, 4) if isinstance(value, str) else value

    @field_validator("record")
    @classmethod
    def _kind(cls, value):
        if value not in {"d2", "relation", "einf", "einf_relation", "hidden", "ext"}:
            raise ValueError(f"unknown local record {value!r}")
        return value


def _load(path: Path, model, rename: Optional[Dict[str, str]] = None) -> List[Tuple[str, object]]:
    out = []
    for number, fields in iter_records(path):
        if rename:
            fields = {rename.get(k, k): v for k, v in fields.items()}
        try:
            out.append((f"{path.name}:{number}", model(**fields)))
        except ValidationError as exc:
            msg = "; ".join(f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors())
            raise DatasetError(msg, str(path), number)
    return out


def _parse_at(origin: str, text: str) -> ExprAst:
    try:
        return parse_expr(text)
    except ParseError as exc:
        raise DatasetError(str(exc), origin)


# ---------------------------------------------------------------------------
# Dataset model
# ---------------------------------------------------------------------------

@dataclass
class Symbol:
    """A named element: its degree, E1 description and the pages it generates."""

    name: str
    degree: Degree
    desc: Optional[ExprAst] = None
    pages: FrozenSet[int] = frozenset()
    occurs: Optional[int] = None
    origin: str = ""

    @property
    def first_page(self) -> Optional[int]:
        candidates = set(self.pages)
        if self.occurs is not None:
            candidates.add(self.occurs)
        return min(candidates) if candidates else None

    def generates(self, page: int) -> bool:
        """True when this symbol is a multiplicative generator of E_page."""
        return page in self.pages or (self.occurs is not None and self.occurs <= page)

    def merged(self, other: "Symbol") -> "Symbol":
        if other.degree != self.degree:
            raise DatasetError(f"symbol {self.name!r} has degrees {self.degree} and {other.degree}",
                               other.origin)
        if self.desc is not None and other.desc is not None and self.desc != other.desc:
            raise DatasetError(f"symbol {self.name!r} has descriptions {self.desc} and {other.desc}",
                               other.origin)
        occurs = [o for o in (self.occurs, other.occurs) if o is not None]
        return Symbol(self.name, self.degree, self.desc if self.desc is not None else other.desc,
                      self.pages | other.pages, min(occurs) if occurs else None, self.origin)


@dataclass(frozen=True)
class Relation:
    """``lhs = rhs`` (rhs None means lhs = 0) in the stated degree."""

    lhs: ExprAst
    rhs: Optional[ExprAst]
    degree: Optional[Degree] = None
    sfw: Optional[Tuple[int, int, int]] = None
    origin: str = ""

    @property
    def difference(self) -> ExprAst:
        return ExprAst(self.lhs.terms + (self.rhs.terms if self.rhs else ()))

    def __str__(self) -> str:
        return serialize(self.lhs) + (f" = {serialize(self.rhs)}" if self.rhs is not None else " = 0")


def parse_relation(text: str, origin: str = "") -> Tuple[ExprAst, Optional[ExprAst]]:
    lhs, sep, rhs = text.partition("=")
    return _parse_at(origin, lhs), (_parse_at(origin, rhs) if sep else None)


@dataclass
class DrRule:
    """Values of d_r on the generators of E_r; absent generators are d_r-cycles."""

    r: int
    assignments: Dict[str, ExprAst] = field(default_factory=dict)
    origins: Dict[str, str] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return not any(not v.is_zero() for v in self.assignments.values())


HIDDEN_MULTIPLIERS: Dict[str, Tuple[int, int, int]] = {
    "tau": (0, 0, -1),
    "h0": (0, 1, 0),
    "h1": (1, 1, 1),
    "h2": (3, 1, 2),
}


@dataclass(frozen=True)
class HiddenExtension:
    """``multiplier * source = target`` in Ext; (s, f, w) is the target degree."""

    kind: str
    s: int
    f: int
    w: int
    source: ExprAst
    target: ExprAst
    origin: str = ""

    @property
    def target_degree(self) -> Tuple[int, int, int]:
        return (self.s, self.f, self.w)

    @property
    def source_degree(self) -> Tuple[int, int, int]:
        ds, df, dw = HIDDEN_MULTIPLIERS[self.kind]
        return (self.s - ds, self.f - df, self.w - dw)


CHART_ORDERS: Dict[str, Optional[int]] = {"tauzero": None, "tauone": 1, "tautwo": 2, "tauthree": 3}


@dataclass(frozen=True)
class ChartSymbol:
    kind: str
    s: int
    f: int
    color: str
    end: Optional[Tuple[float, float]] = None
    dotted: bool = False
    point: Optional[Tuple[float, float]] = None
    name: Optional[str] = None

    @property
    def position(self) -> Tuple[float, float]:
        """Drawn position, offsets between classes of one cell included."""
        if self.point is None:
            return (float(self.s), float(self.f))
        return (round(self.point[0], 2), round(self.point[1], 2))

    @property
    def end_position(self) -> Optional[Tuple[float, float]]:
        return (round(self.end[0], 2), round(self.end[1], 2)) if self.end is not None else None

    @property
    def order(self) -> Optional[int]:
        """tau-torsion order of a dot or square, None when free."""
        return CHART_ORDERS.get(self.color)

    @property
    def multiplier(self) -> Optional[str]:
        """h0, h1 or h2 for lines and towers, by slope."""
        if self.end is None:
            return None
        ds = round(self.end[0]) - self.s
        return {0: "h0", 1: "h1", 3: "h2"}.get(ds)


def _point(text: str) -> Tuple[float, float]:
    x, y = text.split(",")
    return float(x), float(y)


@dataclass
class ChartData:
    """Chart symbols plus the hidden extensions and relations drawn on them."""

    symbols: List[ChartSymbol] = field(default_factory=list)
    hidden: List[HiddenExtension] = field(default_factory=list)
    hidden_relations: List[Relation] = field(default_factory=list)

    @staticmethod
    def covers(s: int, f: int) -> bool:
        """Whether the chart panels draw the cell (s, f).

        The lower panels run through filtration 18; the upper panel starts
        at stem 40 (its stem-39 column only carries axis numbers).
        """
        return 0 <= s <= 70 and (0 <= f <= 18 or (s >= 40 and f <= 36))

    @classmethod
    def tower_shadowed(cls, s: int, f: int) -> bool:
        """A drawn cell an h1 tower could reach from an undrawn cell.

        Towers are only drawn from classes inside a panel, so a tower born
        in an undrawn cell passes through such a cell without a symbol.
        """
        return cls.covers(s, f) and any(not cls.covers(s - k, f - k) for k in range(1, min(s, f) + 1))

    def classes_at(self, s: int, f: int) -> List[ChartSymbol]:
        return [c for c in self.symbols if c.kind in ("dot", "square") and (c.s, c.f) == (s, f)]

    def labels(self) -> Dict[Tuple[float, float], str]:
        return {c.position: c.name for c in self.symbols if c.kind == "label" and c.name}

    def towers(self) -> List[ChartSymbol]:
        return [c for c in self.symbols if c.kind == "tower"]

    def lines(self) -> List[ChartSymbol]:
        return [c for c in self.symbols if c.kind == "line"]

    def cells(self) -> List[Tuple[int, int]]:
        return sorted({(c.s, c.f) for c in self.symbols if c.kind in ("dot", "square")})

    def hidden_of(self, kind: str) -> List[HiddenExtension]:
        return [h for h in self.hidden if h.kind == kind]


@dataclass
class LocalData:
    """The h1-local A(3) computation: E2 generators, d2, E-infinity presentation."""

    symbols: Dict[str, Symbol] = field(default_factory=dict)
    rule: DrRule = field(default_factory=lambda: DrRule(2))
    relations: List[Relation] = field(default_factory=list)
    einf: List[Symbol] = field(default_factory=list)
    einf_relations: List[Relation] = field(default_factory=list)
    hidden_relations: List[Relation] = field(default_factory=list)
    ext_names: Tuple[str, ...] = ()


@dataclass
class Dataset:
    root: Path
    symbols: Dict[str, Symbol]
    rules: Dict[int, DrRule]
    relations: List[Relation]
    chart: ChartData
    local: LocalData

    def generators_on_page(self, page: int) -> List[Symbol]:
        return sorted((s for s in self.symbols.values() if s.generates(page)),
                      key=lambda s: (s.degree.f, s.degree.s, s.degree.w, s.name))

    def rule(self, r: int) -> DrRule:
        return self.rules.get(r, DrRule(r))

    @property
    def hidden(self) -> List[HiddenExtension]:
        return self.chart.hidden

    def label_degree(self, text: str) -> Optional[Degree]:
        """Degree of a chart label, or None when it names nothing this dataset knows.

        A label may be a generator of its own (``{t B5}``), so the braced
        symbol wins over reading the label as a product.
        """
        braced = "{" + " ".join(text.split()) + "}"
        if braced in self.symbols:
            return self.symbols[braced].degree
        try:
            return expression_degree(parse_expr(text), _Namespace(self.symbols).degree)
        except (KeyError, ParseError, DegreeMismatchError):
            return None


DIFFERENTIAL_PAGES = (2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 32)
HIDDEN_FILES = {"tau": "tau.txt", "h0": "h0.txt", "h1": "h1.txt", "h2": "h2.txt"}


def _symbols_from(path: Path) -> List[Symbol]:
    out = []
    for origin, rec in _load(path, SymbolRecord):
        desc = _parse_at(origin, rec.desc) if rec.desc else None
        pages = frozenset({rec.page}) if rec.page is not None else frozenset()
        out.append(Symbol(rec.name, Degree(*rec.deg), desc, pages, rec.occurs, origin))
    return out


def _merge_symbols(symbols: Iterable[Symbol]) -> Dict[str, Symbol]:
    merged: Dict[str, Symbol] = {}
    for sym in symbols:
        merged[sym.name] = merged[sym.name].merged(sym) if sym.name in merged else sym
    return merged


class _Namespace:
    """Degrees and first pages of every name a dataset expression may use."""

    def __init__(self, symbols: Dict[str, Symbol], extra: Optional[Dict[str, Degree]] = None):
        self.symbols = symbols
        self.extra = dict(extra or {})

    def degree(self, name: str) -> Degree:
        if name in self.extra:
            return self.extra[name]
        if name in self.symbols:
            return self.symbols[name].degree
        match = E1_NAME.match(name)
        if match:
            return h_degree(int(match.group(1)), int(match.group(2)))
        parts = braced_parts(name)
        if parts is not None:
            degree = expression_degree(parts, self.degree)
            if degree is not None:
                return degree
        raise KeyError(name)

    def first_page(self, name: str) -> int:
        if name in self.symbols and self.symbols[name].first_page is not None:
            return self.symbols[name].first_page
        return 1

    def check(self, ast: ExprAst, origin: str, expected: Optional[Degree] = None,
              page: Optional[int] = None, what: str = "expression",
              compare: Callable[[Degree], tuple] = tuple) -> Optional[Degree]:
        for name in sorted(ast.names()):
            try:
                self.degree(name)
            except KeyError:
                raise DatasetError(f"{what} {serialize(ast)!r} uses unknown name {name!r}", origin)
            if page is not None and self.first_page(name) > page:
                raise DatasetError(f"{what} {serialize(ast)!r} uses {name!r} before its first page "
                                   f"{self.first_page(name)}", origin)
        try:
            degree = expression_degree(ast, self.degree)
        except DegreeMismatchError as exc:
            raise DatasetError(str(exc), origin)
        if expected is not None and degree is not None and compare(degree) != compare(expected):
            raise DatasetError(f"{what} {serialize(ast)!r} has degree {degree}, expected {expected}", origin)
        return degree


def local_key(d: Degree) -> Tuple[int, int]:
    """Degree modulo h1: (s - f, w - f)."""
    return (d.s - d.f, d.w - d.f)


def _sfw(d: Degree) -> Tuple[int, int, int]:
    return (d.s, d.f, d.w)


def _check_symbols(ns: _Namespace) -> None:
    for sym in ns.symbols.values():
        if sym.desc is not None:
            ns.check(sym.desc, sym.origin, sym.degree, what=f"description of {sym.name}")
        elif sym.name.startswith("{"):
            ns.check(braced_parts(sym.name), sym.origin, sym.degree, what=f"parts of {sym.name}")
        elif not E1_NAME.match(sym.name) and sym.name not in ns.extra:
            raise DatasetError(f"symbol {sym.name!r} has no description", sym.origin)


def _load_rules(root: Path, ns: _Namespace) -> Dict[int, DrRule]:
    rules: Dict[int, DrRule] = {}
    for r in DIFFERENTIAL_PAGES:
        path = root / "differentials" / f"d{r}.txt"
        rule = DrRule(r)
        if path.exists():
            for origin, rec in _load(path, DifferentialRecord):
                _add_assignment(rule, rec.source, rec.value, origin, ns)
        rules[r] = rule
    return rules


def _add_assignment(rule: DrRule, source: str, value: str, origin: str, ns: _Namespace) -> None:
    r = rule.r
    sym = ns.symbols.get(source)
    if sym is None:
        raise DatasetError(f"d{r} source {source!r} is not a known symbol", origin)
    if not sym.generates(r):
        raise DatasetError(f"d{r} source {source!r} is not a generator of E{r}", origin)
    if source in rule.assignments:
        raise DatasetError(f"d{r}({source}) given twice", origin)
    ast = _parse_at(origin, value)
    ns.check(ast, origin, sym.degree + Degree(-(r - 1), -1, 1, 0), page=r, what=f"d{r}({source})")
    rule.assignments[source] = ast
    rule.origins[source] = origin


def _load_relations(path: Path, ns: _Namespace, page: int) -> List[Relation]:
    out = []
    for origin, rec in _load(path, RelationRecord):
        lhs, rhs = parse_relation(rec.relation, origin)
        degree = Degree(*rec.deg) if rec.deg else None
        for side in (lhs, rhs):
            if side is not None:
                ns.check(side, origin, degree, page=page, what="relation side")
        out.append(Relation(lhs, rhs, degree, rec.sfw, origin))
    return out


def _load_hidden(root: Path, ns: _Namespace) -> List[HiddenExtension]:
    out = []
    for kind, filename in HIDDEN_FILES.items():
        path = root / "hidden" / filename
        if not path.exists():
            continue
        for origin, rec in _load(path, HiddenRecord):
            ext = HiddenExtension(kind, *rec.sfw, _parse_at(origin, rec.source),
                                  _parse_at(origin, rec.target), origin)
            ns.check(ext.target, origin, Degree(0, *ext.target_degree), what="hidden target",
                     compare=_sfw)
            ns.check(ext.source, origin, Degree(0, *ext.source_degree), what="hidden source",
                     compare=_sfw)
            out.append(ext)
    return out


def _load_hidden_relations(path: Path, ns: _Namespace) -> List[Relation]:
    out = []
    if not path.exists():
        return out
    for origin, rec in _load(path, RelationRecord):
        lhs, rhs = parse_relation(rec.relation, origin)
        expected = Degree(0, *rec.sfw) if rec.sfw else None
        for side in (lhs, rhs):
            if side is not None:
                ns.check(side, origin, expected, what="hidden relation side", compare=_sfw)
        out.append(Relation(lhs, rhs, None, rec.sfw, origin))
    return out


def _load_chart(path: Path) -> List[ChartSymbol]:
    out = []
    if not path.exists():
        return out
    for origin, rec in _load(path, ChartRecord, rename={"from": "source"}):
        start = rec.at if rec.kind in ("dot", "square", "label") else rec.source
        if start is None or (rec.kind in ("tower", "line") and rec.to is None):
            raise DatasetError(f"{rec.kind} record is missing its coordinates", origin)
        try:
            x, y = _point(start)
            end = _point(rec.to) if rec.to else None
        except ValueError:
            raise DatasetError(f"malformed coordinates in {rec.kind} record", origin)
        if rec.kind in ("dot", "square") and rec.color not in CHART_ORDERS:
            raise DatasetError(f"unknown class color {rec.color!r}", origin)
        if rec.kind in ("tower", "line") and not rec.color:
            raise DatasetError(f"{rec.kind} record has no color", origin)
        if rec.kind == "label":
            if not rec.name:
                raise DatasetError("label record needs a name", origin)
            _parse_at(origin, rec.name)
        out.append(ChartSymbol(rec.kind, round(x), round(y), rec.color, end, rec.dotted == "yes",
                               (x, y), rec.name))
    return out


def _load_local(path: Path) -> LocalData:
    local = LocalData()
    if not path.exists():
        return local
    base = [Symbol(name, deg, None, frozenset({2}), None, "e1") for name, deg in LOCAL_GENERATORS]
    records = _load(path, LocalRecord)
    einf = []
    for origin, rec in records:
        if rec.record == "einf":
            if not rec.name or not rec.deg:
                raise DatasetError("einf record needs name and deg", origin)
            desc = _parse_at(origin, rec.desc) if rec.desc else None
            einf.append(Symbol(rec.name, Degree(*rec.deg), desc, frozenset(), 4, origin))
    local.symbols = _merge_symbols(base + einf)
    local.einf = [local.symbols[s.name] for s in einf]
    ns = _Namespace(local.symbols, {"h1": h_degree(1, 1)})
    for sym in local.einf:
        if sym.desc is not None and sym.desc.names() != {sym.name}:
            ns.check(sym.desc, sym.origin, sym.degree, what=f"description of {sym.name}")
    for origin, rec in records:
        if rec.record == "d2":
            if not rec.source or not rec.value:
                raise DatasetError("d2 record needs source and value", origin)
            _add_assignment(local.rule, rec.source, rec.value, origin, ns)
        elif rec.record in ("relation", "einf_relation", "hidden"):
            if not rec.relation:
                raise DatasetError(f"{rec.record} record needs a relation", origin)
            lhs, rhs = parse_relation(rec.relation, origin)
            degree = ns.check(lhs, origin, what="local relation")
            if rhs is not None:
                ns.check(rhs, origin, degree, what="local relation", compare=local_key)
            target = {"relation": local.relations, "einf_relation": local.einf_relations,
                      "hidden": local.hidden_relations}[rec.record]
            target.append(Relation(lhs, rhs, degree, None, origin))
        elif rec.record == "ext":
            local.ext_names = tuple((rec.names or "").split())
            unknown = [n for n in local.ext_names if n not in local.symbols]
            if unknown:
                raise DatasetError(f"unknown Ext generators {unknown}", origin)
    return local


def load_dataset(path) -> Dataset:
    """Load and cross-check every table under ``path``."""
    root = Path(path)
    if not (root / "generators").is_dir():
        raise DatasetError("dataset directory has no generators/ folder", str(root))
    symbols: List[Symbol] = []
    for file in sorted((root / "generators").glob("*.txt")):
        symbols.extend(_symbols_from(file))
    merged = _merge_symbols(symbols)
    ns = _Namespace(merged)
    _check_symbols(ns)
    rules = _load_rules(root, ns)
    relations: List[Relation] = []
    for file in sorted((root / "relations").glob("*.txt")):
        relations.extend(_load_relations(file, ns, page=2))
    chart = ChartData(_load_chart(root / "charts" / "ext.txt"), _load_hidden(root, ns),
                      _load_hidden_relations(root / "hidden" / "relations.txt", ns))
    local = _load_local(root / "local" / "a3_h1local.txt")
    logger.info("loaded dataset %s: %d symbols, %d d_r values, %d relations, %d chart symbols",
                root, len(merged), sum(len(r.assignments) for r in rules.values()),
                len(relations), len(chart.symbols))
    return Dataset(root, merged, rules, relations, chart, local)
