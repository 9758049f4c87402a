"""The spectral-sequence driver: pages E_r as cycle and boundary modules inside E1.

Each page is stored per cell (s, f) as two echelon bases over F2[tau] in the
E1 module of that cell: ``z`` (elements surviving to E_r) and ``b`` (elements
that have become boundaries).  A transition takes the page generators of
E_r, extends the tabulated d_r values to every page monomial by the Leibniz
rule, and takes homology.

Cells fall into three regions.  Core cells (0 <= s <= s_max, 0 <= f <= f_max)
carry both bases.  Target-only cells just outside the core only receive
differentials and carry ``b``.  Source-only cells supply differentials into
the core and carry nothing.
"""

import concurrent.futures
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from motivic_may.errors import ConsistencyError, DatasetError, DegreeMismatchError, MayError
from motivic_may.services.algebra import (
    AlgElem, Degree, GenRegistry, Generator, Monomial, MonomialEnumerator, degree_of, multiply,
)
from motivic_may.services.coeff import (
    EchelonBasis, HVec, Summand, TauMatrix, TauPoly, kernel_and_image, smith_decompose,
)
from motivic_may.services.e1 import LOCAL, E1Term, Profile
from motivic_may.services.tables import (
    E1_NAME, Dataset, DrRule, ExprAst, Symbol, braced_parts, evaluate, parse_expr,
)

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]

E_INFINITY = 34
PAGE_KEYS: Tuple[int, ...] = (1,) + tuple(range(2, E_INFINITY + 1, 2))


def page_key(r: int) -> int:
    """Stored page holding E_r: odd pages above 1 equal the next even one."""
    if r < 1:
        raise MayError(f"no page E{r}")
    if r == 1:
        return 1
    return min(r + r % 2, E_INFINITY)


def next_page(r: int) -> int:
    return 2 if r == 1 else r + 2


@dataclass
class PageCell:
    """One cell of a page: cycles and boundaries inside the E1 module of (s, f)."""

    s: int
    f: int
    z: Optional[EchelonBasis]
    b: EchelonBasis

    @property
    def cell(self) -> Cell:
        return (self.s, self.f)

    def f2_dimension(self, weight: int) -> int:
        if self.z is None:
            raise MayError(f"cell {self.cell} only carries boundaries")
        return self.z.rank_at(weight) - self.b.rank_at(weight)

    def summands(self) -> List[Tuple[Summand, HVec]]:
        """Cyclic decomposition of Z/B with a generator for each summand."""
        if self.z is None:
            raise MayError(f"cell {self.cell} only carries boundaries")
        z_vectors = self.z.basis()
        entries = {}
        for j, vec in enumerate(self.b.basis()):
            coords = self.z.coordinates(vec)
            if coords is None:
                raise ConsistencyError("boundary is not a cycle", cell=self.cell, witness=str(sorted(vec.support)))
            for i in coords:
                entries[(i, j)] = z_vectors[i].weight - vec.weight
        matrix = TauMatrix(len(z_vectors), len(self.b), {k: TauPoly.power(v) for k, v in entries.items()},
                           tuple(v.weight for v in z_vectors), tuple(v.weight for v in self.b.basis()))
        out = []
        for summand in smith_decompose(matrix).summands:
            support: FrozenSet[int] = frozenset()
            for i in summand.generator:
                support = support ^ z_vectors[i].support
            out.append((summand, HVec(summand.weight, support)))
        return sorted(out, key=lambda item: (item[0].weight, item[0].order or 0, sorted(item[1].support)))


Page = Dict[Cell, PageCell]


@dataclass
class SequenceData:
    """Symbols and differential tables feeding one profile."""

    symbols: Dict[str, Symbol]
    rules: Dict[int, DrRule]
    unit_names: FrozenSet[str] = frozenset()

    @classmethod
    def for_profile(cls, dataset: Dataset, profile: Profile) -> "SequenceData":
        if profile.flavor == LOCAL:
            return cls(dataset.local.symbols, {2: dataset.local.rule}, frozenset({"h1"}))
        return cls(dataset.symbols, dataset.rules)

    def rule(self, r: int) -> DrRule:
        return self.rules.get(r, DrRule(r))

    def generators_on_page(self, r: int) -> List[Symbol]:
        return sorted((s for s in self.symbols.values() if s.generates(r)),
                      key=lambda s: (s.degree.f, s.degree.s, s.degree.w, s.name))


class OutsideProfile(MayError):
    """A name refers to an E1 generator the profile does not contain."""


@dataclass
class PageGenerators:
    """Multiplicative generators of one page with their representatives and d_r values."""

    page: int
    registry: GenRegistry
    reps: List[AlgElem]
    values: List[AlgElem]
    enumerator: MonomialEnumerator
    rep_cache: Dict[Monomial, AlgElem] = field(default_factory=dict)

    def name(self, index: int) -> str:
        return self.registry.generators[index].name


@dataclass
class _Rows:
    monomials: List[Monomial]
    index: Dict[Monomial, int]
    weights: Tuple[int, ...]


@dataclass
class _CellResult:
    source: Cell
    target: Cell
    z: Optional[EchelonBasis] = None
    b_target: Optional[EchelonBasis] = None
    problems: List[Tuple[str, Cell, str]] = field(default_factory=list)


class SpectralSequence:
    """Computes E_1 through E_through for one profile inside a rectangle of cells."""

    def __init__(self, profile: Profile, e1: E1Term, data: SequenceData, s_max: int, f_max: int,
                 through: int = E_INFINITY, workers: int = 1, strict: bool = True,
                 check_well_defined: bool = True, check_completeness: bool = True):
        self.profile = profile
        self.e1 = e1
        self.data = data
        self.s_max = s_max
        self.f_max = f_max
        self.through = min(through, profile.through, E_INFINITY)
        self.workers = max(1, workers)
        self.strict = strict
        self.check_well_defined = check_well_defined
        self.check_completeness = check_completeness
        self.shift = profile.cell_shift(2)
        self.dw = profile.d_shift(2).w
        self.core: Set[Cell] = {(s, f) for s in range(s_max + 1) for f in range(f_max + 1)}
        ds, df = self.shift
        self.target_only: Set[Cell] = {(s + ds, f + df) for s, f in self.core
                                       if s + ds >= 0 and f + df >= 0} - self.core
        self.source_only: Set[Cell] = {(s - ds, f - df) for s, f in self.core
                                       if s - ds >= 0 and f - df >= 0} - self.core
        self.pages: Dict[int, Page] = {}
        self.generators: Dict[int, PageGenerators] = {}
        self.diagnostics: List[Dict[str, object]] = []
        self._rows: Dict[Cell, _Rows] = {}
        self._reps: Dict[str, AlgElem] = {}

    # -- names and representatives -------------------------------------------------

    def rep(self, name: str) -> AlgElem:
        """E1 representative of a named element."""
        if name in self._reps:
            return self._reps[name]
        if name in self.data.unit_names:
            value = AlgElem.one()
        elif name in self.e1.registry:
            value = AlgElem.of(Monomial.of({self.e1.registry.index(name): 1}))
        elif E1_NAME.match(name):
            raise OutsideProfile(f"{name} is not an E1 generator of profile {self.profile.name}")
        else:
            sym = self.data.symbols.get(name)
            if sym is None:
                raise DatasetError(f"unknown name {name!r}")
            ast = sym.desc if sym.desc is not None else braced_parts(sym.name)
            if ast is None:
                raise DatasetError(f"symbol {name!r} has no description", sym.origin)
            value = self.evaluate(ast)
        self._reps[name] = value
        return value

    def evaluate(self, ast: ExprAst) -> AlgElem:
        return self.e1.reduce(evaluate(ast, self.rep, use_tau=self.profile.uses_tau))

    def normalized(self, sym: Symbol) -> Degree:
        return self.profile.normalize(sym.degree)

    # -- cells and vectors ---------------------------------------------------------

    def rows(self, cell: Cell) -> _Rows:
        if cell not in self._rows:
            monos = self.e1.cell_basis(*cell) if cell[0] >= 0 and cell[1] >= 0 else []
            self._rows[cell] = _Rows(monos, {m: i for i, m in enumerate(monos)},
                                     tuple(degree_of(self.e1.registry, m).w for m in monos))
        return self._rows[cell]

    def target(self, cell: Cell) -> Cell:
        return (cell[0] + self.shift[0], cell[1] + self.shift[1])

    def source(self, cell: Cell) -> Cell:
        return (cell[0] - self.shift[0], cell[1] - self.shift[1])

    def vector(self, elem: AlgElem, cell: Cell, weight: int) -> HVec:
        """``elem`` as a homogeneous vector of the given weight in the E1 module of ``cell``."""
        rows = self.rows(cell)
        if not self.profile.uses_tau:
            weight = 0
        support: Set[int] = set()
        for term in elem.terms:
            row = rows.index.get(term.tau_free())
            if row is None:
                raise DegreeMismatchError(
                    f"term {term.format(self.e1.registry)} does not lie in cell {cell}")
            if self.profile.uses_tau and rows.weights[row] - term.tau_exp != weight:
                raise DegreeMismatchError(
                    f"term {term.format(self.e1.registry)} has weight {rows.weights[row] - term.tau_exp}, "
                    f"expected {weight} in cell {cell}")
            support ^= {row}
        return HVec(weight, frozenset(support))

    def element(self, vec: HVec, cell: Cell) -> AlgElem:
        """Inverse of :meth:`vector`."""
        rows = self.rows(cell)
        tau = self.profile.uses_tau
        return AlgElem.of(*(Monomial(rows.monomials[i].exps, rows.weights[i] - vec.weight if tau else 0)
                            for i in vec.support))

    def locate(self, elem: AlgElem) -> Tuple[Cell, int]:
        """Cell and weight of a homogeneous nonzero E1 element."""
        if elem.is_zero():
            raise MayError("the zero element has no degree")
        degrees = {degree_of(self.e1.registry, m) for m in elem.terms}
        if len({(d.s, d.f, d.w) for d in degrees}) > 1:
            raise DegreeMismatchError(f"inhomogeneous element {elem.format(self.e1.registry)}")
        d = next(iter(degrees))
        return (d.s, d.f), d.w

    def format(self, vec: HVec, cell: Cell) -> str:
        return self.element(vec, cell).format(self.e1.registry)

    # -- page generators -------------------------------------------------------------

    def page_generators(self, r: int) -> PageGenerators:
        """Generators of E_r in range, their representatives and their d_r values."""
        if r in self.generators:
            return self.generators[r]
        if r == 1:
            gens = list(self.e1.registry)
            reps = [AlgElem.of(Monomial.of({i: 1})) for i in range(len(gens))]
            values = [self.e1.d1[i] for i in range(len(gens))]
            registry = self.e1.registry
        else:
            rule = self.data.rule(r)
            gens, reps, values = [], [], []
            ds = abs(self.shift[0])
            for sym in self.data.generators_on_page(r):
                degree = self.normalized(sym)
                if degree.s > self.s_max + ds or degree.f > self.f_max:
                    continue
                try:
                    rep = self.rep(sym.name)
                    value = self.evaluate(rule.assignments[sym.name]) if sym.name in rule.assignments \
                        else AlgElem.zero()
                except OutsideProfile as exc:
                    logger.debug("skipping %s on E%d: %s", sym.name, r, exc)
                    continue
                gens.append(Generator(sym.name, degree))
                reps.append(rep)
                values.append(value)
            registry = GenRegistry(gens)
        result = PageGenerators(r, registry, reps, values, MonomialEnumerator(registry))
        self.generators[r] = result
        logger.debug("E%d has %d generators in range", r, len(registry))
        return result

    def monomial_rep(self, gens: PageGenerators, mono: Monomial) -> AlgElem:
        """Product of the factor representatives, memoized by peeling one factor."""
        cached = gens.rep_cache.get(mono)
        if cached is not None:
            return cached
        if not mono.exps:
            return AlgElem.one()
        index = mono.exps[0][0]
        rest = dict(mono.exps)
        rest[index] -= 1
        value = self.e1.reduce(multiply(self.monomial_rep(gens, Monomial.of(rest)), gens.reps[index]))
        gens.rep_cache[mono] = value
        return value

    def monomial_value(self, gens: PageGenerators, mono: Monomial) -> AlgElem:
        """d_r of a page monomial by the Leibniz rule; even powers are cycles."""
        total = AlgElem.zero()
        for index, exp in mono.exps:
            if exp % 2 == 0 or gens.values[index].is_zero():
                continue
            rest = dict(mono.exps)
            rest[index] -= 1
            total = total + multiply(gens.values[index], self.monomial_rep(gens, Monomial.of(rest)))
        return self.e1.reduce(total)

    # -- driver ----------------------------------------------------------------------

    def _problem(self, message: str, page: int, cell: Cell, witness: str = "") -> None:
        if self.strict:
            raise ConsistencyError(message, page, cell, witness or None)
        logger.warning("E%d %s: %s %s", page, cell, message, witness)
        self.diagnostics.append({"page": page, "cell": list(cell), "message": message, "witness": witness})

    def initial_page(self) -> Page:
        page: Page = {}
        for cell in sorted(self.core):
            rows = self.rows(cell)
            z = EchelonBasis(rows.weights)
            for i, w in enumerate(rows.weights):
                z.insert(HVec(w if self.profile.uses_tau else 0, frozenset({i})))
            page[cell] = PageCell(cell[0], cell[1], z, EchelonBasis(rows.weights))
        for cell in sorted(self.target_only):
            page[cell] = PageCell(cell[0], cell[1], None, EchelonBasis(self.rows(cell).weights))
        return page

    def check_generators(self, r: int, page: Page, gens: PageGenerators) -> None:
        """Representatives are cycles on E_r and values are classes of E_r."""
        for index, gen in enumerate(gens.registry):
            cell = (gen.degree.s, gen.degree.f)
            if cell not in self.core:
                continue
            vec = self.vector(gens.reps[index], cell, gen.degree.w)
            if vec.is_zero() or not page[cell].z.contains(vec):
                self._problem(f"generator {gen.name} is not a nonzero cycle", r, cell,
                              gens.reps[index].format(self.e1.registry))
            elif page[cell].b.contains(vec):
                logger.warning("E%d: generator %s represents zero", r, gen.name)
            target = self.target(cell)
            if target in self.core and not gens.values[index].is_zero():
                value = self.vector(gens.values[index], target, gen.degree.w + self.dw)
                if not page[target].z.contains(value):
                    self._problem(f"d{r}({gen.name}) is not a cycle", r, target,
                                  gens.values[index].format(self.e1.registry))

    def ingest_dr(self, r: int, source: Cell) -> Tuple[List[HVec], List[HVec]]:
        """Representatives and d_r values of the page monomials in ``source``."""
        gens = self.page_generators(r)
        target = self.target(source)
        reps: List[HVec] = []
        values: List[HVec] = []
        for mono in gens.enumerator.monomials_in_cell(*source):
            w = degree_of(gens.registry, mono).w
            reps.append(self.vector(self.monomial_rep(gens, mono), source, w))
            value = self.monomial_value(gens, mono)
            if target[0] < 0 or target[1] < 0:
                if not value.is_zero():
                    self._problem(f"d{r} of {mono.format(gens.registry)} leaves the chart", r, source)
                values.append(HVec(w + self.dw))
            else:
                values.append(self.vector(value, target, w + self.dw))
        return reps, values

    def completeness_witness(self, r: int, cell: Cell, reps: Optional[List[HVec]] = None) -> Optional[HVec]:
        """A cycle of E_r(cell) outside the span of page monomials and boundaries, if any."""
        if reps is None:
            reps = self.ingest_dr(r, cell)[0]
        pc = self.page(r)[cell]
        span = pc.b.copy()
        for vec in reps:
            span.insert(vec)
        for z in pc.z.basis():
            if not span.contains(z):
                return z
        return None

    def _transition_cell(self, r: int, page: Page, source: Cell) -> _CellResult:
        target = self.target(source)
        result = _CellResult(source, target)
        reps, values = self.ingest_dr(r, source)
        b_target = page[target].b if target in page else None
        rows_t = self.rows(target).weights
        if source in self.core:
            cell = page[source]
            if r > 1 and self.check_completeness:
                missing = self.completeness_witness(r, source, reps)
                if missing is not None:
                    result.problems.append(("page monomials do not span the cycles", source,
                                            self.format(missing, source)))
            if r > 1 and self.check_well_defined:
                _, relations = kernel_and_image(reps + cell.b.basis(), self.rows(source).weights)
                for weight, tags in relations:
                    image = HVec(weight + self.dw, _xor(values[i].support for i in tags if i < len(reps)))
                    if image.is_zero():
                        continue
                    if b_target is None or not b_target.contains(image):
                        result.problems.append(("a relation among page monomials has a nonzero d"
                                                f"{r}", source, self.format(image, target)))
                        break
            columns = values + (b_target.basis() if b_target is not None else [])
            _, kernel = kernel_and_image(columns, rows_t)
            z = cell.b.copy()
            for weight, tags in kernel:
                vec = HVec(weight - self.dw, _xor(reps[i].support for i in tags if i < len(reps)))
                z.insert(vec)
            result.z = z
        if b_target is not None:
            b = b_target.copy()
            for vec in values:
                b.insert(vec)
            result.b_target = b
        return result

    def _chain_key(self, cell: Cell) -> int:
        ds, df = self.shift
        return cell[0] * df - cell[1] * ds

    def _map_cells(self, fn: Callable[[Cell], _CellResult], cells: Iterable[Cell]) -> Dict[Cell, _CellResult]:
        groups: Dict[int, List[Cell]] = {}
        for cell in sorted(cells):
            groups.setdefault(self._chain_key(cell), []).append(cell)

        def run_group(group):
            return [fn(cell) for cell in group]

        results: Dict[Cell, _CellResult] = {}
        if self.workers == 1:
            for key in sorted(groups):
                for res in run_group(groups[key]):
                    results[res.source] = res
        else:
            with concurrent.futures.ThreadPoolExecutor(max_workers=self.workers) as executor:
                futures = {executor.submit(run_group, groups[key]): key for key in sorted(groups)}
                for future in concurrent.futures.as_completed(futures):
                    for res in future.result():
                        results[res.source] = res
        return dict(sorted(results.items()))

    def take_homology(self, r: int, page: Page, results: Dict[Cell, _CellResult]) -> Page:
        """Assemble E_{r+2} from the per-cell kernels and images and check d o d = 0."""
        new_page: Page = {}
        for res in results.values():
            for message, cell, witness in res.problems:
                self._problem(message, r, cell, witness)
        for cell in sorted(self.core | self.target_only):
            old = page[cell]
            res = results.get(cell)
            z = res.z if res is not None and res.z is not None else old.z
            incoming = results.get(self.source(cell))
            b = incoming.b_target if incoming is not None and incoming.b_target is not None else old.b
            new_page[cell] = PageCell(cell[0], cell[1], z, b)
        nxt = next_page(r)
        for cell in sorted(self.core):
            pc = new_page[cell]
            for vec in pc.b.basis():
                if not pc.z.contains(vec):
                    self._problem("d o d is not zero", nxt, cell, self.format(vec, cell))
                    break
        return new_page

    def transition(self, r: int) -> Page:
        page = self.pages[r]
        nxt = next_page(r)
        rule_empty = r > 1 and self.data.rule(r).is_empty()
        if r == 1 and all(v.is_zero() for v in self.e1.d1.values()):
            rule_empty = True
        if rule_empty:
            logger.info("d%d vanishes: E%d = E%d", r, nxt, r)
            self.pages[nxt] = page
            return page
        started = time.time()
        gens = self.page_generators(r)
        if r > 1:
            self.check_generators(r, page, gens)
        sources = sorted(c for c in self.core | self.source_only if self.target(c) in page or c in self.core)
        results = self._map_cells(lambda c: self._transition_cell(r, page, c), sources)
        new_page = self.take_homology(r, page, results)
        self.pages[nxt] = new_page
        logger.info("d%d: computed E%d on %d cells in %.1fs", r, nxt, len(new_page), time.time() - started)
        return new_page

    def run_all(self) -> Page:
        """Compute every page up to ``through``; returns the last one."""
        if 1 not in self.pages:
            self.pages[1] = self.initial_page()
        r = 1
        while next_page(r) <= self.through:
            if next_page(r) not in self.pages:
                self.transition(r)
            r = next_page(r)
        return self.pages[r]

    @property
    def last_page(self) -> int:
        return max(self.pages, default=0)

    # -- queries -----------------------------------------------------------------------

    def page(self, r: int) -> Page:
        key = page_key(r)
        if key not in self.pages:
            raise MayError(f"page E{r} has not been computed (computed through E{self.last_page})")
        return self.pages[key]

    def cell(self, r: int, s: int, f: int) -> PageCell:
        pc = self.page(r).get((s, f))
        if pc is None or pc.z is None:
            raise MayError(f"cell ({s}, {f}) is outside the computed range")
        return pc

    def f2_dimension(self, r: int, s: int, f: int, w: int) -> int:
        if not self.profile.uses_tau and w != 0:
            return 0
        return self.cell(r, s, f).f2_dimension(w)

    def summands(self, r: int, s: int, f: int) -> List[Tuple[Summand, HVec]]:
        return self.cell(r, s, f).summands()

    def class_is_zero(self, r: int, elem: AlgElem) -> bool:
        """Whether a cycle ``elem`` represents zero on E_r."""
        if elem.is_zero():
            return True
        cell, w = self.locate(elem)
        pc = self.cell(r, *cell)
        vec = self.vector(elem, cell, w)
        if not pc.z.contains(vec):
            raise MayError(f"{elem.format(self.e1.registry)} is not a cycle on E{r}")
        return pc.b.contains(vec)

    def page_of_death(self, elem: AlgElem) -> Optional[int]:
        """First computed page on which ``elem`` is a boundary, None if it survives."""
        cell, w = self.locate(elem)
        vec = self.vector(elem, cell, w)
        for key in PAGE_KEYS:
            if key not in self.pages:
                break
            pc = self.pages[key].get(cell)
            if pc is None or pc.z is None:
                raise MayError(f"cell {cell} is outside the computed range")
            if pc.b.contains(vec):
                return key
        return None

    def element_of(self, text: str) -> AlgElem:
        """Evaluate an expression in dataset names to its E1 representative."""
        return self.evaluate(parse_expr(text))

    def check_multiplicative(self, r: int, x: str, y: str, product: Optional[str] = None) -> bool:
        """Class of rep(x) rep(y) equals the class of the product symbol on E_r."""
        product = product or "{" + f"{x} {y}" + "}"
        if product not in self.data.symbols:
            raise MayError(f"no symbol named {product!r}")
        left = self.e1.reduce(multiply(self.rep(x), self.rep(y)))
        right = self.rep(product)
        return self.class_is_zero(r, left + right)

    def labels(self, r: int, s: int, f: int) -> Dict[int, List[str]]:
        """Names of page monomials forming an F2[tau]-basis of E_r(s, f) by weight."""
        pc = self.cell(r, s, f)
        gens = self.page_generators(page_key(r))
        found = pc.b.copy()
        picked: List[Tuple[Monomial, int]] = []
        monos = gens.enumerator.monomials_in_cell(s, f)
        for mono in sorted(monos, key=lambda m: (-degree_of(gens.registry, m).w, m.exps)):
            w = degree_of(gens.registry, mono).w
            vec = self.vector(self.monomial_rep(gens, mono), (s, f), w)
            if not vec.is_zero() and found.insert(vec):
                picked.append((mono, w))
        out: Dict[int, List[str]] = {}
        for mono, w in picked:
            out.setdefault(w, []).append(mono.format(gens.registry))
        return {w: sorted(names) for w, names in sorted(out.items())}

    def dense_recompute_cell(self, r: int, s: int, f: int) -> Dict[int, int]:
        """F2-dimensions of E_r(s, f) per weight, recomputed with dense GF(2) elimination."""
        from motivic_may.services import dense
        return dense.recompute_cell(self, r, s, f)


def _xor(supports: Iterable[FrozenSet[int]]) -> FrozenSet[int]:
    acc: Set[int] = set()
    for support in supports:
        acc ^= support
    return frozenset(acc)


def build_sequence(profile: Profile, e1: E1Term, dataset: Dataset, s_max: int, f_max: int,
                   through: int = E_INFINITY, **options) -> SpectralSequence:
    return SpectralSequence(profile, e1, SequenceData.for_profile(dataset, profile), s_max, f_max,
                            through, **options)
