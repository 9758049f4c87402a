"""E1-term of the May spectral sequence for each supported profile."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from motivic_may.errors import ConsistencyError, MayError
from motivic_may.services.algebra import (
    AlgElem, Degree, GenRegistry, Generator, Monomial, MonomialEnumerator, degree_of, multiply,
)
from motivic_may.services.coeff import TauMatrix, TauPoly

logger = logging.getLogger(__name__)

MOTIVIC = "motivic"
CLASSICAL = "classical"
LOCAL = "local"


@dataclass(frozen=True)
class Profile:
    """Which E1 generators exist and how degrees and tau are interpreted."""

    name: str
    flavor: str
    max_i_plus_j: Optional[int] = None
    through: int = 34

    def includes(self, i: int, j: int) -> bool:
        return self.max_i_plus_j is None or i + j <= self.max_i_plus_j

    @property
    def uses_tau(self) -> bool:
        return self.flavor != CLASSICAL

    def normalize(self, degree: Degree) -> Degree:
        """Degree as seen by this profile."""
        if self.flavor == CLASSICAL:
            return Degree(degree.m, degree.s, degree.f, 0)
        if self.flavor == LOCAL:
            return Degree(degree.m - degree.f, degree.s - degree.f, 0, degree.w - degree.f)
        return degree

    def d_shift(self, r: int) -> Degree:
        """Degree of the differential d_r."""
        if self.flavor == LOCAL:
            return Degree(-r, -2, 0, -1)
        return Degree(0 if r == 1 else -(r - 1), -1, 1, 0)

    def cell_shift(self, r: int) -> Tuple[int, int]:
        shift = self.d_shift(r)
        return shift.s, shift.f


PROFILES: Dict[str, Profile] = {
    "motivic": Profile("motivic", MOTIVIC),
    "classical": Profile("classical", CLASSICAL),
    "a3": Profile("a3", MOTIVIC, max_i_plus_j=4, through=2),
    "a3-h1local": Profile("a3-h1local", LOCAL, max_i_plus_j=4),
}


def get_profile(name: str) -> Profile:
    try:
        return PROFILES[name]
    except KeyError:
        raise MayError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")


def h_name(i: int, j: int) -> str:
    return f"h{i}{j}"


def h_degree(i: int, j: int) -> Degree:
    """May E1 degree of h_ij."""
    if j == 0:
        return Degree(i, 2 ** i - 2, 1, 2 ** (i - 1) - 1)
    return Degree(i, 2 ** j * (2 ** i - 1) - 1, 1, 2 ** (j - 1) * (2 ** i - 1))


# Generators of the h1-local E2-term of A(3), with their unlocalized degrees.
LOCAL_GENERATORS: Tuple[Tuple[str, Degree], ...] = (
    ("h3", Degree(1, 7, 1, 4)),
    ("b20", Degree(4, 4, 2, 2)),
    ("h0(1)", Degree(4, 7, 2, 4)),
    ("b21", Degree(4, 10, 2, 6)),
    ("b31", Degree(6, 26, 2, 14)),
    ("b40'", Degree(10, 30, 4, 16)),
)
LOCAL_RELATIONS: Tuple[Tuple[str, ...], ...] = (("h3", "h0(1)"),)


@dataclass
class E1Term:
    """Registry, closed-form d1 and monomial relations of the starting page."""

    profile: Profile
    registry: GenRegistry
    d1: Dict[int, AlgElem]
    relations: Tuple[Monomial, ...] = ()
    s_max: int = 0
    f_max: int = 0
    _enumerator: Optional[MonomialEnumerator] = field(default=None, repr=False)

    @property
    def enumerator(self) -> MonomialEnumerator:
        if self._enumerator is None:
            self._enumerator = MonomialEnumerator(self.registry)
        return self._enumerator

    def is_basis(self, mono: Monomial) -> bool:
        """False for monomials divisible by a monomial relation."""
        exps = mono.as_dict()
        return not any(all(exps.get(i, 0) >= e for i, e in rel.exps) for rel in self.relations)

    def reduce(self, elem: AlgElem) -> AlgElem:
        """Drop the terms killed by monomial relations."""
        if not self.relations:
            return elem
        return AlgElem(frozenset(m for m in elem.terms if self.is_basis(m)))

    def cell_basis(self, s: int, f: int) -> List[Monomial]:
        """tau-free basis monomials of cell (s, f) ordered by (weight, exponents)."""
        monos = [m for m in self.enumerator.monomials_in_cell(s, f) if self.is_basis(m)]
        return sorted(monos, key=lambda m: (degree_of(self.registry, m).w, m.exps))

    def differential(self, mono: Monomial) -> AlgElem:
        """d1 of a monomial by the Leibniz rule (only odd exponents contribute)."""
        total = AlgElem.zero()
        exps = mono.as_dict()
        for index, exp in exps.items():
            if exp % 2 == 0 or self.d1[index].is_zero():
                continue
            rest = dict(exps)
            rest[index] -= 1
            total = total + multiply(self.d1[index], AlgElem.of(Monomial.of(rest, mono.tau_exp)))
        return self.reduce(total)


def _e1_registry(profile: Profile, stem_limit: int) -> Tuple[List[Generator], Dict[Tuple[int, int], int]]:
    gens: List[Generator] = []
    where: Dict[Tuple[int, int], int] = {}
    i = 1
    while h_degree(i, 0).s <= stem_limit or h_degree(i, 1).s <= stem_limit:
        j = 0
        while h_degree(i, j).s <= stem_limit:
            if profile.includes(i, j):
                where[(i, j)] = len(gens)
                gens.append(Generator(h_name(i, j), profile.normalize(h_degree(i, j)),
                                      (("i", str(i)), ("j", str(j)))))
            j += 1
        i += 1
    return gens, where


def build_e1(profile: Profile, s_max: int, f_max: int) -> E1Term:
    """Registry truncated to stems <= s_max + f_max, with d1 on every generator."""
    if s_max < 0 or f_max < 1:
        raise MayError(f"bounds must be positive, got s_max={s_max}, f_max={f_max}")
    if profile.flavor == LOCAL:
        registry = GenRegistry(Generator(name, profile.normalize(deg)) for name, deg in LOCAL_GENERATORS)
        relations = tuple(Monomial.of({registry.index(n): 1 for n in rel}) for rel in LOCAL_RELATIONS)
        d1 = {i: AlgElem.zero() for i in range(len(registry))}
        logger.info("built h1-local E1 with %d generators", len(registry))
        return E1Term(profile, registry, d1, relations, s_max, f_max)

    gens, where = _e1_registry(profile, s_max + f_max)
    registry = GenRegistry(gens)
    d1: Dict[int, AlgElem] = {}
    shift = profile.d_shift(1)
    for (i, j), index in where.items():
        total = AlgElem.zero()
        for k in range(1, i):
            left, right = (k, j), (i - k, k + j)
            if left not in where or right not in where:
                raise ConsistencyError(
                    f"d1({h_name(i, j)}) needs {h_name(*left)} and {h_name(*right)}, excluded by profile {profile.name}")
            total = total + AlgElem.of(Monomial.of({where[left]: 1, where[right]: 1}))
        d1[index] = total
        for mono in total.terms:
            if degree_of(registry, mono) != registry.degree(index) + shift:
                raise ConsistencyError(f"d1({h_name(i, j)}) is not homogeneous of degree shift {shift}")
    logger.info("built %s E1 with %d generators (stems <= %d)", profile.name, len(registry), s_max + f_max)
    return E1Term(profile, registry, d1, (), s_max, f_max)


def d1_value(e1: E1Term, name: str) -> AlgElem:
    return e1.d1[e1.registry.index(name)]


def d1_matrix(e1: E1Term, s: int, f: int, w: Optional[int] = None) -> TauMatrix:
    """Matrix of d1 from cell (s, f) to (s - 1, f + 1), optionally one weight only."""
    ds, df = e1.profile.cell_shift(1)
    cols = e1.cell_basis(s, f)
    rows = e1.cell_basis(s + ds, f + df)
    weight = lambda m: degree_of(e1.registry, m).w
    if w is not None:
        cols = [m for m in cols if weight(m) == w]
        rows = [m for m in rows if weight(m) == w]
    row_index = {m: i for i, m in enumerate(rows)}
    entries = {}
    for j, mono in enumerate(cols):
        for term in e1.differential(mono).terms:
            i = row_index[term.tau_free()]
            entries[(i, j)] = TauPoly.power(weight(term.tau_free()) - weight(mono))
    return TauMatrix(len(rows), len(cols), entries,
                     tuple(weight(m) for m in rows), tuple(weight(m) for m in cols))
