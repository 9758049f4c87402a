"""Free graded-commutative polynomial algebra over F2[tau] on registered generators."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Tuple

from motivic_may.errors import DegreeMismatchError, MayError


class Degree(NamedTuple):
    """(May filtration, stem, Adams filtration, weight)."""

    m: int
    s: int
    f: int
    w: int

    def __add__(self, other) -> "Degree":
        return Degree(self.m + other[0], self.s + other[1], self.f + other[2], self.w + other[3])

    def __sub__(self, other) -> "Degree":
        return Degree(self.m - other[0], self.s - other[1], self.f - other[2], self.w - other[3])

    def scale(self, k: int) -> "Degree":
        return Degree(self.m * k, self.s * k, self.f * k, self.w * k)

    @classmethod
    def zero(cls) -> "Degree":
        return cls(0, 0, 0, 0)

    def __str__(self) -> str:
        return f"({self.m},{self.s},{self.f},{self.w})"


TAU_DEGREE = Degree(0, 0, 0, -1)


@dataclass(frozen=True)
class Generator:
    name: str
    degree: Degree
    meta: Tuple[Tuple[str, str], ...] = ()


class GenRegistry:
    """Ordered, immutable list of polynomial generators."""

    def __init__(self, generators: Iterable[Generator]):
        self.generators: Tuple[Generator, ...] = tuple(generators)
        self._index: Dict[str, int] = {}
        for i, gen in enumerate(self.generators):
            if gen.name in self._index:
                raise MayError(f"duplicate generator name {gen.name!r}")
            if gen.degree.f < 0 or gen.degree.s < 0 or gen.degree.s + gen.degree.f < 1:
                raise MayError(f"generator {gen.name!r} has degree {gen.degree} outside the enumerable range")
            self._index[gen.name] = i

    def __len__(self) -> int:
        return len(self.generators)

    def __iter__(self) -> Iterator[Generator]:
        return iter(self.generators)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise MayError(f"unknown generator {name!r}")

    def degree(self, index: int) -> Degree:
        if not 0 <= index < len(self.generators):
            raise MayError(f"unknown generator index {index}")
        return self.generators[index].degree

    def names(self) -> List[str]:
        return [g.name for g in self.generators]


@dataclass(frozen=True, order=True)
class Monomial:
    """tau^tau_exp times a product of generators; ``exps`` is sorted (index, exponent) pairs."""

    exps: Tuple[Tuple[int, int], ...] = ()
    tau_exp: int = 0

    @classmethod
    def of(cls, exps: Dict[int, int], tau_exp: int = 0) -> "Monomial":
        return cls(tuple(sorted((i, e) for i, e in exps.items() if e)), tau_exp)

    def as_dict(self) -> Dict[int, int]:
        return dict(self.exps)

    def tau_free(self) -> "Monomial":
        return Monomial(self.exps, 0)

    def times(self, other: "Monomial") -> "Monomial":
        exps = dict(self.exps)
        for i, e in other.exps:
            exps[i] = exps.get(i, 0) + e
        return Monomial.of(exps, self.tau_exp + other.tau_exp)

    def exponent(self, index: int) -> int:
        return dict(self.exps).get(index, 0)

    def format(self, registry: GenRegistry) -> str:
        parts = []
        if self.tau_exp:
            parts.append("t" if self.tau_exp == 1 else f"t^{self.tau_exp}")
        for i, e in self.exps:
            name = registry.generators[i].name
            parts.append(name if e == 1 else f"{name}^{e}")
        return " ".join(parts) or "1"


@dataclass(frozen=True)
class AlgElem:
    """F2-linear combination of monomials."""

    terms: FrozenSet[Monomial] = field(default_factory=frozenset)

    @classmethod
    def zero(cls) -> "AlgElem":
        return cls(frozenset())

    @classmethod
    def one(cls) -> "AlgElem":
        return cls(frozenset({Monomial()}))

    @classmethod
    def of(cls, *monomials: Monomial) -> "AlgElem":
        acc: set = set()
        for mono in monomials:
            acc ^= {mono}
        return cls(frozenset(acc))

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "AlgElem") -> "AlgElem":
        return AlgElem(self.terms ^ other.terms)

    def __mul__(self, other: "AlgElem") -> "AlgElem":
        return multiply(self, other)

    def power(self, k: int) -> "AlgElem":
        result = AlgElem.one()
        for _ in range(k):
            result = multiply(result, self)
        return result

    def times_tau(self, k: int) -> "AlgElem":
        return AlgElem(frozenset(Monomial(m.exps, m.tau_exp + k) for m in self.terms))

    def format(self, registry: GenRegistry) -> str:
        if not self.terms:
            return "0"
        return " + ".join(m.format(registry) for m in sorted(self.terms, key=lambda m: monomial_key(registry, m)))


def degree_of(registry: GenRegistry, mono: Monomial) -> Degree:
    """Componentwise degree sum, with tau lowering the weight."""
    total = Degree.zero()
    for index, exp in mono.exps:
        total = total + registry.degree(index).scale(exp)
    return total + TAU_DEGREE.scale(mono.tau_exp)


def monomial_key(registry: GenRegistry, mono: Monomial) -> tuple:
    """Deterministic order: (f, s, w) and then generator indices."""
    d = degree_of(registry, mono)
    return (d.f, d.s, d.w, mono.exps, mono.tau_exp)


def multiply(a: AlgElem, b: AlgElem) -> AlgElem:
    """Product with F2 cancellation."""
    acc: set = set()
    for x in a.terms:
        for y in b.terms:
            acc ^= {x.times(y)}
    return AlgElem(frozenset(acc))


def homogeneous_degree(registry: GenRegistry, elem: AlgElem) -> Optional[Degree]:
    """Common degree of all terms, None for zero; raises for inhomogeneous sums."""
    degrees = {degree_of(registry, m) for m in elem.terms}
    if len(degrees) > 1:
        raise DegreeMismatchError(
            f"inhomogeneous element {elem.format(registry)}: degrees {sorted(map(str, degrees))}")
    return next(iter(degrees), None)


class MonomialEnumerator:
    """tau-free monomials per (s, f), generated by memoized recursion over generators."""

    def __init__(self, registry: GenRegistry):
        self.registry = registry
        self._sf = tuple((g.degree.s, g.degree.f) for g in registry)

    def monomials_in_cell(self, s: int, f: int) -> List[Monomial]:
        """All tau-free monomials of stem s and filtration f, in monomial order."""
        if s < 0 or f < 0:
            return []
        found = [Monomial(exps) for exps in self._search(len(self._sf), s, f)]
        return sorted(found, key=lambda m: monomial_key(self.registry, m))

    @lru_cache(maxsize=None)
    def _search(self, k: int, s: int, f: int) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
        if s == 0 and f == 0:
            return ((),)
        if k == 0:
            return ()
        gs, gf = self._sf[k - 1]
        out = []
        e = 0
        while e * gs <= s and e * gf <= f:
            for rest in self._search(k - 1, s - e * gs, f - e * gf):
                out.append(rest + (((k - 1, e),) if e else ()))
            e += 1
        return tuple(out)


def enumerate_monomials(registry: GenRegistry, s_max: int, f_max: int
                        ) -> Dict[Tuple[int, int, int], List[Monomial]]:
    """tau-free monomials with s <= s_max and f <= f_max grouped by (s, f, w)."""
    enumerator = MonomialEnumerator(registry)
    cells: Dict[Tuple[int, int, int], List[Monomial]] = {}
    for s in range(s_max + 1):
        for f in range(f_max + 1):
            for mono in enumerator.monomials_in_cell(s, f):
                w = degree_of(registry, mono).w
                cells.setdefault((s, f, w), []).append(mono)
    return cells
