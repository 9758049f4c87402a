"""Exact arithmetic over F2[tau] and weight-graded linear algebra.

Every module met by the engine is a weight-graded free F2[tau]-module with a
basis of tau-free monomials.  A homogeneous element of weight ``w`` is stored
as an :class:`HVec`: the set of basis indices it touches.  The tau-power on
basis element ``i`` is implied by the grading, ``tau^(a_i - w)``, so
multiplying by tau only lowers the weight and never changes the support.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple


@dataclass(frozen=True)
class TauPoly:
    """Element of F2[tau] (or of F2[tau, 1/tau] when ``localized``)."""

    terms: FrozenSet[int] = frozenset()
    localized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "terms", frozenset(self.terms))
        if not self.localized and any(e < 0 for e in self.terms):
            raise ValueError("negative tau exponent outside the localized ring")

    @classmethod
    def zero(cls, localized: bool = False) -> "TauPoly":
        return cls(frozenset(), localized)

    @classmethod
    def one(cls, localized: bool = False) -> "TauPoly":
        return cls(frozenset({0}), localized)

    @classmethod
    def power(cls, k: int, localized: bool = False) -> "TauPoly":
        return cls(frozenset({k}), localized or k < 0)

    def is_zero(self) -> bool:
        return not self.terms

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def is_unit(self) -> bool:
        if self.localized:
            return self.is_monomial()
        return self.terms == frozenset({0})

    @property
    def degree(self) -> Optional[int]:
        return max(self.terms) if self.terms else None

    @property
    def valuation(self) -> Optional[int]:
        return min(self.terms) if self.terms else None

    def __add__(self, other: "TauPoly") -> "TauPoly":
        return TauPoly(self.terms ^ other.terms, self.localized or other.localized)

    __sub__ = __add__

    def __mul__(self, other: "TauPoly") -> "TauPoly":
        acc: set = set()
        for a in self.terms:
            for b in other.terms:
                acc ^= {a + b}
        return TauPoly(frozenset(acc), self.localized or other.localized)

    def shift(self, k: int) -> "TauPoly":
        """Multiply by tau^k."""
        terms = frozenset(e + k for e in self.terms)
        return TauPoly(terms, self.localized or any(e < 0 for e in terms))

    def divmod(self, other: "TauPoly") -> Tuple["TauPoly", "TauPoly"]:
        """Euclidean division in F2[tau]."""
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if self.localized or other.localized:
            raise ValueError("Euclidean division is only defined on F2[tau]")
        remainder = set(self.terms)
        quotient: set = set()
        top = other.degree
        while remainder and max(remainder) >= top:
            k = max(remainder) - top
            quotient ^= {k}
            remainder ^= {e + k for e in other.terms}
        return TauPoly(frozenset(quotient)), TauPoly(frozenset(remainder))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, reverse=True):
            parts.append("1" if e == 0 else ("t" if e == 1 else f"t^{e}"))
        return " + ".join(parts)


def tau_mul(a: TauPoly, b: TauPoly) -> TauPoly:
    """Product in F2[tau]."""
    return a * b


@dataclass(frozen=True)
class HVec:
    """Homogeneous vector: weight plus the basis indices in its support."""

    weight: int
    support: FrozenSet[int] = frozenset()

    def is_zero(self) -> bool:
        return not self.support

    def plus(self, other: "HVec") -> "HVec":
        """Add tau^(other.weight - self.weight) * other; needs other.weight >= self.weight."""
        if other.weight < self.weight:
            raise ValueError("cannot add a vector of lower weight without negative tau powers")
        return HVec(self.weight, self.support ^ other.support)

    def times_tau(self, k: int = 1) -> "HVec":
        return HVec(self.weight - k, self.support)


@dataclass
class _Entry:
    vec: HVec
    tags: FrozenSet[int]


class EchelonBasis:
    """Free F2[tau]-submodule of a graded free module, kept in echelon form.

    Rows are ordered by ``(weight, index)``; the pivot of a vector is its
    lowest row, so the pivot row has the smallest weight in the support.
    Tags track which inputs a stored vector is made of, with implied tau
    powers.
    """

    def __init__(self, row_weights: Sequence[int]):
        self.row_weights = tuple(row_weights)
        self._pivots: Dict[int, _Entry] = {}

    def _key(self, row: int) -> Tuple[int, int]:
        return (self.row_weights[row], row)

    def lead(self, vec: HVec) -> Optional[int]:
        if not vec.support:
            return None
        return min(vec.support, key=self._key)

    def __len__(self) -> int:
        return len(self._pivots)

    def copy(self) -> "EchelonBasis":
        other = EchelonBasis(self.row_weights)
        other._pivots = {p: _Entry(e.vec, e.tags) for p, e in self._pivots.items()}
        return other

    def basis(self) -> List[HVec]:
        """Stored vectors ordered by pivot."""
        return [self._pivots[p].vec for p in sorted(self._pivots, key=self._key)]

    def entries(self) -> List[Tuple[int, HVec, FrozenSet[int]]]:
        return [(p, self._pivots[p].vec, self._pivots[p].tags)
                for p in sorted(self._pivots, key=self._key)]

    def rank_at(self, weight: int) -> int:
        """F2-dimension of the submodule in the given weight."""
        return sum(1 for e in self._pivots.values() if e.vec.weight >= weight)

    def weights(self) -> List[int]:
        return sorted(e.vec.weight for e in self._pivots.values())

    def _reduce_leading(self, vec: HVec, tags: FrozenSet[int]) -> Tuple[HVec, FrozenSet[int]]:
        while vec.support:
            entry = self._pivots.get(self.lead(vec))
            if entry is None or entry.vec.weight < vec.weight:
                break
            vec = vec.plus(entry.vec)
            tags = tags ^ entry.tags
        return vec, tags

    def reduce(self, vec: HVec, tags: FrozenSet[int] = frozenset()) -> Tuple[HVec, FrozenSet[int]]:
        """Normal form of ``vec`` modulo the submodule, with the tags used."""
        support = set(vec.support)
        heap = [self._key(r) for r in support]
        heapq.heapify(heap)
        seen = set()
        while heap:
            _, row = heapq.heappop(heap)
            if row in seen or row not in support:
                continue
            seen.add(row)
            entry = self._pivots.get(row)
            if entry is None or entry.vec.weight < vec.weight:
                continue
            support ^= entry.vec.support
            tags = tags ^ entry.tags
            for r in entry.vec.support:
                if r in support and r not in seen:
                    heapq.heappush(heap, self._key(r))
        return HVec(vec.weight, frozenset(support)), tags

    def contains(self, vec: HVec) -> bool:
        return self._reduce_leading(vec, frozenset())[0].is_zero()

    def insert(self, vec: HVec, tags: FrozenSet[int] = frozenset()) -> bool:
        """Add ``vec`` to the submodule; returns False if it was already inside."""
        vec, tags = self._reduce_leading(vec, tags)
        if vec.is_zero():
            return False
        while True:
            pivot = self.lead(vec)
            held = self._pivots.get(pivot)
            self._pivots[pivot] = _Entry(vec, tags)
            if held is None:
                return True
            # held has lower weight: it becomes held + tau^k * vec
            vec, tags = self._reduce_leading(held.vec.plus(vec), held.tags ^ tags)
            if vec.is_zero():
                return True

    def coordinates(self, vec: HVec) -> Optional[FrozenSet[int]]:
        """Positions (in :meth:`basis` order) expressing ``vec``, or None if outside."""
        positions = {p: i for i, p in enumerate(sorted(self._pivots, key=self._key))}
        used: set = set()
        while vec.support:
            pivot = self.lead(vec)
            entry = self._pivots.get(pivot)
            if entry is None or entry.vec.weight < vec.weight:
                return None
            vec = vec.plus(entry.vec)
            used ^= {positions[pivot]}
        return frozenset(used)


def kernel_and_image(columns: Sequence[HVec], row_weights: Sequence[int]
                     ) -> Tuple[EchelonBasis, List[Tuple[int, FrozenSet[int]]]]:
    """Column reduction of a homogeneous map.

    Columns are processed by decreasing weight, so a column is only ever
    reduced by columns of higher or equal weight.  Returns the image as an
    echelon basis (tags name source columns) and a kernel basis as
    ``(weight, columns)`` pairs, meaning ``sum tau^(b_c - weight) e_c``.
    """
    image = EchelonBasis(row_weights)
    kernel: List[Tuple[int, FrozenSet[int]]] = []
    order = sorted(range(len(columns)), key=lambda j: (-columns[j].weight, j))
    for j in order:
        vec, tags = image._reduce_leading(columns[j], frozenset({j}))
        if vec.is_zero():
            kernel.append((columns[j].weight, tags))
        else:
            image._pivots[image.lead(vec)] = _Entry(vec, tags)
    return image, kernel


@dataclass(frozen=True)
class Summand:
    """One cyclic summand: generated in ``weight``, ``order`` None when free."""

    weight: Optional[int]
    order: Optional[int]
    generator: FrozenSet[int] = frozenset()

    @property
    def is_free(self) -> bool:
        return self.order is None


@dataclass(frozen=True)
class ModuleShape:
    """Isomorphism type of a finitely generated F2[tau]-module."""

    free_rank: int = 0
    torsion: Tuple[int, ...] = ()
    other: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "torsion", tuple(sorted(self.torsion)))
        object.__setattr__(self, "other", tuple(sorted(self.other)))

    @classmethod
    def from_summands(cls, summands: Iterable[Summand]) -> "ModuleShape":
        summands = list(summands)
        return cls(sum(1 for s in summands if s.is_free),
                   tuple(s.order for s in summands if not s.is_free))

    def is_zero(self) -> bool:
        return self.free_rank == 0 and not self.torsion and not self.other


def f2_dimension(summands: Iterable[Summand], weight: int) -> int:
    """F2-dimension in one weight of a sum of graded cyclic modules."""
    total = 0
    for s in summands:
        if s.weight is None:
            continue
        if s.is_free:
            total += s.weight >= weight
        else:
            total += s.weight - s.order < weight <= s.weight
    return total


@dataclass
class TauMatrix:
    """Matrix over F2[tau]; weights are optional grading data."""

    n_rows: int
    n_cols: int
    entries: Dict[Tuple[int, int], TauPoly] = field(default_factory=dict)
    row_weights: Optional[Tuple[int, ...]] = None
    col_weights: Optional[Tuple[int, ...]] = None

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Optional[TauPoly]]], n_cols: Optional[int] = None,
                  **kwargs) -> "TauMatrix":
        n_cols = n_cols if n_cols is not None else (len(rows[0]) if rows else 0)
        entries = {}
        for i, row in enumerate(rows):
            for j, value in enumerate(row):
                if value is not None and not value.is_zero():
                    entries[(i, j)] = value
        return cls(len(rows), n_cols, entries, **kwargs)

    def entry(self, i: int, j: int) -> TauPoly:
        return self.entries.get((i, j), TauPoly.zero())

    def column(self, j: int) -> Dict[int, TauPoly]:
        return {i: v for (i, jj), v in self.entries.items() if jj == j}

    def permuted(self, row_perm: Sequence[int], col_perm: Sequence[int]) -> "TauMatrix":
        """Matrix whose row ``row_perm[i]`` is this matrix's row ``i`` (same for columns)."""
        entries = {(row_perm[i], col_perm[j]): v for (i, j), v in self.entries.items()}
        rw = cw = None
        if self.row_weights is not None:
            rw = [0] * self.n_rows
            for i, w in enumerate(self.row_weights):
                rw[row_perm[i]] = w
            rw = tuple(rw)
        if self.col_weights is not None:
            cw = [0] * self.n_cols
            for j, w in enumerate(self.col_weights):
                cw[col_perm[j]] = w
            cw = tuple(cw)
        return TauMatrix(self.n_rows, self.n_cols, entries, rw, cw)

    def is_pure_power(self) -> bool:
        return all(v.is_monomial() and not v.localized for v in self.entries.values())


@dataclass(frozen=True)
class SmithResult:
    shape: ModuleShape
    invariant_factors: Tuple[TauPoly, ...]
    kernel: Tuple[Dict[int, TauPoly], ...]
    summands: Tuple[Summand, ...] = ()


def _grading(m: TauMatrix) -> Optional[Tuple[List[int], List[int]]]:
    """Row and column weights with entry (i, j) = tau^(a_i - b_j), if they exist."""
    if not m.is_pure_power():
        return None
    by_row: Dict[int, List[Tuple[int, int]]] = {}
    by_col: Dict[int, List[Tuple[int, int]]] = {}
    for (i, j), v in m.entries.items():
        k = next(iter(v.terms))
        by_row.setdefault(i, []).append((j, k))
        by_col.setdefault(j, []).append((i, k))
    if m.row_weights is not None and m.col_weights is not None:
        rows, cols = list(m.row_weights), list(m.col_weights)
        for (i, j), v in m.entries.items():
            if v.terms != frozenset({rows[i] - cols[j]}):
                return None
        return rows, cols
    rows_w: List[Optional[int]] = [None] * m.n_rows
    cols_w: List[Optional[int]] = [None] * m.n_cols
    for start in range(m.n_rows):
        if rows_w[start] is not None:
            continue
        rows_w[start] = 0
        stack = [("r", start)]
        while stack:
            kind, idx = stack.pop()
            if kind == "r":
                for j, k in by_row.get(idx, []):
                    want = rows_w[idx] - k
                    if cols_w[j] is None:
                        cols_w[j] = want
                        stack.append(("c", j))
                    elif cols_w[j] != want:
                        return None
            else:
                for i, k in by_col.get(idx, []):
                    want = cols_w[idx] + k
                    if rows_w[i] is None:
                        rows_w[i] = want
                        stack.append(("r", i))
                    elif rows_w[i] != want:
                        return None
    cols = [0 if w is None else w for w in cols_w]
    return [w for w in rows_w], cols


def _persistence_smith(m: TauMatrix, rows: List[int], cols: List[int]) -> SmithResult:
    columns = [HVec(cols[j], frozenset(i for i in m.column(j))) for j in range(m.n_cols)]
    image, kernel_pairs = kernel_and_image(columns, rows)
    factors: List[int] = []
    summands: List[Summand] = []
    paired = set()
    for pivot, vec, _ in image.entries():
        paired.add(pivot)
        k = rows[pivot] - vec.weight
        factors.append(k)
        if k > 0:
            summands.append(Summand(rows[pivot], k, vec.support))
    for i in range(m.n_rows):
        if i not in paired:
            summands.append(Summand(rows[i], None, frozenset({i})))
    kernel = tuple({c: TauPoly.power(cols[c] - weight) for c in sorted(tags)}
                   for weight, tags in kernel_pairs)
    return SmithResult(ModuleShape.from_summands(summands),
                       tuple(TauPoly.power(k) for k in sorted(factors)),
                       kernel, tuple(summands))


def _euclidean_smith(m: TauMatrix) -> SmithResult:
    a = [[m.entry(i, j) for j in range(m.n_cols)] for i in range(m.n_rows)]
    v = [[TauPoly.one() if i == j else TauPoly.zero() for j in range(m.n_cols)]
         for i in range(m.n_cols)]
    n_rows, n_cols = m.n_rows, m.n_cols

    def swap_cols(x: int, y: int) -> None:
        for row in a:
            row[x], row[y] = row[y], row[x]
        for row in v:
            row[x], row[y] = row[y], row[x]

    def add_col(src: int, dst: int, q: TauPoly) -> None:
        for row in a:
            row[dst] = row[dst] + q * row[src]
        for row in v:
            row[dst] = row[dst] + q * row[src]

    factors: List[TauPoly] = []
    t = 0
    while t < min(n_rows, n_cols):
        best = None
        for i in range(t, n_rows):
            for j in range(t, n_cols):
                if not a[i][j].is_zero() and (best is None or a[i][j].degree < best[0]):
                    best = (a[i][j].degree, i, j)
        if best is None:
            break
        _, i0, j0 = best
        a[t], a[i0] = a[i0], a[t]
        swap_cols(t, j0)
        while True:
            settled = True
            for i in range(t + 1, n_rows):
                if a[i][t].is_zero():
                    continue
                q, r = a[i][t].divmod(a[t][t])
                a[i] = [x + q * y for x, y in zip(a[i], a[t])]
                if not r.is_zero():
                    a[t], a[i] = a[i], a[t]
                    settled = False
            for j in range(t + 1, n_cols):
                if a[t][j].is_zero():
                    continue
                q, r = a[t][j].divmod(a[t][t])
                add_col(t, j, q)
                if not r.is_zero():
                    swap_cols(t, j)
                    settled = False
            if not settled:
                continue
            stray = next(((i, j) for i in range(t + 1, n_rows) for j in range(t + 1, n_cols)
                          if not a[i][j].divmod(a[t][t])[1].is_zero()), None)
            if stray is None:
                break
            a[t] = [x + y for x, y in zip(a[t], a[stray[0]])]
        factors.append(a[t][t])
        t += 1
    kernel = tuple({i: v[i][j] for i in range(n_cols) if not v[i][j].is_zero()}
                   for j in range(t, n_cols))
    torsion, other = [], []
    for f in factors:
        val = f.valuation
        rest = f.divmod(TauPoly.power(val))[0]
        if val > 0:
            torsion.append(val)
        if not rest.is_unit():
            other.append(str(rest))
    shape = ModuleShape(n_rows - len(factors), tuple(torsion), tuple(other))
    ordered = tuple(sorted(factors, key=lambda f: (f.degree, sorted(f.terms))))
    return SmithResult(shape, ordered, kernel)


def smith_decompose(m: TauMatrix) -> SmithResult:
    """Cokernel shape, invariant factors and a kernel basis of ``m``.

    Weight-homogeneous matrices (every entry a single tau power consistent
    with some grading) take the column-reduction path, which also yields the
    graded summands; anything else goes through Euclidean Smith reduction.
    """
    grading = _grading(m)
    if grading is not None:
        return _persistence_smith(m, *grading)
    return _euclidean_smith(m)
