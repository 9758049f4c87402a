"""Ext over the motivic Steenrod algebra from a free resolution of M2.

The algebra is handled through admissible monomials ``Sq^I`` and the motivic
Adem relations.  Sq^(2k) has bidegree (2k, k) and Sq^(2k-1) has (2k-1, k-1);
tau has weight one in the algebra, so an element of weight ``w`` carries
``tau^(w - wt(I))`` on each admissible monomial and only the set of
monomials is stored.

Each stage of the resolution is a free A-module.  In internal degree ``t``
it is a free graded F2[tau]-module with basis ``Sq^I g``; coordinates are
kept with negated weights so that the :mod:`coeff` convention (tau lowers
the weight) applies unchanged.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from motivic_may.errors import ConsistencyError
from motivic_may.services.coeff import EchelonBasis, HVec, Summand, kernel_and_image
from motivic_may.services.pages import PageCell

logger = logging.getLogger(__name__)

Word = Tuple[int, ...]
Basis = Tuple[Tuple[int, Word], ...]


def wt(n: int) -> int:
    """Weight of Sq^n."""
    return n // 2


def word_degree(word: Sequence[int]) -> Tuple[int, int]:
    return sum(word), sum(wt(i) for i in word)


def is_admissible(word: Sequence[int]) -> bool:
    return all(word[k] >= 2 * word[k + 1] for k in range(len(word) - 1)) and all(i > 0 for i in word)


def _binomial_odd(n: int, k: int) -> bool:
    return 0 <= k and 0 <= n and (n & k) == k


def adem_terms(a: int, b: int) -> List[Word]:
    """Admissible-side terms of Sq^a Sq^b for a < 2b; the tau power balances the weight."""
    if not 0 < a < 2 * b:
        raise ValueError(f"Sq^{a} Sq^{b} is not an Adem pair")
    terms = []
    for c in range(a // 2 + 1):
        if not _binomial_odd(b - c - 1, a - 2 * c):
            continue
        eps = wt(a) + wt(b) - wt(a + b - c) - wt(c)
        if eps not in (0, 1):
            raise ConsistencyError(f"Adem term Sq^{a + b - c} Sq^{c} of Sq^{a} Sq^{b} needs tau^{eps}")
        terms.append((a + b - c, c) if c else (a + b,))
    return terms


@lru_cache(maxsize=None)
def _reduce(word: Word, from_right: bool) -> FrozenSet[Word]:
    word = tuple(i for i in word if i)
    pairs = [k for k in range(len(word) - 1) if word[k] < 2 * word[k + 1]]
    if not pairs:
        return frozenset({word})
    k = pairs[-1] if from_right else pairs[0]
    out: set = set()
    for term in adem_terms(word[k], word[k + 1]):
        out ^= _reduce(word[:k] + term + word[k + 2:], from_right)
    return frozenset(out)


@dataclass(frozen=True)
class SteenrodElem:
    """Homogeneous element of the motivic Steenrod algebra."""

    degree: int
    weight: int
    terms: FrozenSet[Word] = frozenset()

    def __post_init__(self):
        for mono in self.terms:
            if not is_admissible(mono):
                raise ValueError(f"inadmissible monomial {mono}")
            if word_degree(mono)[0] != self.degree or self.tau_exponent(mono) < 0:
                raise ConsistencyError(f"monomial {mono} does not fit degree ({self.degree}, {self.weight})")

    def tau_exponent(self, mono: Word) -> int:
        return self.weight - word_degree(mono)[1]

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "SteenrodElem") -> "SteenrodElem":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if (self.degree, self.weight) != (other.degree, other.weight):
            raise ConsistencyError("adding Steenrod elements of different bidegrees")
        return SteenrodElem(self.degree, self.weight, self.terms ^ other.terms)

    def __mul__(self, other: "SteenrodElem") -> "SteenrodElem":
        acc: set = set()
        for x in self.terms:
            for y in other.terms:
                acc ^= _reduce(x + y, False)
        return SteenrodElem(self.degree + other.degree, self.weight + other.weight, frozenset(acc))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono in sorted(self.terms, reverse=True):
            e = self.tau_exponent(mono)
            tau = "" if e == 0 else ("t " if e == 1 else f"t^{e} ")
            parts.append(tau + (" ".join(f"Sq{i}" for i in mono) or "1"))
        return " + ".join(parts)


def adem_reduce(word: Sequence[int], tau: int = 0, from_right: bool = False) -> SteenrodElem:
    """Admissible normal form of ``tau^tau Sq^(i1) ... Sq^(ik)``."""
    word = tuple(int(i) for i in word)
    if any(i < 0 for i in word) or tau < 0:
        raise ValueError(f"bad Steenrod word {word} with tau^{tau}")
    degree, weight = word_degree(word)
    return SteenrodElem(degree, weight + tau, _reduce(word, from_right))


def sq(*word: int) -> SteenrodElem:
    return adem_reduce(word)


@lru_cache(maxsize=None)
def admissibles(t: int) -> Tuple[Word, ...]:
    """Admissible monomials of internal degree ``t`` (the empty word in degree 0)."""

    def build(remaining: int, floor: int) -> List[Word]:
        # words of degree ``remaining`` whose last square is at least ``floor``
        if remaining == 0:
            return [()]
        out = []
        for last in range(floor, remaining + 1):
            for head in build(remaining - last, 2 * last):
                out.append(head + (last,))
        return out

    return tuple(sorted(build(t, 1), reverse=True))


# ---------------------------------------------------------------------------
# Resolution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResolutionGenerator:
    """Free generator of one stage; ``boundary`` lists the terms ``Sq^K g'`` of d(g)."""

    index: int
    t: int
    w: int
    boundary: FrozenSet[Tuple[int, Word]]


@dataclass
class ResolutionStage:
    f: int
    generators: List[ResolutionGenerator] = field(default_factory=list)
    complete_through: int = -1

    def in_degree(self, t: int) -> List[ResolutionGenerator]:
        return [g for g in self.generators if g.t == t]


# the augmentation target M2 is a single generator in degree (0, 0)
_UNIT = ResolutionGenerator(0, 0, 0, frozenset())


class Resolution:
    """Free resolution of M2 over the motivic Steenrod algebra, stage by stage."""

    def __init__(self, t_max: int, workers: int = 1):
        if t_max < 0:
            raise ValueError("t_max must be non-negative")
        self.t_max = t_max
        self.workers = max(1, workers)
        self.stages: List[ResolutionStage] = []
        self._bases: Dict[Tuple[int, int], Tuple[Basis, Tuple[int, ...], Dict[Tuple[int, Word], int]]] = {}

    # -- coordinates --------------------------------------------------------

    def _basis(self, f: int, t: int):
        """Rows ``(g, K)`` of stage ``f`` in degree ``t``, their negated weights and an index."""
        key = (f, t)
        if key not in self._bases:
            if f < 0:
                rows: List[Tuple[int, Word]] = [(0, ())] if t == 0 else []
                weights = [0] * len(rows)
            else:
                rows, weights = [], []
                for g in self.stages[f].generators:
                    if g.t > t:
                        continue
                    for mono in admissibles(t - g.t):
                        rows.append((g.index, mono))
                        weights.append(-(word_degree(mono)[1] + g.w))
            self._bases[key] = (tuple(rows), tuple(weights), {row: i for i, row in enumerate(rows)})
        return self._bases[key]

    def _generator(self, f: int, index: int) -> ResolutionGenerator:
        return _UNIT if f < 0 else self.stages[f].generators[index]

    def image(self, f: int, g: ResolutionGenerator, word: Word) -> FrozenSet[Tuple[int, Word]]:
        """Terms of ``Sq^word . d(g)`` for a generator ``g`` of stage ``f``."""
        if f == 0:
            # every Sq^k acts by zero on M2
            return frozenset({(0, ())}) if not word else frozenset()
        acc: set = set()
        for target, mono in g.boundary:
            for product in _reduce(word + mono, False):
                acc ^= {(target, product)}
        return frozenset(acc)

    def _column(self, f: int, g: ResolutionGenerator, word: Word, t: int) -> HVec:
        _, _, index = self._basis(f - 1, t)
        weight = -(word_degree(word)[1] + g.w)
        try:
            return HVec(weight, frozenset(index[term] for term in self.image(f, g, word)))
        except KeyError as exc:
            raise ConsistencyError("boundary term outside the previous stage", cell=(f, t), witness=str(exc))

    def kernel(self, f: int, t: int) -> List[HVec]:
        """Kernel of d: F_f(t) -> F_(f-1)(t), in the coordinates of F_f(t)."""
        rows, _, _ = self._basis(f, t)
        _, target_weights, _ = self._basis(f - 1, t)
        columns = [self._column(f, self._generator(f, gi), mono, t) for gi, mono in rows]
        _, kernel = kernel_and_image(columns, target_weights)
        return [HVec(weight, tags) for weight, tags in kernel]

    # -- stages ---------------------------------------------------------------

    def extend(self) -> ResolutionStage:
        """Compute the next stage through ``t_max``."""
        f = len(self.stages)
        stage = ResolutionStage(f)
        self.stages.append(stage)
        if f == 0:
            stage.generators.append(ResolutionGenerator(0, 0, 0, frozenset({(0, ())})))
            stage.complete_through = self.t_max
            return stage

        kernels = self._kernels(f - 1)
        for t in range(self.t_max + 1):
            rows, weights, _ = self._basis(f - 1, t)
            span = EchelonBasis(weights)
            for g in stage.generators:
                for mono in admissibles(t - g.t):
                    span.insert(self._column(f, g, mono, t))
            added = 0
            for vec in sorted(kernels[t], key=lambda v: (-v.weight, sorted(v.support))):
                if span.insert(vec):
                    stage.generators.append(ResolutionGenerator(
                        len(stage.generators), t, -vec.weight, frozenset(rows[i] for i in vec.support)))
                    added += 1
            stage.complete_through = t
            if added:
                logger.debug("stage %d degree %d: %d new generators", f, t, added)
        logger.info("Resolution stage %d: %d generators through t=%d", f, len(stage.generators), self.t_max)
        return stage

    def _kernels(self, f: int) -> Dict[int, List[HVec]]:
        if self.workers == 1:
            return {t: self.kernel(f, t) for t in range(self.t_max + 1)}
        for t in range(self.t_max + 1):
            self._basis(f, t)
            self._basis(f - 1, t)
        out: Dict[int, List[HVec]] = {}
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            futures = {pool.submit(self.kernel, f, t): t for t in range(self.t_max + 1)}
            for future in as_completed(futures):
                out[futures[future]] = future.result()
        return out

    def resolve_through(self, f_max: int) -> None:
        while len(self.stages) <= f_max:
            self.extend()

    def check_exact(self, f: int, t: int) -> bool:
        """d o d = 0 on the generators of stage ``f`` in degree ``t``."""
        if f < 1:
            return True
        for g in self.stages[f].in_degree(t):
            acc: set = set()
            for gi, mono in g.boundary:
                acc ^= self.image(f - 1, self._generator(f - 1, gi), mono)
            if acc:
                return False
        return True

    # -- Ext ------------------------------------------------------------------

    def _delta(self, f: int, t: int) -> List[HVec]:
        """Columns of the Hom-complex differential out of Hom^f in degree t."""
        targets = self.stages[f + 1].in_degree(t)
        out = []
        for g in self.stages[f].in_degree(t):
            hit = frozenset(j for j, h in enumerate(targets) if (g.index, ()) in h.boundary)
            out.append(HVec(g.w, hit))
        return out

    def hom_cell(self, f: int, t: int) -> PageCell:
        """Cycles and boundaries of the Hom complex at filtration f, internal degree t."""
        if len(self.stages) <= f + 1:
            raise ConsistencyError("resolution not computed far enough", cell=(t - f, f))
        here = self.stages[f].in_degree(t)
        weights = [g.w for g in here]
        _, kernel = kernel_and_image(self._delta(f, t), [h.w for h in self.stages[f + 1].in_degree(t)])
        z = EchelonBasis(weights)
        for weight, tags in kernel:
            z.insert(HVec(weight, tags))
        b = EchelonBasis(weights)
        if f > 0:
            for vec in self._delta(f - 1, t):
                b.insert(vec)
        return PageCell(t - f, f, z, b)

    def ext_summands(self, max_stem: int, max_f: int) -> Dict[Tuple[int, int], List[Summand]]:
        """Cyclic F2[tau]-summands of Ext per (s, f) within the degree bound."""
        self.resolve_through(max_f + 1)
        out: Dict[Tuple[int, int], List[Summand]] = {}
        for f in range(max_f + 1):
            for s in range(max_stem + 1):
                if s + f > self.t_max:
                    continue
                parts = [summand for summand, _ in self.hom_cell(f, s + f).summands()]
                if parts:
                    out[(s, f)] = parts
        return out

    def truncated_cells(self, max_stem: int, max_f: int) -> List[Tuple[int, int]]:
        return [(s, f) for f in range(max_f + 1) for s in range(max_stem + 1) if s + f > self.t_max]

    def ext_dimensions(self, max_stem: int, max_f: int) -> Dict[Tuple[int, int, int], int]:
        """F2-dimension of Ext in each (s, f, w) with nonzero value."""
        self.resolve_through(max_f + 1)
        out: Dict[Tuple[int, int, int], int] = {}
        for f in range(max_f + 1):
            for s in range(max_stem + 1):
                if s + f > self.t_max:
                    continue
                cell = self.hom_cell(f, s + f)
                for w in range(-1, s + f + 1):
                    dim = cell.f2_dimension(w)
                    if dim:
                        out[(s, f, w)] = dim
        return out


def compute_ext(max_stem: int, max_f: int, t_max: int, workers: int = 1) -> Tuple[Resolution, Dict]:
    resolution = Resolution(t_max, workers)
    dims = resolution.ext_dimensions(max_stem, max_f)
    truncated = resolution.truncated_cells(max_stem, max_f)
    if truncated:
        logger.warning("Degree bound t_max=%d leaves %d cells uncomputed", t_max, len(truncated))
    return resolution, dims


def summand_rows(summands: Dict[Tuple[int, int], Iterable[Summand]]) -> List[Dict]:
    """Chart rows (s, f, w, free_rank, torsion_orders) from summands keyed by (s, f)."""
    rows = []
    for (s, f), parts in sorted(summands.items()):
        by_weight: Dict[int, List[Optional[int]]] = {}
        for part in parts:
            by_weight.setdefault(part.weight, []).append(part.order)
        for w, orders in sorted(by_weight.items()):
            rows.append({"s": s, "f": f, "w": w,
                         "free_rank": sum(1 for o in orders if o is None),
                         "torsion_orders": sorted(o for o in orders if o is not None),
                         "labels": [], "edges": []})
    return rows
