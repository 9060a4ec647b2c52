"""Moment engine for multi-color matrix interactions.

Everything here is exact integer/rational arithmetic.  The central
object is the family of map counts count(P, kbar): the number of
connected planar fat graphs built from one marked star of type P plus,
for each interaction term q_j, k_j labeled stars drawn from q_j + q_j*.
They satisfy a closed recursion obtained by splitting off the first
letter of the root word:

    count(X_i P, kbar) =
        sum over splittings P = P1 X_i P2, sub-orders pbar <= kbar of
            binom(kbar, pbar) count(P1, pbar) count(P2, kbar - pbar)
      + sum over terms j with k_j >= 1 of
            k_j count(cyc_i(q_j + q_j*) P, kbar - 1_j)

with count(1, kbar) = [kbar = 0], where cyc_i is the cyclic derivative.
The first sum lowers the degree at fixed total order, the second lowers
the total order, so the recursion terminates.  At kbar = 0 this reduces
to the moments of free semicircular variables (colored non-crossing
pair counts); the brute-force gluing oracle provides the independent
check that the recursion really counts maps.

Growth control: |count(P, kbar)| <= kbar! A^|kbar| B^deg(P)
prod_i C(k_i) C(deg P) for any admissible (A, B), which yields a
certified tail bound for the coupling series whenever 4 A |t_i| < 1
for every coupling.  Admissible pairs are tiny for single low-degree
interactions but astronomically conservative in general; series_eval
reports an honest None for the tail when no admissible pair certifies
the requested couplings.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Mapping, Sequence

from .potential import StarSpec
from .words import (
    Word,
    check_word,
    cyclic_derivative,
    nc_derivative,
    reverse_word,
    symmetry_degree,
)

MultiIndex = tuple[int, ...]

_CATALAN: list[int] = [1]


def catalan(k: int) -> int:
    """Catalan numbers by the pairing convolution C_{k+1} = sum C_p C_{k-p}."""
    if k < 0:
        raise ValueError("negative index")
    while len(_CATALAN) <= k:
        m = len(_CATALAN) - 1
        _CATALAN.append(sum(_CATALAN[p] * _CATALAN[m - p] for p in range(m + 1)))
    return _CATALAN[k]


@lru_cache(maxsize=None)
def _sub_indices(kbar: MultiIndex) -> tuple[tuple[MultiIndex, MultiIndex, int], ...]:
    """All componentwise splits kbar = pbar + (kbar - pbar) with their
    binomial weights."""
    out = []
    for pbar in itertools.product(*(range(k + 1) for k in kbar)):
        weight = 1
        for k, p in zip(kbar, pbar):
            weight *= comb(k, p)
        comp = tuple(k - p for k, p in zip(kbar, pbar))
        out.append((pbar, comp, weight))
    return tuple(out)


def multi_indices(length: int, max_total: int, min_total: int = 0,
                  ) -> Iterable[MultiIndex]:
    """Multi-indices of the given length with min_total <= sum <= max_total,
    in graded lexicographic order."""
    for total in range(min_total, max_total + 1):
        yield from _compositions(length, total)


def _compositions(length: int, total: int) -> Iterable[MultiIndex]:
    if length == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(length - 1, total - first):
            yield (first,) + rest


class MapCounter:
    """Memoized solver of the counting recursion for a fixed star spec."""

    def __init__(self, spec: StarSpec):
        self.spec = spec
        # boundary words: cyclic derivative of q_j + q_j* per color
        self._boundary: dict[tuple[int, int], tuple[Word, ...]] = {}
        for j, q in enumerate(spec.star_words):
            qrev = reverse_word(q)
            for color in range(spec.num_colors):
                pieces = cyclic_derivative(q, color)
                if qrev != q:
                    pieces = pieces + cyclic_derivative(qrev, color)
                else:
                    pieces = pieces + pieces
                self._boundary[(j, color)] = pieces
        self._memo: dict[tuple[Word, MultiIndex], int] = {}

    # -- core ---------------------------------------------------------------

    def map_count(self, word: Word, orders: Sequence[int]) -> int:
        """Connected planar maps with a marked root star of type `word` and
        orders[j] stars from the j-th interaction term."""
        word = tuple(word)
        check_word(word, self.spec.num_colors)
        orders = tuple(int(k) for k in orders)
        if len(orders) != self.spec.num_terms:
            raise ValueError(
                f"expected {self.spec.num_terms} orders, got {len(orders)}"
            )
        if any(k < 0 for k in orders):
            raise ValueError("orders must be non-negative")
        return self._count(word, orders)

    def _count(self, word: Word, kbar: MultiIndex) -> int:
        if not word:
            return 1 if not any(kbar) else 0
        key = (word, kbar)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        i, rest = word[0], word[1:]
        total = 0
        splits = nc_derivative(rest, i)
        if splits:
            for pbar, comp, weight in _sub_indices(kbar):
                s = 0
                for left, right in splits:
                    s += self._count(left, pbar) * self._count(right, comp)
                total += weight * s
        for j, k in enumerate(kbar):
            if k:
                lower = kbar[:j] + (k - 1,) + kbar[j + 1:]
                for piece in self._boundary[(j, i)]:
                    total += k * self._count(piece + rest, lower)
        self._memo[key] = total
        return total

    def semicircle_moment(self, word: Word) -> int:
        """Zero-interaction value: the number of color-respecting
        non-crossing pairings of the word's letters."""
        return self.map_count(word, (0,) * self.spec.num_terms)

    def table(self) -> dict[tuple[Word, MultiIndex], int]:
        """Snapshot of every memoized cell (useful for bound sweeps)."""
        return dict(self._memo)

    # -- series -------------------------------------------------------------

    def series_eval(self, word: Word, couplings: Sequence[Fraction],
                    order: int, bound: "TruncationBound | None" = None,
                    ) -> "SeriesValue":
        """Partial sum of the coupling series for the moment of `word`
        through total interaction order `order`, with a certified tail
        bound when one is available."""
        word = tuple(word)
        t = [Fraction(c) for c in couplings]
        if len(t) != self.spec.num_terms:
            raise ValueError("one coupling per interaction term required")
        n = self.spec.num_terms
        value = Fraction(0)
        by_order: dict[int, Fraction] = {o: Fraction(0) for o in range(order + 1)}
        for kbar in multi_indices(n, order):
            cnt = self._count(word, kbar)
            if cnt == 0:
                continue
            term = Fraction(cnt)
            for tj, kj in zip(t, kbar):
                term *= (-tj) ** kj / factorial(kj)
            by_order[sum(kbar)] += term
            value += term
        tail = None if bound is None else bound.tail(self.spec, word, t, order)
        return SeriesValue(value=value, order=order, tail_bound=tail,
                           by_order=by_order)

    def free_energy_table(self, order: int) -> "FreeEnergyTable":
        """Connected-map counts with no root, one entry per interaction
        multi-index with 1 <= total <= order.

        Each entry is anchored through every term with a positive order:
        removing one star of term j leaves a rooted count with root
        q_j + q_j*.  All anchors must agree; disagreement would mean the
        recursion itself is inconsistent, so it raises."""
        n = self.spec.num_terms
        entries: dict[MultiIndex, int] = {}
        for kbar in multi_indices(n, order, min_total=1):
            anchors = []
            for j, k in enumerate(kbar):
                if k == 0:
                    continue
                lower = kbar[:j] + (k - 1,) + kbar[j + 1:]
                q = self.spec.star_words[j]
                val = self._count(q, lower) + self._count(reverse_word(q), lower)
                anchors.append((j, val))
            vals = {v for _, v in anchors}
            if len(vals) != 1:
                raise ArithmeticError(
                    f"free-energy anchors disagree at {kbar}: {anchors}"
                )
            entries[kbar] = anchors[0][1]
        return FreeEnergyTable(spec=self.spec, order=order, entries=entries)

    def rooted_count(self, word: Word, orders: Sequence[int]) -> int:
        """Maps counted up to relabeling of the interaction stars: the
        labeled count divided by prod_j k_j! s(q_j)^(k_j).  The quotient
        is an integer for every honest rooted count; a failure here is
        reported loudly instead of silently rounding."""
        orders = tuple(int(k) for k in orders)
        labeled = self.map_count(word, orders)
        sym = 1
        for q, k in zip(self.spec.star_words, orders):
            sym *= factorial(k) * symmetry_degree(q) ** k
        quotient = Fraction(labeled, sym)
        if quotient.denominator != 1:
            raise ArithmeticError(
                f"rooted count for {word} at {orders} is not an integer: "
                f"{labeled}/{sym}"
            )
        return int(quotient)


@dataclass(frozen=True)
class SeriesValue:
    value: Fraction
    order: int
    tail_bound: Fraction | None
    by_order: Mapping[int, Fraction]

    @property
    def certified(self) -> bool:
        return self.tail_bound is not None


@dataclass(frozen=True)
class FreeEnergyTable:
    """Coefficients of the log-partition-function expansion: the count of
    connected unrooted labeled star gluings per interaction multi-index."""

    spec: StarSpec
    order: int
    entries: Mapping[MultiIndex, int]

    def eval(self, couplings: Sequence[Fraction]) -> Fraction:
        t = [Fraction(c) for c in couplings]
        total = Fraction(0)
        for kbar, cnt in self.entries.items():
            term = Fraction(cnt)
            for tj, kj in zip(t, kbar):
                term *= (-tj) ** kj / factorial(kj)
            total += term
        return total

    def entropy_eval(self, couplings: Sequence[Fraction]) -> Fraction:
        """The first-order Euler relation turns the same coefficients into
        the entropy-like quantity sum (1 - |kbar|) x coefficient."""
        t = [Fraction(c) for c in couplings]
        total = Fraction(0)
        for kbar, cnt in self.entries.items():
            term = Fraction(cnt) * (1 - sum(kbar))
            for tj, kj in zip(t, kbar):
                term *= (-tj) ** kj / factorial(kj)
            total += term
        return total


@dataclass(frozen=True)
class TruncationBound:
    """An admissible growth pair (order_base, degree_base).

    Admissibility for a spec with n interaction terms:

        4^n / B^2  +  2 sum_j B^(d_j - 2) 4^(d_j - 2) / A  <=  1,   B >= 2,

    writing A = order_base, B = degree_base and d_j for the star degrees.
    Under it, |count(P, kbar)| <= kbar! A^|kbar| B^deg(P)
    prod C(k_j) C(deg P), which makes the coupling series absolutely
    convergent for 4 A |t_j| < 1 with an explicit tail.
    """

    order_base: Fraction
    degree_base: Fraction

    def is_admissible(self, spec: StarSpec) -> bool:
        a, b = Fraction(self.order_base), Fraction(self.degree_base)
        if b < 2 or a <= 0:
            return False
        n = spec.num_terms
        lhs = Fraction(4 ** n) / b ** 2
        for q in spec.star_words:
            d = len(q)
            lhs += 2 * b ** (d - 2) * Fraction(4) ** (d - 2) / a
        return lhs <= 1

    @classmethod
    def default(cls, spec: StarSpec) -> "TruncationBound":
        """The textbook admissible pair B = 2^(n+1), A = 4 n B^(D-2) 4^(D-2)."""
        n = spec.num_terms
        if n == 0:
            return cls(order_base=Fraction(1), degree_base=Fraction(2))
        d = spec.max_star_degree()
        b = Fraction(2 ** (n + 1))
        a = 4 * n * b ** (d - 2) * Fraction(4) ** (d - 2)
        bound = cls(order_base=a, degree_base=b)
        assert bound.is_admissible(spec)
        return bound

    @classmethod
    def tightened(cls, spec: StarSpec, grid: int = 64) -> "TruncationBound":
        """Smallest order_base found on a rational grid of degree_base
        values (smaller order_base means a wider certified coupling box)."""
        n = spec.num_terms
        if n == 0:
            return cls(order_base=Fraction(1), degree_base=Fraction(2))
        best: TruncationBound | None = None
        lo = max(Fraction(2), Fraction(2 ** n))
        for step in range(1, 6 * grid + 1):
            b = lo + Fraction(step, grid) * max(Fraction(1), lo)
            slack = 1 - Fraction(4 ** n) / b ** 2
            if slack <= 0:
                continue
            s = sum(2 * b ** (len(q) - 2) * Fraction(4) ** (len(q) - 2)
                    for q in spec.star_words)
            a = s / slack
            cand = cls(order_base=a, degree_base=b)
            if cand.is_admissible(spec) and (best is None
                                             or a < best.order_base):
                best = cand
        assert best is not None
        return best

    def certifies(self, couplings: Sequence[Fraction]) -> bool:
        return all(4 * self.order_base * abs(Fraction(t)) < 1
                   for t in couplings)

    def count_bound(self, spec: StarSpec, word: Word, kbar: MultiIndex,
                    ) -> Fraction:
        """The growth bound on |count(word, kbar)| itself."""
        a, b = self.order_base, self.degree_base
        d = len(word)
        out = Fraction(b) ** d * catalan_bound_factor(d)
        out *= a ** sum(kbar)
        for k in kbar:
            out *= factorial(k) * catalan(k)
        return out

    def tail(self, spec: StarSpec, word: Word, couplings: Sequence[Fraction],
             order: int) -> Fraction | None:
        """Exact rational bound on the dropped tail of the coupling series
        past total order `order`, or None when the pair does not certify
        these couplings (series may still converge; we just cannot prove
        it along this route)."""
        if not self.is_admissible(spec):
            return None
        if not self.certifies(couplings):
            return None
        x = [4 * self.order_base * abs(Fraction(t)) for t in couplings]
        full = Fraction(1)
        for xi in x:
            full /= (1 - xi)
        partial = Fraction(0)
        for kbar in multi_indices(len(x), order):
            term = Fraction(1)
            for xi, k in zip(x, kbar):
                term *= xi ** k
            partial += term
        d = len(word)
        prefactor = Fraction(self.degree_base) ** d * catalan_bound_factor(d)
        tail = prefactor * (full - partial)
        assert tail >= 0
        return tail


def catalan_bound_factor(degree: int) -> int:
    """C(deg) as used in the growth bound (C of half-degree would be
    tighter for even words, but the induction is stated with C(deg))."""
    return catalan(degree)


def semicircle_moment(word: Word, num_colors: int | None = None) -> int:
    """Colored semicircle moments without any interaction: counts the
    color-respecting non-crossing pairings of the word."""
    word = tuple(word)
    n = (1 + max(word)) if (num_colors is None and word) else (num_colors or 1)
    counter = MapCounter(StarSpec((), n))
    return counter.map_count(word, ())
