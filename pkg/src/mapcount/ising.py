"""Two-color maps with a spin coupling.

The model here has two Hermitian matrix colors, call them A and B, with an
even single-color potential on each and one mixed quadratic term -c AB that
couples them.  Moments of such a model expand into planar map counts in two
different ways and this module implements both, plus the algebraic series
that solves the purely quartic case in closed form.

Bare route: every star, including the AB links, sits in the exponent and
``ising_series`` is just the engine's coupling series with the couplings
halved (each interaction word is counted together with its reversal, which
for even one-color words and for AB changes nothing except a factor of two
per star, so the halving makes the two conventions agree exactly).

Dressed route: AB links that form chains can be resummed.  Write I for the
count of gluings in which distinct AB stars are never glued to each other
(``ising_interaction_count``); then the full counts M are recovered by
sprinkling even chain segments into the available slots, one binomial
factor per cell:

    M(kbar, R) / R!  =  sum over r + 2s = R of  C(e+s-1, s) / r! * I(kbar, r)

with e = deg(P)/2 + sum over stars of j * k_j for a star of degree 2j.
``dressed_series_coefficients`` re-expands the dressed sum in the bare
variables so the two routes can be compared coefficient by coefficient,
and ``interaction_counts_via_moments`` inverts the relation to get I from
the engine alone.

Quartic specialization: with both potentials pure quartics the rooted
two-color counts have an algebraic generating function.  P(x, y) is the
power-series root of a degree-seven polynomial equation (constant term
u^2/(u^2-1)), and the rooted series I(X, Y) is an explicit rational
expression in P whose coefficient of X^w Y^b collects sum_r u^r times the
rooted count with w white stars, b stars of the root's color, and r links.
``verify_change_of_variables`` checks the one-matrix reduction of the
equation at an exact rational point.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Callable, Mapping, Sequence

from .words import Word, check_word
from .potential import StarSpec, parse_rational
from .engine import MapCounter, SeriesValue, multi_indices
from .oracle import count_planar

Orders = tuple[int, ...]
CoefficientKey = tuple[Orders, Orders, int]

_LINK_WORD: Word = (0, 1)


# -- model setup --------------------------------------------------------------


def ising_star_spec(terms_a: int, terms_b: int) -> StarSpec:
    """Star spec for the two-color model: even powers x^2, x^4, ... up to
    x^(2*terms) in each color, then the AB link word, in that order."""
    if terms_a < 0 or terms_b < 0:
        raise ValueError("term counts must be non-negative")
    words = tuple((0,) * (2 * j) for j in range(1, terms_a + 1))
    words += tuple((1,) * (2 * j) for j in range(1, terms_b + 1))
    words += (_LINK_WORD,)
    return StarSpec(words, 2)


@lru_cache(maxsize=None)
def _counter(terms_a: int, terms_b: int) -> MapCounter:
    return MapCounter(ising_star_spec(terms_a, terms_b))


def _check_orders(orders: Sequence[int], label: str) -> Orders:
    out = tuple(int(k) for k in orders)
    if any(k < 0 for k in out):
        raise ValueError(f"{label} orders must be non-negative")
    return out


# -- exact counts --------------------------------------------------------------


def ising_map_count(root: Word, orders_a: Sequence[int],
                    orders_b: Sequence[int], links: int) -> int:
    """Labeled connected planar gluings of the root with orders_a[j-1]
    stars of type A^(2j), orders_b[j-1] of type B^(2j) and `links` AB
    stars.

    Computed from the engine recursion: the engine counts each star
    together with its reversed copy, which doubles every gluing once per
    star here, so the engine value divides exactly by 2^(number of
    stars).  A failed division would mean that bookkeeping is wrong, so
    it raises instead of rounding.
    """
    root = tuple(root)
    check_word(root, 2)
    ka = _check_orders(orders_a, "color-A")
    kb = _check_orders(orders_b, "color-B")
    links = int(links)
    if links < 0:
        raise ValueError("links must be non-negative")
    counter = _counter(len(ka), len(kb))
    raw = counter.map_count(root, ka + kb + (links,))
    stars = sum(ka) + sum(kb) + links
    div = 2 ** stars
    if raw % div:
        raise ArithmeticError(
            f"engine count {raw} for {root} not divisible by 2^{stars}"
        )
    return raw // div


def _star_multiset(orders_a: Orders, orders_b: Orders, links: int,
                   ) -> list[tuple[Word, int]]:
    stars: list[tuple[Word, int]] = []
    for j, k in enumerate(orders_a, start=1):
        if k:
            stars.append(((0,) * (2 * j), k))
    for j, k in enumerate(orders_b, start=1):
        if k:
            stars.append(((1,) * (2 * j), k))
    if links:
        stars.append((_LINK_WORD, links))
    return stars


def ising_interaction_count(root: Word, orders_a: Sequence[int],
                            orders_b: Sequence[int], links: int,
                            force: bool = False) -> int:
    """Like ising_map_count but with gluings between two distinct AB
    stars forbidden; the root may still touch anything.  Brute force over
    pairings, so it is only for small verification cells."""
    root = tuple(root)
    ka = _check_orders(orders_a, "color-A")
    kb = _check_orders(orders_b, "color-B")
    stars = _star_multiset(ka, kb, int(links))
    return count_planar(root, stars, exclusive_words=(_LINK_WORD,),
                        force=force, exempt_root=True)


def ising_rooted_count(root: Word, orders_a: Sequence[int],
                       orders_b: Sequence[int], links: int,
                       force: bool = False) -> int:
    """Rooted version of ising_interaction_count: the labeled count
    divided by links! * prod_j k_j! (2j)^(k_j), which removes the star
    relabelings and rotations.  The quotient is an integer whenever the
    labeled count is consistent; anything else raises."""
    ka = _check_orders(orders_a, "color-A")
    kb = _check_orders(orders_b, "color-B")
    links = int(links)
    labeled = ising_interaction_count(root, ka, kb, links, force=force)
    sym = factorial(links)
    for j, k in enumerate(ka, start=1):
        sym *= factorial(k) * (2 * j) ** k
    for j, k in enumerate(kb, start=1):
        sym *= factorial(k) * (2 * j) ** k
    quotient = Fraction(labeled, sym)
    if quotient.denominator != 1:
        raise ArithmeticError(
            f"rooted quotient {labeled}/{sym} is not an integer at "
            f"{root}, {ka}, {kb}, links={links}"
        )
    return int(quotient)


# -- the two series routes ------------------------------------------------------


def ising_series(root: Word, couplings_a: Sequence[Fraction | int | str],
                 couplings_b: Sequence[Fraction | int | str],
                 link: Fraction | int | str, order: int) -> SeriesValue:
    """Moment series of `root` for potentials V_a = sum t_j x^(2j),
    V_b likewise, coupled by -link * AB, truncated at total interaction
    order `order`.  Exact rational partial sum."""
    ta = [parse_rational(t) for t in couplings_a]
    tb = [parse_rational(t) for t in couplings_b]
    c = parse_rational(link)
    counter = _counter(len(ta), len(tb))
    halved = tuple(t / 2 for t in ta) + tuple(t / 2 for t in tb) + (-c / 2,)
    return counter.series_eval(tuple(root), halved, order)


def ising_series_coefficients(root: Word, terms_a: int, terms_b: int,
                              order: int) -> dict[CoefficientKey, Fraction]:
    """Coefficients of the moment series as a polynomial in the couplings:
    key (orders_a, orders_b, R) maps to the coefficient of
    prod t_a^k prod t_b^k link^R, i.e. (-1)^(star orders) M / (k! R!).
    Only nonzero cells are stored."""
    root = tuple(root)
    out: dict[CoefficientKey, Fraction] = {}
    n = terms_a + terms_b + 1
    for kbar in multi_indices(n, order):
        ka = kbar[:terms_a]
        kb = kbar[terms_a:-1]
        links = kbar[-1]
        m0 = ising_map_count(root, ka, kb, links)
        if not m0:
            continue
        sign = -1 if (sum(ka) + sum(kb)) % 2 else 1
        denom = 1
        for k in kbar:
            denom *= factorial(k)
        out[(ka, kb, links)] = Fraction(sign * m0, denom)
    return out


def chain_exponent(root: Word, orders_a: Sequence[int],
                   orders_b: Sequence[int]) -> Fraction:
    """Number of chain-insertion slots e = deg(root)/2 + sum_j j*k_j over
    both colors.  Half-integer for odd roots, whose counts all vanish
    anyway."""
    e = Fraction(len(tuple(root)), 2)
    for j, k in enumerate(orders_a, start=1):
        e += j * k
    for j, k in enumerate(orders_b, start=1):
        e += j * k
    return e


def _binomial(top: Fraction, k: int) -> Fraction:
    """C(top, k) for a rational top via the falling factorial."""
    out = Fraction(1)
    for i in range(k):
        out *= (top - i)
    return out / factorial(k)


def _slot_weight(e: Fraction, s: int) -> Fraction:
    """Ways to drop s unordered chain segments into e slots with
    repetition: C(e+s-1, s)."""
    return _binomial(e + s - 1, s)


def interaction_counts_via_moments(root: Word, orders_a: Sequence[int],
                                   orders_b: Sequence[int], max_links: int,
                                   ) -> list[int]:
    """I(root, kbar, r) for r = 0..max_links computed from the engine by
    peeling even chain insertions off the full counts:

        I(R)/R! = M(R)/R! - sum_{s>=1} C(e+s-1, s) * I(R-2s)/(R-2s)!

    Every value must come out a non-negative integer; a fractional result
    would refute the chain relation and raises."""
    root = tuple(root)
    ka = _check_orders(orders_a, "color-A")
    kb = _check_orders(orders_b, "color-B")
    e = chain_exponent(root, ka, kb)
    out: list[int] = []
    for links in range(max_links + 1):
        acc = Fraction(ising_map_count(root, ka, kb, links),
                       factorial(links))
        for s in range(1, links // 2 + 1):
            r = links - 2 * s
            if out[r]:
                acc -= _slot_weight(e, s) * Fraction(out[r], factorial(r))
        val = acc * factorial(links)
        if val.denominator != 1 or val < 0:
            raise ArithmeticError(
                f"chain relation refuted at {root}, {ka}, {kb}, "
                f"links={links}: got {val}"
            )
        out.append(int(val))
    return out


InteractionFn = Callable[[Orders, Orders, int], int]


def dressed_series_coefficients(root: Word, terms_a: int, terms_b: int,
                                order: int,
                                interaction: InteractionFn | None = None,
                                force: bool = False,
                                ) -> dict[CoefficientKey, Fraction]:
    """The dressed moment sum re-expanded in the bare couplings, on the
    same key grid as ising_series_coefficients.  The chain prefactor
    (1-c^2)^(-e) is expanded term by term, so cell (kbar, R) collects
    sum over r + 2s = R of C(e+s-1, s) I(kbar, r)/r!, times the usual
    sign and 1/k!.

    `interaction` maps (orders_a, orders_b, links) to the no-mutual-link
    count; by default the brute-force oracle, so keep the order small or
    pass the engine-backed inversion."""
    root = tuple(root)
    if interaction is None:
        def interaction(ka: Orders, kb: Orders, links: int) -> int:
            return ising_interaction_count(root, ka, kb, links, force=force)
    out: dict[CoefficientKey, Fraction] = {}
    for kbar in multi_indices(terms_a + terms_b, order):
        ka = kbar[:terms_a]
        kb = kbar[terms_a:]
        total_k = sum(kbar)
        e = chain_exponent(root, ka, kb)
        max_r = order - total_k
        inter = [interaction(ka, kb, r) for r in range(max_r + 1)]
        sign = -1 if total_k % 2 else 1
        denom = 1
        for k in kbar:
            denom *= factorial(k)
        for links in range(max_r + 1):
            acc = Fraction(0)
            for s in range(links // 2 + 1):
                r = links - 2 * s
                if inter[r]:
                    acc += _slot_weight(e, s) * Fraction(inter[r],
                                                         factorial(r))
            if acc:
                out[(ka, kb, links)] = Fraction(sign, denom) * acc
    return out


def evaluate_coefficients(coefficients: Mapping[CoefficientKey, Fraction],
                          couplings_a: Sequence[Fraction | int | str],
                          couplings_b: Sequence[Fraction | int | str],
                          link: Fraction | int | str) -> Fraction:
    """Plug rational couplings into a coefficient table."""
    ta = [parse_rational(t) for t in couplings_a]
    tb = [parse_rational(t) for t in couplings_b]
    c = parse_rational(link)
    total = Fraction(0)
    for (ka, kb, links), coeff in coefficients.items():
        term = coeff * c ** links
        for t, k in zip(ta, ka):
            term *= t ** k
        for t, k in zip(tb, kb):
            term *= t ** k
        total += term
    return total


# -- truncated bivariate series -------------------------------------------------


def _as_fraction(value) -> Fraction | None:
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    return None


class BiSeries:
    """Power series in two variables over Fraction, truncated at a fixed
    total degree.  Just enough ring structure for the algebraic series
    work here: add, multiply, integer powers, and inversion when the
    constant term is nonzero.  Scalars mix in on either side."""

    __slots__ = ("coef", "order")

    def __init__(self, coef: Mapping[tuple[int, int], Fraction] | None,
                 order: int):
        if order < 0:
            raise ValueError("order must be non-negative")
        self.order = order
        self.coef: dict[tuple[int, int], Fraction] = {}
        if coef:
            for (i, j), c in coef.items():
                c = Fraction(c)
                if c and i + j <= order:
                    self.coef[(i, j)] = c

    @classmethod
    def constant(cls, value, order: int) -> "BiSeries":
        return cls({(0, 0): Fraction(value)}, order)

    @classmethod
    def variable(cls, slot: int, order: int, scale=1) -> "BiSeries":
        if slot not in (0, 1):
            raise ValueError("slot must be 0 or 1")
        key = (1, 0) if slot == 0 else (0, 1)
        return cls({key: Fraction(scale)}, order)

    def coefficient(self, i: int, j: int) -> Fraction:
        return self.coef.get((i, j), Fraction(0))

    @property
    def is_zero(self) -> bool:
        return not self.coef

    def _check_order(self, other: "BiSeries") -> None:
        if self.order != other.order:
            raise ValueError("mixing truncation orders")

    def __add__(self, other):
        scalar = _as_fraction(other)
        if scalar is not None:
            out = dict(self.coef)
            c = out.get((0, 0), Fraction(0)) + scalar
            if c:
                out[(0, 0)] = c
            else:
                out.pop((0, 0), None)
            return BiSeries(out, self.order)
        if not isinstance(other, BiSeries):
            return NotImplemented
        self._check_order(other)
        out = dict(self.coef)
        for key, c in other.coef.items():
            s = out.get(key, Fraction(0)) + c
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return BiSeries(out, self.order)

    __radd__ = __add__

    def __neg__(self):
        return BiSeries({k: -c for k, c in self.coef.items()}, self.order)

    def __sub__(self, other):
        res = self.__add__(-other if isinstance(other, BiSeries)
                           else -Fraction(other))
        return res

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        scalar = _as_fraction(other)
        if scalar is not None:
            if not scalar:
                return BiSeries(None, self.order)
            return BiSeries({k: c * scalar for k, c in self.coef.items()},
                            self.order)
        if not isinstance(other, BiSeries):
            return NotImplemented
        self._check_order(other)
        out: dict[tuple[int, int], Fraction] = {}
        for (i1, j1), c1 in self.coef.items():
            for (i2, j2), c2 in other.coef.items():
                i, j = i1 + i2, j1 + j2
                if i + j > self.order:
                    continue
                key = (i, j)
                s = out.get(key, Fraction(0)) + c1 * c2
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return BiSeries(out, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        scalar = _as_fraction(other)
        if scalar is None:
            return NotImplemented
        return self * (Fraction(1) / scalar)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        out = BiSeries.constant(1, self.order)
        for _ in range(n):
            out = out * self
        return out

    def inv(self) -> "BiSeries":
        c0 = self.coef.get((0, 0), Fraction(0))
        if not c0:
            raise ZeroDivisionError("no constant term, cannot invert")
        w = self / c0 - 1
        acc = BiSeries.constant(1, self.order)
        for _ in range(self.order):
            acc = 1 - w * acc
        return acc / c0


# -- the quartic algebraic series -----------------------------------------------


def _map_equation_coefficients(x, y, u2):
    """Coefficients a_0..a_7 of the polynomial whose root is the quartic
    two-color series, the expansion of

        u^2 (P - 1 - 3xy P^3)(1 - 9xy P^2)^2 - P (1 + 3xP)(1 + 3yP).

    Works verbatim for scalar x, y and for BiSeries generators."""
    xy = x * y
    return [
        -u2,
        u2 - 1,
        18 * u2 * xy - 3 * x - 3 * y,
        (-21 * u2 - 9) * xy,
        -81 * u2 * xy * xy,
        135 * u2 * xy * xy,
        0,
        -243 * u2 * xy * xy * xy,
    ]


def _evaluate_polynomial(coeffs, p):
    acc = coeffs[-1]
    for a in reversed(coeffs[:-1]):
        acc = acc * p + a
    return acc


def _check_spin(u: Fraction) -> Fraction:
    u = Fraction(u)
    if u == 0:
        raise ValueError("spin weight u must be nonzero")
    if u * u == 1:
        raise ValueError("spin weight u must not be a square root of 1")
    return u


def _solve_map_equation(x: BiSeries, y: BiSeries, u2: Fraction,
                        order: int) -> BiSeries:
    coeffs = _map_equation_coefficients(x, y, u2)
    deriv = [i * a for i, a in enumerate(coeffs)][1:]
    p = BiSeries.constant(u2 / (u2 - 1), order)
    for _ in range(order + 2):
        g = _evaluate_polynomial(coeffs, p)
        if g.is_zero:
            break
        dg = _evaluate_polynomial(deriv, p)
        p = p - g * dg.inv()
    residual = _evaluate_polynomial(coeffs, p)
    if not residual.is_zero:
        raise ArithmeticError("map equation not solved to the truncation order")
    return p


def map_equation_series(u: Fraction | int | str, order: int) -> BiSeries:
    """The power-series root P(x, y) of the quartic two-color map
    equation at spin weight u, truncated at total degree `order`.  Its
    constant term is u^2/(u^2-1)."""
    u = _check_spin(parse_rational(u))
    x = BiSeries.variable(0, order)
    y = BiSeries.variable(1, order)
    return _solve_map_equation(x, y, u * u, order)


def rooted_quartic_series(u: Fraction | int | str, order: int) -> BiSeries:
    """Generating series I(X, Y) of rooted quartic two-color maps at spin
    weight u: the coefficient of X^w Y^b is sum_r u^r J(b, w, r), where J
    counts rooted planar maps with a root 2-gon of the Y color, b quartic
    stars of that same color, w of the other, and r links no two of which
    touch each other.  Built from the map-equation root evaluated at
    variables scaled by (u - 1/u)^2."""
    u = _check_spin(parse_rational(u))
    u2 = u * u
    lam = (u2 - 1) ** 2 / u2
    x = BiSeries.variable(0, order, scale=lam)
    y = BiSeries.variable(1, order, scale=lam)
    p = _solve_map_equation(x, y, u2, order)
    xy = x * y
    p2 = p * p
    p3 = p2 * p
    d = (1 - 9 * xy * p2).inv()
    middle = p * (1 + 3 * x * p - 2 * x * p2 - 6 * xy * p3) * d
    tail = (y * p3 * (1 + 3 * x * p) ** 3 / u2) * d * d * d
    return (1 - 1 / u2) * (x * p3 + middle - tail)


def verify_change_of_variables(z: Fraction | int | str,
                               c: Fraction | int | str) -> Fraction:
    """Residual of the quartic map equation under the substitution that
    reduces it to a one-matrix problem on the diagonal x = y:

        q = c^2 (1-z)^2,  P = -q / (1 - q (1 - z^2/3)),  x = y = -z (1-q s)/(3q)

    evaluated with exact rationals.  Zero means the reduction holds at
    that point."""
    z = parse_rational(z)
    c = _check_spin(parse_rational(c))
    q = c * c * (1 - z) ** 2
    s = 1 - z * z / 3
    denom = 1 - q * s
    if q == 0 or denom == 0:
        raise ValueError("substitution degenerates at this point")
    p = -q / denom
    x = -z * denom / (3 * q)
    coeffs = _map_equation_coefficients(x, x, c * c)
    return _evaluate_polynomial(coeffs, p)
