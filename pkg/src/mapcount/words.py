"""Free-algebra words over a finite color alphabet.

A monomial in m non-commuting letters is stored as a tuple of 0-based
color indices, so x1*x2^2 is (0, 1, 1) and the unit monomial is ().
Everything the counting engine needs -- the *-involution that reverses
words, cyclic rotation, the free difference quotient and the cyclic
derivative -- lives here as plain functions on tuples.  A small
polynomial wrapper (word -> Fraction) is provided for the places where
sums of words are more convenient than single words.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

Word = tuple[int, ...]

UNIT: Word = ()


def check_word(word: Word, num_colors: int) -> None:
    """Raise ValueError unless every letter is a color index in range."""
    for c in word:
        if not isinstance(c, int) or not 0 <= c < num_colors:
            raise ValueError(f"letter {c!r} out of range for {num_colors} colors")


def degree(word: Word) -> int:
    return len(word)


def reverse_word(word: Word) -> Word:
    """The *-involution on monomials: letters are self-adjoint, order flips."""
    return word[::-1]


def rotate_word(word: Word, shift: int = 1) -> Word:
    """Cyclic left rotation by `shift` letters (the unit rotates to itself)."""
    if not word:
        return word
    shift %= len(word)
    return word[shift:] + word[:shift]


def symmetry_degree(word: Word) -> int:
    """Number of rotations fixing the word.

    Equals the number of p in [0, deg) with rotate_word(word, p) == word,
    which is deg / (length of the primitive root).  Undefined for the
    unit monomial: every rotation fixes it vacuously, and the counting
    formulas that divide by the symmetry degree never see a unit star.
    """
    if not word:
        raise ValueError("symmetry degree of the unit monomial is undefined")
    return sum(1 for p in range(len(word)) if rotate_word(word, p) == word)


def nc_derivative(word: Word, color: int) -> tuple[tuple[Word, Word], ...]:
    """Free difference quotient: all splittings  word = left + (color,) + right.

    Returns the simple tensors (left, right), one per occurrence of the
    color, in left-to-right order.
    """
    return tuple(
        (word[:p], word[p + 1:]) for p, c in enumerate(word) if c == color
    )


def cyclic_derivative(word: Word, color: int) -> tuple[Word, ...]:
    """Cyclic derivative: for each occurrence word = left+(color,)+right,
    contribute right+left.  Order follows the occurrences."""
    return tuple(
        word[p + 1:] + word[:p] for p, c in enumerate(word) if c == color
    )


def word_to_str(word: Word) -> str:
    """Render a word in the x1^2*x2 style used by the potential grammar."""
    if not word:
        return "1"
    parts: list[str] = []
    run_color, run_len = word[0], 0
    for c in word:
        if c == run_color:
            run_len += 1
        else:
            parts.append(_power_str(run_color, run_len))
            run_color, run_len = c, 1
    parts.append(_power_str(run_color, run_len))
    return "*".join(parts)


def _power_str(color: int, power: int) -> str:
    base = f"x{color + 1}"
    return base if power == 1 else f"{base}^{power}"


# ---------------------------------------------------------------------------
# Polynomials: finitely supported maps word -> Fraction.
# ---------------------------------------------------------------------------

class NCPolynomial:
    """A finite Fraction-linear combination of words.

    Immutable in spirit: arithmetic returns new instances.  Zero
    coefficients are dropped so that equality is equality of dicts.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Word, Fraction] | None = None):
        clean: dict[Word, Fraction] = {}
        if terms:
            for word, coeff in terms.items():
                coeff = Fraction(coeff)
                if coeff:
                    clean[tuple(word)] = coeff
        self.terms = clean

    @classmethod
    def from_word(cls, word: Word, coeff: Fraction | int = 1) -> "NCPolynomial":
        return cls({tuple(word): Fraction(coeff)})

    @classmethod
    def zero(cls) -> "NCPolynomial":
        return cls()

    @classmethod
    def one(cls) -> "NCPolynomial":
        return cls({UNIT: Fraction(1)})

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, NCPolynomial) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "NCPolynomial") -> "NCPolynomial":
        out = dict(self.terms)
        for word, coeff in other.terms.items():
            out[word] = out.get(word, Fraction(0)) + coeff
        return NCPolynomial(out)

    def __sub__(self, other: "NCPolynomial") -> "NCPolynomial":
        return self + (-other)

    def __neg__(self) -> "NCPolynomial":
        return NCPolynomial({w: -c for w, c in self.terms.items()})

    def __mul__(self, other: "NCPolynomial") -> "NCPolynomial":
        out: dict[Word, Fraction] = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                w = w1 + w2
                out[w] = out.get(w, Fraction(0)) + c1 * c2
        return NCPolynomial(out)

    def scale(self, scalar: Fraction | int) -> "NCPolynomial":
        s = Fraction(scalar)
        return NCPolynomial({w: s * c for w, c in self.terms.items()})

    def adjoint(self) -> "NCPolynomial":
        """*-involution: reverse every word (coefficients are rational, so
        conjugation is trivial)."""
        return NCPolynomial({reverse_word(w): c for w, c in self.terms.items()})

    def max_degree(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def __repr__(self) -> str:
        if not self.terms:
            return "NCPolynomial(0)"
        bits = [f"{c}*{word_to_str(w)}" for w, c in sorted(self.terms.items())]
        return "NCPolynomial(" + " + ".join(bits) + ")"


def poly_cyclic_derivative(poly: NCPolynomial, color: int) -> NCPolynomial:
    """Cyclic derivative extended linearly to polynomials."""
    out: dict[Word, Fraction] = {}
    for word, coeff in poly.terms.items():
        for piece in cyclic_derivative(word, color):
            out[piece] = out.get(piece, Fraction(0)) + coeff
    return NCPolynomial(out)


TensorTerm = tuple[Word, Word]


def poly_nc_derivative(poly: NCPolynomial, color: int) -> dict[TensorTerm, Fraction]:
    """Free difference quotient extended linearly; result maps (left, right)
    simple tensors to coefficients."""
    out: dict[TensorTerm, Fraction] = {}
    for word, coeff in poly.terms.items():
        for left, right in nc_derivative(word, color):
            key = (left, right)
            out[key] = out.get(key, Fraction(0)) + coeff
    out = {k: v for k, v in out.items() if v}
    return out


def words_of_degree(num_colors: int, deg: int) -> Iterable[Word]:
    """All words of exact degree deg, in lexicographic order."""
    if deg == 0:
        yield UNIT
        return
    word = [0] * deg
    while True:
        yield tuple(word)
        p = deg - 1
        while p >= 0 and word[p] == num_colors - 1:
            word[p] = 0
            p -= 1
        if p < 0:
            return
        word[p] += 1
