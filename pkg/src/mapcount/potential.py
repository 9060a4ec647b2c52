"""Parser and model types for interaction potentials.

The input grammar is a tiny sum-of-monomials language:

    potential := term ("+" term)*
    term      := param "*" "(" word ")"
    word      := factor ("*" factor)*
    factor    := "x" INT ("^" INT)?
    param     := "t" INT | RATIONAL

`x3^2*x1` is the word (2, 2, 0).  A parameter is either a named coupling
t1, t2, ... to be bound later, or a rational literal ("3", "-1/48",
"0.25"); floats in scientific notation are rejected on purpose, the
whole pipeline is exact.  The literal "0" parses to the empty potential.

Each term t*(q) stands for t*(q + q*) in the matrix model, so potentials
are self-adjoint by construction and couplings stay real.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .words import Word, check_word, word_to_str


class PotentialSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class PotentialTerm:
    word: Word
    param: str | None = None        # name like "t1", or None for a literal
    coeff: Fraction | None = None   # literal value, or None for a named param

    def __post_init__(self):
        if (self.param is None) == (self.coeff is None):
            raise ValueError("term needs exactly one of param/coeff")


@dataclass(frozen=True)
class StarSpec:
    """The star types a counting problem is built from: one word per
    interaction term, plus the number of colors in play."""

    star_words: tuple[Word, ...]
    num_colors: int

    def __post_init__(self):
        for w in self.star_words:
            if not w:
                raise ValueError("unit monomial cannot be a star type")
            check_word(w, self.num_colors)
        if len(set(self.star_words)) != len(self.star_words):
            raise ValueError("duplicate star words")

    @property
    def num_terms(self) -> int:
        return len(self.star_words)

    def max_star_degree(self) -> int:
        return max((len(w) for w in self.star_words), default=0)


@dataclass(frozen=True)
class Potential:
    terms: tuple[PotentialTerm, ...]
    num_colors: int

    @property
    def words(self) -> tuple[Word, ...]:
        return tuple(t.word for t in self.terms)

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(t.param for t in self.terms if t.param is not None)

    def star_spec(self, num_colors: int | None = None) -> StarSpec:
        n = self.num_colors if num_colors is None else num_colors
        if n < self.num_colors:
            raise ValueError(
                f"potential uses {self.num_colors} colors, cannot restrict to {n}"
            )
        return StarSpec(self.words, n)

    def bind(self, assignments: Mapping[str, Fraction | int | str] | None = None,
             ) -> tuple[Fraction, ...]:
        """Resolve every term to a rational coupling.

        Named parameters must all be present in `assignments`; unknown
        assignment keys are rejected to catch typos.
        """
        assignments = dict(assignments or {})
        known = set(self.param_names)
        for name in assignments:
            if name not in known:
                raise ValueError(f"assignment for unknown parameter {name!r}")
        values = []
        for term in self.terms:
            if term.coeff is not None:
                values.append(term.coeff)
            else:
                if term.param not in assignments:
                    raise ValueError(f"parameter {term.param!r} not assigned")
                values.append(parse_rational(assignments[term.param]))
        return tuple(values)


def parse_rational(text: Fraction | int | str) -> Fraction:
    """Exact rational from 'p/q', an integer string, or a plain decimal.

    Floats and exponent notation are rejected: they would silently
    poison the exact pipeline.
    """
    if isinstance(text, (Fraction, int)):
        return Fraction(text)
    s = text.strip()
    if not re.fullmatch(r"[+-]?(\d+(\.\d+)?|\d+/\d+|\.\d+)", s):
        raise ValueError(f"not an exact rational literal: {text!r}")
    return Fraction(s)


_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<param>t\d+)
      | (?P<rational>[+-]?(?:\d+/\d+|\d+\.\d+|\.\d+|\d+))
      | (?P<letter>x\d+)
      | (?P<op>[*+^()])
    )""",
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise PotentialSyntaxError(
                f"unexpected character {text[pos:].lstrip()[0]!r} at position {pos}"
            )
        kind = m.lastgroup
        assert kind is not None
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok is None:
            raise PotentialSyntaxError(f"unexpected end of input in {self.text!r}")
        if kind is not None and tok[0] != kind:
            raise PotentialSyntaxError(
                f"expected {kind} at position {tok[2]}, got {tok[1]!r}"
            )
        if value is not None and tok[1] != value:
            raise PotentialSyntaxError(
                f"expected {value!r} at position {tok[2]}, got {tok[1]!r}"
            )
        self.pos += 1
        return tok

    def parse(self) -> list[PotentialTerm]:
        # special case: the literal 0 is the empty potential
        if [t[1] for t in self.tokens] == ["0"]:
            return []
        terms = [self.term()]
        while self.peek() is not None:
            self.take("op", "+")
            terms.append(self.term())
        return terms

    def term(self) -> PotentialTerm:
        tok = self.peek()
        if tok is None:
            raise PotentialSyntaxError("empty term")
        if tok[0] == "param":
            self.take()
            param, coeff = tok[1], None
        elif tok[0] == "rational":
            self.take()
            param, coeff = None, Fraction(tok[1])
        else:
            raise PotentialSyntaxError(
                f"term must start with a parameter or rational at position {tok[2]}"
            )
        self.take("op", "*")
        self.take("op", "(")
        word = self.word()
        self.take("op", ")")
        return PotentialTerm(word=word, param=param, coeff=coeff)

    def word(self) -> Word:
        letters = list(self.factor())
        while True:
            tok = self.peek()
            if tok is not None and tok[0] == "op" and tok[1] == "*":
                self.take()
                letters.extend(self.factor())
            else:
                break
        return tuple(letters)

    def factor(self) -> Word:
        tok = self.take("letter")
        color = int(tok[1][1:]) - 1
        if color < 0:
            raise PotentialSyntaxError(f"colors are numbered from x1, got {tok[1]}")
        power = 1
        nxt = self.peek()
        if nxt is not None and nxt[0] == "op" and nxt[1] == "^":
            self.take()
            ptok = self.take("rational")
            if not ptok[1].isdigit() or int(ptok[1]) < 1:
                raise PotentialSyntaxError(
                    f"exponent must be a positive integer at position {ptok[2]}"
                )
            power = int(ptok[1])
        return (color,) * power


def parse_potential(text: str, num_colors: int | None = None) -> Potential:
    """Parse the DSL into a Potential.

    The color count is inferred from the highest letter index unless
    given explicitly (useful when moment words mention colors that the
    potential itself does not).
    """
    terms = _Parser(text).parse()
    words = [t.word for t in terms]
    if len(set(words)) != len(words):
        dupes = sorted({word_to_str(w) for w in words if words.count(w) > 1})
        raise PotentialSyntaxError(f"duplicate words in potential: {', '.join(dupes)}")
    seen_params = [t.param for t in terms if t.param is not None]
    if len(set(seen_params)) != len(seen_params):
        raise PotentialSyntaxError("the same parameter appears in two terms")
    inferred = 1 + max((max(w) for w in words if w), default=-1)
    n = max(inferred, 0 if num_colors is None else num_colors)
    if num_colors is not None and num_colors < inferred:
        raise PotentialSyntaxError(
            f"potential mentions x{inferred} but only {num_colors} colors declared"
        )
    return Potential(terms=tuple(terms), num_colors=n)


def parse_word(text: str, num_colors: int | None = None) -> Word:
    """Parse a bare word like 'x1^2*x2' (or '1' for the unit)."""
    s = text.strip()
    if s in ("1", ""):
        return ()
    parser = _Parser(s)
    word = parser.word()
    if parser.peek() is not None:
        tok = parser.peek()
        raise PotentialSyntaxError(f"trailing input at position {tok[2]}: {tok[1]!r}")
    if num_colors is not None:
        check_word(word, num_colors)
    return word
