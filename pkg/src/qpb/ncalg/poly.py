"""Words, noncommutative polynomials and presentations of *-algebras."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..errors import PresentationError, ScalarParseError
from .scalar import ONE, ZERO, Scalar, as_scalar

Word = tuple  # tuple of generator ids; () is the unit


def word_key(w: Word):
    """Sort key of the monomial order: length first, then lexicographic ids."""
    return (len(w), w)


class NCPoly:
    """Finite linear combination of words with Scalar coefficients.

    The coefficient dict never stores zeros, so two polynomials are equal
    exactly when their dicts are equal.  Multiplication here is free
    concatenation; reduction modulo relations is done by a RewriteSystem.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        if terms is None:
            self.terms = {}
        else:
            self.terms = {w: c for w, c in terms.items() if not c.is_zero()}

    @classmethod
    def _raw(cls, terms: dict) -> "NCPoly":
        p = object.__new__(cls)
        p.terms = terms
        return p

    @classmethod
    def word(cls, w: Iterable[int], coeff=ONE) -> "NCPoly":
        coeff = as_scalar(coeff)
        if coeff.is_zero():
            return cls._raw({})
        return cls._raw({tuple(w): coeff})

    @classmethod
    def scalar(cls, c) -> "NCPoly":
        return cls.word((), c)

    @classmethod
    def gen(cls, g: int, coeff=ONE) -> "NCPoly":
        return cls.word((g,), coeff)

    # -- queries -------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def items(self):
        return self.terms.items()

    def words(self):
        return self.terms.keys()

    def coefficient(self, w: Word) -> Scalar:
        return self.terms.get(tuple(w), ZERO)

    def degree(self) -> int:
        """Maximal word length (-1 for zero)."""
        return max((len(w) for w in self.terms), default=-1)

    def leading_word(self) -> Word:
        return max(self.terms, key=word_key)

    def sorted_items(self, reverse=True):
        return sorted(self.terms.items(), key=lambda t: word_key(t[0]), reverse=reverse)

    def is_scalar(self) -> bool:
        return all(len(w) == 0 for w in self.terms)

    def scalar_value(self) -> Scalar:
        if not self.is_scalar():
            raise ValueError("polynomial is not a scalar multiple of the unit")
        return self.terms.get((), ZERO)

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, NCPoly):
            other = NCPoly.scalar(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            v = out.get(w)
            if v is None:
                out[w] = c
            else:
                v = v + c
                if v.is_zero():
                    del out[w]
                else:
                    out[w] = v
        return NCPoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return NCPoly._raw({w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, NCPoly):
            other = NCPoly.scalar(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "NCPoly":
        c = as_scalar(c)
        if c.is_zero():
            return NCPoly._raw({})
        if c.is_one():
            return self
        return NCPoly._raw({w: v * c for w, v in self.terms.items()})

    def __mul__(self, other):
        """Free (concatenation) product; scalars scale."""
        if isinstance(other, NCPoly):
            out: dict = {}
            for w1, c1 in self.terms.items():
                for w2, c2 in other.terms.items():
                    add_term(out, w1 + w2, c1 * c2)
            return NCPoly._raw(out)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other):
        if isinstance(other, NCPoly):
            return self.terms == other.terms
        if isinstance(other, (int, Scalar)):
            return self.terms == NCPoly.scalar(other).terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        inner = ", ".join(f"{w}: {c}" for w, c in self.sorted_items())
        return f"NCPoly({{{inner}}})"


def add_term(acc: dict, w, c: Scalar) -> None:
    """acc[w] += c, dropping zeros."""
    v = acc.get(w)
    if v is None:
        if not c.is_zero():
            acc[w] = c
    else:
        v = v + c
        if v.is_zero():
            del acc[w]
        else:
            acc[w] = v


def add_scaled(acc: dict, terms: Mapping, c: Scalar) -> None:
    """acc += c * terms."""
    if c.is_one():
        for w, v in terms.items():
            add_term(acc, w, v)
    else:
        for w, v in terms.items():
            add_term(acc, w, v * c)


@dataclass
class Generator:
    """A generator symbol.

    ``star`` names the star partner; ``star_coeff`` allows g* = c·h (c real,
    and the partner's coefficient must make the involution consistent).
    """

    name: str
    grade: int = 0
    star: str | None = None
    star_coeff: Scalar = field(default_factory=lambda: ONE)


_NAME_RE = re.compile(r"^[^\s()+\-]+$")


class Presentation:
    """Generators with star table and grades, plus a list of relations (= 0).

    The listing order of the generators is their order in the monomial
    order.  Relations are NCPoly values over generator ids.
    """

    def __init__(self, generators: list[Generator], relations: Iterable[NCPoly] = (),
                 graded: bool = False, name: str = ""):
        self.name = name
        self.generators = list(generators)
        self.graded = graded
        self.index = {}
        for i, g in enumerate(self.generators):
            if not _NAME_RE.match(g.name) or g.name == "q":
                raise PresentationError(f"invalid generator name {g.name!r}")
            if g.name in self.index:
                raise PresentationError(f"duplicate generator name {g.name!r}")
            self.index[g.name] = i
        self.star_id = []
        self.star_coeff = []
        for g in self.generators:
            partner = g.star if g.star is not None else g.name
            if partner not in self.index:
                raise PresentationError(f"star partner {partner!r} of {g.name!r} is not a generator")
            self.star_id.append(self.index[partner])
            self.star_coeff.append(as_scalar(g.star_coeff))
        self.grades = [g.grade for g in self.generators]
        for i, g in enumerate(self.generators):
            j = self.star_id[i]
            if self.star_id[j] != i:
                raise PresentationError(f"star of star of {g.name!r} is not {g.name!r}")
            if self.grades[j] != g.grade:
                raise PresentationError(f"star does not preserve the grade of {g.name!r}")
            if not (self.star_coeff[i] * self.star_coeff[j].conj()).is_one():
                raise PresentationError(f"star coefficients of {g.name!r} are not involutive")
        self.relations = [r for r in relations if not r.is_zero()]

    @property
    def ngens(self) -> int:
        return len(self.generators)

    def gen_id(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise PresentationError(f"unknown generator {name!r}") from None

    def gen(self, name: str) -> NCPoly:
        return NCPoly.gen(self.gen_id(name))

    def grade(self, w: Word) -> int:
        g = self.grades
        return sum(g[x] for x in w)

    def degree(self, w: Word) -> int:
        return self.grade(w) if self.graded else len(w)

    def koszul_reverse_sign(self, w: Word) -> int:
        """Sign picked up when reversing a word of graded letters."""
        odd = sum(1 for x in w if self.grades[x] % 2)
        return -1 if (odd * (odd - 1) // 2) % 2 else 1

    def star_word(self, w: Word):
        coeff = ONE
        sid, sc = self.star_id, self.star_coeff
        for x in w:
            c = sc[x]
            if not c.is_one():
                coeff = coeff * c
        if self.koszul_reverse_sign(w) < 0:
            coeff = -coeff
        return coeff, tuple(sid[x] for x in reversed(w))

    def star_poly(self, p: NCPoly) -> NCPoly:
        """Antilinear antihomomorphism (graded: (xy)* = (-1)^{|x||y|} y* x*)."""
        out: dict = {}
        for w, c in p.terms.items():
            sc, sw = self.star_word(w)
            add_term(out, sw, c.conj() * sc)
        return NCPoly._raw(out)

    # -- text I/O ------------------------------------------------------------
    def word_from_names(self, names: Iterable[str]) -> Word:
        return tuple(self.gen_id(n) for n in names)

    def format_word(self, w: Word) -> str:
        if not w:
            return "1"
        return " ".join(self.generators[x].name for x in w)

    def format_poly(self, p: NCPoly) -> str:
        return format_terms(p.terms, self.format_word)

    def parse_poly(self, text: str) -> NCPoly:
        return parse_terms(text, self.index)


def format_coeff_word(c: Scalar, word_str: str, first: bool) -> str:
    cs = str(c)
    negative = False
    if cs.startswith("-") and " " not in cs:
        negative = True
        cs = cs[1:]
    if " " in cs or "/" in cs:
        cs = f"({cs})"
    if word_str == "1":
        body = cs
    elif cs == "1":
        body = word_str
    else:
        body = f"{cs} {word_str}"
    if first:
        return ("-" if negative else "") + body
    return (" - " if negative else " + ") + body


def format_terms(terms: Mapping, fmt_word, key=None) -> str:
    if not terms:
        return "0"
    key = key or (lambda w: word_key(w) if isinstance(w, tuple) and all(isinstance(x, int) for x in w) else repr(w))
    items = sorted(terms.items(), key=lambda t: key(t[0]), reverse=True)
    return "".join(format_coeff_word(c, fmt_word(w), i == 0) for i, (w, c) in enumerate(items))


def _split_terms(text: str):
    depth = 0
    start = 0
    sign = 1
    out = []
    i = 0
    s = text.strip()
    while i < len(s):
        ch = s[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch in "+-" and depth == 0 and (i == 0 or s[i - 1].isspace()):
            chunk = s[start:i].strip()
            if chunk:
                out.append((sign, chunk))
            sign = -1 if ch == "-" else 1
            start = i + 1
        i += 1
    chunk = s[start:].strip()
    if chunk:
        out.append((sign, chunk))
    return out


def _tokens(term: str):
    toks = []
    depth = 0
    cur = ""
    for ch in term:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch.isspace() and depth == 0:
            if cur:
                toks.append(cur)
            cur = ""
        else:
            cur += ch
    if cur:
        toks.append(cur)
    return toks


def parse_terms(text: str, index: Mapping[str, int]) -> NCPoly:
    """Parse a poly-string like ``"a c - q c a"`` or ``"(1 - q^2) a + 1"``.

    Products are whitespace separated; tokens that are not generator names
    are parsed as scalar factors.  Terms are separated by `` + `` / `` - ``.
    """
    out: dict = {}
    if text.strip() in ("", "0"):
        return NCPoly()
    for sign, term in _split_terms(text):
        coeff = Scalar(sign)
        word = []
        for tok in _tokens(term):
            if tok in index:
                word.append(index[tok])
            else:
                if word:
                    raise PresentationError(f"scalar factor {tok!r} after generators in term {term!r}")
                try:
                    coeff = coeff * Scalar.parse(tok)
                except ScalarParseError:
                    raise PresentationError(f"unknown generator or bad scalar {tok!r}") from None
        add_term(out, tuple(word), coeff)
    return NCPoly._raw(out)
