"""Bounded noncommutative completion and normal forms.

Relations are oriented by the degree-lexicographic order (length first, then
generator ids) and completed by resolving overlap ambiguities in the style of
the diamond lemma.  Ambiguities longer than the degree bound are deferred;
if none remain when the queue empties the rule set is confluent in every
degree, which the system records as ``closed``.
"""

from __future__ import annotations

import heapq
import sys
from dataclasses import dataclass, field

from ..errors import CompletionOverflow, DegreeOverflow, ZeroLeadingTerm
from .poly import NCPoly, Presentation, Word, add_scaled, add_term, word_key
from .scalar import ONE

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


@dataclass
class Overlap:
    """A resolved (or deferred) ambiguity between two rules."""

    word: Word
    left: Word
    right: Word
    new_rule: bool

    def as_dict(self, pres: Presentation) -> dict:
        return {"word": pres.format_word(self.word), "left": pres.format_word(self.left),
                "right": pres.format_word(self.right), "new_rule": self.new_rule}


class _Rules:
    """Mutable rule store with a reduction cache, used during completion."""

    def __init__(self):
        self.rules: dict = {}
        self.lengths: list = []
        self.cache: dict = {}

    def _relength(self):
        self.lengths = sorted({len(w) for w in self.rules})

    def add(self, lhs, rhs):
        self.rules[lhs] = rhs
        self._relength()
        self.cache.clear()

    def remove(self, lhs):
        del self.rules[lhs]
        self._relength()
        self.cache.clear()

    def redex(self, w):
        rules = self.rules
        n = len(w)
        for end in range(1, n + 1):
            for L in self.lengths:
                if L > end:
                    break
                sub = w[end - L:end]
                if sub in rules:
                    return end - L, L
        return None

    def reduce_word(self, w, bound=None):
        hit = self.cache.get(w)
        if hit is not None:
            return hit
        r = self.redex(w)
        if r is None:
            out = {w: ONE}
        else:
            i, L = r
            pre, suf = w[:i], w[i + L:]
            out = {}
            for rw, c in self.rules[w[i:i + L]].items():
                nw = pre + rw + suf
                if bound is not None and len(nw) > bound:
                    raise DegreeOverflow(f"intermediate word of length {len(nw)} exceeds bound {bound}")
                add_scaled(out, self.reduce_word(nw, bound), c)
        self.cache[w] = out
        return out

    def reduce(self, terms, bound=None) -> dict:
        out: dict = {}
        for w, c in terms.items():
            add_scaled(out, self.reduce_word(w, bound), c)
        return out


def _monic(terms: dict):
    lw = max(terms, key=word_key)
    inv = terms[lw].inverse()
    rhs = {}
    for w, c in terms.items():
        if w != lw:
            rhs[w] = -(c * inv)
    return lw, rhs


def _overlaps(a: Word, b: Word):
    """Proper overlaps: suffix of a equals prefix of b."""
    out = []
    for k in range(1, min(len(a), len(b))):
        if a[-k:] == b[:k]:
            out.append(k)
    return out


class RewriteSystem:
    """Confluent (to ``degree_bound``, or globally if ``closed``) rule set."""

    def __init__(self, presentation: Presentation, rules: dict, degree_bound: int,
                 closed: bool, certificate: list):
        self.presentation = presentation
        self.rules = rules
        self.degree_bound = degree_bound
        self.closed = closed
        self.certificate = certificate
        self.order = "deglex"
        self._store = _Rules()
        self._store.rules = rules
        self._store._relength()
        self._basis_by_length: dict = {0: [()]}

    # -- reduction -----------------------------------------------------------
    @property
    def lengths(self):
        return self._store.lengths

    def is_normal(self, w: Word) -> bool:
        return self._store.redex(w) is None

    def reduce_word(self, w: Word) -> dict:
        """Normal form of a word as a coefficient dict (shared; do not mutate)."""
        if not self.closed and len(w) > self.degree_bound:
            raise DegreeOverflow(f"word of length {len(w)} exceeds certified bound {self.degree_bound}")
        return self._store.reduce_word(w, None if self.closed else self.degree_bound)

    def reduce_terms(self, terms) -> dict:
        out: dict = {}
        for w, c in terms.items():
            add_scaled(out, self.reduce_word(w), c)
        return out

    def reduce(self, x) -> NCPoly:
        terms = x.terms if isinstance(x, NCPoly) else x
        return NCPoly._raw(self.reduce_terms(terms))

    def mul(self, x: NCPoly, y: NCPoly) -> NCPoly:
        out: dict = {}
        for w1, c1 in x.terms.items():
            for w2, c2 in y.terms.items():
                add_scaled(out, self.reduce_word(w1 + w2), c1 * c2)
        return NCPoly._raw(out)

    def prod(self, *xs) -> NCPoly:
        acc = NCPoly.scalar(1)
        for x in xs:
            acc = self.mul(acc, x)
        return acc

    def star(self, x: NCPoly) -> NCPoly:
        return self.reduce(self.presentation.star_poly(x))

    def one(self) -> NCPoly:
        return NCPoly.scalar(1)

    def gen(self, name: str) -> NCPoly:
        return self.presentation.gen(name)

    def parse(self, text: str) -> NCPoly:
        return self.reduce(self.presentation.parse_poly(text))

    def fmt(self, x) -> str:
        return self.presentation.format_poly(x if isinstance(x, NCPoly) else NCPoly._raw(dict(x)))

    # -- bases ---------------------------------------------------------------
    def normal_words_of_length(self, L: int) -> list:
        """Irreducible words of length L in increasing monomial order."""
        cache = self._basis_by_length
        if L in cache:
            return cache[L]
        prev = self.normal_words_of_length(L - 1)
        ng = self.presentation.ngens
        rules = self.rules
        lengths = self.lengths
        out = []
        for w in prev:
            for g in range(ng):
                nw = w + (g,)
                n = len(nw)
                ok = True
                for M in lengths:
                    if M > n:
                        break
                    if nw[n - M:] in rules:
                        ok = False
                        break
                if ok:
                    out.append(nw)
        out.sort(key=word_key)
        cache[L] = out
        return out

    def normal_words_up_to(self, L: int) -> list:
        out = []
        for k in range(L + 1):
            out.extend(self.normal_words_of_length(k))
        return out

    def basis(self, k: int) -> list:
        """Irreducible words of degree k (grade sum when graded, else length)."""
        pres = self.presentation
        if not pres.graded:
            return self.normal_words_of_length(k)
        if min(pres.grades, default=1) <= 0:
            raise ValueError("graded basis slices need all generator grades positive")
        out = []
        for L in range(k + 1):
            out.extend(w for w in self.normal_words_of_length(L) if pres.grade(w) == k)
        out.sort(key=word_key)
        return out


def complete(p: Presentation, degree_bound: int, max_rules: int = 5000) -> RewriteSystem:
    """Complete the relations of ``p`` (plus their star images) to a rewrite system."""
    rel_deg = max((r.degree() for r in p.relations), default=0)
    if degree_bound < rel_deg:
        raise ValueError(f"degree_bound {degree_bound} is below the relation degree {rel_deg}")
    store = _Rules()
    pending = []
    for r in p.relations:
        pending.append(dict(r.terms))
        pending.append(dict(p.star_poly(r).terms))
    pairs: list = []
    seq = 0
    certificate: list = []
    deferred: list = []
    top_level_new: list = []

    def insert(terms):
        nonlocal seq
        terms = store.reduce(terms)
        if not terms:
            return False
        lw, rhs = _monic(terms)
        if lw == ():
            raise ZeroLeadingTerm("the relations generate the unit ideal (a nonzero scalar is zero)")
        # rules whose leading word contains lw are no longer reduced: re-queue them
        for other in list(store.rules):
            if _contains(other, lw):
                orhs = store.rules[other]
                store.remove(other)
                back = dict(orhs)
                back = {w: -c for w, c in back.items()}
                add_term(back, other, ONE)
                pending.append(back)
        store.add(lw, rhs)
        if len(store.rules) > max_rules:
            raise CompletionOverflow(f"more than {max_rules} rules generated", overlap=lw)
        for other in list(store.rules):
            for a, b in ((lw, other), (other, lw)) if other != lw else ((lw, lw),):
                for k in _overlaps(a, b):
                    word = a + b[k:]
                    seq += 1
                    heapq.heappush(pairs, (len(word), word, seq, a, b, k))
        return True

    while True:
        while pending:
            insert(pending.pop(0))
        if not pairs:
            break
        L, word, _, a, b, k = heapq.heappop(pairs)
        if a not in store.rules or b not in store.rules:
            continue
        if L > degree_bound:
            deferred.append((word, a, b))
            while pairs:
                L2, w2, _, a2, b2, _k = heapq.heappop(pairs)
                if a2 in store.rules and b2 in store.rules:
                    deferred.append((w2, a2, b2))
            break
        # word = a + b[k:] = a[:-k] + b
        left = {}
        for w, c in store.rules[a].items():
            add_term(left, w + b[k:], c)
        right = {}
        for w, c in store.rules[b].items():
            add_term(right, a[:len(a) - k] + w, c)
        diff = store.reduce(left)
        add_scaled(diff, store.reduce(right), -ONE)
        new = bool(diff)
        certificate.append(Overlap(word, a, b, new))
        if new:
            if L == degree_bound:
                top_level_new.append(word)
            pending.append(diff)

    # make right-hand sides fully reduced
    final = {}
    for lw in sorted(store.rules, key=word_key):
        final[lw] = store.reduce(store.rules[lw])
    closed = not deferred
    if deferred and top_level_new:
        raise CompletionOverflow(
            f"completion still producing rules at degree {degree_bound}; "
            f"first offending overlap: {p.format_word(top_level_new[0])}",
            overlap=top_level_new[0])
    for word, a, b in deferred:
        certificate.append(Overlap(word, a, b, False))
    rs = RewriteSystem(p, final, degree_bound, closed, certificate)
    rs.deferred = [w for w, _, _ in deferred]
    return rs


def _contains(big: Word, small: Word) -> bool:
    n, m = len(big), len(small)
    if m > n:
        return False
    for i in range(n - m + 1):
        if big[i:i + m] == small:
            return True
    return False


def normal_form(x: NCPoly, R: RewriteSystem) -> NCPoly:
    return R.reduce(x)


def basis(R: RewriteSystem, k: int) -> list:
    return R.basis(k)


def star_poly(x: NCPoly, p) -> NCPoly:
    pres = p.presentation if isinstance(p, RewriteSystem) else p
    return pres.star_poly(x)
