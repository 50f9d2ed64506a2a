"""Tensor products of presented algebras.

An element of L_1 ⊗ ... ⊗ L_n is a dict from tuples of words (one per leg)
to Scalars.  Products carry Koszul signs when legs are graded:
(x_1⊗…⊗x_n)(y_1⊗…⊗y_n) = (-1)^{Σ_{i<j} |x_j||y_i|} x_1y_1 ⊗ … ⊗ x_ny_n.
"""

from __future__ import annotations

from itertools import product as _cartesian

from .poly import NCPoly, add_scaled, add_term, format_coeff_word, word_key
from .rewriting import RewriteSystem
from .scalar import ONE, ZERO, Scalar


class TensorSpace:
    def __init__(self, *legs: RewriteSystem):
        self.legs = legs
        self.n = len(legs)

    def grade(self, i: int, w) -> int:
        return self.legs[i].presentation.grade(w)

    # -- construction --------------------------------------------------------
    def one(self) -> dict:
        return {((),) * self.n: ONE}

    def pure(self, *polys) -> dict:
        """Elementary tensor of NCPoly values (each already reduced)."""
        out: dict = {}
        items = [list(p.terms.items()) if isinstance(p, NCPoly) else list(p.items()) for p in polys]
        for combo in _cartesian(*items):
            c = ONE
            for _, v in combo:
                c = c * v
            add_term(out, tuple(w for w, _ in combo), c)
        return out

    # -- algebra -------------------------------------------------------------
    def reduce(self, terms: dict) -> dict:
        out: dict = {}
        legs = self.legs
        for key, c in terms.items():
            nfs = [list(legs[i].reduce_word(w).items()) for i, w in enumerate(key)]
            if len(nfs) == 1:
                for w, v in nfs[0]:
                    add_term(out, (w,), c * v)
                continue
            for combo in _cartesian(*nfs):
                v = c
                for _, x in combo:
                    v = v * x
                add_term(out, tuple(w for w, _ in combo), v)
        return out

    def _sign(self, k1, k2) -> int:
        s = 0
        for j in range(1, self.n):
            gj = self.grade(j, k1[j])
            if gj % 2 == 0:
                continue
            for i in range(j):
                s += gj * self.grade(i, k2[i])
        return -1 if s % 2 else 1

    def mul(self, x: dict, y: dict) -> dict:
        out: dict = {}
        graded = any(L.presentation.graded for L in self.legs)
        for k1, c1 in x.items():
            for k2, c2 in y.items():
                c = c1 * c2
                if graded and self._sign(k1, k2) < 0:
                    c = -c
                add_term(out, tuple(a + b for a, b in zip(k1, k2)), c)
        return self.reduce(out)

    def add(self, *xs) -> dict:
        out: dict = {}
        for x in xs:
            add_scaled(out, x, ONE)
        return out

    def sub(self, x: dict, y: dict) -> dict:
        out = dict(x)
        add_scaled(out, y, -ONE)
        return out

    def scale(self, x: dict, c) -> dict:
        out: dict = {}
        add_scaled(out, x, c)
        return out

    def star(self, x: dict) -> dict:
        """Legwise star (graded *-algebras need no extra sign)."""
        out: dict = {}
        for key, c in x.items():
            coeff = c.conj()
            nk = []
            for i, w in enumerate(key):
                sc, sw = self.legs[i].presentation.star_word(w)
                coeff = coeff * sc
                nk.append(sw)
            add_term(out, tuple(nk), coeff)
        return self.reduce(out)

    def apply_leg(self, x: dict, i: int, fn) -> dict:
        """Apply a linear map (word -> dict over a tensor of words) on leg i.

        ``fn(word)`` must return a dict keyed by tuples (the images, possibly
        several legs) which replace leg i.
        """
        out: dict = {}
        for key, c in x.items():
            for sub, v in fn(key[i]).items():
                add_term(out, key[:i] + sub + key[i + 1:], c * v)
        return out

    def fmt(self, x: dict) -> str:
        if not x:
            return "0"
        items = sorted(x.items(), key=lambda t: tuple(word_key(w) for w in t[0]), reverse=True)
        parts = []
        for idx, (key, c) in enumerate(items):
            ws = " ⊗ ".join(self.legs[i].presentation.format_word(w) for i, w in enumerate(key))
            if all(len(w) == 0 for w in key):
                ws = "1"
            parts.append(format_coeff_word(c, f"[{ws}]" if self.n > 1 else ws, idx == 0))
        return "".join(parts)

    def legs_of(self, x: dict, i: int) -> dict:
        """Group terms by the word in leg i: word -> dict over remaining legs."""
        out: dict = {}
        for key, c in x.items():
            add_term(out.setdefault(key[i], {}), key[:i] + key[i + 1:], c)
        return out
