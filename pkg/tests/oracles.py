"""Independent oracles for the test suite.

They share nothing with the package's linear algebra: ranks are computed
over GF(P) after specializing q^(1/2) to a fixed residue, and the Haar
system is assembled from the raw JSON tables and solved with sympy.  A
rank at a specialization can only drop, so equality with the package's
generic count is strong evidence that both are right.
"""

from __future__ import annotations

import itertools
import json
from fractions import Fraction

import sympy

P = 1_000_003
S_VALUE = 1234  # q^(1/2) mod P


def scalar_mod(c, s: int = S_VALUE, p: int = P) -> int:
    num = sum(int(a) * pow(s, i, p) for i, a in enumerate(c.num.coeffs())) % p
    den = sum(int(a) * pow(s, i, p) for i, a in enumerate(c.den.coeffs())) % p
    if den == 0:
        raise ZeroDivisionError("specialization hits a pole")
    return num * pow(den, p - 2, p) % p


class ModpEchelon:
    """Incremental sparse row echelon form over GF(P)."""

    def __init__(self, p: int = P):
        self.p = p
        self.pivots: dict = {}

    def reduce(self, row: dict) -> dict:
        p = self.p
        row = {k: v % p for k, v in row.items() if v % p}
        while row:
            k = min(row)
            piv = self.pivots.get(k)
            if piv is None:
                return row
            c = row[k]
            for kk, vv in piv.items():
                nv = (row.get(kk, 0) - c * vv) % p
                if nv:
                    row[kk] = nv
                else:
                    row.pop(kk, None)
        return row

    def add(self, row: dict) -> bool:
        row = self.reduce(row)
        if not row:
            return False
        k = min(row)
        inv = pow(row[k], self.p - 2, self.p)
        self.pivots[k] = {kk: vv * inv % self.p for kk, vv in row.items()}
        return True

    @property
    def rank(self) -> int:
        return len(self.pivots)


def modp_rank(rows) -> int:
    ech = ModpEchelon()
    for r in rows:
        ech.add(r)
    return ech.rank


def _word_index(words):
    return {w: i for i, w in enumerate(words)}


def quotient_filtration_dims(pres, k_max: int, slack: int = 1) -> list:
    """dim of (words of length ≤ k) modulo the two-sided ideal, k = 0..k_max.

    The ideal is generated by the relations of ``pres`` and their star images;
    its part in length ≤ k is approximated by products u r v of total length
    ≤ k + slack, intersected with the length ≤ k words.
    """
    ng = pres.ngens
    rels = list(pres.relations) + [pres.star_poly(r) for r in pres.relations]
    K = k_max + slack
    # order columns so that longer words come first: then echelon pivots on
    # long words first and rows surviving with only short support live in F_k
    words = [w for L in range(K, -1, -1) for w in itertools.product(range(ng), repeat=L)]
    col = _word_index(words)
    ech = ModpEchelon()
    for r in rels:
        terms = [(w, scalar_mod(c)) for w, c in r.terms.items()]
        deg = max(len(w) for w, _ in terms)
        for lu in range(K - deg + 1):
            for lv in range(K - deg - lu + 1):
                for u in itertools.product(range(ng), repeat=lu):
                    for v in itertools.product(range(ng), repeat=lv):
                        ech.add({col[u + w + v]: c for w, c in terms})
    out = []
    for k in range(k_max + 1):
        # rows of the echelon whose support is inside F_k span I_K ∩ F_k
        total = sum(ng ** L for L in range(k + 1))
        inside = sum(1 for row in ech.pivots.values() if all(len(words[c]) <= k for c in row))
        out.append(total - inside)
    return out


def fixed_point_dims_modp(Od, k_max: int) -> list:
    """dim {x of length ≤ k : δ(x) = x ⊗ 1} via the kernel rank of δ − (· ⊗ 1)."""
    out = []
    for k in range(k_max + 1):
        words = Od.R.normal_words_up_to(k)
        keys: dict = {}
        rows = []
        for w in words:
            delta = Od.coaction_word(w)
            row: dict = {}
            for key, c in delta.items():
                idx = keys.setdefault(key, len(keys))
                row[idx] = (row.get(idx, 0) + scalar_mod(c)) % P
            idx = keys.setdefault((w, ()), len(keys))
            row[idx] = (row.get(idx, 0) - 1) % P
            rows.append(row)
        out.append(len(words) - modp_rank(rows))
    return out


# -- Haar state: raw JSON tables, sympy solve ------------------------------------------------------------


q_sym = sympy.Symbol("q", positive=True)


def to_sympy(c) -> sympy.Expr:
    s = sympy.sqrt(q_sym)
    num = sum(int(a) * s ** i for i, a in enumerate(c.num.coeffs()))
    den = sum(int(a) * s ** i for i, a in enumerate(c.den.coeffs()))
    return sympy.together(num / den)


def haar_bruteforce(G, L: int) -> dict:
    """Haar values on normal words of length ≤ L, solved independently.

    The coproduct is expanded from the group's JSON table on single letters
    (no caching), the second leg reduced by the group's rewrite system, and
    the invariance system solved by sympy.
    """
    from qpb.cqg import _builtin_text
    from qpb.ncalg.poly import NCPoly

    A = G.A
    pres = A.presentation
    doc = json.loads(_builtin_text(G.name))
    cop = {}
    for g, val in doc["hopf"]["coproduct"].items():
        pairs = []
        for left, right, coeff in val:
            pairs.append((A.reduce(NCPoly.word(pres.word_from_names(left))),
                          A.reduce(NCPoly.word(pres.word_from_names(right))),
                          sympy.sympify(coeff.replace("^", "**"), locals={"q": q_sym})))
        cop[pres.gen_id(g)] = pairs
    words = A.normal_words_up_to(L)
    unknown = {w: sympy.Symbol(f"h{i}") for i, w in enumerate(words)}

    def h_of(poly: NCPoly):
        return sum((to_sympy(c) * unknown[w] for w, c in A.reduce(poly).terms.items()), sympy.Integer(0))

    def expand(w):
        acc = [(NCPoly.scalar(1), NCPoly.scalar(1), sympy.Integer(1))]
        for g in w:
            new = []
            for l1, r1, c1 in acc:
                for l2, r2, c2 in cop[g]:
                    new.append((A.mul(l1, l2), A.mul(r1, r2), c1 * c2))
            acc = new
        return acc

    eqs = [unknown[()] - 1]
    for w in words:
        pairs = expand(w)
        for leg in (0, 1):
            acc: dict = {}
            for l, r, c in pairs:
                hv = h_of(l if leg == 0 else r)
                other = r if leg == 0 else l
                for w2, c2 in other.terms.items():
                    acc[w2] = acc.get(w2, 0) + c * hv * to_sympy(c2)
            acc[()] = acc.get((), 0) - unknown[w]
            eqs.extend(sympy.expand(e) for e in acc.values())
    sol = sympy.solve(eqs, list(unknown.values()), dict=True)
    assert len(sol) == 1
    return {w: sympy.simplify(sol[0][unknown[w]]) for w in words}


def su_q_2_haar_closed_form(k: int) -> sympy.Expr:
    """h((c c*)^k) for SU_q(2) from the classical formula (1 − q²)/(1 − q^(2k+2))."""
    return sympy.simplify((1 - q_sym ** 2) / (1 - q_sym ** (2 * k + 2)))


# -- graded linear algebra for the universal differential algebra ----------------------------------------


def omega_words(s: int, k: int) -> list:
    """Words over θ_a (grade 1) and dθ_a (grade 2) of total grade k, as (kind, a) tuples."""
    out = []

    def rec(prefix, left):
        if left == 0:
            out.append(tuple(prefix))
            return
        for a in range(s):
            rec(prefix + [("t", a)], left - 1)
            if left >= 2:
                rec(prefix + [("d", a)], left - 2)
    rec([], k)
    return out


def omega_d(word) -> dict:
    """Differential of a free word: d θ = dθ, d dθ = 0, graded Leibniz."""
    out: dict = {}
    sign = 1
    for i, (kind, a) in enumerate(word):
        if kind == "t":
            new = word[:i] + (("d", a),) + word[i + 1:]
            out[new] = out.get(new, 0) + sign
            sign = -sign
    return {w: c for w, c in out.items() if c}


def omega_cohomology_dims(s: int, bound: int) -> list:
    """dim H^k of the free algebra on θ, dθ via rank(d_k) and rank(d_{k-1})."""
    ranks = []
    for k in range(bound + 1):
        src = omega_words(s, k)
        tgt = {w: i for i, w in enumerate(omega_words(s, k + 1))}
        ranks.append(modp_rank({tgt[w]: c % P for w, c in omega_d(x).items()} for x in src))
    dims = []
    for k in range(bound + 1):
        kernel = len(omega_words(s, k)) - ranks[k]
        image = ranks[k - 1] if k else 0
        dims.append(kernel - image)
    return dims


def kernel_dims_modp(vectors_by_grade: dict) -> dict:
    """For each grade, len(inputs) − rank of the given sparse image vectors."""
    out = {}
    for k, vecs in vectors_by_grade.items():
        rows = []
        keys: dict = {}
        for v in vecs:
            row = {}
            for key, c in v.items():
                idx = keys.setdefault(key, len(keys))
                row[idx] = (row.get(idx, 0) + scalar_mod(c)) % P
            rows.append(row)
        out[k] = len(vecs) - modp_rank(rows)
    return out


def rank_one_invariant_dims(bound: int):
    """Invariant dims and cohomology dims of Ω for one primitive θ with trivial adjoint.

    In the envelope θ² = 0 and dθ = 0, so ad~(θ) = θ⊗1 + 1⊗θ, ad~(dθ) = dθ⊗1 and
    ad~(w) − w⊗1 = Σ_{i: w_i = θ} (−1)^{|w_{>i}|} (w without w_i) ⊗ θ.  Solved over Q with sympy.
    """
    import sympy

    def grade(word):
        return sum(1 if kind == "t" else 2 for kind, _ in word)

    def defect(word):
        out: dict = {}
        for i, (kind, _) in enumerate(word):
            if kind == "t":
                rest = word[:i] + word[i + 1:]
                out[rest] = out.get(rest, 0) + (-1) ** grade(word[i + 1:])
        return out

    def matrix(columns, images):
        rows = sorted({k for im in images for k in im})
        idx = {r: i for i, r in enumerate(rows)}
        M = sympy.zeros(max(len(rows), 1), len(columns))
        for j, im in enumerate(images):
            for k, c in im.items():
                M[idx[k], j] += c
        return M

    inv = {}
    for k in range(bound + 2):
        words = omega_words(1, k)
        null = matrix(words, [defect(w) for w in words]).nullspace() if words else []
        inv[k] = [{w: v[i] for i, w in enumerate(words) if v[i] != 0} for v in null]

    def d_of(vec):
        out: dict = {}
        for w, c in vec.items():
            for w2, c2 in omega_d(w).items():
                out[w2] = out.get(w2, 0) + c * c2
        return {w: c for w, c in out.items() if c != 0}

    def rk(vecs):
        return matrix(list(range(len(vecs))), vecs).rank() if vecs else 0

    coh = []
    for k in range(bound + 1):
        cocycles = len(inv[k]) - rk([d_of(v) for v in inv[k]])
        exact = rk([d_of(v) for v in inv[k - 1]]) if k else 0
        coh.append(cocycles - exact)
    return [len(inv[k]) for k in range(bound + 1)], coh
