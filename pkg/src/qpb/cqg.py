"""Compact matrix quantum groups as presented Hopf *-algebras.

A group is given by a presentation of its function algebra A, the
fundamental unitary corepresentation u and tables of the coproduct, counit
and antipode on generators.  Everything else (Haar state, the intertwiner
between u and its double contragredient, the power m with ū inside u^{⊗m})
is computed and verified here rather than taken on trust.
"""

from __future__ import annotations

import os
from functools import lru_cache
from importlib import resources
from itertools import product as _cartesian

from .errors import (DegreeOverflow, Inconsistent, NoIntertwiner, NonScalarAmbiguity,
                     NonUniqueHaar, PresentationError, UnknownGroup)
from .ncalg.jsonio import (Located, load_located, loads_located, parse_poly_at,
                           parse_scalar_at, presentation_from_doc)
from .ncalg.linalg import mat_inverse, solve_linear, trace
from .ncalg.poly import NCPoly, Presentation, add_scaled, add_term
from .ncalg.rewriting import RewriteSystem, complete
from .ncalg.scalar import ONE, ZERO, Scalar
from .ncalg.tensor import TensorSpace
from .report import Report, residual_text

BUILTIN_GROUPS = ("su_q_2", "u1")
DEFAULT_BOUND = 4


class HaarTable:
    """Values of the Haar state on normal words of A up to a length bound."""

    def __init__(self, A: RewriteSystem, values: dict, bound: int):
        self.A = A
        self.values = values
        self.bound = bound

    def __call__(self, x) -> Scalar:
        terms = x.terms if isinstance(x, NCPoly) else x
        acc = ZERO
        for w, c in terms.items():
            if len(w) > self.bound:
                nf = self.A.reduce_word(w)
                for w2, c2 in nf.items():
                    if len(w2) > self.bound:
                        raise DegreeOverflow(f"Haar table bound {self.bound} is too small for a word of length {len(w2)}")
                    v = self.values.get(w2)
                    if v is not None:
                        acc = acc + c * c2 * v
                continue
            v = self.values.get(w)
            if v is None and not self.A.is_normal(w):
                for w2, c2 in self.A.reduce_word(w).items():
                    v2 = self.values.get(w2)
                    if v2 is not None:
                        acc = acc + c * c2 * v2
                continue
            if v is not None:
                acc = acc + c * v
        return acc

    def restrict(self, N: int) -> "HaarTable":
        return HaarTable(self.A, {w: v for w, v in self.values.items() if len(w) <= N}, N)


class IntertwinerC:
    def __init__(self, C: list, C_inv: list):
        self.C = C
        self.C_inv = C_inv

    @property
    def n(self):
        return len(self.C)

    def as_strings(self):
        return [[str(x) for x in row] for row in self.C]


class HopfGroupData:
    """Presented Hopf *-algebra with a fundamental unitary corepresentation."""

    def __init__(self, name: str, A: RewriteSystem, u: list, coproduct: dict,
                 counit: list, antipode: list):
        self.name = name
        self.A = A
        self.pres: Presentation = A.presentation
        self.u = [[A.reduce(x) for x in row] for row in u]
        self.n = len(u)
        self.coproduct_table = coproduct
        self.counit_table = counit
        self.antipode_table = antipode
        self.AA = TensorSpace(A, A)
        self._cop: dict = {(): {((), ()): ONE}}
        self._anti: dict = {(): {(): ONE}}
        self._haar: HaarTable | None = None
        self._C: IntertwinerC | None = None
        self.m: int | None = None

    # -- structure maps ------------------------------------------------------
    def coproduct_word(self, w) -> dict:
        hit = self._cop.get(w)
        if hit is not None:
            return hit
        if len(w) == 1:
            out = self.AA.reduce(self.coproduct_table[w[0]])
        else:
            h = len(w) // 2
            out = self.AA.mul(self.coproduct_word(w[:h]), self.coproduct_word(w[h:]))
        self._cop[w] = out
        return out

    def coproduct(self, x) -> dict:
        out: dict = {}
        for w, c in (x.terms if isinstance(x, NCPoly) else x).items():
            add_scaled(out, self.coproduct_word(w), c)
        return out

    def counit_word(self, w) -> Scalar:
        c = ONE
        for g in w:
            c = c * self.counit_table[g]
            if c.is_zero():
                break
        return c

    def counit(self, x) -> Scalar:
        acc = ZERO
        for w, c in (x.terms if isinstance(x, NCPoly) else x).items():
            acc = acc + c * self.counit_word(w)
        return acc

    def antipode_word(self, w) -> dict:
        hit = self._anti.get(w)
        if hit is not None:
            return hit
        if len(w) == 1:
            out = self.A.reduce_terms(self.antipode_table[w[0]].terms)
        else:
            # antihomomorphism: S(xy) = S(y) S(x)
            h = len(w) // 2
            right = NCPoly._raw(self.antipode_word(w[:h]))
            left = NCPoly._raw(self.antipode_word(w[h:]))
            out = self.A.mul(left, right).terms
        self._anti[w] = out
        return out

    def antipode(self, x) -> NCPoly:
        out: dict = {}
        for w, c in (x.terms if isinstance(x, NCPoly) else x).items():
            add_scaled(out, self.antipode_word(w), c)
        return NCPoly._raw(out)

    def ubar(self, i: int, j: int) -> NCPoly:
        return self.A.star(self.u[i][j])

    def u_power(self, rows, cols) -> NCPoly:
        """Matrix element of u^{⊗m}: u_{r1 c1} u_{r2 c2} ... reduced."""
        acc = NCPoly.scalar(1)
        for r, c in zip(rows, cols):
            acc = self.A.mul(acc, self.u[r][c])
        return acc

    # -- derived data --------------------------------------------------------
    def haar(self, N: int) -> HaarTable:
        if self._haar is None or self._haar.bound < N:
            self._haar = haar_state(self, N)
        return self._haar

    @property
    def intertwiner(self) -> IntertwinerC:
        if self._C is None:
            self._C = canonical_intertwiner(self)
        return self._C

    def fmt(self, x) -> str:
        return self.A.fmt(x)

    def fmt2(self, x: dict) -> str:
        return self.AA.fmt(x)


# -- loading ----------------------------------------------------------------------

def group_from_doc(doc: Located, degree_bound: int = DEFAULT_BOUND, name: str | None = None) -> HopfGroupData:
    pres = presentation_from_doc(doc)
    data = doc.value
    hopf = data.get("hopf")
    if not isinstance(hopf, dict):
        raise doc.error(("hopf",), "a group file needs a 'hopf' object")
    u_raw = hopf.get("u")
    if not (isinstance(u_raw, list) and u_raw and all(isinstance(r, list) and len(r) == len(u_raw) for r in u_raw)):
        raise doc.error(("hopf", "u"), "'u' must be a square matrix of polynomials")
    u = [[parse_poly_at(doc, ("hopf", "u", i, j), e, pres) for j, e in enumerate(row)]
         for i, row in enumerate(u_raw)]
    cop_raw = hopf.get("coproduct", {})
    cop = {}
    for g in range(pres.ngens):
        gname = pres.generators[g].name
        if gname not in cop_raw:
            raise doc.error(("hopf", "coproduct"), f"missing coproduct of {gname!r}")
        terms = {}
        for t, term in enumerate(cop_raw[gname]):
            path = ("hopf", "coproduct", gname, t)
            if not (isinstance(term, list) and len(term) == 3):
                raise doc.error(path, "coproduct terms are [left-word, right-word, scalar]")
            words = []
            for side in (0, 1):
                names = term[side]
                if not isinstance(names, list) or any(n not in pres.index for n in names):
                    raise doc.error(path + (side,), "expected a list of generator names")
                words.append(tuple(pres.index[n] for n in names))
            add_term(terms, tuple(words), parse_scalar_at(doc, path + (2,), term[2]))
        cop[g] = terms
    counit_raw = hopf.get("counit", {})
    counit = []
    anti_raw = hopf.get("antipode", {})
    anti = []
    for g in range(pres.ngens):
        gname = pres.generators[g].name
        if gname not in counit_raw:
            raise doc.error(("hopf", "counit"), f"missing counit of {gname!r}")
        counit.append(parse_scalar_at(doc, ("hopf", "counit", gname), counit_raw[gname]))
        if gname not in anti_raw:
            raise doc.error(("hopf", "antipode"), f"missing antipode of {gname!r}")
        anti.append(parse_poly_at(doc, ("hopf", "antipode", gname), anti_raw[gname], pres))
    A = complete(pres, degree_bound)
    return HopfGroupData(name or pres.name or "group", A, u, cop, counit, anti)


def load_group(path, degree_bound: int = DEFAULT_BOUND) -> HopfGroupData:
    return group_from_doc(load_located(path), degree_bound)


def _builtin_text(name: str) -> str:
    return resources.files("qpb.data").joinpath(f"{name}.json").read_text(encoding="utf-8")


def builtin_group(name: str, degree_bound: int = DEFAULT_BOUND, search_m: bool = True) -> HopfGroupData:
    """Built-in groups: ``su_q_2`` and ``u1``."""
    if name not in BUILTIN_GROUPS:
        raise UnknownGroup(f"unknown group {name!r}; built-ins are {', '.join(BUILTIN_GROUPS)}")
    G = group_from_doc(loads_located(_builtin_text(name)), degree_bound, name=name)
    if search_m:
        G.m = find_multiplet_power(G)
    return G


# -- verification -----------------------------------------------------------------

def _tensor3(G: HopfGroupData) -> TensorSpace:
    return TensorSpace(G.A, G.A, G.A)


def verify_hopf_axioms(G: HopfGroupData, N: int = DEFAULT_BOUND) -> Report:
    """Check the Hopf *-algebra axioms on generators modulo the ideal."""
    rep = Report(f"hopf axioms for {G.name}")
    A, AA = G.A, G.AA
    AAA = _tensor3(G)
    pres = G.pres
    rep.info["group"] = G.name
    rep.info["degree_bound"] = N
    rep.info["completion_closed"] = A.closed
    fmtA = lambda t: A.fmt(NCPoly._raw(t))

    # structure maps respect the relations (so they are well defined on A)
    rels = list(pres.relations) + [pres.star_poly(r) for r in pres.relations]
    for k, r in enumerate(rels):
        res = G.coproduct(r)
        rep.check(f"coproduct.respects_relation[{k}]", not res, residual_text(AA.fmt, res))
        e = G.counit(r)
        rep.check(f"counit.respects_relation[{k}]", e.is_zero(), [str(e)])
        s = G.antipode(r)
        rep.check(f"antipode.respects_relation[{k}]", s.is_zero(), residual_text(fmtA, s.terms))

    for g in range(pres.ngens):
        gname = pres.generators[g].name
        x = NCPoly.gen(g)
        cop = G.coproduct_word((g,))
        # coassociativity
        left = {}
        for (w1, w2), c in cop.items():
            for (v1, v2), d in G.coproduct_word(w1).items():
                add_term(left, (v1, v2, w2), c * d)
        right = {}
        for (w1, w2), c in cop.items():
            for (v1, v2), d in G.coproduct_word(w2).items():
                add_term(right, (w1, v1, v2), c * d)
        res = AAA.sub(AAA.reduce(left), AAA.reduce(right))
        rep.check(f"coassociativity[{gname}]", not res, residual_text(AAA.fmt, res))
        # counit
        l_terms, r_terms = {}, {}
        for (w1, w2), c in cop.items():
            add_term(l_terms, w2, c * G.counit_word(w1))
            add_term(r_terms, w1, c * G.counit_word(w2))
        for side, t in (("left", l_terms), ("right", r_terms)):
            res = A.reduce(NCPoly._raw(t)) - x
            rep.check(f"counit.{side}[{gname}]", res.is_zero(), residual_text(fmtA, res.terms))
        # antipode
        lt, rt = {}, {}
        for (w1, w2), c in cop.items():
            add_scaled(lt, A.mul(G.antipode(NCPoly.word(w1)), NCPoly.word(w2)).terms, c)
            add_scaled(rt, A.mul(NCPoly.word(w1), G.antipode(NCPoly.word(w2))).terms, c)
        eps = NCPoly.scalar(G.counit_word((g,)))
        for side, t in (("left", lt), ("right", rt)):
            res = NCPoly._raw(t) - eps
            rep.check(f"antipode.{side}[{gname}]", res.is_zero(), residual_text(fmtA, res.terms))
        # star compatibility
        sg = pres.star_id[g]
        lhs = G.coproduct(NCPoly.gen(sg, pres.star_coeff[g]))
        rhs = AA.star(cop)
        res = AA.sub(lhs, rhs)
        rep.check(f"coproduct.star_compatible[{gname}]", not res, residual_text(AA.fmt, res))

    n = G.n
    for i in range(n):
        for j in range(n):
            # matrix coproduct
            lhs = G.coproduct(G.u[i][j])
            rhs = {}
            for k in range(n):
                add_scaled(rhs, AA.pure(G.u[i][k], G.u[k][j]), ONE)
            res = AA.sub(lhs, rhs)
            rep.check(f"u.matrix_coproduct[{i+1},{j+1}]", not res, residual_text(AA.fmt, res))
            delta = NCPoly.scalar(1 if i == j else 0)
            res1 = sum((A.mul(G.ubar(k, i), G.u[k][j]) for k in range(n)), NCPoly()) - delta
            rep.check(f"u.unitary_left[{i+1},{j+1}]", res1.is_zero(), residual_text(fmtA, res1.terms))
            res2 = sum((A.mul(G.u[i][k], G.ubar(j, k)) for k in range(n)), NCPoly()) - delta
            rep.check(f"u.unitary_right[{i+1},{j+1}]", res2.is_zero(), residual_text(fmtA, res2.terms))
    return rep


# -- Haar state -------------------------------------------------------------------

def _haar_system(G: HopfGroupData, N: int):
    words = G.A.normal_words_up_to(N)
    eqs = [({(): ONE}, ONE)]
    for b in words:
        cop = G.coproduct_word(b)
        left: dict = {}
        right: dict = {}
        for (w1, w2), c in cop.items():
            add_term(left.setdefault(w2, {}), w1, c)
            add_term(right.setdefault(w1, {}), w2, c)
        for table in (left, right):
            unit_row = table.setdefault((), {})
            add_term(unit_row, b, -ONE)
            for coeffs in table.values():
                if coeffs:
                    eqs.append((coeffs, ZERO))
    return words, eqs


def haar_state(G: HopfGroupData, N: int) -> HaarTable:
    """Solve both invariance identities plus h(1) = 1 on words of length <= N."""
    words, eqs = _haar_system(G, N)
    try:
        sol, null = solve_linear(eqs, unknowns=words)
    except Inconsistent:
        raise Inconsistent(f"no Haar state for {G.name} at degree {N}") from None
    if null:
        raise NonUniqueHaar(f"Haar state of {G.name} is not unique at degree {N} "
                            f"({len(null)} free parameters)")
    return HaarTable(G.A, {w: sol[w] for w in words if w in sol}, N)


# -- intertwiner ------------------------------------------------------------------

def canonical_intertwiner(G: HopfGroupData) -> IntertwinerC:
    """Scalar C with S²(u) = C u C⁻¹, normalized by tr C = tr C⁻¹."""
    n = G.n
    A = G.A
    k2 = [[G.antipode(G.antipode(G.u[i][j])) for j in range(n)] for i in range(n)]
    unknowns = [(i, j) for i in range(n) for j in range(n)]
    eqs = []
    for i in range(n):
        for j in range(n):
            # sum_l S²(u_il) C_lj - sum_k C_ik u_kj = 0, expanded over words
            rows: dict = {}
            for l in range(n):
                for w, c in k2[i][l].terms.items():
                    add_term(rows.setdefault(w, {}), (l, j), c)
            for k in range(n):
                for w, c in G.u[k][j].terms.items():
                    add_term(rows.setdefault(w, {}), (i, k), -c)
            for r in rows.values():
                if r:
                    eqs.append((r, ZERO))
    _, null = solve_linear(eqs, unknowns=unknowns)
    if not null:
        raise NoIntertwiner(f"{G.name}: no invertible intertwiner between u and its double contragredient")
    if len(null) > 1:
        raise NonScalarAmbiguity(f"{G.name}: intertwiner space has dimension {len(null)}; "
                                 f"u is reducible and C is not determined")
    v = null[0]
    C0 = [[v.get((i, j), ZERO) for j in range(n)] for i in range(n)]
    try:
        C0_inv = mat_inverse(C0)
    except ZeroDivisionError:
        raise NoIntertwiner(f"{G.name}: the intertwiner is singular") from None
    lam = (trace(C0_inv) / trace(C0)).sqrt()
    C = [[lam * x for x in row] for row in C0]
    if trace(C).evaluate_s(1) < 0:
        C = [[-x for x in row] for row in C]
    return IntertwinerC(C, mat_inverse(C))


# -- conjugate multiplet at the level of A ----------------------------------------

def multiplet_system(G: HopfGroupData, m: int):
    """Linear system for coefficients a[i, ω] with Σ_ω a_iω u^(m)_{ω'ω} = Σ_j a_jω' ū_ji."""
    n = G.n
    multis = list(_cartesian(range(n), repeat=m))
    unknowns = [(i, w) for i in range(n) for w in multis]
    ubar = [[G.ubar(i, j) for j in range(n)] for i in range(n)]
    upow = {(wp, w): G.u_power(wp, w) for wp in multis for w in multis}
    eqs = []
    for wp in multis:
        for i in range(n):
            rows: dict = {}
            for w in multis:
                for word, c in upow[(wp, w)].terms.items():
                    add_term(rows.setdefault(word, {}), (i, w), c)
            for j in range(n):
                for word, c in ubar[j][i].terms.items():
                    add_term(rows.setdefault(word, {}), (j, wp), -c)
            for r in rows.values():
                if r:
                    eqs.append((r, ZERO))
    return unknowns, eqs


def multiplet_solutions(G: HopfGroupData, m: int) -> list:
    unknowns, eqs = multiplet_system(G, m)
    _, null = solve_linear(eqs, unknowns=unknowns)
    return null


def max_multiplet_power() -> int:
    try:
        return max(1, int(os.environ.get("QPB_MAX_M", "4")))
    except ValueError:
        return 4


def find_multiplet_power(G: HopfGroupData, m_max: int | None = None):
    """Smallest m with ū a summand of u^{⊗m}, or None if none up to m_max."""
    m_max = max_multiplet_power() if m_max is None else m_max
    for m in range(1, m_max + 1):
        if multiplet_solutions(G, m):
            return m
    return None
