"""Classifying maps, the flip-over map and crossproduct bundles.

A classifying map is a matrix homomorphism ρ: V → M_d(V) together with a
map γ from the invariants of O_d into V.  The flip Ψ: O_d ⊗ V → V ⊗ O_d is
evaluated from its generator rules by recursion over words, and the
crossproduct B = V ⊗_γ O_d is built from it.

Elements of V ⊗ O_d are dicts {(v-word, od-word): Scalar}.  Equality in the
balanced tensor product is decided by a canonical form: the image under a
realization map into an ambient bundle algebra when one is known, and Haar
coordinates c_y(f⊗x) = f·γ(E(x y)) otherwise.
"""

from __future__ import annotations

import random
from itertools import product as _cartesian

from .errors import BalanceNonConfluent, DegreeOverflow, EnvelopeTooShallow, NotEquivariant, NotIsometric, PresentationError
from .ncalg.jsonio import Located, parse_poly_at, presentation_from_doc, presentation_to_json
from .ncalg.linalg import Echelon, rank
from .ncalg.poly import Generator, NCPoly, Presentation, add_scaled, add_term, word_key
from .ncalg.rewriting import RewriteSystem, complete
from .ncalg.scalar import ONE, ZERO, Scalar
from .ncalg.tensor import TensorSpace
from .odbundle import (ConjugateMultiplet, InvariantBasis, OdAlgebra, PairingMatrix,
                       find_conjugate_multiplet, invariants_basis, pairing_matrix, shift_closure)
from .report import Report, residual_text

# -- base spaces --------------------------------------------------------------------


class BaseSpace:
    """The base algebra V: a presented *-algebra, or the invariants of O_d."""

    def __init__(self, R: RewriteSystem, name: str, inv: InvariantBasis | None = None):
        self.R = R
        self.name = name
        self.inv = inv

    @property
    def is_invariant_base(self) -> bool:
        return self.inv is not None

    @property
    def pres(self) -> Presentation:
        return self.R.presentation

    def mul(self, *xs) -> NCPoly:
        return self.R.prod(*xs)

    def star(self, x: NCPoly) -> NCPoly:
        return self.R.star(x)

    def reduce(self, x) -> NCPoly:
        return self.R.reduce(x)

    def fmt(self, x) -> str:
        return self.R.fmt(x)

    def degree(self, x: NCPoly) -> int:
        return 0 if x.is_zero() else x.degree()

    def basis_upto(self, k: int) -> list:
        if self.inv is not None:
            return self.inv.upto(k)
        return [NCPoly.word(w) for w in self.R.normal_words_up_to(k)]

    def generators(self) -> list:
        if self.inv is not None:
            return [x for x in self.inv.upto(2) if not x.is_scalar()]
        return [NCPoly.gen(g) for g in range(self.pres.ngens)]


def presented_base(p: Presentation, degree_bound: int = 6) -> BaseSpace:
    return BaseSpace(complete(p, degree_bound), p.name or "V")


def preset_base(name: str) -> BaseSpace:
    """``point`` (the scalars) or ``line`` (one hermitian generator x)."""
    if name == "point":
        return presented_base(Presentation([], name="point"))
    if name == "line":
        return presented_base(Presentation([Generator("x", 0, "x")], name="line"))
    raise PresentationError(f"unknown base space {name!r}; presets are point, line")


def invariant_base(Od: OdAlgebra, inv: InvariantBasis) -> BaseSpace:
    return BaseSpace(Od.R, f"O_{Od.d}^G", inv)


# -- ambient bundle algebras --------------------------------------------------------


class TrivialBundle:
    """V ⊗ A with coaction id ⊗ φ and inclusion f ↦ f ⊗ 1."""

    def __init__(self, V: BaseSpace, G):
        self.V = V
        self.G = G
        self.T = TensorSpace(V.R, G.A)
        self.name = f"{V.name} x {G.name}"

    def mul(self, x: dict, y: dict) -> dict:
        return self.T.mul(x, y)

    def star(self, x: dict) -> dict:
        return self.T.star(x)

    def one(self) -> dict:
        return self.T.one()

    def include(self, f: NCPoly) -> dict:
        return {(w, ()): c for w, c in f.terms.items()}

    def from_group(self, a: NCPoly) -> dict:
        return {((), w): c for w, c in a.terms.items()}

    def restrict(self, x: dict) -> NCPoly:
        out: dict = {}
        for (v, a), c in x.items():
            if a != ():
                raise ValueError("element does not lie in the base")
            add_term(out, v, c)
        return NCPoly._raw(out)

    def coact(self, x: dict) -> dict:
        out: dict = {}
        for (v, a), c in x.items():
            for (a1, a2), c2 in self.G.coproduct_word(a).items():
                add_term(out, ((v, a1), a2), c * c2)
        return out

    def tensor_group(self, x: dict, a: NCPoly) -> dict:
        out: dict = {}
        for k, c in x.items():
            for w, c2 in a.terms.items():
                add_term(out, (k, w), c * c2)
        return out

    def fmt(self, x: dict) -> str:
        return self.T.fmt(x)


class UniversalBundle:
    """O_d itself, with coaction δ and the invariants as base."""

    def __init__(self, Od: OdAlgebra, inv: InvariantBasis):
        self.Od = Od
        self.V = invariant_base(Od, inv)
        self.G = Od.G
        self.name = f"O_{Od.d}"

    def mul(self, x: dict, y: dict) -> dict:
        return self.Od.R.mul(NCPoly._raw(x), NCPoly._raw(y)).terms

    def star(self, x: dict) -> dict:
        return self.Od.star(NCPoly._raw(x)).terms

    def one(self) -> dict:
        return {(): ONE}

    def include(self, f: NCPoly) -> dict:
        return dict(f.terms)

    def restrict(self, x: dict) -> NCPoly:
        return NCPoly._raw(dict(x))

    def coact(self, x: dict) -> dict:
        return self.Od.coaction(x)

    def tensor_group(self, x: dict, a: NCPoly) -> dict:
        out: dict = {}
        for k, c in x.items():
            for w, c2 in a.terms.items():
                add_term(out, (k, w), c * c2)
        return out

    def fmt(self, x: dict) -> str:
        return self.Od.fmt(NCPoly._raw(x))


def _bundle_sum(B, parts) -> dict:
    out: dict = {}
    for p in parts:
        add_scaled(out, p, ONE)
    return out


def _fmt_ba(B, x: dict) -> str:
    groups: dict = {}
    for (k, a), c in x.items():
        add_term(groups.setdefault(a, {}), k, c)
    A = B.G.A
    parts = [f"({B.fmt(v)}) ⊗ {A.presentation.format_word(a)}" for a, v in sorted(groups.items(), key=lambda t: word_key(t[0]))]
    return " + ".join(parts) if parts else "0"


# -- classifying maps ----------------------------------------------------------------


class ClassifyingMap:
    """(ρ, γ) with the data needed by the flip.

    ``rho_word(w)`` returns the d×d matrix ρ(w) for a normal V-word;
    ``gamma_fn(x)`` maps an invariant element of O_d into V.  When the map was
    extracted from an ambient bundle, ``ambient`` and ``bmat`` realize the
    crossproduct inside it.
    """

    def __init__(self, Od: OdAlgebra, V: BaseSpace, hat: ConjugateMultiplet, S: PairingMatrix,
                 rho_word, gamma_fn, kind: str, ambient=None, bmat=None, on_init=None):
        self.Od = Od
        self.V = V
        self.d = Od.d
        self.hat = hat
        self.S = S
        self._rho_word = rho_word
        self._gamma = gamma_fn
        self.kind = kind
        self.ambient = ambient
        self.bmat = bmat
        self._rho_cache: dict = {}
        self._gamma_cache: dict = {}
        self._embed: dict = {}
        self.gamma_degree: int | None = None   # γ is known on invariants up to this length
        if on_init is not None:
            on_init(self)
        self.R_entries = {key: self.gamma(s) for key, s in S.entries.items()}
        self.R_star = {key: V.star(r) for key, r in self.R_entries.items()}

    # -- ρ -------------------------------------------------------------------
    def rho_matrix_word(self, w) -> list:
        hit = self._rho_cache.get(w)
        if hit is None:
            hit = self._rho_word(w)
            self._rho_cache[w] = hit
        return hit

    def rho(self, k: int, l: int, f: NCPoly) -> NCPoly:
        out: dict = {}
        for w, c in f.terms.items():
            add_scaled(out, self.rho_matrix_word(w)[k][l].terms, c)
        return NCPoly._raw(out)

    def rho_m(self, alpha, beta, f: NCPoly) -> NCPoly:
        x = f
        for k, l in reversed(list(zip(alpha, beta))):
            x = self.rho(k, l, x)
        return x

    # -- γ -------------------------------------------------------------------
    def gamma(self, x: NCPoly) -> NCPoly:
        key = x
        hit = self._gamma_cache.get(key)
        if hit is None:
            hit = self._gamma(x)
            self._gamma_cache[key] = hit
        return hit

    # -- realization -----------------------------------------------------------
    def embed_word(self, w) -> dict:
        """γ̂(w) in the ambient bundle: ψ_ki ↦ b_ki, ψ*_ki ↦ b_ki*."""
        hit = self._embed.get(w)
        if hit is not None:
            return hit
        B = self.ambient
        if not w:
            out = B.one()
        elif len(w) == 1:
            starred, k, i = self.Od.split_gen(w[0])
            out = B.star(self.bmat[k][i]) if starred else self.bmat[k][i]
        else:
            h = len(w) // 2
            out = B.mul(self.embed_word(w[:h]), self.embed_word(w[h:]))
        self._embed[w] = out
        return out

    def embed(self, x) -> dict:
        out: dict = {}
        for w, c in (x.terms if isinstance(x, NCPoly) else x).items():
            add_scaled(out, self.embed_word(w), c)
        return out

    def with_gamma(self, gamma_fn, kind: str) -> "ClassifyingMap":
        """Same ρ and ambient data, different γ (used for mutation tests)."""
        return ClassifyingMap(self.Od, self.V, self.hat, self.S, self._rho_word, gamma_fn, kind,
                              self.ambient, self.bmat)


def _check_bmatrix(B, G, bmat):
    d = len(bmat)
    n = G.n
    for k in range(d):
        for i in range(n):
            lhs = B.coact(bmat[k][i])
            rhs: dict = {}
            for j in range(n):
                add_scaled(rhs, B.tensor_group(bmat[k][j], G.u[j][i]), ONE)
            res = dict(lhs)
            add_scaled(res, rhs, -ONE)
            res = {key: v for key, v in res.items() if not v.is_zero()}
            if res:
                raise NotEquivariant(f"F(b_{k + 1}{i + 1}) ≠ Σ_j b_{k + 1}j ⊗ u_j{i + 1}; "
                                     f"residual {_fmt_ba(B, res)}")
    for i in range(n):
        for j in range(n):
            acc: dict = {}
            for k in range(d):
                add_scaled(acc, B.mul(B.star(bmat[k][i]), bmat[k][j]), ONE)
            if i == j:
                add_scaled(acc, B.one(), -ONE)
            acc = {key: v for key, v in acc.items() if not v.is_zero()}
            if acc:
                raise NotIsometric(f"Σ_k b*_k{i + 1} b_k{j + 1} ≠ δ; residual {B.fmt(acc)}")


def extract_classifying_map(B, bmat: list, Od: OdAlgebra, hat: ConjugateMultiplet | None = None,
                            S: PairingMatrix | None = None) -> ClassifyingMap:
    """ρ_kl(f) = Σ_i b_ki f b*_li and γ = γ̂ restricted to invariants."""
    G = Od.G
    if len(bmat) != Od.d or any(len(r) != G.n for r in bmat):
        raise ValueError(f"the B-matrix must be {Od.d}×{G.n}")
    _check_bmatrix(B, G, bmat)
    hat = hat or find_conjugate_multiplet(Od)
    S = S or pairing_matrix(Od, hat)
    V = B.V
    bstar = [[B.star(b) for b in row] for row in bmat]
    d, n = Od.d, G.n

    def rho_word(w):
        f = B.include(NCPoly.word(w))
        mat = []
        for k in range(d):
            row = []
            for l in range(d):
                acc: dict = {}
                for i in range(n):
                    add_scaled(acc, B.mul(B.mul(bmat[k][i], f), bstar[l][i]), ONE)
                row.append(B.restrict(acc))
            mat.append(row)
        return mat

    cm_holder: list = []

    def gamma_fn(x):
        return B.restrict(cm_holder[0].embed(x))

    kind = "universal" if isinstance(B, UniversalBundle) else "extracted"
    # γ needs the embedding, which lives on the map itself
    cm = ClassifyingMap(Od, V, hat, S, rho_word, gamma_fn, kind, ambient=B, bmat=bmat,
                        on_init=cm_holder.append)
    return cm


def universal_classifying_map(Od: OdAlgebra, inv: InvariantBasis | None = None,
                              hat=None, S=None) -> ClassifyingMap:
    """b = ψ in O_d itself: ρ = τ and γ = identity."""
    inv = inv or invariants_basis(Od, min(Od.N, 3))
    B = UniversalBundle(Od, inv)
    bmat = [[Od.psi(k, i).terms for i in range(Od.n)] for k in range(Od.d)]
    return extract_classifying_map(B, bmat, Od, hat, S)


def trivial_classifying_map(V: BaseSpace, Od: OdAlgebra, hat=None, S=None) -> ClassifyingMap:
    """b_ki = 1 ⊗ u_ki in V ⊗ A (needs d = n)."""
    G = Od.G
    if Od.d != G.n:
        raise ValueError(f"the trivial bundle has complexity level n = {G.n}; got d = {Od.d}")
    B = TrivialBundle(V, G)
    bmat = [[B.from_group(G.u[k][i]) for i in range(G.n)] for k in range(G.n)]
    return extract_classifying_map(B, bmat, Od, hat, S)


# -- JSON ---------------------------------------------------------------------------------


def classifying_map_to_json(cm: ClassifyingMap, inv: InvariantBasis, N: int | None = None) -> dict:
    """JSON form of a map into a presented base; γ is tabulated on inv up to length N."""
    V = cm.V
    if V.is_invariant_base:
        raise ValueError("maps into the invariants of O_d have no finite JSON form")
    N = inv.N if N is None else N
    pres = V.pres
    rho = {}
    for g in range(pres.ngens):
        mat = cm.rho_matrix_word((g,))
        rho[pres.generators[g].name] = [[V.fmt(x) for x in row] for row in mat]
    unit = cm.rho_matrix_word(())
    gamma = {}
    for x in inv.upto(N):
        gamma[cm.Od.fmt(x)] = V.fmt(cm.gamma(x))
    return {"d": cm.d, "base": presentation_to_json(pres),
            "rho": rho, "rho_unit": [[V.fmt(x) for x in row] for row in unit], "gamma": gamma}


def classifying_map_from_json(doc: Located, Od: OdAlgebra, hat=None, S=None) -> ClassifyingMap:
    """Load {"d", "base", "rho", "rho_unit"?, "gamma"}; γ keys are invariant poly-strings."""
    data = doc.value
    if not isinstance(data, dict):
        raise doc.error((), "a classifying map is a JSON object")
    if data.get("d") != Od.d:
        raise doc.error(("d",), f"'d' must equal {Od.d}")
    if "base" not in data:
        raise doc.error(("base",), "missing 'base' presentation")
    V = presented_base(presentation_from_doc(doc, base=("base",)))
    pres = V.pres
    d = Od.d

    def matrix(path, raw):
        if not (isinstance(raw, list) and len(raw) == d and all(isinstance(r, list) and len(r) == d for r in raw)):
            raise doc.error(path, f"expected a {d}×{d} matrix")
        return [[V.reduce(parse_poly_at(doc, path + (i, j), e, pres)) for j, e in enumerate(row)]
                for i, row in enumerate(raw)]

    rho_raw = data.get("rho", {})
    if not isinstance(rho_raw, dict):
        raise doc.error(("rho",), "'rho' maps generator names to matrices")
    gens = {}
    for name, raw in rho_raw.items():
        if name not in pres.index:
            raise doc.error(("rho", name), f"unknown base generator {name!r}")
        gens[pres.index[name]] = matrix(("rho", name), raw)
    for g in range(pres.ngens):
        if g not in gens:
            raise doc.error(("rho",), f"missing ρ of {pres.generators[g].name!r}")
    if "rho_unit" in data:
        unit = matrix(("rho_unit",), data["rho_unit"])
    else:
        unit = [[NCPoly.scalar(1 if i == j else 0) for j in range(d)] for i in range(d)]

    def rho_word(w):
        mat = unit
        for g in w:
            mat = _mat_mul_poly(V, mat, gens[g])
        return mat

    gamma_raw = data.get("gamma", {})
    if not isinstance(gamma_raw, dict):
        raise doc.error(("gamma",), "'gamma' maps invariant poly-strings to base poly-strings")
    ech = Echelon(word_key)
    values = {}
    elems = {}
    for idx, (key, val) in enumerate(sorted(gamma_raw.items())):
        x = Od.reduce(parse_poly_at(doc, ("gamma", key), key, Od.pres))
        if not ech.add(x.terms, tag=idx):
            continue
        values[idx] = V.reduce(parse_poly_at(doc, ("gamma", key), val, pres))
        elems[idx] = x
    table_gens = [i for i, x in elems.items() if not x.is_scalar()]
    done: set = set()

    def extend(limit):
        # γ is multiplicative: tabulate products of known values up to the degree limit
        grew = False
        for i in list(elems):
            for g in table_gens:
                if (i, g) in done or Od.degree(elems[i]) + Od.degree(elems[g]) > limit:
                    continue
                done.add((i, g))
                prod = Od.mul(elems[i], elems[g])
                idx = len(values) + len(done) + 10 ** 6
                if ech.add(prod.terms, tag=idx):
                    values[idx] = V.mul(values[i], values[g])
                    elems[idx] = prod
                    grew = True
        # and intertwines the shifts: γ(τ_kl(x)) = ρ_kl(γ(x))
        for i in list(elems):
            if ("tau", i) in done or Od.degree(elems[i]) + 2 > limit:
                continue
            done.add(("tau", i))
            for k in range(d):
                for l in range(d):
                    idx = len(values) + len(done) + 10 ** 6 + 1000 * k + 100 * l
                    t = Od.tau(k, l, elems[i])
                    if ech.add(t.terms, tag=idx):
                        val: dict = {}
                        for w, c in values[i].terms.items():
                            add_scaled(val, rho_word(w)[k][l].terms, c)
                        values[idx] = NCPoly._raw(val)
                        elems[idx] = t
                        grew = True
        return grew

    def gamma_fn(x):
        combo = ech.express(x.terms)
        while combo is None and extend(Od.degree(x)):
            combo = ech.express(x.terms)
        if combo is None:
            raise DegreeOverflow(f"γ is not determined by the table on {Od.fmt(x)}")
        out: dict = {}
        for idx, c in combo.items():
            add_scaled(out, values[idx].terms, c)
        return NCPoly._raw(out)

    hat = hat or find_conjugate_multiplet(Od)
    S = S or pairing_matrix(Od, hat)
    cm = ClassifyingMap(Od, V, hat, S, rho_word, gamma_fn, "table")
    cm.gamma_degree = max((Od.degree(x) for x in elems.values()), default=0)
    return cm


def _mat_mul_poly(V: BaseSpace, A: list, B: list) -> list:
    n = len(A)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = NCPoly()
            for k in range(n):
                acc = acc + V.mul(A[i][k], B[k][j])
            row.append(acc)
        out.append(row)
    return out


# -- the flip ---------------------------------------------------------------------------------


class FlipOperator:
    """Ψ(ψ_ki ⊗ f) = Σ_l ρ_kl(f) ⊗ ψ_li,  Ψ(ψ*_ki ⊗ f) = Σ_αβ R*_αk ρ^m_αβ(f) ⊗ ψ̂_βi,
    extended to words by Ψ(xy ⊗ f) = Σ Ψ(x ⊗ f_k) y_k where Ψ(y ⊗ f) = Σ f_k ⊗ y_k."""

    def __init__(self, cm: ClassifyingMap):
        self.cm = cm
        self.Od = cm.Od
        self.V = cm.V
        self.T = TensorSpace(cm.V.R, cm.Od.R)
        self._memo: dict = {}
        self._gen: dict = {}

    def generator_rule(self, g: int, vw) -> dict:
        key = (g, vw)
        hit = self._gen.get(key)
        if hit is not None:
            return hit
        Od, cm, V = self.Od, self.cm, self.V
        starred, k, i = Od.split_gen(g)
        f = NCPoly.word(vw)
        out: dict = {}
        if not starred:
            for l in range(Od.d):
                r = cm.rho(k, l, f)
                for w, c in r.terms.items():
                    add_term(out, (w, (Od.psi_id(l, i),)), c)
        else:
            hat = cm.hat
            for alpha in hat.rows:
                rs = cm.R_star[(alpha, k)]
                if rs.is_zero():
                    continue
                for beta in hat.rows:
                    left = V.mul(rs, cm.rho_m(alpha, beta, f))
                    if left.is_zero():
                        continue
                    for w, c in left.terms.items():
                        for x, c2 in hat[(beta, i)].terms.items():
                            add_term(out, (w, x), c * c2)
        self._gen[key] = out
        return out

    def apply_word(self, xw, vw) -> dict:
        """Ψ on a (not necessarily normal) O_d word and a normal V-word."""
        key = (xw, vw)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if not xw:
            out = {(vw, ()): ONE}
        elif len(xw) == 1:
            out = self.generator_rule(xw[0], vw)
        else:
            rest = self.apply_word(xw[1:], vw)
            raw: dict = {}
            for (fw, yw), c in rest.items():
                for (fw2, gw), c2 in self.generator_rule(xw[0], fw).items():
                    add_term(raw, (fw2, gw + yw), c * c2)
            out = self.T.reduce(raw)
        self._memo[key] = out
        return out

    def apply(self, x, f) -> dict:
        """Ψ(x ⊗ f) for x in O_d (reduced first) and f in V."""
        xt = self.Od.reduce(x).terms if isinstance(x, NCPoly) else x
        ft = self.V.reduce(f).terms if isinstance(f, NCPoly) else f
        out: dict = {}
        for xw, c in xt.items():
            for vw, c2 in ft.items():
                add_scaled(out, self.apply_word(xw, vw), c * c2)
        return out

    def apply_free(self, terms: dict, f: NCPoly) -> dict:
        """Ψ on unreduced O_d words (the free-algebra level)."""
        out: dict = {}
        for xw, c in terms.items():
            for vw, c2 in f.terms.items():
                add_scaled(out, self.apply_word(xw, vw), c * c2)
        return out

    def apply_pairs(self, x: dict) -> dict:
        """Ψ applied to an element of O_d ⊗ V given as {(od-word, v-word): c}."""
        out: dict = {}
        for (xw, vw), c in x.items():
            add_scaled(out, self.apply_word(xw, vw), c)
        return out


def flip_apply(flip: FlipOperator, x: NCPoly, f: NCPoly, N: int | None = None) -> dict:
    if N is not None and flip.Od.degree(x) + flip.V.degree(f) > N:
        raise DegreeOverflow(f"degree(x) + degree(f) exceeds {N}")
    return flip.apply(x, f)


# -- the crossproduct ----------------------------------------------------------------------


class CrossBundle:
    """B = V ⊗_γ O_d with (g⊗x)(f⊗y) = g Ψ(x⊗f) y and (f⊗x)* = Ψ(x*⊗f*)."""

    def __init__(self, cm: ClassifyingMap, N: int):
        self.cm = cm
        self.Od = cm.Od
        self.V = cm.V
        self.G = cm.Od.G
        self.N = N
        self.flip = FlipOperator(cm)
        self.T = self.flip.T
        self._coords_cache: dict = {}

    # -- algebra -------------------------------------------------------------
    def pure(self, f: NCPoly, x: NCPoly) -> dict:
        return self.T.pure(self.V.reduce(f), self.Od.reduce(x))

    def one(self) -> dict:
        return {((), ()): ONE}

    def include(self, f: NCPoly) -> dict:
        return {(w, ()): c for w, c in self.V.reduce(f).terms.items()}

    def mul(self, X: dict, Y: dict) -> dict:
        out: dict = {}
        V, R = self.V.R, self.Od.R
        for (gw, xw), c1 in X.items():
            for (fw, yw), c2 in Y.items():
                for (fw2, xw2), c3 in self.flip.apply_word(xw, fw).items():
                    c = c1 * c2 * c3
                    for v, cv in V.reduce_word(gw + fw2).items():
                        for o, co in R.reduce_word(xw2 + yw).items():
                            add_term(out, (v, o), c * cv * co)
        return out

    def star(self, X: dict) -> dict:
        out: dict = {}
        Vp, Op = self.V.pres, self.Od.pres
        for (fw, xw), c in X.items():
            sf, fw_s = Vp.star_word(fw)
            sx, xw_s = Op.star_word(xw)
            fnf = self.V.R.reduce_word(fw_s)
            xnf = self.Od.R.reduce_word(xw_s)
            for x2, cx in xnf.items():
                for f2, cf in fnf.items():
                    add_scaled(out, self.flip.apply_word(x2, f2), c.conj() * sf * sx * cx * cf)
        return out

    def coact(self, X: dict) -> dict:
        """F = id ⊗ δ: keys ((v-word, od-word), a-word)."""
        out: dict = {}
        for (fw, xw), c in X.items():
            for (x2, a), c2 in self.Od.coaction_word(xw).items():
                add_term(out, ((fw, x2), a), c * c2)
        return out

    def vertical_integral(self, X: dict) -> dict:
        """h_M = (id ⊗ h) F."""
        out: dict = {}
        for (fw, xw), c in X.items():
            for x2, c2 in self.Od.project_word(xw).items():
                add_term(out, (fw, x2), c * c2)
        return out

    def base_part(self, X: dict) -> NCPoly:
        """Σ f γ(E(x)): the base element a vertical integral is balanced-equal to."""
        out = NCPoly()
        for (fw, xw), c in X.items():
            e = NCPoly._raw(dict(self.Od.project_word(xw)))
            if e.is_zero():
                continue
            out = out + self.V.mul(NCPoly.word(fw), self.cm.gamma(e)).scale(c)
        return out

    # -- canonical forms in the balanced tensor product --------------------------
    @property
    def has_realization(self) -> bool:
        return self.cm.ambient is not None

    def realize(self, X: dict) -> dict:
        cm = self.cm
        B = cm.ambient
        out: dict = {}
        for (fw, xw), c in X.items():
            add_scaled(out, B.mul(B.include(NCPoly.word(fw)), cm.embed_word(xw)), c)
        return {k: v for k, v in out.items() if not v.is_zero()}

    def haar_coordinates(self, X: dict, L: int) -> dict:
        """c_y(X) = Σ f γ(E(x y)) for normal words y of length ≤ L."""
        out: dict = {}
        Od, V, cm = self.Od, self.V, self.cm
        ys = Od.R.normal_words_up_to(L)
        for (fw, xw), c in X.items():
            for y in ys:
                key = (xw, y)
                val = self._coords_cache.get(key)
                if val is None:
                    e = Od.project(Od.R.reduce_word(xw + y))
                    val = cm.gamma(e) if not e.is_zero() else NCPoly()
                    self._coords_cache[key] = val
                if val.is_zero():
                    continue
                for v, cv in V.mul(NCPoly.word(fw), val).terms.items():
                    add_term(out, (y, v), c * cv)
        return out

    def canonical(self, X: dict, L: int | None = None) -> dict:
        if self.has_realization:
            return self.realize(X)
        if L is None:
            L = max((len(xw) for _, xw in X), default=0)
        top = self.cm.gamma_degree
        if top is not None and 2 * L > top:
            raise EnvelopeTooShallow(f"comparing O_d legs of length {L} needs γ to length {2 * L}; "
                                     f"the table stops at {top}")
        return self.haar_coordinates(X, L)

    def equal(self, X: dict, Y: dict) -> bool:
        return not self.canonical(self.T.sub(X, Y))

    def residual(self, X: dict, Y: dict) -> list:
        D = self.T.sub(X, Y)
        return residual_text(self.fmt, {k: v for k, v in D.items() if not v.is_zero()})

    def canonical_coact(self, FX: dict) -> dict:
        """Canonical form of an element of B ⊗ A (one coordinate length for all legs)."""
        groups: dict = {}
        for (k, a), c in FX.items():
            add_term(groups.setdefault(a, {}), k, c)
        L = None
        if not self.has_realization:
            L = max((len(xw) for (_, xw), _a in FX), default=0)
        out: dict = {}
        for a, X in groups.items():
            for k, c in self.canonical(X, L).items():
                add_term(out, (k, a), c)
        return out

    def fmt(self, X: dict) -> str:
        return self.T.fmt(X)

    def slice_elements(self, k: int) -> list:
        """Pure tensors f ⊗ x with deg f + len x ≤ k (f from the base basis)."""
        out = []
        for f in self.V.basis_upto(k):
            df = self.V.degree(f)
            for xw in self.Od.R.normal_words_up_to(k - df):
                out.append(self.pure(f, NCPoly.word(xw)))
        return out


def balance_check(B: CrossBundle, samples: list) -> list:
    """Witnesses (f, ψ, x) where fγ(ψ) ⊗ x and f ⊗ ψx have different canonical forms."""
    bad = []
    for f, psi, x in samples:
        left = B.pure(B.V.mul(f, B.cm.gamma(psi)), x)
        right = B.pure(f, B.Od.mul(psi, x))
        try:
            same = B.equal(left, right)
        except EnvelopeTooShallow:
            continue    # beyond what a finite γ table decides
        if not same:
            bad.append((f, psi, x))
    return bad


def _balance_samples(cm: ClassifyingMap, inv: InvariantBasis, seed: int, count: int = 12) -> list:
    rng = random.Random(seed)
    Od, V = cm.Od, cm.V
    fs = V.basis_upto(1)[:6] or [NCPoly.scalar(1)]
    psis = inv.upto(2)
    xs = [NCPoly.word(w) for w in Od.R.normal_words_up_to(1)]
    out = [(NCPoly.scalar(1), p, NCPoly.scalar(1)) for p in psis]
    for _ in range(count):
        out.append((rng.choice(fs), rng.choice(psis), rng.choice(xs)))
    return out


def build_bundle(cm: ClassifyingMap, N: int, inv: InvariantBasis | None = None, seed: int = 0) -> CrossBundle:
    B = CrossBundle(cm, N)
    inv = inv or invariants_basis(cm.Od, min(N, 3))
    bad = balance_check(B, _balance_samples(cm, inv, seed))
    if bad:
        f, psi, x = bad[0]
        raise BalanceNonConfluent(
            f"balanced relations are inconsistent: f γ(ψ) ⊗ x ≠ f ⊗ ψ x for f = {cm.V.fmt(f)}, "
            f"ψ = {cm.Od.fmt(psi)}, x = {cm.Od.fmt(x)}", witness=(f, psi, x))
    return B


# -- validation of classifying maps -------------------------------------------------------


def invariant_vectors(Od: OdAlgebra, inv: InvariantBasis, r: int) -> list:
    """Coefficient vectors c_ω (ω ∈ [n]^r) with Σ_ω c_ω Π ψ_{1 ω_t} invariant."""
    words = [tuple(Od.psi_id(0, j) for j in omega) for omega in _cartesian(range(Od.n), repeat=r)]
    ech = Echelon(word_key)
    for w in words:
        ech.add(Od.project_word(w))
    out = []
    for row in ech.basis():
        vec = {}
        for w, c in row.items():
            omega = tuple(Od.split_gen(g)[2] for g in w)
            vec[omega] = c
        out.append(vec)
    return out


def system_element(Od: OdAlgebra, vec: dict, alpha) -> NCPoly:
    out: dict = {}
    for omega, c in vec.items():
        add_term(out, tuple(Od.psi_id(k, j) for k, j in zip(alpha, omega)), c)
    return NCPoly._raw(out)


def _sample_base(V: BaseSpace, k: int, limit: int = 8) -> list:
    out = V.basis_upto(k)
    return out[:limit]


def validate_classifying_map(cm: ClassifyingMap, inv: InvariantBasis, N: int = 3,
                             closure: list | None = None) -> Report:
    """Homomorphism properties of ρ and γ, the covariance identities and the
    closure identity γ(ψ)f = Σ_k f_k γ(ψ_k) where Ψ(ψ⊗f) = Σ_k f_k ⊗ ψ_k."""
    rep = Report(f"classifying map ({cm.kind})")
    Od, V = cm.Od, cm.V
    d = Od.d
    fmtV = V.fmt
    rep.info.update({"kind": cm.kind, "d": d, "base": V.name, "degree_bound": N})
    one = NCPoly.scalar(1)
    # unit
    for k in range(d):
        for l in range(d):
            res = cm.rho(k, l, one) - cm.gamma(Od.p(k, l))
            rep.check(f"rho.unit[{k + 1},{l + 1}]", res.is_zero(), residual_text(fmtV, res),
                      identity="ρ(1) = γ(τ(1))")
    res = cm.gamma(one) - one
    rep.check("gamma.unital", res.is_zero(), residual_text(fmtV, res))
    fs = _sample_base(V, 1 if V.is_invariant_base else 2)
    if V.is_invariant_base:
        fs = [x for x in inv.upto(2)]
    # ρ is a *-homomorphism
    for a_idx, f in enumerate(fs):
        bad = None
        for k in range(d):
            for l in range(d):
                r = V.star(cm.rho(k, l, f)) - cm.rho(l, k, V.star(f))
                if bad is None and not r.is_zero():
                    bad = r
        rep.check(f"rho.star[{a_idx}]", bad is None, None if bad is None else residual_text(fmtV, bad))
        for b_idx, g in enumerate(fs):
            if V.degree(f) + V.degree(g) > max(N, 2) + 1:
                continue
            fg = V.mul(f, g)
            bad = None
            for k in range(d):
                for l in range(d):
                    acc = NCPoly()
                    for r_ in range(d):
                        acc = acc + V.mul(cm.rho(k, r_, f), cm.rho(r_, l, g))
                    r = acc - cm.rho(k, l, fg)
                    if bad is None and not r.is_zero():
                        bad = r
            rep.check(f"rho.multiplicative[{a_idx},{b_idx}]", bad is None,
                      None if bad is None else residual_text(fmtV, bad))
    if not V.is_invariant_base:
        for r_idx, rel in enumerate(V.pres.relations):
            bad = None
            for k in range(d):
                for l in range(d):
                    acc: dict = {}
                    for w, c in rel.terms.items():
                        add_scaled(acc, cm.rho_matrix_word(w)[k][l].terms, c)
                    r = V.reduce(NCPoly._raw(acc))
                    if bad is None and not r.is_zero():
                        bad = r
            rep.check(f"rho.respects_relation[{r_idx}]", bad is None,
                      None if bad is None else residual_text(fmtV, bad))
    # γ is a *-homomorphism on the tabulated invariants
    basis = inv.upto(N)
    for a_idx, x in enumerate(basis):
        r = cm.gamma(Od.star(x)) - V.star(cm.gamma(x))
        rep.check(f"gamma.star[{a_idx}]", r.is_zero(), residual_text(fmtV, r))
        for b_idx, y in enumerate(basis):
            if Od.degree(x) + Od.degree(y) > N:
                continue
            r = cm.gamma(Od.mul(x, y)) - V.mul(cm.gamma(x), cm.gamma(y))
            rep.check(f"gamma.multiplicative[{a_idx},{b_idx}]", r.is_zero(), residual_text(fmtV, r))
    # covariance of multi-indexed systems: Σ_β ρ^r_αβ(f) γ(o_β) = γ(o_α) f
    for r in range(1, N + 1):
        for v_idx, vec in enumerate(invariant_vectors(Od, inv, r)):
            rows = list(_cartesian(range(d), repeat=r))
            images = {beta: cm.gamma(system_element(Od, vec, beta)) for beta in rows}
            for f_idx, f in enumerate(fs[:4]):
                bad = None
                for alpha in rows:
                    acc = NCPoly()
                    for beta in rows:
                        acc = acc + V.mul(cm.rho_m(alpha, beta, f), images[beta])
                    res = acc - V.mul(images[alpha], f)
                    if bad is None and not res.is_zero():
                        bad = res
                rep.check(f"covariance_system[r={r},{v_idx};f{f_idx}]", bad is None,
                          None if bad is None else residual_text(fmtV, bad),
                          identity="Σ_β ρ_αβ(f) γ(o_βj) = γ(o_αj) f")
    # γ τ_kl = ρ_kl γ
    for a_idx, x in enumerate(inv.upto(max(N - 2, 0) + 1)):
        bad = None
        gx = cm.gamma(x)
        for k in range(d):
            for l in range(d):
                res = cm.gamma(Od.tau(k, l, x)) - cm.rho(k, l, gx)
                if bad is None and not res.is_zero():
                    bad = res
        rep.check(f"gamma_shift[{a_idx}]", bad is None, None if bad is None else residual_text(fmtV, bad),
                  identity="γ τ_kl = ρ_kl γ")
    # γ(ψ) f = Σ f_k γ(ψ_k) for ψ in the shift-closed algebra generated by the S*
    flip = FlipOperator(cm)
    gens = []
    for key in sorted(cm.S.entries):
        gens.append(cm.S.star(*key))
    for k in range(d):
        for l in range(d):
            gens.append(Od.p(k, l))
    if closure:
        gens.extend(x for x in closure if Od.degree(x) <= 2)
    for g_idx, psi in enumerate(gens):
        for f_idx, f in enumerate(fs[:4]):
            out = flip.apply(psi, f)
            groups: dict = {}
            for (fw, xw), c in out.items():
                add_term(groups.setdefault(fw, {}), xw, c)
            acc = NCPoly()
            for fw, xs in groups.items():
                acc = acc + V.mul(NCPoly.word(fw), cm.gamma(NCPoly._raw(xs)))
            res = V.mul(cm.gamma(psi), f) - acc
            rep.check(f"closure_identity[{g_idx};f{f_idx}]", res.is_zero(), residual_text(fmtV, res),
                      identity="γ(ψ)f = Σ_k f_k γ(ψ_k)")
    return rep


# -- flip identities ---------------------------------------------------------------------------


def _flip_inputs(cm: ClassifyingMap, inv: InvariantBasis, N: int, seed: int, count: int):
    """Generator-level pairs plus seeded samples of total degree ≤ N."""
    Od, V = cm.Od, cm.V
    xs_gen = [NCPoly.scalar(1)] + [NCPoly.gen(g) for g in range(Od.pres.ngens)]
    if V.is_invariant_base:
        fs_gen = [x for x in inv.upto(2)]
    else:
        fs_gen = [NCPoly.scalar(1)] + V.generators()
    pairs = [(x, f) for x in xs_gen for f in fs_gen if Od.degree(x) + V.degree(f) <= N]
    rng = random.Random(seed)
    xs_all = [NCPoly.word(w) for w in Od.R.normal_words_up_to(N)]
    fs_all = V.basis_upto(N) or [NCPoly.scalar(1)]
    tries = 0
    added = 0
    while added < count and tries < 50 * count:
        tries += 1
        x = rng.choice(xs_all)
        f = rng.choice(fs_all)
        if Od.degree(x) + V.degree(f) > N:
            continue
        if rng.random() < 0.5:
            x2 = rng.choice(xs_all)
            if Od.degree(x2) == Od.degree(x) and x2 != x:
                x = x + x2.scale(rng.choice([-2, -1, 1, 2]))
        pairs.append((x, f))
        added += 1
    return pairs


def flip_check(cm: ClassifyingMap, inv: InvariantBasis, N: int = 3, seed: int = 0, count: int = 20,
               B: CrossBundle | None = None) -> Report:
    """The flip identities, compared in canonical form."""
    B = B or CrossBundle(cm, N)
    flip = B.flip
    Od, V = cm.Od, cm.V
    d, n = Od.d, Od.n
    rep = Report(f"flip identities ({cm.kind})")
    rep.info.update({"kind": cm.kind, "d": d, "base": V.name, "degree_bound": N, "seed": seed,
                     "canonical_form": "realization" if B.has_realization else "haar_coordinates"})
    pairs = _flip_inputs(cm, inv, N, seed, count)
    rep.info["inputs"] = len(pairs)

    def entry(name, lhs, rhs, identity):
        ok = B.equal(lhs, rhs)
        rep.check(name, ok, None if ok else B.residual(lhs, rhs), identity=identity)

    rng = random.Random(seed + 7)
    fs_small = V.basis_upto(1) if not V.is_invariant_base else inv.upto(2)
    fs_small = fs_small[:6] or [NCPoly.scalar(1)]
    for p_idx, (x, f) in enumerate(pairs):
        # Ψ(x ⊗ f) = Σ f_k ⊗ x_k
        base = flip.apply(x, f)
        # exchange with the product of V: Ψ(x⊗fg) = (μ⊗id)(id⊗Ψ)(Ψ⊗id)
        g = rng.choice(fs_small)
        lhs = flip.apply(x, V.mul(f, g))
        rhs: dict = {}
        for (fw, xw), c in base.items():
            part = flip.apply(NCPoly.word(xw), g)
            for (gw, yw), c2 in part.items():
                for v, cv in V.R.reduce_word(fw + gw).items():
                    add_term(rhs, (v, yw), c * c2 * cv)
        entry(f"exchange_base_product[{p_idx}]", lhs, rhs, "Ψ(id⊗μ) = (μ⊗id)(id⊗Ψ)(Ψ⊗id)")
        # exchange with the product of O_d: Ψ(yx⊗f) = (id⊗μ)(Ψ⊗id)(id⊗Ψ)
        y = NCPoly.gen(rng.randrange(Od.pres.ngens))
        lhs = flip.apply(Od.mul(y, x), f)
        rhs = {}
        for (fw, xw), c in base.items():
            for (gw, yw), c2 in flip.apply(y, NCPoly.word(fw)).items():
                for o, co in Od.R.reduce_word(yw + xw).items():
                    add_term(rhs, (gw, o), c * c2 * co)
        entry(f"exchange_od_product[{p_idx}]", lhs, rhs, "Ψ(μ⊗id) = (id⊗μ)(Ψ⊗id)(id⊗Ψ)")
        # Ψ ∘ (*Ψ*) = id: Ψ(*Ψ(x⊗f)) = f* ⊗ x*
        starred: dict = {}
        Vp, Op = V.pres, Od.pres
        for (fw, xw), c in base.items():
            sx, xs = Op.star_word(xw)
            sf, fs_ = Vp.star_word(fw)
            for x2, cx in Od.R.reduce_word(xs).items():
                for f2, cf in V.R.reduce_word(fs_).items():
                    add_term(starred, (x2, f2), c.conj() * sx * sf * cx * cf)
        lhs = flip.apply_pairs(starred)
        rhs = B.pure(V.star(f), Od.star(x))
        entry(f"flip_inverse[{p_idx}]", lhs, rhs, "Ψ⁻¹ = *Ψ*")
    # relations pass through: Σ_k Ψ(ψ*_ki ψ_kj ⊗ f) = f ⊗ δ_ij
    for f_idx, f in enumerate(fs_small[:3]):
        for i in range(n):
            for j in range(n):
                terms: dict = {}
                for k in range(d):
                    add_term(terms, (Od.psistar_id(k, i), Od.psi_id(k, j)), ONE)
                lhs = flip.apply_free(terms, V.reduce(f))
                rhs = B.pure(f, NCPoly.scalar(1)) if i == j else {}
                entry(f"relations_pass[{i + 1},{j + 1};f{f_idx}]", lhs, rhs,
                      "Ψ(Σ_k ψ*_ki ψ_kj ⊗ f) = f ⊗ δ_ij")
    # bimodule linearity and the Q-property over the invariant basis
    xs = [NCPoly.scalar(1)] + [NCPoly.gen(g) for g in range(Od.pres.ngens)]
    for s_idx, psi in enumerate(inv.upto(N)):
        gpsi = cm.gamma(psi)
        for x_idx, x in enumerate(xs):
            f = fs_small[(s_idx + x_idx) % len(fs_small)]
            base = flip.apply(x, f)
            lhs = flip.apply(Od.mul(psi, x), f)
            rhs = {}
            for (fw, xw), c in base.items():
                for v, cv in V.mul(gpsi, NCPoly.word(fw)).terms.items():
                    add_term(rhs, (v, xw), c * cv)
            entry(f"bimodule_left[{s_idx};{x_idx}]", lhs, rhs, "Ψ(ψx⊗f) = γ(ψ)Ψ(x⊗f)")
            lhs = flip.apply(x, V.mul(f, gpsi))
            rhs = {}
            for (fw, xw), c in base.items():
                for o, co in Od.mul(NCPoly.word(xw), psi).terms.items():
                    add_term(rhs, (fw, o), c * co)
            entry(f"bimodule_right[{s_idx};{x_idx}]", lhs, rhs, "Ψ(x⊗fγ(ψ)) = Ψ(x⊗f)ψ")
            lhs = flip.apply(Od.mul(x, psi), f)
            rhs = flip.apply(x, V.mul(gpsi, f))
            entry(f"q_property[{s_idx};{x_idx}]", lhs, rhs, "Ψ(xψ⊗f) = Ψ(x⊗γ(ψ)f)")
    # projection identity: Σ_r Ψ(p_kr ⊗ ρ_rl(f)) = ρ_kl(f) ⊗ 1
    for f_idx, f in enumerate(fs_small[:4]):
        for k in range(d):
            for l in range(d):
                lhs: dict = {}
                for r in range(d):
                    add_scaled(lhs, flip.apply(Od.p(k, r), cm.rho(r, l, f)), ONE)
                rhs = B.pure(cm.rho(k, l, f), NCPoly.scalar(1))
                entry(f"projection_identity[{k + 1},{l + 1};f{f_idx}]", lhs, rhs,
                      "Σ_r Ψ(p_kr ⊗ ρ_rl(f)) = ρ_kl(f) ⊗ 1")
    return rep


# -- bundle axioms --------------------------------------------------------------------------------


def verify_bundle_axioms(B: CrossBundle, inv: InvariantBasis, N: int = 2, seed: int = 0,
                         count: int = 8) -> Report:
    """Vertical integration, fixed points, comodule axioms and freeness of B."""
    cm, Od, V, G = B.cm, B.Od, B.V, B.G
    rep = Report(f"crossproduct bundle ({cm.kind})")
    rep.info.update({"kind": cm.kind, "d": Od.d, "base": V.name, "degree_bound": N, "seed": seed})
    # h_M ∘ i = id
    for f_idx, f in enumerate(V.basis_upto(N)):
        X = B.include(f)
        ok = B.equal(B.vertical_integral(X), X)
        rep.check(f"vertical_integral.on_base[{f_idx}]", ok)
    # h_M(B) ⊆ i(V), and the fixed-point slice has the rank of i(V)
    slice_ = B.slice_elements(N)
    images = []
    for s_idx, X in enumerate(slice_):
        H = B.vertical_integral(X)
        target = B.include(B.base_part(X))
        ok = B.equal(H, target)
        if not ok:
            rep.check(f"vertical_integral.into_base[{s_idx}]", False, B.residual(H, target))
        images.append(B.canonical(H, N))
    rep.check("vertical_integral.into_base", all(e["status"] == "pass" for e in rep.entries
                                                 if e["check"].startswith("vertical_integral.into_base[")))
    base_rank = rank([B.canonical(B.include(f), N) for f in V.basis_upto(N)])
    fixed_rank = rank(images)
    rep.check("fixed_points.rank", base_rank == fixed_rank, base_rank=base_rank, fixed_rank=fixed_rank)
    # comodule axioms on generators
    gens = [B.pure(NCPoly.scalar(1), NCPoly.gen(g)) for g in range(Od.pres.ngens)]
    gens += [B.include(f) for f in (V.generators() if not V.is_invariant_base else inv.upto(2))[:4]]
    for g_idx, X in enumerate(gens):
        FX = B.coact(X)
        left: dict = {}
        for (k, a), c in FX.items():
            for (k2, a2), c2 in B.coact({k: ONE}).items():
                add_term(left, (k2, a2, a), c * c2)
        right: dict = {}
        for (k, a), c in FX.items():
            for (a1, a3), c2 in G.coproduct_word(a).items():
                add_term(right, (k, a1, a3), c * c2)
        AA = G.AA
        diff: dict = {}
        for (k, a1, a2), c in left.items():
            for b1, cb1 in G.A.reduce_word(a1).items():
                for b2, cb2 in G.A.reduce_word(a2).items():
                    add_term(diff, (k, b1, b2), c * cb1 * cb2)
        for (k, a1, a2), c in right.items():
            for b1, cb1 in G.A.reduce_word(a1).items():
                for b2, cb2 in G.A.reduce_word(a2).items():
                    add_term(diff, (k, b1, b2), -c * cb1 * cb2)
        groups: dict = {}
        for (k, a1, a2), c in diff.items():
            add_term(groups.setdefault((a1, a2), {}), k, c)
        ok = all(not B.canonical(X2) for X2 in groups.values())
        rep.check(f"coaction.coassociative[{g_idx}]", ok)
        cu: dict = {}
        for (k, a), c in FX.items():
            e = G.counit_word(a)
            if not e.is_zero():
                add_term(cu, k, c * e)
        rep.check(f"coaction.counital[{g_idx}]", B.equal(cu, X))
    # B is an algebra: associativity, star involutive and antimultiplicative, F multiplicative
    rng = random.Random(seed)
    small = B.slice_elements(1)
    for t in range(count):
        X, Y, Z = (rng.choice(small) for _ in range(3))
        ok = B.equal(B.mul(B.mul(X, Y), Z), B.mul(X, B.mul(Y, Z)))
        rep.check(f"product.associative[{t}]", ok)
        ok = B.equal(B.star(B.star(X)), X)
        rep.check(f"star.involutive[{t}]", ok)
        ok = B.equal(B.star(B.mul(X, Y)), B.mul(B.star(Y), B.star(X)))
        rep.check(f"star.antimultiplicative[{t}]", ok)
        diff = B.coact(B.mul(X, Y))
        add_scaled(diff, _coact_product(B, B.coact(X), B.coact(Y)), -ONE)
        rep.check(f"coaction.multiplicative[{t}]", not _nonzero(B.canonical_coact(diff)))
    # freeness: Σ_k (1⊗ψ*_ki) F(1⊗ψ_kj) = 1 ⊗ 1 ⊗ u_ij
    for i in range(Od.n):
        for j in range(Od.n):
            acc: dict = {}
            for k in range(Od.d):
                left = {(k2, ()): c for k2, c in B.pure(NCPoly.scalar(1), Od.psistar(k, i)).items()}
                add_scaled(acc, _coact_product(B, left, B.coact(B.pure(NCPoly.scalar(1), Od.psi(k, j)))), ONE)
            target = {(((), ()), a): c for a, c in G.u[i][j].terms.items()}
            add_scaled(acc, target, -ONE)
            ok = not _nonzero(B.canonical_coact(acc))
            rep.check(f"freeness.witness_u[{i + 1},{j + 1}]", ok)
    return rep


def _nonzero(x: dict) -> dict:
    return {k: v for k, v in x.items() if not v.is_zero()}


def _coact_product(B: CrossBundle, FX: dict, FY: dict) -> dict:
    """Product in B ⊗ A."""
    out: dict = {}
    A = B.G.A
    for (k1, a1), c1 in FX.items():
        for (k2, a2), c2 in FY.items():
            P = B.mul({k1: ONE}, {k2: ONE})
            for a, ca in A.reduce_word(a1 + a2).items():
                for k, c in P.items():
                    add_term(out, (k, a), c1 * c2 * ca * c)
    return out


# -- reconstruction comparisons ---------------------------------------------------------------


def universal_reconstruction(B: CrossBundle, N: int = 3) -> Report:
    """B = O_d^G ⊗_γ O_d against O_d: per-degree dimensions and products under f⊗x ↦ fx."""
    Od = B.Od
    rep = Report("universal reconstruction")
    table = []
    for k in range(N + 1):
        elems = B.slice_elements(k)
        coord_rank = rank([B.haar_coordinates(X, k) for X in elems], key=repr)
        real_rank = rank([B.realize(X) for X in elems], key=word_key)
        od_dim = len(Od.R.normal_words_up_to(k))
        table.append({"degree": k, "bundle_haar_rank": coord_rank, "bundle_realized_rank": real_rank,
                      "od_dim": od_dim})
        rep.check(f"dimension[{k}]", coord_rank == od_dim == real_rank,
                  bundle_haar_rank=coord_rank, bundle_realized_rank=real_rank, od_dim=od_dim)
    rep.info["dimension_table"] = table
    elems = B.slice_elements(N)
    degs = [max(len(xw) + len(fw) for (fw, xw) in X) for X in elems]
    count = 0
    bad = 0
    for X, dx in zip(elems, degs):
        for Y, dy in zip(elems, degs):
            if dx + dy > N:
                continue
            count += 1
            lhs = B.realize(B.mul(X, Y))
            rhs = B.cm.ambient.mul(B.realize(X), B.realize(Y))
            diff = dict(lhs)
            add_scaled(diff, rhs, -ONE)
            if any(not v.is_zero() for v in diff.values()):
                bad += 1
    rep.check("product_table", bad == 0, pairs=count, mismatches=bad)
    return rep


def _group_lifts(cm: ClassifyingMap) -> dict:
    """For each A-generator, an O_d element whose embedding is 1 ⊗ generator."""
    Od = cm.Od
    G = Od.G
    amb = cm.ambient
    ech = Echelon(repr)
    for g in range(Od.pres.ngens):
        ech.add(cm.embed_word((g,)), tag=g)
    lifts = {}
    for a in range(G.pres.ngens):
        target = amb.from_group(NCPoly.gen(a))
        combo = ech.express(target)
        if combo is None:
            raise ValueError(f"group generator {G.pres.generators[a].name} is not in the image of the ψ's")
        lifts[a] = NCPoly._raw({(g,): c for g, c in combo.items()})
    return lifts


def trivial_round_trip(B: CrossBundle, N: int = 2) -> Report:
    """Rebuilt V ⊗_γ O_d against V ⊗ A: surjectivity and the product table on degree ≤ N."""
    cm = B.cm
    Od, V = B.Od, B.V
    amb: TrivialBundle = cm.ambient
    G = Od.G
    rep = Report("trivial bundle round trip")
    lifts = _group_lifts(cm)

    def lift_word(aw):
        x = NCPoly.scalar(1)
        for g in aw:
            x = Od.mul(x, lifts[g])
        return x

    elems = []
    for fw in V.R.normal_words_up_to(N):
        for aw in G.A.normal_words_up_to(N - len(fw)):
            elems.append(((fw, aw), B.pure(NCPoly.word(fw), lift_word(aw))))
    bad_lift = 0
    for (fw, aw), X in elems:
        if B.realize(X) != {(fw, aw): ONE}:
            bad_lift += 1
    rep.check("lift.realizes_basis", bad_lift == 0, elements=len(elems), mismatches=bad_lift)
    pairs = 0
    bad = 0
    for (k1, X) in elems:
        for (k2, Y) in elems:
            pairs += 1
            lhs = B.realize(B.mul(X, Y))
            rhs = amb.mul({k1: ONE}, {k2: ONE})
            diff = dict(lhs)
            add_scaled(diff, rhs, -ONE)
            if any(not v.is_zero() for v in diff.values()):
                bad += 1
    rep.check("product_table", bad == 0, pairs=pairs, mismatches=bad)
    bad = 0
    for (k1, X) in elems:
        lhs = B.realize(B.star(X))
        rhs = amb.star({k1: ONE})
        diff = dict(lhs)
        add_scaled(diff, rhs, -ONE)
        if any(not v.is_zero() for v in diff.values()):
            bad += 1
    rep.check("star_table", bad == 0, elements=len(elems), mismatches=bad)
    return rep
