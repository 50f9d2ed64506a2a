"""Universal characteristic classes at bounded degree.

The universal algebra Ω is free on θ_a (grade 1) and dθ_a (grade 2).  The
first-order calculus enters through truncation data: a presented
graded-differential *-algebra (the envelope) containing A in degree 0 and
the θ_a in degree 1, plus the adjoint corepresentation v.  From these we
build the adjoint extension ad~: Ω → Ω ⊗ env, its invariant subalgebra,
the cohomology of that subalgebra, connections on a trivial bundle and the
Weil images of invariant cocycles.

Tensor products are graded (Koszul signs) and the tensor differential is
d(x⊗y) = dx⊗y + (-1)^{|x|} x⊗dy.
"""

from __future__ import annotations

import random
from importlib import resources
from itertools import product as _cartesian

from .cqg import HopfGroupData, builtin_group
from .errors import EnvelopeTooShallow, NotAConnection, PresentationError
from .ncalg.jsonio import Located, load_located, loads_located, parse_poly_at, presentation_from_doc
from .ncalg.linalg import Echelon, nullspace, rank
from .ncalg.poly import Generator, NCPoly, Presentation, add_scaled, add_term, word_key
from .ncalg.rewriting import RewriteSystem, complete
from .ncalg.scalar import ONE, ZERO, Scalar
from .ncalg.tensor import TensorSpace
from .report import Report, residual_text


def _nz(x: dict) -> dict:
    return {k: v for k, v in x.items() if not v.is_zero()}


# -- graded-differential algebras ----------------------------------------------------


class DGAlgebra:
    """A presented graded *-algebra with a differential given on generators."""

    def __init__(self, R: RewriteSystem, dtable: dict, name: str = ""):
        self.R = R
        self.pres: Presentation = R.presentation
        self.dtable = {g: R.reduce(x) for g, x in dtable.items()}
        self.name = name or self.pres.name
        self._d: dict = {(): {}}

    def grade(self, w) -> int:
        return self.pres.grade(w)

    def poly_grade(self, x) -> int | None:
        """Common grade of the terms of x (None for 0 or inhomogeneous)."""
        gs = {self.grade(w) for w in (x.terms if isinstance(x, NCPoly) else x)}
        return gs.pop() if len(gs) == 1 else None

    def d_word(self, w) -> dict:
        hit = self._d.get(w)
        if hit is not None:
            return hit
        out: dict = {}
        sign = 1
        for i, g in enumerate(w):
            dg = self.dtable.get(g)
            if dg is None:
                raise EnvelopeTooShallow(f"no differential given for {self.pres.generators[g].name}")
            for v, c in dg.terms.items():
                add_term(out, w[:i] + v + w[i + 1:], c if sign > 0 else -c)
            if self.pres.generators[g].grade % 2:
                sign = -sign
        out = self.R.reduce_terms(out)
        self._d[w] = out
        return out

    def d(self, x) -> NCPoly:
        out: dict = {}
        for w, c in (x.terms if isinstance(x, NCPoly) else x).items():
            add_scaled(out, self.d_word(w), c)
        return NCPoly._raw(out)

    def mul(self, *xs) -> NCPoly:
        return self.R.prod(*xs)

    def star(self, x: NCPoly) -> NCPoly:
        return self.R.star(x)

    def reduce(self, x) -> NCPoly:
        return self.R.reduce(x)

    def fmt(self, x) -> str:
        return self.R.fmt(x)

    def gen(self, name: str) -> NCPoly:
        return NCPoly.gen(self.pres.gen_id(name))

    def words_of_grade(self, k: int, max_len: int) -> list:
        return [w for w in self.R.normal_words_up_to(max_len) if self.grade(w) == k]

    def structure_report(self) -> Report:
        """d² = 0 on generators, relations d-closed, d hermitian on generators."""
        rep = Report(f"graded-differential algebra {self.name}")
        for g, gen in enumerate(self.pres.generators):
            dd = self.d(self.d(NCPoly.gen(g)))
            rep.check(f"d_squared[{gen.name}]", dd.is_zero(), residual_text(self.fmt, dd), identity="d∘d = 0")
            x = NCPoly.gen(g)
            res = self.d(self.star(x)) - self.star(self.d(x))
            rep.check(f"d_hermitian[{gen.name}]", res.is_zero(), residual_text(self.fmt, res),
                      identity="d(x*) = (dx)*")
        for i, rel in enumerate(self.pres.relations):
            res = self.d(rel)
            rep.check(f"relation_closed[{i}]", res.is_zero(), residual_text(self.fmt, res),
                      identity="d(relation) = 0")
        return rep


def dgalgebra_from_doc(doc: Located, base: tuple = (), degree_bound: int = 4) -> DGAlgebra:
    pres = presentation_from_doc(doc, base=base)
    data = doc.value
    for p in base:
        data = data[p]
    raw = data.get("differential")
    if not isinstance(raw, dict):
        raise doc.error(base + ("differential",), "'differential' maps generator names to poly-strings")
    table = {}
    for name, val in raw.items():
        if name not in pres.index:
            raise doc.error(base + ("differential", name), f"unknown generator {name!r}")
        table[pres.index[name]] = parse_poly_at(doc, base + ("differential", name), val, pres)
    R = complete(pres, max(degree_bound, max((r.degree() for r in pres.relations), default=0)))
    alg = DGAlgebra(R, table, pres.name)
    for g in range(pres.ngens):
        if g not in table:
            raise doc.error(base + ("differential",), f"missing differential of {pres.generators[g].name!r}")
        dg = alg.dtable[g]
        if not dg.is_zero() and alg.poly_grade(dg) != pres.generators[g].grade + 1:
            raise doc.error(base + ("differential", pres.generators[g].name),
                            "the differential must raise the grade by one")
    return alg


class GradedTensor:
    """L_1 ⊗ … ⊗ L_n of DG algebras with Koszul signs and the total differential."""

    def __init__(self, *legs: DGAlgebra):
        self.legs = legs
        self.T = TensorSpace(*(L.R for L in legs))

    def mul(self, x: dict, y: dict) -> dict:
        return self.T.mul(x, y)

    def star(self, x: dict) -> dict:
        return self.T.star(x)

    def one(self) -> dict:
        return self.T.one()

    def pure(self, *xs) -> dict:
        return self.T.pure(*xs)

    def d(self, x: dict) -> dict:
        out: dict = {}
        for key, c in x.items():
            sign = 1
            for i, w in enumerate(key):
                for v, cv in self.legs[i].d_word(w).items():
                    add_term(out, key[:i] + (v,) + key[i + 1:], c * cv if sign > 0 else -(c * cv))
                if self.legs[i].grade(w) % 2:
                    sign = -sign
        return _nz(out)

    def grade(self, key) -> int:
        return sum(L.grade(w) for L, w in zip(self.legs, key))

    def fmt(self, x: dict) -> str:
        return self.T.fmt(x)


# -- the universal algebra Ω -------------------------------------------------------------


class OmegaAlgebra(DGAlgebra):
    """Free graded-differential *-algebra on θ_a (grade 1) and dθ_a (grade 2)."""

    def __init__(self, theta: list, bound: int):
        """``theta`` lists (name, star name, star coefficient)."""
        gens = []
        for name, star, coeff in theta:
            gens.append(Generator(name, 1, star, coeff))
        for name, star, coeff in theta:
            gens.append(Generator("d" + name, 2, "d" + star, coeff))
        pres = Presentation(gens, [], graded=True, name="Omega")
        R = complete(pres, max(bound + 1, 2))
        s = len(theta)
        table = {a: NCPoly.gen(s + a) for a in range(s)}
        table.update({s + a: NCPoly() for a in range(s)})
        super().__init__(R, table, "Omega")
        self.s = s
        self.bound = bound

    def theta(self, a: int) -> NCPoly:
        return NCPoly.gen(a)

    def dtheta(self, a: int) -> NCPoly:
        return NCPoly.gen(self.s + a)

    def basis(self, k: int) -> list:
        """All words of grade k (no relations, so these are a basis)."""
        return self.words_of_grade(k, k)

    def dims(self, bound: int | None = None) -> list:
        bound = self.bound if bound is None else bound
        return [len(self.basis(k)) for k in range(bound + 1)]


def build_omega(fodc: "FodcData", bound: int = 3) -> OmegaAlgebra:
    return OmegaAlgebra(fodc.theta_spec(), bound)


def d_matrix_rank(alg: DGAlgebra, basis: list) -> int:
    return rank([alg.d_word(w) for w in basis], key=word_key)


def omega_cohomology(Om: OmegaAlgebra, bound: int | None = None) -> list:
    """dim H^k(Ω) for k ≤ bound, from exact ranks of d on each grade."""
    bound = Om.bound if bound is None else bound
    ranks = [d_matrix_rank(Om, Om.basis(k)) for k in range(bound + 1)]
    dims = []
    for k in range(bound + 1):
        ker = len(Om.basis(k)) - ranks[k]
        im = ranks[k - 1] if k > 0 else 0
        dims.append(ker - im)
    return dims


# -- first-order calculus data -------------------------------------------------------------


class FodcData:
    """Γ_inv basis θ_a inside an envelope truncation, with ϖ(θ_a) = Σ_b θ_b ⊗ v_ba."""

    def __init__(self, name: str, G: HopfGroupData, env: DGAlgebra, theta: list, v: list):
        self.name = name
        self.G = G
        self.env = env
        self.theta_ids = [env.pres.gen_id(t) for t in theta]
        self.theta_names = list(theta)
        self.s = len(theta)
        self.v = [[G.A.reduce(x) for x in row] for row in v]
        # A embeds into the envelope by generator name
        self.a_to_env = {}
        for g, gen in enumerate(G.pres.generators):
            if gen.name not in env.pres.index:
                raise PresentationError(f"the envelope lacks the group generator {gen.name!r}")
            self.a_to_env[g] = env.pres.index[gen.name]
        self.env_to_a = {e: g for g, e in self.a_to_env.items()}

    def theta_spec(self) -> list:
        out = []
        p = self.env.pres
        for t in self.theta_ids:
            star = p.star_id[t]
            if star not in self.theta_ids:
                raise PresentationError("Γ_inv must be closed under the star")
            out.append((p.generators[t].name, p.generators[star].name, p.star_coeff[t]))
        return out

    def embed_a(self, x: NCPoly) -> NCPoly:
        out: dict = {}
        for w, c in x.terms.items():
            add_term(out, tuple(self.a_to_env[g] for g in w), c)
        return self.env.reduce(NCPoly._raw(out))

    def theta_env(self, a: int) -> NCPoly:
        return NCPoly.gen(self.theta_ids[a])

    def v_env(self, b: int, a: int) -> NCPoly:
        return self.embed_a(self.v[b][a])

    # φ̂ on the envelope: A by the coproduct, θ_a ↦ Σ_b θ_b ⊗ v_ba + 1 ⊗ θ_a
    def coproduct_env_word(self, w, EE: GradedTensor, memo: dict) -> dict:
        hit = memo.get(w)
        if hit is not None:
            return hit
        if not w:
            out = EE.one()
        elif len(w) == 1:
            g = w[0]
            if g in self.env_to_a:
                out = {}
                for (w1, w2), c in self.G.coproduct_word((self.env_to_a[g],)).items():
                    add_scaled(out, EE.pure(self.embed_a(NCPoly.word(w1)), self.embed_a(NCPoly.word(w2))), c)
            elif g in self.theta_ids:
                a = self.theta_ids.index(g)
                out = EE.pure(NCPoly.scalar(1), self.theta_env(a))
                for b in range(self.s):
                    add_scaled(out, EE.pure(self.theta_env(b), self.v_env(b, a)), ONE)
            else:
                raise EnvelopeTooShallow(f"no coproduct extension for {self.env.pres.generators[g].name}")
        else:
            h = len(w) // 2
            out = EE.mul(self.coproduct_env_word(w[:h], EE, memo), self.coproduct_env_word(w[h:], EE, memo))
        memo[w] = out
        return out


def fodc_from_doc(doc: Located, G: HopfGroupData | None = None, degree_bound: int = 4) -> FodcData:
    data = doc.value
    if not isinstance(data, dict):
        raise doc.error((), "first-order calculus data is a JSON object")
    if G is None:
        gname = data.get("group")
        if not isinstance(gname, str):
            raise doc.error(("group",), "'group' must name a built-in group")
        G = builtin_group(gname)
    env = dgalgebra_from_doc(doc, base=("envelope",), degree_bound=degree_bound)
    theta = data.get("theta")
    if not (isinstance(theta, list) and theta and all(isinstance(t, str) for t in theta)):
        raise doc.error(("theta",), "'theta' lists the grade-1 envelope generators spanning Γ_inv")
    for i, t in enumerate(theta):
        if t not in env.pres.index or env.pres.generators[env.pres.index[t]].grade != 1:
            raise doc.error(("theta", i), f"{t!r} is not a grade-1 envelope generator")
    s = len(theta)
    raw = data.get("adjoint")
    if not (isinstance(raw, list) and len(raw) == s and all(isinstance(r, list) and len(r) == s for r in raw)):
        raise doc.error(("adjoint",), f"'adjoint' must be an {s}×{s} matrix over the group algebra")
    v = [[parse_poly_at(doc, ("adjoint", i, j), e, G.pres) for j, e in enumerate(row)] for i, row in enumerate(raw)]
    return FodcData(str(data.get("name", "")), G, env, theta, v)


def builtin_fodc(group: str, degree_bound: int = 4) -> FodcData:
    text = resources.files("qpb.data").joinpath(f"fodc_{group}.json").read_text()
    return fodc_from_doc(loads_located(text), builtin_group(group), degree_bound)


def load_fodc(path, degree_bound: int = 4) -> FodcData:
    return fodc_from_doc(load_located(path), None, degree_bound)


def builtin_base_calculus(name: str = "plane", degree_bound: int = 4) -> DGAlgebra:
    text = resources.files("qpb.data").joinpath(f"{name}.json").read_text()
    return dgalgebra_from_doc(loads_located(text), degree_bound=degree_bound)


def verify_fodc(fodc: FodcData) -> Report:
    """v is a corepresentation, star is compatible with ϖ, the envelope is a DG *-algebra."""
    G = fodc.G
    rep = Report(f"first-order calculus {fodc.name}")
    rep.extend(fodc.env.structure_report(), prefix="envelope.")
    s = fodc.s
    for i in range(s):
        for j in range(s):
            lhs = G.coproduct(fodc.v[i][j])
            rhs: dict = {}
            for k in range(s):
                add_scaled(rhs, G.AA.pure(fodc.v[i][k], fodc.v[k][j]), ONE)
            res = _nz(G.AA.sub(lhs, rhs))
            rep.check(f"adjoint.coproduct[{i + 1},{j + 1}]", not res, residual_text(G.fmt2, res),
                      identity="Δ(v_ij) = Σ_k v_ik ⊗ v_kj")
            e = G.counit(fodc.v[i][j]) - (ONE if i == j else ZERO)
            rep.check(f"adjoint.counit[{i + 1},{j + 1}]", e.is_zero(), [str(e)], identity="ε(v_ij) = δ_ij")
    # (∗⊗∗)ϖ = ϖ∘∗ on the basis
    p = fodc.env.pres
    for a in range(s):
        t = fodc.theta_ids[a]
        sa = fodc.theta_ids.index(p.star_id[t])
        coeff = p.star_coeff[t]
        res_terms: dict = {}
        for b in range(s):
            tb = fodc.theta_ids[b]
            sb = fodc.theta_ids.index(p.star_id[tb])
            # (θ_b ⊗ v_ba)* = c_b θ_{b*} ⊗ v_ba*
            for w, c in G.A.star(fodc.v[b][a]).terms.items():
                add_term(res_terms, (sb, w), c * p.star_coeff[tb])
            for w, c in fodc.v[b][sa].terms.items():
                add_term(res_terms, (b, w), -c * coeff)
        res = _nz(res_terms)
        rep.check(f"adjoint.star[{fodc.theta_names[a]}]", not res,
                  [str(r) for r in sorted(res, key=repr)], identity="(∗⊗∗)ϖ = ϖ∘∗")
    return rep


# -- the adjoint extension ---------------------------------------------------------------------


class AdjointExtension:
    """ad~: Ω → Ω ⊗ env, the graded-differential extension of θ ↦ ϖ(θ) + 1⊗θ."""

    def __init__(self, Om: OmegaAlgebra, fodc: FodcData):
        self.Om = Om
        self.fodc = fodc
        self.OE = GradedTensor(Om, fodc.env)
        self.EE = GradedTensor(fodc.env, fodc.env)
        self._memo: dict = {(): self.OE.one()}
        self._cop_memo: dict = {}
        s = Om.s
        for a in range(s):
            img = self.OE.pure(NCPoly.scalar(1), fodc.theta_env(a))
            for b in range(s):
                add_scaled(img, self.OE.pure(Om.theta(b), fodc.v_env(b, a)), ONE)
            self._memo[(a,)] = _nz(img)
        for a in range(s):
            self._memo[(s + a,)] = self.OE.d(self._memo[(a,)])

    def word(self, w) -> dict:
        hit = self._memo.get(w)
        if hit is not None:
            return hit
        h = len(w) // 2
        out = self.OE.mul(self.word(w[:h]), self.word(w[h:]))
        self._memo[w] = out
        return out

    def __call__(self, x) -> dict:
        out: dict = {}
        for w, c in (x.terms if isinstance(x, NCPoly) else x).items():
            add_scaled(out, self.word(w), c)
        return _nz(out)

    def defect(self, w) -> dict:
        """ad~(w) − w ⊗ 1."""
        out = dict(self.word(w))
        add_term(out, (w, ()), -ONE)
        return _nz(out)

    def coproduct_env(self, x: dict) -> dict:
        out: dict = {}
        for w, c in x.items():
            add_scaled(out, self.fodc.coproduct_env_word(w, self.EE, self._cop_memo), c)
        return out

    def comodule_residual(self, w) -> dict:
        """(ad~⊗id)ad~(w) − (id⊗φ̂)ad~(w) in Ω ⊗ env ⊗ env."""
        T3 = TensorSpace(self.Om.R, self.fodc.env.R, self.fodc.env.R)
        out: dict = {}
        for (x, e), c in self.word(w).items():
            for (x2, e2), c2 in self.word(x).items():
                # (x2 ⊗ e2) ⊗ e: no sign, the order of legs is unchanged
                add_term(out, (x2, e2, e), c * c2)
            for (e1, e3), c3 in self.fodc.coproduct_env_word(e, self.EE, self._cop_memo).items():
                add_term(out, (x, e1, e3), -(c * c3))
        return _nz(T3.reduce(out))


def adjoint_extension(Om: OmegaAlgebra, fodc: FodcData) -> AdjointExtension:
    return AdjointExtension(Om, fodc)


def verify_adjoint_extension(ad: AdjointExtension, seed: int = 0, samples: int = 10) -> Report:
    Om, OE = ad.Om, ad.OE
    rep = Report("adjoint extension")
    gens = [(g,) for g in range(Om.pres.ngens)]
    rng = random.Random(seed)
    pool = [w for k in range(1, 4) for w in Om.basis(k)]
    words = gens + [rng.choice(pool) for _ in range(samples)]
    for idx, w in enumerate(words):
        res = ad.comodule_residual(w)
        rep.check(f"comodule_identity[{idx}:{Om.pres.format_word(w)}]", not res,
                  residual_text(lambda t: str(t), res), identity="(ad~⊗id)ad~ = (id⊗φ̂)ad~")
    for g in range(Om.pres.ngens):
        x = NCPoly.gen(g)
        res = _nz(OE.T.sub(ad(Om.star(x)), OE.star(ad(x))))
        rep.check(f"hermitian[{Om.pres.generators[g].name}]", not res, residual_text(OE.fmt, res),
                  identity="ad~(x*) = ad~(x)*")
    for idx in range(samples):
        x, y = rng.choice(pool), rng.choice(pool)
        xy = Om.R.reduce_word(x + y)
        res = _nz(OE.T.sub(ad(xy), OE.mul(ad.word(x), ad.word(y))))
        rep.check(f"multiplicative[{idx}]", not res, residual_text(OE.fmt, res),
                  identity="ad~(xy) = ad~(x)ad~(y)")
        res = _nz(OE.T.sub(ad(Om.d(NCPoly.word(x))), OE.d(ad.word(x))))
        rep.check(f"differential[{idx}]", not res, residual_text(OE.fmt, res), identity="ad~ d = d ad~")
    return rep


# -- invariants and their cohomology ---------------------------------------------------------------


class AdInvariants:
    """Per-grade bases of the ad~-invariant subalgebra of Ω."""

    def __init__(self, Om: OmegaAlgebra, bound: int, by_grade: dict):
        self.Om = Om
        self.bound = bound
        self.by_grade = by_grade

    def dims(self) -> list:
        return [len(self.by_grade[k]) for k in range(self.bound + 1)]

    def basis(self, k: int) -> list:
        return self.by_grade.get(k, [])

    def echelon(self, k: int) -> Echelon:
        e = Echelon(word_key)
        for x in self.basis(k):
            e.add(x.terms)
        return e


def invariant_subalgebra(ad: AdjointExtension, bound: int = 3) -> AdInvariants:
    """Solve ad~(w) − w⊗1 = 0 on each grade k ≤ bound + 1."""
    Om = ad.Om
    by_grade = {}
    for k in range(bound + 2):
        words = Om.basis(k)
        null = nullspace(words, {w: ad.defect(w) for w in words})
        vecs = Echelon(word_key)
        for vec in null:
            vecs.add(vec)
        by_grade[k] = [NCPoly._raw(r) for r in vecs.basis()]
    return AdInvariants(Om, bound, by_grade)


def verify_invariants(inv: AdInvariants) -> Report:
    """Closure under d, product and star; acyclicity of Ω itself."""
    Om = inv.Om
    rep = Report("invariant subalgebra")
    dims = omega_cohomology(Om, inv.bound)
    for k, h in enumerate(dims):
        rep.check(f"omega_acyclic[{k}]", h == (1 if k == 0 else 0), dim=h)
    for k in range(inv.bound + 1):
        nxt = inv.echelon(k + 1)
        for i, x in enumerate(inv.basis(k)):
            dx = Om.d(x)
            rep.check(f"d_stable[{k}:{i}]", nxt.contains(dx.terms), residual_text(Om.fmt, dx))
            ech = inv.echelon(k)
            rep.check(f"star_closed[{k}:{i}]", ech.contains(Om.star(x).terms))
        for j in range(k + 1):
            if j + k > inv.bound + 1:
                continue
            target = inv.echelon(j + k)
            for x in inv.basis(j):
                for y in inv.basis(k):
                    rep.check(f"product_closed[{j},{k}]", target.contains(Om.mul(x, y).terms))
    return rep


class Cohomology:
    def __init__(self, dims: list, representatives: dict, bound: int):
        self.dims = dims
        self.representatives = representatives
        self.bound = bound


def cohomology(inv: AdInvariants, bound: int | None = None) -> Cohomology:
    """dim H^k and representative cocycles, k ≤ bound."""
    Om = inv.Om
    bound = inv.bound if bound is None else bound
    dims = []
    reps = {}
    for k in range(bound + 1):
        basis = inv.basis(k)
        images = {i: Om.d(x).terms for i, x in enumerate(basis)}
        kernel = nullspace(list(range(len(basis))), images)
        cocycles = []
        for vec in kernel:
            acc: dict = {}
            for i, c in vec.items():
                add_scaled(acc, basis[i].terms, c)
            cocycles.append(acc)
        exact = Echelon(word_key)
        for x in inv.basis(k - 1) if k > 0 else []:
            exact.add(Om.d(x).terms)
        classes = []
        for z in sorted(cocycles, key=lambda t: sorted(map(word_key, t))):
            if exact.add(z):
                classes.append(NCPoly._raw(z))
        dims.append(len(classes))
        reps[k] = classes
    return Cohomology(dims, reps, bound)


def cohomology_report(inv: AdInvariants, coh: Cohomology) -> Report:
    rep = Report("universal characteristic classes")
    rep.info.update({"invariant_dims": inv.dims()[: coh.bound + 1], "cohomology_dims": coh.dims,
                     "representatives": {str(k): [inv.Om.fmt(x) for x in v] for k, v in coh.representatives.items()}})
    rep.check("h0_scalars", coh.dims[0] == 1 and inv.dims()[0] == 1)
    return rep


# -- connections on a trivial bundle ----------------------------------------------------------------


class TrivialBundleCalculus:
    """Ω(P) = Ω(M) ⊗ env with F̂ = id ⊗ φ̂; Ω(M) sits as Ω(M) ⊗ 1."""

    def __init__(self, M: DGAlgebra, fodc: FodcData):
        self.M = M
        self.fodc = fodc
        self.P = GradedTensor(M, fodc.env)
        self.EE = GradedTensor(fodc.env, fodc.env)
        self._cop: dict = {}

    def coact(self, X: dict) -> dict:
        """F̂(m ⊗ e) = m ⊗ φ̂(e), keys ((m, e1), e2)."""
        out: dict = {}
        for (m, e), c in X.items():
            for (e1, e2), c2 in self.fodc.coproduct_env_word(e, self.EE, self._cop).items():
                add_term(out, ((m, e1), e2), c * c2)
        return _nz(out)

    def base_part(self, X: dict):
        """The Ω(M) element if X lies in Ω(M) ⊗ 1, else None."""
        if any(e != () for (_, e) in X):
            return None
        return NCPoly._raw({m: c for (m, _), c in X.items()})

    def from_base(self, m: NCPoly) -> dict:
        return {(w, ()): c for w, c in m.terms.items()}


class Connection:
    def __init__(self, calc: TrivialBundleCalculus, values: list, name: str = ""):
        self.calc = calc
        self.values = [_nz(v) for v in values]
        self.name = name


def trivial_connection(calc: TrivialBundleCalculus) -> Connection:
    """ω₀(θ_a) = 1 ⊗ θ_a."""
    f = calc.fodc
    return Connection(calc, [calc.P.pure(NCPoly.scalar(1), f.theta_env(a)) for a in range(f.s)], "trivial")


def shifted_connection(omega: Connection, alphas: list, name: str = "shifted") -> Connection:
    """ω(θ_a) + α_a ⊗ 1 for one-forms α_a on the base."""
    vals = []
    for v, alpha in zip(omega.values, alphas):
        vals.append(omega.calc.P.T.add(v, omega.calc.from_base(omega.calc.M.reduce(alpha))))
    return Connection(omega.calc, vals, name)


def check_connection(omega: Connection) -> Report:
    """Grade one, hermitian, and F̂ω(θ) = (ω⊗id)ϖ(θ) + 1⊗θ."""
    calc = omega.calc
    f = calc.fodc
    P = calc.P
    rep = Report(f"connection {omega.name}")
    p = f.env.pres
    for a, val in enumerate(omega.values):
        name = f.theta_names[a]
        grades = {P.grade(k) for k in val}
        rep.check(f"grade_one[{name}]", grades <= {1}, grades=sorted(grades))
        t = f.theta_ids[a]
        sa = f.theta_ids.index(p.star_id[t])
        lhs = P.T.scale(omega.values[sa], p.star_coeff[t])
        res = _nz(P.T.sub(lhs, P.star(val)))
        rep.check(f"hermitian[{name}]", not res, residual_text(P.fmt, res), identity="ω(θ*) = ω(θ)*")
        target: dict = {}
        for b in range(f.s):
            for (m, e), c in omega.values[b].items():
                for w, c2 in f.v_env(b, a).terms.items():
                    add_term(target, ((m, e), w), c * c2)
        add_term(target, (((), ()), (t,)), ONE)
        res = _nz(TensorSpace(calc.M.R, f.env.R, f.env.R).sub(
            {(k[0][0], k[0][1], k[1]): c for k, c in calc.coact(val).items()},
            {(k[0][0], k[0][1], k[1]): c for k, c in target.items()}))
        rep.check(f"connection_condition[{name}]", not res, residual_text(str, res),
                  identity="F̂ω(θ) = (ω⊗id)ϖ(θ) + 1⊗θ")
    return rep


class ConnectionExtension:
    """ω̂: Ω → Ω(P), θ ↦ ω(θ), dθ ↦ dω(θ), multiplicative."""

    def __init__(self, omega: Connection, Om: OmegaAlgebra):
        self.omega = omega
        self.Om = Om
        P = omega.calc.P
        self.P = P
        self._memo: dict = {(): P.one()}
        for a in range(Om.s):
            self._memo[(a,)] = omega.values[a]
            self._memo[(Om.s + a,)] = P.d(omega.values[a])

    def word(self, w) -> dict:
        hit = self._memo.get(w)
        if hit is not None:
            return hit
        h = len(w) // 2
        out = _nz(self.P.mul(self.word(w[:h]), self.word(w[h:])))
        self._memo[w] = out
        return out

    def __call__(self, x) -> dict:
        out: dict = {}
        for w, c in (x.terms if isinstance(x, NCPoly) else x).items():
            add_scaled(out, self.word(w), c)
        return _nz(out)


def connection_extension(omega: Connection, Om: OmegaAlgebra) -> ConnectionExtension:
    rep = check_connection(omega)
    if not rep.ok:
        bad = rep.failures()[0]
        raise NotAConnection(f"{omega.name}: {bad['check']} fails" +
                             (f" ({bad['identity']})" if "identity" in bad else ""))
    return ConnectionExtension(omega, Om)


def verify_connection_extension(ext: ConnectionExtension, ad: AdjointExtension, inv: AdInvariants) -> Report:
    """ω̂ intertwines ad~ and F̂ on generators and maps invariants into Ω(M) ⊗ 1."""
    calc = ext.omega.calc
    Om = ext.Om
    rep = Report(f"connection extension {ext.omega.name}")
    for g in range(Om.pres.ngens):
        lhs = calc.coact(ext.word((g,)))
        rhs: dict = {}
        for (x, e), c in ad.word((g,)).items():
            for k, c2 in ext.word(x).items():
                add_term(rhs, (k, e), c * c2)
        diff = dict(lhs)
        add_scaled(diff, rhs, -ONE)
        rep.check(f"intertwines[{Om.pres.generators[g].name}]", not _nz(diff), residual_text(str, _nz(diff)),
                  identity="F̂ ω̂ = (ω̂⊗id) ad~")
        x = NCPoly.gen(g)
        res = _nz(calc.P.T.sub(ext(Om.star(x)), calc.P.star(ext(x))))
        rep.check(f"hermitian[{Om.pres.generators[g].name}]", not res, residual_text(calc.P.fmt, res))
    for k in range(inv.bound + 1):
        for i, x in enumerate(inv.basis(k)):
            X = ext(x)
            rep.check(f"invariants_to_base[{k}:{i}]", calc.base_part(X) is not None,
                      residual_text(calc.P.fmt, X))
    return rep


def _solve_primitive(M: DGAlgebra, target: NCPoly, k: int):
    """Some y of grade k−1 with dy = target, or None."""
    if target.is_zero():
        return NCPoly()
    L = max(len(w) for w in target.terms)
    ech = Echelon(word_key)
    for w in M.words_of_grade(k - 1, L):
        ech.add(M.d_word(w), tag=w)
    combo = ech.express(target.terms)
    if combo is None:
        return None
    return NCPoly._raw(dict(combo))


def weil_check(ext0: ConnectionExtension, ext1: ConnectionExtension, coh: Cohomology) -> Report:
    """ω̂₀(c) − ω̂₁(c) is exact in Ω(M) for every representative class c."""
    calc = ext0.omega.calc
    M = calc.M
    Om = ext0.Om
    rep = Report("Weil map independence")
    prims = {}
    for k in range(coh.bound + 1):
        for i, c in enumerate(coh.representatives.get(k, [])):
            X0, X1 = ext0(c), ext1(c)
            b0, b1 = calc.base_part(X0), calc.base_part(X1)
            if b0 is None or b1 is None:
                rep.check(f"in_base[{k}:{i}]", False, residual_text(calc.P.fmt, X0 if b0 is None else X1))
                continue
            diff = M.reduce(b0 - b1)
            closed = M.d(diff).is_zero()
            prim = _solve_primitive(M, diff, k) if k > 0 else (NCPoly() if diff.is_zero() else None)
            ok = closed and prim is not None and (M.d(prim) - diff).is_zero()
            rep.check(f"difference_exact[{k}:{i}]", ok, residual_text(M.fmt, diff),
                      identity="ω̂₀(c) − ω̂₁(c) = d(primitive)", cls=Om.fmt(c),
                      difference=M.fmt(diff), primitive=None if prim is None else M.fmt(prim))
            prims[(k, i)] = prim
    rep.info["primitives"] = {f"{k}:{i}": (None if p is None else M.fmt(p)) for (k, i), p in sorted(prims.items())}
    return rep


# -- naturality through a classifying map -------------------------------------------------------------


def maurer_cartan_coefficients(fodc: FodcData) -> list:
    """Coefficients m^a_ij with Σ_ij m^a_ij Σ_k u*_ki du_kj = θ_a in the envelope."""
    from .ncalg.linalg import solve_linear
    G = fodc.G
    env = fodc.env
    n = G.n
    mc = {}
    for i in range(n):
        for j in range(n):
            acc = NCPoly()
            for k in range(n):
                acc = acc + env.mul(fodc.embed_a(G.A.star(G.u[k][i])), env.d(fodc.embed_a(G.u[k][j])))
            mc[(i, j)] = acc
    out = []
    for a in range(fodc.s):
        target = fodc.theta_env(a)
        rows: dict = {}
        for key, x in mc.items():
            for w, c in x.terms.items():
                rows.setdefault(w, {})[key] = c
        for w in target.terms:
            rows.setdefault(w, {})
        eqs = [(row, target.terms.get(w, ZERO)) for w, row in sorted(rows.items(), key=lambda t: word_key(t[0]))]
        sol, _ = solve_linear(eqs, unknowns=sorted(mc))
        out.append({key: sol.get(key, ZERO) for key in sorted(mc)})
    return out


def naturality_check(fodc: FodcData, Om: OmegaAlgebra, coh: Cohomology, ext0: ConnectionExtension,
                     d: int | None = None) -> Report:
    """W = γ_* W_G on the trivial bundle: push the universal Weil image through γ̂.

    The universal connection ω_G(θ_a) = Σ_ij m^a_ij Σ_k ψ*_ki dψ_kj lives in the
    free differential algebra on ψ, ψ*; γ̂ sends ψ_ki ↦ 1⊗u_ki and is a
    differential homomorphism, so γ̂(ω̂_G(c)) is computed generator by generator
    and compared with ω̂₀(c) where ω₀(θ) = 1⊗θ.
    """
    G = fodc.G
    n = G.n
    d = n if d is None else d
    if d != n:
        raise ValueError("the trivial bundle has complexity level n")
    calc = ext0.omega.calc
    P = calc.P
    env = fodc.env
    rep = Report("naturality of the Weil map")
    m = maurer_cartan_coefficients(fodc)
    rep.info["maurer_cartan"] = [{f"{i + 1},{j + 1}": str(c) for (i, j), c in sorted(ma.items())} for ma in m]
    # γ̂ images of the generators of the universal differential algebra, in Ω(P)
    psi = {(k, i): P.pure(NCPoly.scalar(1), fodc.embed_a(G.u[k][i])) for k in range(d) for i in range(n)}
    psistar = {key: P.star(v) for key, v in psi.items()}
    dpsi = {key: P.d(v) for key, v in psi.items()}
    universal = []
    for a in range(fodc.s):
        acc: dict = {}
        for (i, j), c in m[a].items():
            if c.is_zero():
                continue
            for k in range(d):
                add_scaled(acc, P.mul(psistar[(k, i)], dpsi[(k, j)]), c)
        universal.append(_nz(acc))
    # the pushed-forward universal connection is again a connection on the trivial bundle
    pushed = Connection(calc, universal, "pushed_universal")
    rep.extend(check_connection(pushed), prefix="pushed_connection.")
    ext_u = ConnectionExtension(pushed, Om)
    for k in range(coh.bound + 1):
        for i, c in enumerate(coh.representatives.get(k, [])):
            diff = _nz(P.T.sub(ext_u(c), ext0(c)))
            rep.check(f"weil_naturality[{k}:{i}]", not diff, residual_text(P.fmt, diff),
                      identity="γ̂ ω̂_G(c) = ω̂(c)", cls=Om.fmt(c))
    return rep


# -- one-call pipeline ----------------------------------------------------------------------------------


def characteristic_classes(fodc: FodcData, bound: int = 3, seed: int = 0):
    """(report, Ω, ad~, invariants, cohomology)."""
    rep = Report(f"characteristic classes ({fodc.name})")
    rep.info.update({"calculus": fodc.name, "group": fodc.G.name, "bound": bound, "seed": seed})
    rep.extend(verify_fodc(fodc), prefix="calculus.")
    Om = build_omega(fodc, bound + 1)
    rep.info["omega_dims"] = Om.dims(bound)
    rep.info["omega_cohomology"] = omega_cohomology(Om, bound)
    ad = adjoint_extension(Om, fodc)
    rep.extend(verify_adjoint_extension(ad, seed), prefix="adjoint.")
    inv = invariant_subalgebra(ad, bound)
    rep.extend(verify_invariants(inv), prefix="invariants.")
    coh = cohomology(inv, bound)
    rep.extend(cohomology_report(inv, coh))
    return rep, Om, ad, inv, coh


def weil_pipeline(fodc: FodcData, M: DGAlgebra, alphas: list, bound: int = 3, seed: int = 0,
                  omega1_values: list | None = None):
    """Characteristic classes, two connections, independence and naturality checks."""
    rep, Om, ad, inv, coh = characteristic_classes(fodc, bound, seed)
    calc = TrivialBundleCalculus(M, fodc)
    rep.extend(M.structure_report(), prefix="base_calculus.")
    w0 = trivial_connection(calc)
    w1 = shifted_connection(w0, alphas, "shifted") if omega1_values is None \
        else Connection(calc, omega1_values, "supplied")
    e0 = connection_extension(w0, Om)
    e1 = connection_extension(w1, Om)
    rep.extend(verify_connection_extension(e0, ad, inv), prefix="omega0.")
    rep.extend(verify_connection_extension(e1, ad, inv), prefix="omega1.")
    rep.extend(weil_check(e0, e1, coh), prefix="weil.")
    rep.extend(naturality_check(fodc, Om, coh, e0), prefix="naturality.")
    return rep
