"""The algebras O_d, their coaction, conjugate multiplets and invariants.

O_d is generated by ψ_ki, ψ*_ki (k ≤ d, i ≤ n) subject to
Σ_k ψ*_ki ψ_kj = δ_ij.  The group acts by δ(ψ_ki) = Σ_j ψ_kj ⊗ u_ji.
Indices are 0-based in code and 1-based in generator names.
"""

from __future__ import annotations

import random
from itertools import product as _cartesian

from .cqg import HopfGroupData, find_multiplet_power, max_multiplet_power, multiplet_solutions
from .errors import DegreeOverflow, NoMultiplet, NormalizationImpossible, NotASquare
from .ncalg.linalg import Echelon, nullspace
from .ncalg.poly import Generator, NCPoly, Presentation, add_scaled, add_term, word_key
from .ncalg.rewriting import RewriteSystem, complete
from .ncalg.scalar import ONE, ZERO, Scalar
from .ncalg.tensor import TensorSpace
from .report import Report, residual_text


def _idx_name(prefix: str, k: int, i: int) -> str:
    if k < 9 and i < 9:
        return f"{prefix}{k + 1}{i + 1}"
    return f"{prefix}{k + 1}_{i + 1}"


def od_presentation(d: int, n: int) -> Presentation:
    """Generators ψ_ki then ψ*_ki, row-major; relations Σ_k ψ*_ki ψ_kj = δ_ij."""
    gens = [Generator(_idx_name("psi", k, i), 0, _idx_name("psi*", k, i))
            for k in range(d) for i in range(n)]
    gens += [Generator(_idx_name("psi*", k, i), 0, _idx_name("psi", k, i))
             for k in range(d) for i in range(n)]
    rels = []
    for i in range(n):
        for j in range(n):
            t: dict = {}
            for k in range(d):
                add_term(t, (d * n + k * n + i, k * n + j), ONE)
            if i == j:
                add_term(t, (), -ONE)
            rels.append(NCPoly._raw(t))
    return Presentation(gens, rels, name=f"O_{d}")


class OdAlgebra:
    """O_d over a group G, completed to degree N, with coaction and projections."""

    def __init__(self, G: HopfGroupData, d: int, N: int):
        if d < 1:
            raise ValueError("d must be at least 1")
        if N < 2:
            raise ValueError("the degree bound must be at least 2")
        self.G = G
        self.d = d
        self.n = G.n
        self.N = N
        self.pres = od_presentation(d, G.n)
        self.R: RewriteSystem = complete(self.pres, max(N, 2))
        self.OA = TensorSpace(self.R, G.A)
        self._delta: dict = {(): {((), ()): ONE}}
        self._E: dict = {}

    # -- generators ----------------------------------------------------------
    def psi_id(self, k: int, i: int) -> int:
        return k * self.n + i

    def psistar_id(self, k: int, i: int) -> int:
        return self.d * self.n + k * self.n + i

    def psi(self, k: int, i: int) -> NCPoly:
        return NCPoly.gen(self.psi_id(k, i))

    def psistar(self, k: int, i: int) -> NCPoly:
        return NCPoly.gen(self.psistar_id(k, i))

    def is_psi_word(self, w) -> bool:
        lim = self.d * self.n
        return all(g < lim for g in w)

    def split_gen(self, g: int):
        """(starred, k, i) for a generator id."""
        dn = self.d * self.n
        starred = g >= dn
        r = g - dn if starred else g
        return starred, r // self.n, r % self.n

    def psi_word(self, rows, cols) -> NCPoly:
        return NCPoly.word(tuple(self.psi_id(k, i) for k, i in zip(rows, cols)))

    # -- algebra -------------------------------------------------------------
    def mul(self, *xs) -> NCPoly:
        return self.R.prod(*xs)

    def star(self, x: NCPoly) -> NCPoly:
        return self.R.star(x)

    def reduce(self, x) -> NCPoly:
        return self.R.reduce(x)

    def fmt(self, x) -> str:
        return self.R.fmt(x)

    def fmt2(self, x: dict) -> str:
        return self.OA.fmt(x)

    def degree(self, x: NCPoly) -> int:
        return x.degree() if not x.is_zero() else 0

    # -- coaction ------------------------------------------------------------
    def coaction_word(self, w) -> dict:
        hit = self._delta.get(w)
        if hit is not None:
            return hit
        G = self.G
        if len(w) == 1:
            starred, k, i = self.split_gen(w[0])
            out: dict = {}
            for j in range(self.n):
                if starred:
                    add_scaled(out, self.OA.pure(self.psistar(k, j), G.ubar(j, i)), ONE)
                else:
                    add_scaled(out, self.OA.pure(self.psi(k, j), G.u[j][i]), ONE)
        else:
            h = len(w) // 2
            out = self.OA.mul(self.coaction_word(w[:h]), self.coaction_word(w[h:]))
        self._delta[w] = out
        return out

    def coaction(self, x) -> dict:
        out: dict = {}
        for w, c in (x.terms if isinstance(x, NCPoly) else x).items():
            add_scaled(out, self.coaction_word(w), c)
        return out

    def coaction_apply(self, x: NCPoly) -> dict:
        """δ(x) with the degree precondition enforced."""
        if self.degree(x) > self.N:
            raise DegreeOverflow(f"degree {self.degree(x)} exceeds the bound {self.N}")
        return self.coaction(self.reduce(x))

    def invariance_defect(self, x: NCPoly) -> dict:
        res = self.coaction(x)
        add_scaled(res, {(w, ()): c for w, c in x.terms.items()}, -ONE)
        return {k: v for k, v in res.items() if not v.is_zero()}

    def is_invariant(self, x: NCPoly) -> bool:
        return not self.invariance_defect(x)

    # -- Haar projection E = (id ⊗ h) δ ---------------------------------------
    def project_word(self, w) -> dict:
        hit = self._E.get(w)
        if hit is not None:
            return hit
        delta = self.coaction_word(w)
        h = self.G.haar(max(len(w), 2))
        out: dict = {}
        for (x, a), c in delta.items():
            v = h({a: ONE})
            if not v.is_zero():
                add_term(out, x, c * v)
        self._E[w] = out
        return out

    def project(self, x) -> NCPoly:
        out: dict = {}
        for w, c in (x.terms if isinstance(x, NCPoly) else x).items():
            add_scaled(out, self.project_word(w), c)
        return NCPoly._raw(out)

    # -- shift maps τ ----------------------------------------------------------
    def tau(self, k: int, l: int, a: NCPoly) -> NCPoly:
        """τ_kl(a) = Σ_i ψ_ki a ψ*_li."""
        out: dict = {}
        for i in range(self.n):
            add_scaled(out, self.R.prod(self.psi(k, i), a, self.psistar(l, i)).terms, ONE)
        return NCPoly._raw(out)

    def tau_m(self, alpha, beta, a: NCPoly) -> NCPoly:
        """Iterated shift τ_{α1β1} ∘ … ∘ τ_{αmβm} over row multi-indices."""
        x = a
        for k, l in reversed(list(zip(alpha, beta))):
            x = self.tau(k, l, x)
        return x

    def p(self, k: int, l: int) -> NCPoly:
        return self.tau(k, l, NCPoly.scalar(1))


def build_od(G: HopfGroupData, d: int, N: int) -> OdAlgebra:
    return OdAlgebra(G, d, N)


def od_dimensions(Od: OdAlgebra, N: int | None = None) -> list:
    """Number of normal words of each length ≤ N."""
    N = Od.N if N is None else N
    return [len(Od.R.normal_words_of_length(k)) for k in range(N + 1)]


def verify_od(Od: OdAlgebra) -> Report:
    """Structural checks: δ respects the relations and the star, coassociative, counital."""
    rep = Report(f"O_{Od.d} over {Od.G.name}")
    rep.info.update({"group": Od.G.name, "d": Od.d, "n": Od.n, "degree_bound": Od.N,
                     "rules": len(Od.R.rules), "completion_closed": Od.R.closed,
                     "dimensions": od_dimensions(Od)})
    OA = Od.OA
    for r_idx, r in enumerate(Od.pres.relations):
        res = Od.coaction(r)
        rep.check(f"coaction.respects_relation[{r_idx}]", not res, residual_text(OA.fmt, res))
    G = Od.G
    OAA = TensorSpace(Od.R, G.A, G.A)
    for g in range(Od.pres.ngens):
        name = Od.pres.generators[g].name
        x = NCPoly.gen(g)
        delta = Od.coaction_word((g,))
        res = OA.sub(Od.coaction(Od.star(x)), OA.star(delta))
        rep.check(f"coaction.star_compatible[{name}]", not res, residual_text(OA.fmt, res))
        left: dict = {}
        right: dict = {}
        for (w, a), c in delta.items():
            for (w2, a2), c2 in Od.coaction_word(w).items():
                add_term(left, (w2, a2, a), c * c2)
            for (a1, a3), c2 in G.coproduct_word(a).items():
                add_term(right, (w, a1, a3), c * c2)
        res = OAA.sub(OAA.reduce(left), OAA.reduce(right))
        rep.check(f"coaction.coassociative[{name}]", not res, residual_text(OAA.fmt, res))
        cu: dict = {}
        for (w, a), c in delta.items():
            add_term(cu, w, c * G.counit_word(a))
        res = Od.reduce(NCPoly._raw(cu)) - x
        rep.check(f"coaction.counital[{name}]", res.is_zero(), residual_text(Od.fmt, res))
    return rep


# -- conjugate multiplet -----------------------------------------------------------

class ConjugateMultiplet:
    """Elements ψ̂_{αi} = Σ_ω a_iω Π_t ψ_{α_t ω_t} transforming under ū."""

    def __init__(self, Od: OdAlgebra, m: int, coeffs: dict, scale: Scalar):
        self.Od = Od
        self.m = m
        self.coeffs = coeffs          # (i, ω) -> Scalar, already rescaled
        self.scale = scale
        self.rows = list(_cartesian(range(Od.d), repeat=m))
        self.elements: dict = {}
        for alpha in self.rows:
            for i in range(Od.n):
                t: dict = {}
                for (i2, omega), c in coeffs.items():
                    if i2 == i:
                        add_term(t, tuple(Od.psi_id(k, j) for k, j in zip(alpha, omega)), c)
                self.elements[(alpha, i)] = NCPoly._raw(t)

    def __getitem__(self, key) -> NCPoly:
        return self.elements[key]

    def coefficient_table(self) -> list:
        rows = []
        for (i, omega), c in sorted(self.coeffs.items()):
            rows.append({"i": i + 1, "omega": [w + 1 for w in omega], "a": str(c)})
        return rows


def find_conjugate_multiplet(Od: OdAlgebra, C: list | None = None, m_max: int | None = None) -> ConjugateMultiplet:
    """Smallest-m multiplet solving the intertwining system, normalized against C.

    The normalization asks Σ_α ψ̂*_αi ψ̂_αj = C_ji, i.e. Σ_ω ā_iω a_jω = C_ji
    after rescaling the first null vector by an exact scalar.
    """
    G = Od.G
    C = G.intertwiner.C if C is None else C
    m_max = max_multiplet_power() if m_max is None else m_max
    m = G.m if G.m is not None and G.m <= m_max else find_multiplet_power(G, m_max)
    if m is None:
        raise NoMultiplet(f"{G.name}: the conjugate of u is not a summand of u^m for any m ≤ {m_max}")
    null = multiplet_solutions(G, m)
    a = null[0]
    n = Od.n
    M = [[ZERO] * n for _ in range(n)]
    for (i, w), c in a.items():
        for (j, w2), c2 in a.items():
            if w == w2:
                M[i][j] = M[i][j] + c.conj() * c2
    ref = next(((i, j) for i in range(n) for j in range(n) if not C[j][i].is_zero()), None)
    if ref is None:
        raise NormalizationImpossible(f"{G.name}: the intertwiner C is zero; Σ ψ̂*ψ̂ = C cannot be met")
    mu = M[ref[0]][ref[1]] / C[ref[1]][ref[0]]
    for i in range(n):
        for j in range(n):
            if M[i][j] != mu * C[j][i]:
                raise NormalizationImpossible(
                    f"{G.name}: Gram matrix of the multiplet is not proportional to C^T "
                    f"(entry {i + 1},{j + 1}: {M[i][j]} vs {mu * C[j][i]})")
    if mu.is_zero():
        raise NormalizationImpossible(f"{G.name}: the multiplet has zero norm")
    try:
        lam = mu.inverse().sqrt()
    except NotASquare:
        raise NormalizationImpossible(f"{G.name}: rescaling needs the square root of {mu.inverse()}") from None
    coeffs = {k: lam * v for k, v in a.items()}
    return ConjugateMultiplet(Od, m, coeffs, lam)


def multiplet_report(Od: OdAlgebra, hat: ConjugateMultiplet) -> Report:
    """Transformation law δ(ψ̂_αi) = Σ_j ψ̂_αj ⊗ u*_ji and the norm identity."""
    rep = Report("conjugate multiplet")
    G = Od.G
    C = G.intertwiner.C
    OA = Od.OA
    for alpha in hat.rows:
        tag = ",".join(str(x + 1) for x in alpha)
        for i in range(Od.n):
            lhs = Od.coaction(hat[(alpha, i)])
            rhs: dict = {}
            for j in range(Od.n):
                add_scaled(rhs, OA.pure(hat[(alpha, j)], G.ubar(j, i)), ONE)
            res = OA.sub(lhs, rhs)
            rep.check(f"multiplet.transforms_conjugate[{tag};{i + 1}]", not res,
                      residual_text(OA.fmt, res))
    for i in range(Od.n):
        for j in range(Od.n):
            acc = NCPoly()
            for alpha in hat.rows:
                acc = acc + Od.mul(Od.star(hat[(alpha, i)]), hat[(alpha, j)])
            res = acc - NCPoly.scalar(C[j][i])
            rep.check(f"multiplet.norm[{i + 1},{j + 1}]", res.is_zero(), residual_text(Od.fmt, res))
    rep.info["m"] = hat.m
    rep.info["multiplet_coefficients"] = hat.coefficient_table()
    return rep


# -- pairing matrix S ---------------------------------------------------------------

class PairingMatrix:
    """S_{αk} = Σ_ij ψ̂_αi (C⁻¹)_ji ψ_kj."""

    def __init__(self, Od: OdAlgebra, hat: ConjugateMultiplet, entries: dict):
        self.Od = Od
        self.hat = hat
        self.entries = entries

    def __getitem__(self, key) -> NCPoly:
        return self.entries[key]

    def star(self, alpha, k) -> NCPoly:
        return self.Od.star(self.entries[(alpha, k)])

    def scaled(self, c) -> "PairingMatrix":
        return PairingMatrix(self.Od, self.hat, {k: v.scale(c) for k, v in self.entries.items()})


def pairing_matrix(Od: OdAlgebra, hat: ConjugateMultiplet) -> PairingMatrix:
    Cinv = Od.G.intertwiner.C_inv
    entries = {}
    for alpha in hat.rows:
        for k in range(Od.d):
            acc = NCPoly()
            for i in range(Od.n):
                for j in range(Od.n):
                    c = Cinv[j][i]
                    if c.is_zero():
                        continue
                    acc = acc + Od.mul(hat[(alpha, i)], Od.psi(k, j)).scale(c)
            entries[(alpha, k)] = acc
    return PairingMatrix(Od, hat, entries)


def pairing_report(Od: OdAlgebra, S: PairingMatrix) -> Report:
    rep = Report("pairing matrix invariance")
    for (alpha, k), s in sorted(S.entries.items()):
        tag = ",".join(str(x + 1) for x in alpha)
        res = Od.invariance_defect(s)
        rep.check(f"pairing.invariant[{tag};{k + 1}]", not res, residual_text(Od.fmt2, res))
        rep.check(f"pairing.psi_only[{tag};{k + 1}]", all(Od.is_psi_word(w) for w in s.terms))
    return rep


def shift_apply(Od: OdAlgebra, k: int, l: int, a: NCPoly) -> NCPoly:
    """τ_kl(a) with the degree precondition enforced."""
    if Od.degree(a) + 2 > Od.N:
        raise DegreeOverflow(f"τ needs degree(a) + 2 ≤ {Od.N}")
    return Od.tau(k, l, Od.reduce(a))


# -- invariants ---------------------------------------------------------------------

class InvariantBasis:
    """Basis of the invariant elements in each length filtration level ≤ N.

    ``by_degree[k]`` holds the basis elements whose leading word has length
    k; together with lower levels they span the invariants of length ≤ k.
    """

    def __init__(self, Od: OdAlgebra, N: int, by_degree: dict, psi_only: dict):
        self.Od = Od
        self.N = N
        self.by_degree = by_degree
        self.psi_only = psi_only
        self._ech = None

    def upto(self, k: int) -> list:
        out = []
        for j in range(min(k, self.N) + 1):
            out.extend(self.by_degree.get(j, []))
        return out

    def psi_only_upto(self, k: int) -> list:
        out = []
        for j in range(min(k, self.N) + 1):
            out.extend(self.psi_only.get(j, []))
        return out

    def dims(self) -> list:
        return [len(self.upto(k)) for k in range(self.N + 1)]

    def echelon(self) -> Echelon:
        if self._ech is None:
            ech = Echelon(word_key)
            for idx, x in enumerate(self.upto(self.N)):
                ech.add(x.terms, tag=idx)
            self._ech = ech
        return self._ech

    def contains(self, x: NCPoly) -> bool:
        return self.echelon().contains(x.terms)

    def express(self, x: NCPoly):
        return self.echelon().express(x.terms)


def _echelon_by_length(vectors) -> dict:
    ech = Echelon(word_key)
    for v in vectors:
        if v:
            ech.add(v)
    out: dict = {}
    for row in ech.basis():
        lead = max(row, key=word_key)
        out.setdefault(len(lead), []).append(NCPoly._raw(row))
    for k in out:
        out[k].sort(key=lambda p: word_key(p.leading_word()))
    return out


def invariants_basis(Od: OdAlgebra, N: int | None = None) -> InvariantBasis:
    """Image of E = (id⊗h)δ on each filtration level, plus its ψ-only part."""
    N = Od.N if N is None else N
    words = Od.R.normal_words_up_to(N)
    images = [Od.project_word(w) for w in words]
    by_degree = _echelon_by_length(images)
    psi_images = [im for w, im in zip(words, images) if Od.is_psi_word(w)]
    psi_only = _echelon_by_length(psi_images)
    for k in range(N + 1):
        by_degree.setdefault(k, [])
        psi_only.setdefault(k, [])
    return InvariantBasis(Od, N, by_degree, psi_only)


def fixed_point_dims(Od: OdAlgebra, N: int) -> list:
    """dim{x of length ≤ k : δ(x) = x ⊗ 1}, from the kernel of δ − (·⊗1)."""
    out = []
    for k in range(N + 1):
        words = Od.R.normal_words_up_to(k)
        images = {w: Od.invariance_defect(NCPoly.word(w)) for w in words}
        out.append(len(nullspace(words, images)))
    return out


def shift_closure(Od: OdAlgebra, S: PairingMatrix, N: int, max_rounds: int | None = None) -> list:
    """Span of the smallest τ-stable unital algebra containing all S*_αk, to length N."""
    ech = Echelon(word_key)
    elems: list = []

    def add(x):
        if x.is_zero() or Od.degree(x) > N:
            return False
        if ech.add(x.terms):
            elems.append(x)
            return True
        return False

    add(NCPoly.scalar(1))
    for key in sorted(S.entries):
        add(S.star(*key))
    rounds = 0
    grew = True
    while grew:
        rounds += 1
        grew = False
        current = list(elems)
        for x in current:
            dx = Od.degree(x)
            if dx + 2 <= N:
                for k in range(Od.d):
                    for l in range(Od.d):
                        grew |= add(Od.tau(k, l, x))
            for y in current:
                if dx + Od.degree(y) <= N:
                    grew |= add(Od.mul(x, y))
        if max_rounds is not None and rounds >= max_rounds:
            break
    rows = ech.basis()
    out = [NCPoly._raw(r) for r in rows]
    out.sort(key=lambda p: word_key(p.leading_word()))
    return out


# -- commutation relations and the decomposition ------------------------------------

def invariant_samples(inv: InvariantBasis, seed: int = 0, count: int = 20,
                      low: int = 2, high: int = 3) -> list:
    """All basis invariants of length ≤ low plus seeded random combinations up to high."""
    base = inv.upto(low)
    pool = inv.upto(high)
    rng = random.Random(seed)
    samples = [(f"basis[{i}]", x) for i, x in enumerate(base)]
    for s in range(count if pool else 0):
        k = rng.randint(1, min(3, len(pool)))
        picks = rng.sample(range(len(pool)), k)
        acc = NCPoly()
        for p in picks:
            c = rng.choice([-3, -2, -1, 1, 2, 3])
            acc = acc + pool[p].scale(c)
        if acc.is_zero():
            acc = pool[picks[0]]
        samples.append((f"sample[{s}]", acc))
    return samples


def decompose(Od: OdAlgebra, hat: ConjugateMultiplet, S: PairingMatrix, w) -> list:
    """Write a word as Σ f φ with f invariant and φ in the ψ-only subalgebra.

    Built right to left with the two commutation relations; returns a list of
    (f, φ) pairs of NCPoly values.
    """
    if not w:
        return [(NCPoly.scalar(1), NCPoly.scalar(1))]
    rest = decompose(Od, hat, S, w[1:])
    starred, k, i = Od.split_gen(w[0])
    out = []
    for f, phi in rest:
        if not starred:
            for l in range(Od.d):
                out.append((Od.tau(k, l, f), Od.mul(Od.psi(l, i), phi)))
        else:
            for alpha in hat.rows:
                sa = S.star(alpha, k)
                for beta in hat.rows:
                    out.append((Od.mul(sa, Od.tau_m(alpha, beta, f)), Od.mul(hat[(beta, i)], phi)))
    return [(f, phi) for f, phi in out if not f.is_zero() and not phi.is_zero()]


def verify_commutation_relations(Od: OdAlgebra, hat: ConjugateMultiplet, S: PairingMatrix,
                                 inv: InvariantBasis, seed: int = 0, count: int = 20,
                                 span_degree: int = 2) -> Report:
    """ψ_ki a = Σ_l τ_kl(a) ψ_li and ψ*_ki a = Σ_αβ S*_αk τ^m_αβ(a) ψ̂_βi on samples,
    multiplicativity and star compatibility of τ, and the invariant-times-ψ span."""
    rep = Report("commutation relations")
    rep.info["seed"] = seed
    samples = invariant_samples(inv, seed, count)
    rep.info["samples"] = len(samples)
    d, n = Od.d, Od.n
    for label, a in samples:
        res_psi = None
        res_star = None
        for k in range(d):
            for i in range(n):
                lhs = Od.mul(Od.psi(k, i), a)
                rhs = NCPoly()
                for l in range(d):
                    rhs = rhs + Od.mul(Od.tau(k, l, a), Od.psi(l, i))
                r = lhs - rhs
                if res_psi is None and not r.is_zero():
                    res_psi = r
                lhs = Od.mul(Od.psistar(k, i), a)
                rhs = NCPoly()
                for alpha in hat.rows:
                    sa = S.star(alpha, k)
                    for beta in hat.rows:
                        rhs = rhs + Od.mul(sa, Od.tau_m(alpha, beta, a), hat[(beta, i)])
                r = lhs - rhs
                if res_star is None and not r.is_zero():
                    res_star = r
        rep.check(f"commutation_psi[{label}]", res_psi is None,
                  None if res_psi is None else residual_text(Od.fmt, res_psi),
                  identity="ψ_ki a = Σ_l τ_kl(a) ψ_li")
        rep.check(f"commutation_psi_star[{label}]", res_star is None,
                  None if res_star is None else residual_text(Od.fmt, res_star),
                  identity="ψ*_ki a = Σ_αβ S*_αk τ^m_αβ(a) ψ̂_βi")
    # τ multiplicativity and star compatibility on pairs of samples
    rng = random.Random(seed + 1)
    pool = [x for _, x in samples]
    for t in range(count):
        a = pool[rng.randrange(len(pool))]
        b = pool[rng.randrange(len(pool))]
        if Od.degree(a) + Od.degree(b) > 4:
            a = pool[rng.randrange(len(inv.upto(2)) or 1)]
        ab = Od.mul(a, b)
        bad = None
        bad_star = None
        for k in range(d):
            for l in range(d):
                acc = NCPoly()
                for r in range(d):
                    acc = acc + Od.mul(Od.tau(k, r, a), Od.tau(r, l, b))
                res = acc - Od.tau(k, l, ab)
                if bad is None and not res.is_zero():
                    bad = res
                res = Od.star(Od.tau(k, l, a)) - Od.tau(l, k, Od.star(a))
                if bad_star is None and not res.is_zero():
                    bad_star = res
        rep.check(f"shift_multiplicative[pair {t}]", bad is None,
                  None if bad is None else residual_text(Od.fmt, bad),
                  identity="Σ_r τ_kr(a) τ_rl(b) = τ_kl(ab)")
        rep.check(f"shift_star[pair {t}]", bad_star is None,
                  None if bad_star is None else residual_text(Od.fmt, bad_star),
                  identity="τ_kl(a)* = τ_lk(a*)")
    # every word is a sum of (invariant)·(ψ-only) products
    for w in Od.R.normal_words_up_to(span_degree):
        parts = decompose(Od, hat, S, w)
        total = NCPoly()
        ok_inv = True
        ok_psi = True
        for f, phi in parts:
            total = total + Od.mul(f, phi)
            if ok_inv and not Od.is_invariant(f):
                ok_inv = False
            if ok_psi and not all(Od.is_psi_word(x) for x in phi.terms):
                ok_psi = False
        res = total - NCPoly.word(w)
        name = Od.pres.format_word(w).replace(" ", ".")
        rep.check(f"decomposition[{name}]", res.is_zero() and ok_inv and ok_psi,
                  residual_text(Od.fmt, res) if not res.is_zero() else None,
                  invariant_factors=ok_inv, psi_only_factors=ok_psi)
    return rep


def universal_bundle_check(Od: OdAlgebra, hat: ConjugateMultiplet, N: int | None = None,
                           inv: InvariantBasis | None = None) -> Report:
    """(O_d, inclusion, δ) as a principal bundle: comodule axioms, fixed points, freeness."""
    N = min(Od.N, 3) if N is None else N
    rep = verify_od(Od)
    rep.title = f"universal bundle O_{Od.d} over {Od.G.name}"
    inv = inv if inv is not None else invariants_basis(Od, N)
    fixed = fixed_point_dims(Od, N)
    dims = inv.dims()[:N + 1]
    for k in range(N + 1):
        rep.check(f"fixed_points.rank[{k}]", fixed[k] == dims[k], fixed_points=fixed[k], invariants=dims[k])
    for x in inv.upto(N):
        e = Od.project(x) - x
        if not e.is_zero():
            rep.check("projection.identity_on_invariants", False, residual_text(Od.fmt, e))
            break
    else:
        rep.check("projection.identity_on_invariants", True)
    G = Od.G
    OA = Od.OA
    C_inv = G.intertwiner.C_inv
    for i in range(Od.n):
        for j in range(Od.n):
            acc: dict = {}
            for k in range(Od.d):
                add_scaled(acc, OA.mul(OA.pure(Od.psistar(k, i), NCPoly.scalar(1)),
                                       Od.coaction_word((Od.psi_id(k, j),))), ONE)
            res = OA.sub(acc, OA.pure(NCPoly.scalar(1), G.u[i][j]))
            rep.check(f"freeness.witness_u[{i + 1},{j + 1}]", not res, residual_text(OA.fmt, res))
            acc = {}
            for alpha in hat.rows:
                for l in range(Od.n):
                    c = C_inv[l][i]
                    if c.is_zero():
                        continue
                    prod = OA.mul(OA.pure(Od.star(hat[(alpha, l)]), NCPoly.scalar(1)),
                                  Od.coaction(hat[(alpha, j)]))
                    add_scaled(acc, prod, c)
            res = OA.sub(acc, OA.pure(NCPoly.scalar(1), G.ubar(i, j)))
            rep.check(f"freeness.witness_ubar[{i + 1},{j + 1}]", not res, residual_text(OA.fmt, res))
    rep.info["fixed_point_dims"] = fixed
    rep.info["invariant_dims"] = dims
    return rep
