"""Check reports shared by all verification suites.

A report is a list of entries ``{check, status, ...}``; entries are kept in
sorted order of their check id so that merged reports are deterministic.
"""

from __future__ import annotations

import json

SCHEMA = "qpb-report/1"

# Identity instantiated by each check id (the part before any "[...]"); a
# check without an explicit ``identity`` argument gets its formula from here.
IDENTITIES = {
    "antipode.left": "μ(κ⊗id)φ(x) = ε(x)1",
    "antipode.right": "μ(id⊗κ)φ(x) = ε(x)1",
    "antipode.respects_relation": "κ(relation) = 0",
    "basis_invariant": "δ(e) = e⊗1",
    "closure_identity": "γ(ψ)f = Σ_k f_k γ(ψ_k)",
    "coaction.coassociative": "(δ⊗id)δ = (id⊗φ)δ",
    "coaction.counital": "(id⊗ε)δ = id",
    "coaction.multiplicative": "F(xy) = F(x)F(y)",
    "coaction.respects_relation": "δ(relation) = relation⊗1",
    "coaction.star_compatible": "δ(x*) = (∗⊗∗)δ(x)",
    "coassociativity": "(φ⊗id)φ = (id⊗φ)φ",
    "counit.left": "(ε⊗id)φ = id",
    "counit.right": "(id⊗ε)φ = id",
    "counit.respects_relation": "ε(relation) = 0",
    "coproduct.respects_relation": "φ(relation) = 0",
    "coproduct.star_compatible": "φ(x*) = (∗⊗∗)φ(x)",
    "decomposition": "O_d = Σ (invariants)·(ψ-words)",
    "dimension": "dim B_k = dim (O_d)_k",
    "fixed_points.rank": "dim{x : F(x) = x⊗1} = dim i(V)",
    "freeness.witness_u": "Σ_k ψ*_ki δ(ψ_kj) = 1⊗u_ij",
    "freeness.witness_ubar": "Σ_α ψ̂*_αi δ(ψ̂_αj) = 1⊗u*_ij",
    "gamma.multiplicative": "γ(ab) = γ(a)γ(b)",
    "gamma.star": "γ(a*) = γ(a)*",
    "gamma.unital": "γ(1) = 1",
    "h0_scalars": "H⁰ = scalars",
    "haar.unique": "(h⊗id)φ = h(·)1 = (id⊗h)φ has one solution",
    "in_base": "ω̂(c) ∈ Ω(M)⊗1",
    "invariant_dims": "dim E(O_d)_k = dim ker(δ − ·⊗1)_k",
    "lift.realizes_basis": "f⊗γ̂(x) realizes V⊗A",
    "multiplet.norm": "Σ_α ψ̂*_αi ψ̂_αj = C_ji",
    "multiplet.transforms_conjugate": "δ(ψ̂_αi) = Σ_j ψ̂_αj⊗u*_ji",
    "omega_acyclic": "H^k(Ω) = 0 for k ≥ 1",
    "pairing.invariant": "δ(S_αk) = S_αk⊗1",
    "pairing.psi_only": "S_αk ∈ span of ψ-words",
    "product.associative": "(XY)Z = X(YZ)",
    "product_closed": "ℷ·ℷ ⊆ ℷ",
    "product_table": "products agree under f⊗x ↦ f·x",
    "projection.identity_on_invariants": "E(e) = e for invariant e",
    "rho.multiplicative": "ρ(fg) = ρ(f)ρ(g)",
    "rho.respects_relation": "ρ(relation) = 0",
    "rho.star": "ρ_kl(f*) = ρ_lk(f)*",
    "d_stable": "d ℷ ⊆ ℷ",
    "star.antimultiplicative": "(XY)* = Y*X*",
    "star.involutive": "X** = X",
    "star_closed": "ℷ* = ℷ",
    "star_table": "stars agree under f⊗x ↦ f·x",
    "u.matrix_coproduct": "φ(u_ij) = Σ_k u_ik⊗u_kj",
    "u.unitary_left": "Σ_k u*_ki u_kj = δ_ij",
    "u.unitary_right": "Σ_k u_ik u*_jk = δ_ij",
    "vertical_integral.into_base": "h_M(B) ⊆ i(V)",
    "vertical_integral.on_base": "h_M(i(f)) = f",
    "grade_one": "ω(θ) has degree 1",
    "intertwines": "F̂ ω̂ = (ω̂⊗id) ad~",
    "invariants_to_base": "ω̂(ℷ) ⊆ F̂-invariants",
}


def identity_for(check: str):
    """Formula for a check id, trying the id with leading dotted prefixes removed."""
    base = check.split("[", 1)[0]
    parts = base.split(".")
    for i in range(len(parts)):
        hit = IDENTITIES.get(".".join(parts[i:]))
        if hit is not None:
            return hit
    return None


class Report:
    def __init__(self, title: str = ""):
        self.title = title
        self.entries: list = []
        self.info: dict = {}

    def check(self, check: str, ok: bool, residual=None, identity: str | None = None, **extra):
        entry = {"check": check, "status": "pass" if ok else "fail"}
        if not ok and not identity:
            identity = identity_for(check)
        if identity:
            entry["identity"] = identity
        if not ok and residual is not None:
            entry["residual_terms"] = residual
        for k, v in extra.items():
            if v is not None:
                entry[k] = v
        self.entries.append(entry)
        return ok

    def extend(self, other: "Report", prefix: str = ""):
        for e in other.entries:
            e = dict(e)
            if prefix:
                e["check"] = f"{prefix}{e['check']}"
            self.entries.append(e)
        for k, v in other.info.items():
            self.info.setdefault(k, v)
        return self

    @property
    def ok(self) -> bool:
        return all(e["status"] == "pass" for e in self.entries)

    def failures(self) -> list:
        return [e for e in self.sorted_entries() if e["status"] != "pass"]

    def sorted_entries(self) -> list:
        return sorted(self.entries, key=lambda e: (e["check"], json.dumps(e, sort_keys=True)))

    def summary(self) -> dict:
        n_fail = sum(1 for e in self.entries if e["status"] != "pass")
        return {"checks": len(self.entries), "failed": n_fail, "passed": len(self.entries) - n_fail}

    def as_dict(self) -> dict:
        return {"title": self.title, "ok": self.ok, "summary": self.summary(),
                "checks": self.sorted_entries(), "info": self.info}

    def __repr__(self):
        s = self.summary()
        return f"<Report {self.title!r}: {s['passed']}/{s['checks']} passed>"


def residual_text(fmt, terms, limit: int = 12):
    """Residual rendered as one string per term (truncated).

    ``fmt`` formats a single-term dict; ``terms`` is the residual dict.
    """
    if hasattr(terms, "terms"):
        terms = terms.terms
    keys = sorted(terms, key=repr)
    out = [fmt({k: terms[k]}) for k in keys[:limit]]
    if len(keys) > limit:
        out.append(f"... ({len(keys) - limit} more terms)")
    return out
