import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import quotient_filtration_dims
from qpb.crossprod import (FlipOperator, TrivialBundle, build_bundle, classifying_map_from_json,
                           classifying_map_to_json, extract_classifying_map, flip_apply, flip_check,
                           preset_base, trivial_round_trip, universal_reconstruction,
                           validate_classifying_map, verify_bundle_axioms)
from qpb.errors import (BalanceNonConfluent, DegreeOverflow, EnvelopeTooShallow, NotEquivariant,
                        NotIsometric, PresentationError)
from qpb.ncalg.jsonio import loads_located
from qpb.ncalg.poly import NCPoly
from qpb.ncalg.scalar import ONE


def _counit_of_substitution(Od, x):
    """ε(x with ψ_ki ↦ u_ki, ψ*_ki ↦ u*_ki), computed generator by generator."""
    G = Od.G
    total = NCPoly()
    for w, c in x.terms.items():
        val = ONE
        for g in w:
            starred, k, i = Od.split_gen(g)
            a = G.A.star(G.u[k][i]) if starred else G.u[k][i]
            val = val * G.counit(a)
        total = total + NCPoly.scalar(val * c)
    return total


# -- extraction ---------------------------------------------------------------------------------------


def test_trivial_extraction_collapses_rho(trivial_cm):
    V = trivial_cm.V
    x = NCPoly.gen(V.pres.gen_id("x"))
    for k in range(2):
        for l in range(2):
            assert trivial_cm.rho(k, l, x) == (x if k == l else NCPoly())
            assert trivial_cm.rho(k, l, NCPoly.scalar(1)) == NCPoly.scalar(1 if k == l else 0)


def test_trivial_gamma_is_counit(trivial_cm, inv2):
    Od = trivial_cm.Od
    for e in inv2.upto(2):
        assert trivial_cm.gamma(e) == _counit_of_substitution(Od, e)


def test_universal_extraction_is_shift_and_identity(universal_cm, od1, inv1):
    for a in inv1.upto(1):
        assert universal_cm.rho(0, 0, a) == od1.tau(0, 0, a)
    for e in inv1.upto(3):
        assert universal_cm.gamma(e) == e
    # ρ is not unital: ρ(1) = τ(1) = p
    assert universal_cm.rho(0, 0, NCPoly.scalar(1)) == od1.p(0, 0)


def test_nonisometric_matrix_rejected(od2):
    V = preset_base("point")
    G = od2.G
    B = TrivialBundle(V, G)
    bmat = [[B.from_group(G.u[k][i].scale(2)) for i in range(2)] for k in range(2)]
    with pytest.raises(NotIsometric):
        extract_classifying_map(B, bmat, od2)


def test_nonequivariant_matrix_rejected(od2):
    V = preset_base("point")
    G = od2.G
    B = TrivialBundle(V, G)
    bmat = [[B.from_group(G.u[i][k]) for i in range(2)] for k in range(2)]
    with pytest.raises(NotEquivariant):
        extract_classifying_map(B, bmat, od2)


def test_unknown_preset():
    with pytest.raises(PresentationError):
        preset_base("plane")


# -- validation ---------------------------------------------------------------------------------------


def test_universal_map_validates(universal_cm, inv1):
    rep = validate_classifying_map(universal_cm, inv1, 3)
    assert rep.ok, rep.failures()
    ids = {e["check"].split("[")[0] for e in rep.entries}
    assert {"covariance_system", "gamma_shift", "closure_identity", "rho.multiplicative"} <= ids


def test_trivial_map_validates(trivial_cm, inv2):
    rep = validate_classifying_map(trivial_cm, inv2, 3)
    assert rep.ok, rep.failures()


def test_scaled_gamma_fails_unitality(universal_cm, inv1):
    bad = universal_cm.with_gamma(lambda x: universal_cm.gamma(x).scale(3), "scaled")
    rep = validate_classifying_map(bad, inv1, 3)
    failing = {e["check"].split("[")[0] for e in rep.failures()}
    assert "gamma.unital" in failing
    assert all("identity" in e for e in rep.failures())


# -- the flip -----------------------------------------------------------------------------------------


def test_flip_generator_rules(trivial_cm, universal_bundle):
    flip = FlipOperator(trivial_cm)
    V, Od = trivial_cm.V, trivial_cm.Od
    x = NCPoly.gen(V.pres.gen_id("x"))
    assert flip.apply(NCPoly.scalar(1), x) == {((0,), ()): ONE}
    # trivial case: ρ unital, so Ψ(ψ_ki ⊗ 1) = 1 ⊗ ψ_ki on the nose
    for k in range(2):
        for i in range(2):
            assert flip.apply(Od.psi(k, i), NCPoly.scalar(1)) == {((), (Od.psi_id(k, i),)): ONE}
    # universal case: Ψ(ψ ⊗ 1) = Σ_l p_kl ⊗ ψ_li, balanced-equal to 1 ⊗ ψ
    B = universal_bundle
    Od1 = B.Od
    for i in range(2):
        X = B.flip.apply(Od1.psi(0, i), NCPoly.scalar(1))
        assert B.equal(X, B.pure(NCPoly.scalar(1), Od1.psi(0, i)))


def test_universal_flip_matches_multiplication(universal_bundle, od1, inv1):
    # in the universal case f⊗x ↦ f·x, so Ψ(x⊗f) must realize x·f
    B = universal_bundle
    xs = [od1.mul(od1.psistar(0, 0), od1.psi(0, 0)), od1.psi(0, 1), od1.psistar(0, 1),
          od1.mul(od1.psi(0, 0), od1.psistar(0, 1))]
    for x in xs:
        for f in inv1.upto(2):
            realized = NCPoly._raw(B.realize(B.flip.apply(x, f)))
            assert realized == od1.mul(x, f)


def test_flip_degree_guard(universal_bundle, od1, inv1):
    with pytest.raises(DegreeOverflow):
        flip_apply(universal_bundle.flip, od1.mul(od1.psi(0, 0), od1.psi(0, 1)), inv1.by_degree[2][0], N=3)


def test_flip_suite_universal(universal_cm, inv1, universal_bundle):
    rep = flip_check(universal_cm, inv1, 3, B=universal_bundle)
    assert rep.ok, rep.failures()
    ids = {e["check"].split("[")[0] for e in rep.entries}
    assert {"exchange_base_product", "exchange_od_product", "flip_inverse", "relations_pass",
            "bimodule_left", "bimodule_right", "q_property", "projection_identity"} <= ids


def test_flip_suite_trivial(trivial_cm, inv2):
    rep = flip_check(trivial_cm, inv2, 3)
    assert rep.ok, rep.failures()


def test_perturbed_gamma_breaks_flip(trivial_cm, inv2):
    bad = trivial_cm.with_gamma(lambda x: trivial_cm.gamma(x).scale(2), "perturbed")
    assert not flip_check(bad, inv2, 2, count=4).ok


# -- the crossproduct --------------------------------------------------------------------------------


def test_perturbed_gamma_is_not_balanced(universal_cm, inv1):
    bad = universal_cm.with_gamma(lambda x: universal_cm.gamma(x).scale(2), "perturbed")
    with pytest.raises(BalanceNonConfluent) as err:
        build_bundle(bad, 3, inv1)
    assert err.value.witness is not None


def test_universal_reconstruction(universal_bundle, inv1):
    rep = universal_reconstruction(universal_bundle, 3)
    assert rep.ok, rep.failures()
    table = rep.info["dimension_table"]
    expected = quotient_filtration_dims(universal_bundle.Od.R.presentation, 3, slack=1)
    assert [row["bundle_haar_rank"] for row in table] == expected
    assert [row["bundle_realized_rank"] for row in table] == expected


def test_universal_bundle_axioms(universal_bundle, inv1):
    rep = verify_bundle_axioms(universal_bundle, inv1, 2)
    assert rep.ok, rep.failures()


@pytest.mark.parametrize("base", ["point", "line"])
def test_trivial_bundle_round_trip(od2, inv2, base):
    from qpb.crossprod import trivial_classifying_map
    cm = trivial_classifying_map(preset_base(base), od2)
    B = build_bundle(cm, 3, inv2)
    for rep in (trivial_round_trip(B, 2), verify_bundle_axioms(B, inv2, 2)):
        assert rep.ok, rep.failures()


def test_vertical_integral_lands_in_base(universal_bundle, od1):
    B = universal_bundle
    X = B.pure(NCPoly.scalar(1), od1.psi(0, 0))
    H = B.vertical_integral(X)
    assert B.equal(H, B.include(B.base_part(X)))
    assert B.base_part(X).is_zero()
    f = od1.p(0, 0)
    assert B.equal(B.vertical_integral(B.include(f)), B.include(f))


def _bundle_elements(B, od):
    gens = [od.psi(0, 0), od.psi(0, 1), od.psistar(0, 0), od.psistar(0, 1)]
    fs = [NCPoly.scalar(1), od.p(0, 0)]
    return [B.pure(f, x) for f in fs for x in gens] + [B.one()]


@given(st.data())
def test_product_associative_and_star_antimultiplicative(universal_bundle, od1, data):
    B = universal_bundle
    pool = _bundle_elements(B, od1)
    X, Y, Z = (data.draw(st.sampled_from(pool)) for _ in range(3))
    assert B.equal(B.mul(B.mul(X, Y), Z), B.mul(X, B.mul(Y, Z)))
    assert B.equal(B.star(B.mul(X, Y)), B.mul(B.star(Y), B.star(X)))
    assert B.equal(B.star(B.star(X)), X)


@given(st.data())
def test_coaction_is_multiplicative(universal_bundle, od1, data):
    from qpb.crossprod import _coact_product, _nonzero
    B = universal_bundle
    pool = _bundle_elements(B, od1)
    X, Y = data.draw(st.sampled_from(pool)), data.draw(st.sampled_from(pool))
    diff = dict(B.coact(B.mul(X, Y)))
    for k, c in _coact_product(B, B.coact(X), B.coact(Y)).items():
        diff[k] = diff.get(k, 0 * ONE) - c
    assert not _nonzero(B.canonical_coact(diff))


# -- JSON maps ----------------------------------------------------------------------------------------


def test_json_round_trip(od2, inv2, trivial_cm):
    from qpb.odbundle import invariants_basis
    inv4 = invariants_basis(od2, 4)
    doc = classifying_map_to_json(trivial_cm, inv4, 4)
    text = json.dumps(doc)
    assert set(doc) >= {"d", "base", "rho", "gamma"}
    cm = classifying_map_from_json(loads_located(text), od2)
    assert cm.gamma_degree == 4
    for e in inv2.upto(2):
        assert cm.gamma(e) == trivial_cm.gamma(e)
    rep = validate_classifying_map(cm, inv2, 3)
    assert rep.ok, rep.failures()
    B = build_bundle(cm, 2, inv2)
    assert not B.has_realization
    one = B.pure(NCPoly.scalar(1), od2.psi(0, 0))
    assert B.equal(one, one)
    deep = B.pure(NCPoly.scalar(1), od2.mul(od2.psi(0, 0), od2.psi(0, 1), od2.psi(1, 0)))
    with pytest.raises(EnvelopeTooShallow):
        B.canonical(deep)


def test_json_map_rejects_bad_documents(od2):
    with pytest.raises(PresentationError):
        classifying_map_from_json(loads_located('{"d": 2}'), od2)
