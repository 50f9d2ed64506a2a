import random

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from oracles import fixed_point_dims_modp, quotient_filtration_dims, to_sympy
from qpb.errors import NoMultiplet, NormalizationImpossible
from qpb.ncalg.linalg import Echelon
from qpb.ncalg.poly import NCPoly, word_key
from qpb.ncalg.scalar import ONE, ZERO, Scalar
from qpb.odbundle import (build_od, find_conjugate_multiplet, fixed_point_dims, invariant_samples,
                          invariants_basis, multiplet_report, pairing_matrix, pairing_report, shift_apply,
                          shift_closure, universal_bundle_check, verify_commutation_relations, verify_od)


def test_toeplitz_instance(u1):
    Od = build_od(u1, 1, 4)
    assert Od.fmt2(Od.coaction(Od.psi(0, 0))) == "[psi11 ⊗ z]"
    assert Od.reduce(Od.mul(Od.psistar(0, 0), Od.psi(0, 0))) == NCPoly.scalar(1)
    inv = invariants_basis(Od, 2)
    assert [Od.fmt(x) for x in inv.upto(2)] == ["1", "psi11 psi*11"]


def test_d_zero_rejected(su2):
    with pytest.raises(ValueError):
        build_od(su2, 0, 4)


@pytest.mark.parametrize("d,k_max,slack", [(1, 4, 1), (2, 3, 0)])
def test_dimensions_match_quotient_oracle(su2, d, k_max, slack):
    Od = build_od(su2, d, 4)
    counts = [len(Od.R.normal_words_up_to(k)) for k in range(k_max + 1)]
    assert counts == quotient_filtration_dims(Od.R.presentation, k_max, slack=slack)


def test_od_structure_report(od1, od2):
    for Od in (od1, od2):
        rep = verify_od(Od)
        assert rep.ok, rep.failures()


def test_coaction_examples(od1, su2):
    d = od1.coaction(od1.psi(0, 0))
    expected = {}
    for j in range(2):
        for (a_w), c in su2.u[j][0].terms.items():
            expected[((od1.psi_id(0, j),), a_w)] = c
    assert d == expected
    assert od1.coaction(NCPoly.scalar(1)) == {((), ()): ONE}


def test_coaction_is_coassociative_on_words(od1, su2):
    from qpb.ncalg.tensor import TensorSpace
    T = TensorSpace(od1.R, su2.A, su2.A)
    for w in od1.R.normal_words_up_to(3):
        left: dict = {}
        right: dict = {}
        for (x, a), c in od1.coaction_word(w).items():
            for (x2, a2), c2 in od1.coaction_word(x).items():
                left[(x2, a2, a)] = left.get((x2, a2, a), ZERO) + c * c2
            for (a1, a2), c2 in su2.coproduct_word(a).items():
                right[(x, a1, a2)] = right.get((x, a1, a2), ZERO) + c * c2
        assert T.reduce(left) == T.reduce(right)


def test_multiplet_su2(od1, hat1):
    assert hat1.m == 1
    rep = multiplet_report(od1, hat1)
    assert rep.ok, rep.failures()


def test_multiplet_matches_bruteforce_nullspace(od1, su2, hat1):
    # ψ̂_i = Σ_j ψ_1j x_ji must satisfy Σ_j x_ji u_lj = Σ_j x_lj u*_ji for every l, i
    A = su2.A
    x = [[sympy.Symbol(f"x{j}{i}") for i in range(2)] for j in range(2)]
    eqs = []
    for l in range(2):
        for i in range(2):
            acc: dict = {}
            for j in range(2):
                for w, c in su2.u[l][j].terms.items():
                    acc[w] = acc.get(w, 0) + x[j][i] * to_sympy(c)
                for w, c in A.star(su2.u[j][i]).terms.items():
                    acc[w] = acc.get(w, 0) - x[l][j] * to_sympy(c)
            eqs.extend(acc.values())
    unknowns = [v for row in x for v in row]
    M = sympy.Matrix([[sympy.diff(e, v) for v in unknowns] for e in eqs])
    null = M.nullspace()
    assert len(null) == 1
    ours = [ZERO] * 4
    for (i, omega), c in hat1.coeffs.items():
        ours[omega[0] * 2 + i] = c
    ours = sympy.Matrix([to_sympy(c) for c in ours])
    assert sympy.Matrix.hstack(ours, null[0]).rank(simplify=True) == 1


def test_u1_has_no_multiplet(u1):
    Od = build_od(u1, 1, 4)
    with pytest.raises(NoMultiplet):
        find_conjugate_multiplet(Od, m_max=4)


def test_zero_intertwiner_cannot_normalize(od1):
    zero = [[Scalar(0)] * 2 for _ in range(2)]
    with pytest.raises(NormalizationImpossible):
        find_conjugate_multiplet(od1, zero)


@pytest.mark.parametrize("d", [1, 2])
def test_pairing_matrix_invariant(su2, d, od1, od2):
    Od = od1 if d == 1 else od2
    hat = find_conjugate_multiplet(Od)
    S = pairing_matrix(Od, hat)
    assert len(S.entries) == d * d
    rep = pairing_report(Od, S)
    assert rep.ok, rep.failures()
    for s in S.entries.values():
        assert Od.is_invariant(s)


def test_shift_of_one_is_projection(od1, od2):
    for Od in (od1, od2):
        p = [[Od.p(k, l) for l in range(Od.d)] for k in range(Od.d)]
        for k in range(Od.d):
            for l in range(Od.d):
                assert shift_apply(Od, k, l, NCPoly.scalar(1)) == p[k][l]
                sq = sum((Od.mul(p[k][r], p[r][l]) for r in range(Od.d)), NCPoly())
                assert Od.reduce(sq) == p[k][l]
                assert Od.star(p[k][l]) == p[l][k]
    expected = od1.reduce(od1.R.presentation.parse_poly("psi11 psi*11 + psi12 psi*12"))
    assert od1.p(0, 0) == expected


def test_shift_preserves_invariants(od1, inv1):
    for a in inv1.upto(2):
        assert od1.is_invariant(shift_apply(od1, 0, 0, a))


@given(st.integers(0, 2 ** 16))
def test_shift_is_multiplicative(od2, inv2, seed):
    rng = random.Random(seed)
    pool = inv2.upto(1) + inv2.by_degree[2][:6]
    a, b = rng.choice(pool), rng.choice(pool)
    k, l = rng.randrange(2), rng.randrange(2)
    lhs = sum((od2.mul(od2.tau(k, r, a), od2.tau(r, l, b)) for r in range(2)), NCPoly())
    assert od2.reduce(lhs) == od2.tau(k, l, od2.mul(a, b))
    assert od2.star(od2.tau(k, l, a)) == od2.tau(l, k, od2.star(a))


def test_invariant_dims_match_kernel_oracles(od1, od2, inv1, inv2):
    assert inv1.dims() == fixed_point_dims(od1, 3) == fixed_point_dims_modp(od1, 3) == [1, 1, 4, 4]
    assert inv2.dims() == fixed_point_dims_modp(od2, 3) == [1, 1, 16, 16]
    assert inv1.upto(0) == [NCPoly.scalar(1)]
    assert inv1.contains(od1.p(0, 0))


def test_projection_is_idempotent(od1):
    for w in od1.R.normal_words_up_to(3):
        e = od1.project_word(w)
        assert od1.project(NCPoly._raw(dict(e))) == NCPoly._raw(dict(e))
        assert od1.is_invariant(NCPoly._raw(dict(e)))


def test_shift_closure(od1, S1, inv1):
    span = shift_closure(od1, S1, 3)
    ech = Echelon(word_key)
    for x in span:
        ech.add(x.terms)
    assert ech.contains({(): ONE})
    for s in S1.entries.values():
        assert ech.contains(od1.star(s).terms)
    assert ech.contains(od1.p(0, 0).terms)
    for x in span:
        assert inv1.contains(x)


@pytest.mark.parametrize("d", [1, 2])
def test_commutation_relations(su2, od1, od2, inv1, inv2, d):
    Od, inv = (od1, inv1) if d == 1 else (od2, inv2)
    hat = find_conjugate_multiplet(Od)
    S = pairing_matrix(Od, hat)
    rep = verify_commutation_relations(Od, hat, S, inv, seed=0, count=20)
    assert rep.ok, rep.failures()
    ids = {e["check"].split("[")[0] for e in rep.entries}
    assert {"commutation_psi", "commutation_psi_star", "shift_multiplicative", "decomposition"} <= ids


def test_commutation_at_unit_reduces_to_projection(od1):
    for k in range(1):
        for i in range(2):
            rhs = sum((od1.mul(od1.p(k, l), od1.psi(l, i)) for l in range(1)), NCPoly())
            assert od1.reduce(rhs) == od1.psi(k, i)


def test_sign_flipped_pairing_is_detected(od1, hat1, S1, inv1):
    rep = verify_commutation_relations(od1, hat1, S1.scaled(-1), inv1, seed=0, count=5)
    failing = {e["check"].split("[")[0] for e in rep.failures()}
    assert "commutation_psi_star" in failing
    assert all("identity" in e for e in rep.failures())


def test_samples_are_seeded(inv1):
    a = invariant_samples(inv1, seed=3, count=5)
    b = invariant_samples(inv1, seed=3, count=5)
    assert a == b


def test_universal_bundle(od1, hat1, inv1):
    rep = universal_bundle_check(od1, hat1, 3, inv1)
    assert rep.ok, rep.failures()
    ids = {e["check"].split("[")[0] for e in rep.entries}
    assert {"freeness.witness_u", "freeness.witness_ubar", "fixed_points.rank"} <= ids
