import json
from fractions import Fraction

import pytest
import sympy

from oracles import haar_bruteforce, q_sym, su_q_2_haar_closed_form, to_sympy
from qpb.cqg import (_builtin_text, builtin_group, canonical_intertwiner, group_from_doc, haar_state,
                     verify_hopf_axioms)
from qpb.errors import NonScalarAmbiguity, UnknownGroup
from qpb.ncalg.jsonio import loads_located
from qpb.ncalg.linalg import mat_inverse, trace
from qpb.ncalg.poly import NCPoly
from qpb.ncalg.scalar import ONE, Scalar


def _word(G, names):
    return G.A.reduce(NCPoly.word(G.pres.word_from_names(names)))


def test_unknown_group():
    with pytest.raises(UnknownGroup):
        builtin_group("foo")


def test_builtin_shapes(su2, u1):
    assert su2.n == 2 and su2.m == 1
    assert [g.name for g in su2.pres.generators] == ["c", "c*", "a", "a*"]
    assert su2.fmt(su2.u[0][1]) == "-q c*"
    assert u1.n == 1 and u1.m is None


@pytest.mark.parametrize("name", ["su_q_2", "u1"])
def test_hopf_axioms_hold(name):
    rep = verify_hopf_axioms(builtin_group(name), 4)
    assert rep.ok, rep.failures()
    ids = {e["check"].split("[")[0] for e in rep.entries}
    assert {"coassociativity", "counit.left", "counit.right", "antipode.left", "antipode.right",
            "coproduct.star_compatible", "u.unitary_left", "u.unitary_right"} <= ids


def test_flipped_commutation_breaks_axioms():
    doc = json.loads(_builtin_text("su_q_2"))
    doc["relations"][0] = "a c - c a"
    G = group_from_doc(loads_located(json.dumps(doc)), 4, name="mutated")
    assert not verify_hopf_axioms(G, 4).ok


def test_haar_u1_is_fourier_delta(u1):
    h = haar_state(u1, 4)
    for k in range(-4, 5):
        w = ["z"] * k if k >= 0 else ["z*"] * (-k)
        assert h(_word(u1, w)) == (ONE if k == 0 else Scalar(0))


def test_haar_su2_matches_bruteforce_oracle(su2):
    h = haar_state(su2, 4)
    oracle = haar_bruteforce(su2, 2)
    for w, value in oracle.items():
        assert sympy.simplify(to_sympy(h({w: ONE})) - value) == 0
    assert h(su2.A.gen("a")).is_zero()


def test_haar_su2_matches_closed_form(su2):
    h = haar_state(su2, 4)
    for k in range(3):
        x = _word(su2, ["c", "c*"] * k)
        assert sympy.simplify(to_sympy(h(x)) - su_q_2_haar_closed_form(k)) == 0


def test_haar_restricts_under_bound_extension(su2):
    for N in (2, 3):
        small = haar_state(su2, N)
        big = haar_state(su2, N + 1)
        for w in su2.A.normal_words_up_to(N):
            assert small({w: ONE}) == big({w: ONE})


def test_haar_positive_at_half(su2):
    h = haar_state(su2, 4)
    for w in su2.A.normal_words_up_to(2):
        x = NCPoly.word(w)
        val = h(su2.A.mul(su2.A.star(x), x)).evaluate(Fraction(1, 2))
        assert val >= 0


def test_haar_is_star_compatible(su2):
    h = haar_state(su2, 4)
    for w in su2.A.normal_words_up_to(3):
        x = NCPoly.word(w)
        assert h(su2.A.star(x)) == h(x).conj()


def test_intertwiners(su2, u1):
    assert canonical_intertwiner(u1).C == [[ONE]]
    C = canonical_intertwiner(su2)
    assert C.C[0][1].is_zero() and C.C[1][0].is_zero()
    ratio = C.C[1][1] / C.C[0][0]
    assert ratio in (Scalar.q_power(2), Scalar.q_power(-2))
    assert trace(C.C) == trace(mat_inverse(C.C))
    # κ²(u) C = C u entrywise
    for i in range(2):
        for j in range(2):
            lhs = sum((su2.antipode(su2.antipode(su2.u[i][k])).scale(C.C[k][j]) for k in range(2)), NCPoly())
            rhs = sum((su2.u[k][j].scale(C.C[i][k]) for k in range(2)), NCPoly())
            assert su2.A.reduce(lhs - rhs).is_zero()


def test_reducible_corepresentation_is_ambiguous():
    gens = ["z", "z*", "w", "w*"]
    doc = {"name": "t2",
           "generators": [{"name": g, "star": g[:-1] if g.endswith("*") else g + "*"} for g in gens],
           "relations": ["z z* - 1", "z* z - 1", "w w* - 1", "w* w - 1",
                         "z w - w z", "z w* - w* z", "z* w - w z*", "z* w* - w* z*"],
           "hopf": {"u": [["z", "0"], ["0", "w"]],
                    "coproduct": {g: [[[g], [g], "1"]] for g in gens},
                    "counit": {g: "1" for g in gens},
                    "antipode": {"z": "z*", "z*": "z", "w": "w*", "w*": "w"}}}
    G = group_from_doc(loads_located(json.dumps(doc)), 4)
    assert verify_hopf_axioms(G, 4).ok
    with pytest.raises(NonScalarAmbiguity):
        canonical_intertwiner(G)


def test_closed_form_sanity():
    assert sympy.simplify(su_q_2_haar_closed_form(1) - 1 / (1 + q_sym ** 2)) == 0
