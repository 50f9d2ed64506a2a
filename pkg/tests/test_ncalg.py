import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import quotient_filtration_dims
from qpb.errors import (DegreeOverflow, Inconsistent, PresentationError, ScalarParseError,
                        ZeroLeadingTerm)
from qpb.ncalg.jsonio import loads_located, presentation_from_doc, presentation_to_json
from qpb.ncalg.linalg import rank, solve_linear
from qpb.ncalg.poly import Generator, NCPoly, Presentation
from qpb.ncalg.rewriting import basis, complete, normal_form, star_poly
from qpb.ncalg.scalar import ONE, ZERO, Scalar
from qpb.odbundle import od_presentation


# -- scalars ---------------------------------------------------------------------------------------------


def _scalar_from(coeffs_num, coeffs_den):
    num = " + ".join(f"({c})*q^{i}" for i, c in enumerate(coeffs_num)) or "0"
    den = " + ".join(f"({c})*q^{i}" for i, c in enumerate(coeffs_den)) or "1"
    return Scalar.parse(f"({num})/({den})")


small = st.integers(-4, 4)
poly_coeffs = st.lists(small, min_size=1, max_size=3)
nonzero_den = poly_coeffs.filter(lambda cs: any(cs))
scalars = st.builds(_scalar_from, poly_coeffs, nonzero_den)


@given(scalars, scalars, scalars)
def test_scalar_field_axioms(x, y, z):
    assert x + y == y + x
    assert x * y == y * x
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x - x == ZERO
    if not x.is_zero():
        assert x * x.inverse() == ONE


@given(scalars)
def test_scalar_representation_is_canonical(x):
    # reparsing the printed form gives the identical numerator/denominator pair
    y = Scalar.parse(str(x))
    assert y == x
    assert hash(y) == hash(x)
    assert list(y.num.coeffs()) == list(x.num.coeffs())


@given(scalars, st.fractions(min_value=Fraction(1, 3), max_value=3, max_denominator=5))
def test_scalar_evaluation_is_a_ring_map(x, s):
    y = x * x + x
    try:
        vx = x.evaluate_s(s)
    except ZeroDivisionError:
        return
    assert y.evaluate_s(s) == vx * vx + vx


def test_scalar_parse_and_print():
    assert str(Scalar.parse("(1-q^2)/(1-q^4)")) == str(Scalar.parse("1/(1+q^2)"))
    assert Scalar.parse("q^(1/2)") * Scalar.parse("q^(1/2)") == Scalar.parse("q")
    assert Scalar.parse("q").conj() == Scalar.parse("q")
    with pytest.raises(ScalarParseError):
        Scalar.parse("x + 1")
    with pytest.raises(ScalarParseError):
        Scalar.parse("")


# -- presentations and completion ------------------------------------------------------------------------


def _pres(names, rels, stars=None):
    gens = [Generator(n, 0, (stars or {}).get(n, n)) for n in names]
    p = Presentation(gens)
    p.relations = [p.parse_poly(r) for r in rels]
    return p


def test_single_isometry_relation():
    p = od_presentation(1, 1)
    R = complete(p, 4)
    assert len(R.rules) == 1
    (lhs, rhs), = R.rules.items()
    assert p.format_word(lhs) == "psi*11 psi11"
    assert rhs == {(): ONE}
    assert [p.format_word(w) for w in basis(R, 2)] == ["psi11 psi11", "psi11 psi*11", "psi*11 psi*11"]


def test_unit_relation_is_rejected():
    with pytest.raises(ZeroLeadingTerm):
        complete(_pres(["x"], ["1"]), 3)


def test_od_relations_match_quotient_oracle():
    p = od_presentation(2, 2)
    R = complete(p, 4)
    counts = [len(R.normal_words_up_to(k)) for k in range(4)]
    assert counts == quotient_filtration_dims(p, 3, slack=0)


def test_normal_form_of_isometry_sum(od2):
    for i in range(2):
        for j in range(2):
            x = sum((od2.R.presentation.parse_poly(f"psi*{k}{i + 1} psi{k}{j + 1}") for k in (1, 2)), NCPoly())
            assert normal_form(x, od2.R) == NCPoly.scalar(1 if i == j else 0)


def test_normal_form_examples(su2):
    A = su2.A
    assert normal_form(NCPoly.scalar(1), A) == NCPoly.scalar(1)
    x = A.presentation.parse_poly("a* a c + c* c c")
    assert normal_form(x, A) == A.gen("c")
    assert sorted(A.fmt(NCPoly.word(w)) for w in basis(A, 1)) == ["a", "a*", "c", "c*"]
    assert basis(A, 0) == [()]


def test_star_poly_examples(su2, od1):
    p = od1.R.presentation
    assert star_poly(p.parse_poly("psi11 psi12"), p) == p.parse_poly("psi*12 psi*11")
    assert star_poly(NCPoly.scalar(1), p) == NCPoly.scalar(1)
    A = su2.A.presentation
    assert star_poly(A.parse_poly("q a c"), A) == A.parse_poly("q c* a*")


def test_degree_overflow_for_open_systems():
    p = _pres(["x", "y"], ["x y x - y x y"])
    R = complete(p, 4)
    if R.closed:
        pytest.skip("system closed; no bound to overflow")
    with pytest.raises(DegreeOverflow):
        R.reduce_word((0,) * 12)


def test_completion_certificate_lists_resolved_overlaps(su2):
    assert su2.A.closed
    assert all(hasattr(o, "as_dict") for o in su2.A.certificate)


words_su2 = st.lists(st.sampled_from(["a", "a*", "c", "c*"]), max_size=3)


@given(words_su2, words_su2)
def test_normal_form_is_multiplicative(su2, u, v):
    A = su2.A
    p = A.presentation
    x = NCPoly.word(p.word_from_names(u))
    y = NCPoly.word(p.word_from_names(v))
    assert A.reduce(x * y) == A.mul(A.reduce(x), A.reduce(y))


@given(words_su2)
def test_normal_form_commutes_with_star(su2, u):
    A = su2.A
    x = NCPoly.word(A.presentation.word_from_names(u))
    assert A.star(A.reduce(x)) == A.reduce(star_poly(x, A.presentation))
    assert A.star(A.star(A.reduce(x))) == A.reduce(x)


@given(words_su2)
def test_normal_form_is_idempotent(su2, u):
    A = su2.A
    x = A.reduce(NCPoly.word(A.presentation.word_from_names(u)))
    assert A.reduce(x) == x


def test_builtin_bases_match_quotient_oracle(su2, u1):
    for G in (su2, u1):
        counts = [len(G.A.normal_words_up_to(k)) for k in range(5)]
        assert counts == quotient_filtration_dims(G.pres, 4, slack=2)


# -- linear algebra --------------------------------------------------------------------------------------


def test_solve_linear_examples():
    part, null = solve_linear([({"x": 2}, 2)])
    assert part == {"x": ONE} and null == []
    part, null = solve_linear([], unknowns=["x", "y"])
    assert part == {} and len(null) == 2
    with pytest.raises(Inconsistent):
        solve_linear([({"x": 1}, 1), ({"x": 1}, 2)])


@given(st.lists(st.lists(small, min_size=3, max_size=3), min_size=1, max_size=4))
def test_solution_satisfies_system(rows):
    eqs = [({i: Scalar(c) for i, c in enumerate(r)}, Scalar(1)) for r in rows]
    try:
        part, null = solve_linear(eqs, unknowns=[0, 1, 2])
    except Inconsistent:
        return
    for coeffs, rhs in eqs:
        val = sum((c * part.get(u, ZERO) for u, c in coeffs.items()), ZERO)
        assert val == rhs
        for v in null:
            assert sum((c * v.get(u, ZERO) for u, c in coeffs.items()), ZERO) == ZERO
    assert len(null) == 3 - rank({i: Scalar(c) for i, c in enumerate(r)} for r in rows)


# -- JSON diagnostics ------------------------------------------------------------------------------------


def test_presentation_errors_carry_locations():
    text = '{\n  "generators": [{"name": "x"}],\n  "relations": ["x y"]\n}'
    with pytest.raises(PresentationError) as err:
        presentation_from_doc(loads_located(text))
    assert err.value.line == 3
    bad = '{"generators": [{"name": "x", "grade": -1}]}'
    with pytest.raises(PresentationError):
        presentation_from_doc(loads_located(bad))
    with pytest.raises(PresentationError) as err:
        loads_located('{"generators": [}')
    assert err.value.line == 1


def test_free_presentation_is_legal():
    p = presentation_from_doc(loads_located('{"generators": [{"name": "t", "grade": 1}]}'))
    R = complete(p, 3)
    assert R.rules == {}
    assert len(R.normal_words_of_length(3)) == 1


def test_term_list_relations_and_round_trip(su2):
    text = ('{"generators": [{"name": "x", "star": "y"}, {"name": "y", "star": "x"}],'
            ' "relations": [[[["x", "y"], "1"], [["y", "x"], "-q"]], "y x - (1/q) x y"]}')
    p = presentation_from_doc(loads_located(text))
    assert p.relations[0] == p.parse_poly("x y - q y x")
    again = presentation_from_doc(loads_located(json.dumps(presentation_to_json(p))))
    assert again.relations == p.relations
    doc = presentation_to_json(su2.pres)
    assert [g["name"] for g in doc["generators"]] == ["c", "c*", "a", "a*"]
