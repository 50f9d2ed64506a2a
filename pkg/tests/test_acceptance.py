"""Acceptance criteria 1 to 10; each test prints one PASS/FAIL line."""

import contextlib
import time

import pytest
import sympy

from oracles import (fixed_point_dims_modp, haar_bruteforce, omega_cohomology_dims, quotient_filtration_dims,
                     rank_one_invariant_dims, to_sympy)
from qpb import crossprod, diffcalc
from qpb.cli import run
from qpb.cqg import builtin_group, haar_state, verify_hopf_axioms
from qpb.errors import NoMultiplet
from qpb.ncalg.scalar import ONE, Scalar
from qpb.odbundle import (build_od, find_conjugate_multiplet, invariants_basis, multiplet_report, pairing_matrix,
                          pairing_report, verify_commutation_relations)


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def block(n, title):
        ok = False
        try:
            yield
            ok = True
        finally:
            with capsys.disabled():
                print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {title}")
    return block


def _failures(rep):
    return [e["check"] for e in rep.failures()]


def test_criterion_01_hopf_axioms(criterion):
    with criterion(1, "Hopf axioms for su_q_2 and u1 at degree 4"):
        for name in ("su_q_2", "u1"):
            t0 = time.perf_counter()
            rep = verify_hopf_axioms(builtin_group(name), 4)
            assert rep.ok, _failures(rep)
            assert time.perf_counter() - t0 < 30


def test_criterion_02_haar(criterion):
    with criterion(2, "Haar state unique at degree 4, exact values"):
        u1, su2 = builtin_group("u1"), builtin_group("su_q_2")
        h = haar_state(u1, 4)  # raises NonUniqueHaar if not unique
        for k in range(-4, 5):
            w = (u1.pres.index["z"],) * k if k >= 0 else (u1.pres.index["z*"],) * (-k)
            assert h({w: ONE}) == (ONE if k == 0 else Scalar(0))
        h = haar_state(su2, 4)
        for w, value in haar_bruteforce(su2, 2).items():
            assert sympy.simplify(to_sympy(h({w: ONE})) - value) == 0


def test_criterion_03_od_dimensions(criterion):
    with criterion(3, "O_d for su_q_2, d in {1, 2}: slice dimensions match the quotient-rank oracle to degree 4"):
        G = builtin_group("su_q_2")
        for d in (1, 2):
            Od = build_od(G, d, 4)
            ours = [len(Od.R.normal_words_up_to(k)) for k in range(5)]
            assert ours == quotient_filtration_dims(Od.R.presentation, 4, slack=1)


def test_criterion_04_multiplet(criterion):
    with criterion(4, "conjugate multiplet m=1, pairing matrix invariant, u1 has no multiplet"):
        Od = build_od(builtin_group("su_q_2"), 1, 4)
        hat = find_conjugate_multiplet(Od)
        assert hat.m == 1
        rep = multiplet_report(Od, hat)
        assert rep.ok, _failures(rep)
        rep = pairing_report(Od, pairing_matrix(Od, hat))
        assert rep.ok, _failures(rep)
        with pytest.raises(NoMultiplet):
            find_conjugate_multiplet(build_od(builtin_group("u1"), 1, 4))


def test_criterion_05_commutation(criterion):
    with criterion(5, "commutation relations on basis invariants and 20 seeded samples, d in {1, 2}"):
        t0 = time.perf_counter()
        G = builtin_group("su_q_2")
        for d in (1, 2):
            Od = build_od(G, d, 4)
            inv = invariants_basis(Od, 3)
            hat = find_conjugate_multiplet(Od)
            rep = verify_commutation_relations(Od, hat, pairing_matrix(Od, hat), inv, seed=0, count=20)
            assert rep.ok, _failures(rep)
            assert rep.info["samples"] == len(inv.upto(2)) + 20
            ids = [e["check"].split("[")[0] for e in rep.entries]
            assert ids.count("shift_multiplicative") >= 20
        assert time.perf_counter() - t0 < 300


def test_criterion_06_flip(criterion, universal_cm, inv1, trivial_cm, inv2, universal_bundle):
    with criterion(6, "flip identities exact on the universal and trivial classifying maps, degree 3"):
        needed = {"exchange_base_product", "exchange_od_product", "relations_pass", "bimodule_left",
                  "bimodule_right", "projection_identity", "q_property", "flip_inverse"}
        for rep in (crossprod.flip_check(universal_cm, inv1, 3, B=universal_bundle),
                    crossprod.flip_check(trivial_cm, inv2, 3)):
            assert rep.ok, _failures(rep)
            assert needed <= {e["check"].split("[")[0] for e in rep.entries}


def test_criterion_07_reconstruction(criterion, universal_bundle, inv1, od2, inv2):
    with criterion(7, "universal B = O_d to degree 3, trivial round trip to degree 2, bundle axioms"):
        rep = crossprod.universal_reconstruction(universal_bundle, 3)
        assert rep.ok, _failures(rep)
        rep = crossprod.verify_bundle_axioms(universal_bundle, inv1, 2)
        assert rep.ok, _failures(rep)
        assert fixed_point_dims_modp(universal_bundle.Od, 3) == inv1.dims()
        cm = crossprod.trivial_classifying_map(crossprod.preset_base("line"), od2)
        B = crossprod.build_bundle(cm, 3, inv2)
        for rep in (crossprod.trivial_round_trip(B, 2), crossprod.verify_bundle_axioms(B, inv2, 2)):
            assert rep.ok, _failures(rep)


MUTATION_TABLE = [
    (["group", "verify", "--group", "su_q_2"], "flip-relation:0"),
    (["od", "build", "--group", "su_q_2", "--d", "1", "--degree", "3"], "flip-relation:3"),
    (["od", "lemmas", "--group", "su_q_2", "--d", "1", "--degree", "3"], "s-sign"),
    (["od", "lemmas", "--group", "su_q_2", "--d", "1", "--degree", "3"], "zero-c"),
    (["od", "invariants", "--group", "su_q_2", "--d", "1", "--degree", "3"], "flip-relation:3"),
    (["bundle", "extract", "--group", "su_q_2", "--degree", "3"], "gamma-perturb"),
    (["bundle", "reconstruct", "--universal", "--d", "1", "--degree", "3"], "gamma-perturb"),
    (["flip", "check", "--universal", "--d", "1", "--degree", "3"], "gamma-perturb"),
    (["cohomology", "--group", "su_q_2"], "flip-differential"),
    (["weil", "check", "--group", "su_q_2"], "flip-differential"),
]


def test_criterion_08_mutations(criterion):
    with criterion(8, "every suite passes unmutated and fails under a documented mutation"):
        for argv, mutation in MUTATION_TABLE:
            assert run(argv)[0] == 0, argv
            assert run(argv + ["--mutate", mutation])[0] == 1, (argv, mutation)


def test_criterion_09_diffcalc(criterion):
    with criterion(9, "Omega acyclic, comodule identity, invariants d-stable, Weil primitives to degree 3"):
        plane = diffcalc.builtin_base_calculus("plane")
        oracle_inv, oracle_coh = rank_one_invariant_dims(3)
        for group in ("u1", "su_q_2"):
            fodc = diffcalc.builtin_fodc(group)
            rep, Om, ad, inv, coh = diffcalc.characteristic_classes(fodc, 3)
            assert rep.ok, _failures(rep)
            assert diffcalc.omega_cohomology(Om, 3) == omega_cohomology_dims(fodc.s, 3) == [1, 0, 0, 0]
            assert inv.dims()[:4] == oracle_inv and coh.dims == oracle_coh
            ids = {e["check"].split("[")[0] for e in rep.entries}
            assert {"adjoint.comodule_identity", "invariants.d_stable", "invariants.omega_acyclic"} <= ids
            wrep = diffcalc.weil_pipeline(fodc, plane, [plane.R.parse("x dy")], 3)
            assert wrep.ok, _failures(wrep)
            prims = wrep.info["primitives"]
            assert len(prims) == sum(coh.dims) and all(p is not None for p in prims.values())


DETERMINISM_RUNS = [
    ["group", "verify", "--group", "su_q_2"],
    ["od", "build", "--group", "su_q_2", "--d", "2", "--degree", "3"],
    ["od", "lemmas", "--group", "su_q_2", "--d", "1", "--degree", "4", "--seed", "5"],
    ["od", "invariants", "--group", "su_q_2", "--d", "1", "--degree", "3"],
    ["bundle", "extract", "--group", "su_q_2", "--degree", "3"],
    ["bundle", "reconstruct", "--universal", "--d", "1", "--degree", "3"],
    ["flip", "check", "--group", "su_q_2", "--degree", "3", "--seed", "2"],
    ["cohomology", "--group", "su_q_2"],
    ["weil", "check", "--group", "su_q_2", "--q", "4"],
]


def test_criterion_10_determinism(criterion):
    with criterion(10, "JSON reports byte-identical across two runs"):
        for argv in DETERMINISM_RUNS:
            first, second = run(argv), run(argv)
            assert first[0] == 0, argv
            assert first[1] == second[1], argv
