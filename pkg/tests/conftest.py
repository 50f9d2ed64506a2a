import os
import sys

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("qpb", max_examples=40, deadline=None)
settings.load_profile("qpb")


@pytest.fixture(scope="session")
def su2():
    from qpb.cqg import builtin_group
    return builtin_group("su_q_2")


@pytest.fixture(scope="session")
def u1():
    from qpb.cqg import builtin_group
    return builtin_group("u1")


@pytest.fixture(scope="session")
def od1(su2):
    from qpb.odbundle import build_od
    return build_od(su2, 1, 4)


@pytest.fixture(scope="session")
def od2(su2):
    from qpb.odbundle import build_od
    return build_od(su2, 2, 4)


@pytest.fixture(scope="session")
def inv1(od1):
    from qpb.odbundle import invariants_basis
    return invariants_basis(od1, 3)


@pytest.fixture(scope="session")
def inv2(od2):
    from qpb.odbundle import invariants_basis
    return invariants_basis(od2, 3)


@pytest.fixture(scope="session")
def hat1(od1):
    from qpb.odbundle import find_conjugate_multiplet
    return find_conjugate_multiplet(od1)


@pytest.fixture(scope="session")
def S1(od1, hat1):
    from qpb.odbundle import pairing_matrix
    return pairing_matrix(od1, hat1)


@pytest.fixture(scope="session")
def universal_cm(od1, inv1):
    from qpb.crossprod import universal_classifying_map
    return universal_classifying_map(od1, inv1)


@pytest.fixture(scope="session")
def universal_bundle(universal_cm, inv1):
    from qpb.crossprod import build_bundle
    return build_bundle(universal_cm, 3, inv1)


@pytest.fixture(scope="session")
def trivial_cm(od2):
    from qpb.crossprod import preset_base, trivial_classifying_map
    return trivial_classifying_map(preset_base("line"), od2)
