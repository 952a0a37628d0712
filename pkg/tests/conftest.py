from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

from toplyap.cocycle import Cocycle
from toplyap.lamination import punctured_torus_target
from toplyap.matrix import MatrixTarget, RationalMatrix
from toplyap.symbolic import TransitionSystem

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SHEAR_A = [[1, 1], [0, 1]]
SHEAR_B = [[1, 0], [1, 1]]


@pytest.fixture(scope="session")
def full2():
    return TransitionSystem.full_shift(2)


@pytest.fixture(scope="session")
def golden():
    return TransitionSystem.golden_mean()


@pytest.fixture(scope="session")
def pair_target():
    return MatrixTarget({"A": RationalMatrix(SHEAR_A), "B": RationalMatrix(SHEAR_B)})


@pytest.fixture(scope="session")
def pair(pair_target, full2):
    return Cocycle(pair_target, {0: "A", 1: "B"}, full2)


@pytest.fixture(scope="session")
def torus():
    return punctured_torus_target()


@pytest.fixture(scope="session")
def torus_cocycle(torus, full2):
    return Cocycle(torus, {0: "L", 1: "R"}, full2)


@pytest.fixture(scope="session")
def identity_cocycle(full2):
    t = MatrixTarget({"I": RationalMatrix([[1, 0], [0, 1]])})
    return Cocycle(t, {0: "I", 1: "I"}, full2)
