import numpy as np
import pytest

from gnelearn import builtin_game, estimate_constants, solve_vgne


@pytest.fixture(scope="session")
def case1():
    return builtin_game("paper-sec5-case1")


@pytest.fixture(scope="session")
def case2():
    return builtin_game("paper-sec5-case2")


@pytest.fixture(scope="session")
def case1_ref(case1):
    return solve_vgne(case1)


@pytest.fixture(scope="session")
def case2_ref(case2):
    return solve_vgne(case2)


@pytest.fixture(scope="session")
def case1_constants(case1):
    return estimate_constants(case1)


@pytest.fixture(scope="session")
def rng():
    return np.random.Generator(np.random.Philox(20260810))
