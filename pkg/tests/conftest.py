import pytest

import towb

N_STD = 1024
N_TRIADIC = 243


@pytest.fixture(scope="session")
def lam_std():
    return towb.Measure.lebesgue(N_STD)


@pytest.fixture(scope="session")
def op_a():
    return towb.TransferOperator(towb.sys_a(N_STD), N_STD)


@pytest.fixture(scope="session")
def op_b():
    return towb.TransferOperator(towb.sys_b(N_STD), N_STD)


@pytest.fixture(scope="session")
def op_d():
    return towb.TransferOperator(towb.sys_d(N_TRIADIC), N_TRIADIC)


@pytest.fixture(scope="session")
def lam_triadic():
    return towb.Measure.lebesgue(N_TRIADIC)


@pytest.fixture(scope="session")
def sol_a(op_a, lam_std):
    return towb.solve_harmonic(op_a, lam_std)


@pytest.fixture(scope="session")
def sol_b(op_b, lam_std):
    return towb.solve_harmonic(op_b, lam_std)


@pytest.fixture(scope="session")
def pm_a(op_a, lam_std, sol_a):
    return towb.PathMeasure.build(op_a, sol_a.h, lam_std)


@pytest.fixture(scope="session")
def pm_b(op_b, lam_std, sol_b):
    return towb.PathMeasure.build(op_b, sol_b.h, lam_std)
