import numpy as np
import pytest

from comonotone_flow import DynamicsParams, OperatorSpec, TikhonovSchedule, diagonal_example


@pytest.fixture
def op61():
    return diagonal_example()


@pytest.fixture
def affine_op():
    # A x = diag(1, 0) x - (1, 0); minimum-norm zero (1, 0)
    return OperatorSpec.affine(np.diag([1.0, 0.0]), [1.0, 0.0], rho=0.0, eta=1.0)


@pytest.fixture
def params():
    return DynamicsParams(gamma=1.0, delta=4.0 / 3.0, alpha=4.0 / 3.0, beta=1.0)


@pytest.fixture
def sched_half():
    return TikhonovSchedule.power(0.5, t0=0.1)


X0 = np.array([1.0, 1.0, 1.0])
V0 = np.array([1.0, 2.0, 3.0])


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
