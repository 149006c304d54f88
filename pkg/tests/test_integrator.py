import numpy as np
import pytest

from comonotone_flow.errors import DomainError, NonFiniteDerivative, StepSizeUnderflow
from comonotone_flow.integrator import (B, P, IntegratorConfig, dense_eval, integrate)


def oscillator(t, z):
    return np.array([z[1], -z[0]])


def test_exponential_decay():
    sol = integrate(lambda t, y: -y, 0.0, [1.0], 5.0)
    assert abs(sol.y[-1, 0] - np.exp(-5.0)) < 1e-8


def test_zero_field_is_constant():
    sol = integrate(lambda t, y: np.zeros_like(y), 0.0, [1.5, -2.0], 3.0,
                    IntegratorConfig(sample_times=np.linspace(0, 3, 7)))
    np.testing.assert_array_equal(sol.y, np.tile([1.5, -2.0], (7, 1)))


def test_oscillator_period():
    sol = integrate(oscillator, 0.0, [1.0, 0.0], 2 * np.pi,
                    IntegratorConfig(sample_times=np.linspace(0, 2 * np.pi, 101)))
    assert np.max(np.abs(sol.y[-1] - [1.0, 0.0])) < 1e-7
    assert np.max(np.abs(np.sum(sol.y ** 2, axis=1) - 1.0)) < 1e-7
    np.testing.assert_allclose(sol.y[:, 0], np.cos(sol.t), atol=1e-7)


def test_convergence_order():
    errs = {}
    for tol in (1e-6, 1e-9):
        sol = integrate(oscillator, 0.0, [1.0, 0.0], 2 * np.pi,
                        IntegratorConfig(rel_tol=tol, abs_tol=tol * 1e-2))
        errs[tol] = np.max(np.abs(sol.y[-1] - [1.0, 0.0]))
    assert np.log10(errs[1e-6] / errs[1e-9]) >= 2.0


def test_dense_weights_reduce_to_step_weights():
    np.testing.assert_allclose(P.sum(axis=1), B, atol=1e-15)


def test_dense_output_continuity():
    rng = np.random.default_rng(0)
    y0, k, h = rng.normal(size=3), rng.normal(size=(7, 3)), 0.3
    step = y0 + h * (B @ k)
    assert np.max(np.abs(dense_eval(y0, h, k, 1.0) - step)) <= 1e-13
    np.testing.assert_array_equal(dense_eval(y0, h, k, 0.0), y0)


def test_samples_at_step_endpoints_match_steps():
    # samples that coincide with accepted step ends are copied, not interpolated
    full = integrate(oscillator, 0.0, [1.0, 0.0], 1.0)
    dense = integrate(oscillator, 0.0, [1.0, 0.0], 1.0,
                      IntegratorConfig(sample_times=[0.0, 0.25, 0.5, 1.0]))
    np.testing.assert_array_equal(full.y[-1], dense.y[-1])


def test_deterministic():
    cfg = IntegratorConfig(sample_times=np.geomspace(0.1, 10, 50))
    a = integrate(lambda t, y: -y / t + np.sin(t), 0.1, [1.0], 10.0, cfg)
    b = integrate(lambda t, y: -y / t + np.sin(t), 0.1, [1.0], 10.0, cfg)
    assert a.y.tobytes() == b.y.tobytes()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_field():
    with pytest.raises(NonFiniteDerivative):
        integrate(lambda t, y: y / (1.0 - t), 0.0, [1.0], 2.0,
                  IntegratorConfig(initial_step=1.0))


def test_step_underflow():
    # blow-up at t = 1: the controller shrinks the step without bound
    with pytest.raises((StepSizeUnderflow, NonFiniteDerivative)):
        integrate(lambda t, y: y ** 2, 0.0, [1.0], 2.0)


def test_bad_window():
    with pytest.raises(DomainError):
        integrate(lambda t, y: y, 1.0, [1.0], 0.5)
    with pytest.raises(DomainError):
        integrate(lambda t, y: y, 0.0, [1.0], 1.0, IntegratorConfig(sample_times=[0.5, 0.2]))
