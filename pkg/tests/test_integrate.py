import numpy as np
import pytest
from hypothesis import given, strategies as st

from regulus.integrate import integrate


def oscillator(y):
    return np.stack([y[:, 1], -y[:, 0]], axis=1)


def test_harmonic_oscillator_batch():
    y0 = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, -1.0]])
    sol = integrate(oscillator, y0, np.pi / 2)
    c, s = np.cos(np.pi / 2), np.sin(np.pi / 2)
    exact = np.stack([y0[:, 0] * c + y0[:, 1] * s, -y0[:, 0] * s + y0[:, 1] * c], 1)
    assert np.abs(sol.y - exact).max() < 1e-9
    assert np.allclose(sol.t, np.pi / 2) and not sol.exited.any()


def test_per_element_end_times_and_dense_output():
    y0 = np.ones((3, 1))
    sol = integrate(lambda y: y, y0, np.array([0.5, 1.0, 2.0]), t_out=[0.25, 0.5, 1.0])
    assert np.allclose(sol.y[:, 0], np.exp([0.5, 1.0, 2.0]), rtol=1e-9)
    assert np.allclose(sol.y_out[:, 2, 0], np.exp([0.25, 0.5, 1.0]), rtol=1e-9)
    assert np.isnan(sol.y_out[2, 0, 0])   # past element 0's end


def test_exit_freezes_at_last_inside_state():
    sol = integrate(lambda y: np.ones_like(y), np.zeros((2, 1)), 5.0, inside=lambda y: y[:, 0] < 1.0)
    assert sol.exited.all()
    assert np.all(sol.y[:, 0] < 1.0) and np.all(sol.t < 1.0)


def test_max_step_resolves_compact_feature():
    # a narrow pulse the error estimator would step over from a flat start
    def rhs(y):
        t = y[:, 1]
        return np.stack([np.where(np.abs(t - 3.0) < 0.01, 100.0, 0.0), np.ones_like(t)], 1)

    capped = integrate(rhs, np.zeros((1, 2)), 6.0, max_step=0.005)
    assert capped.y[0, 0] == pytest.approx(2.0, abs=0.2)


@given(st.floats(-3, 3), st.floats(0.1, 4.0))
def test_linear_decay_property(lam, T):
    sol = integrate(lambda y: lam * y, np.array([[1.0]]), T)
    assert sol.y[0, 0] == pytest.approx(np.exp(lam * T), rel=1e-8, abs=1e-9)
