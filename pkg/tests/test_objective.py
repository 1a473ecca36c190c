import numpy as np
import pytest

from rankreg.exceptions import DegenerateProblemError, InputError
from rankreg.objective import (Problem, default_x0, f_value, g_grad, g_value,
                               grad_bound, lipschitz_bound, step_size)
from rankreg.spectral import FactoredIterate, factor, reconstruct


def test_problem_validation():
    with pytest.raises(InputError):
        Problem(np.zeros((3, 2)), np.zeros((4, 2)), 1.0)
    with pytest.raises(InputError):
        Problem(np.zeros((3, 2)), np.ones((3, 2)), 0.0)
    with pytest.raises(InputError):
        Problem(np.zeros((3, 2)), np.ones((3, 2)), float("nan"))
    P = Problem(np.zeros((3, 2)), np.ones((3, 4)), 2)
    assert P.x_shape == (4, 2)
    assert P.lam == 2.0


def test_values_and_gradient_by_hand():
    D = np.array([[1.0, 2.0], [0.0, 1.0]])
    Y = np.array([[1.0], [1.0]])
    P = Problem(Y, D, 0.5)
    X = np.array([[1.0], [0.0]])
    # residual DX - Y = (0, -1)
    assert g_value(P, X) == pytest.approx(1.0)
    assert np.allclose(g_grad(P, X), 2 * D.T @ np.array([[0.0], [-1.0]]))
    F = factor(X)
    assert f_value(P, F) == pytest.approx(1.0 + 0.5)
    with pytest.raises(InputError):
        f_value(P, X)
    with pytest.raises(InputError):
        g_value(P, np.zeros((3, 1)))


def test_g_nonnegative_and_convex(rng):
    P = Problem(rng.standard_normal((5, 3)), rng.standard_normal((5, 4)), 1.0)
    for _ in range(50):
        X1, X2 = rng.standard_normal((2, 4, 3))
        th = rng.uniform()
        assert g_value(P, X1) >= 0
        mix = g_value(P, th * X1 + (1 - th) * X2)
        assert mix <= th * g_value(P, X1) + (1 - th) * g_value(P, X2) + 1e-10


def test_lipschitz_bound_is_valid(rng):
    P = Problem(rng.standard_normal((5, 3)), rng.standard_normal((5, 4)), 1.0)
    L = lipschitz_bound(P)
    assert L == pytest.approx(2 * np.linalg.norm(P.D, 2) ** 2)
    for _ in range(20):
        X1, X2 = rng.standard_normal((2, 4, 3))
        lhs = np.linalg.norm(g_grad(P, X1) - g_grad(P, X2))
        assert lhs <= L * np.linalg.norm(X1 - X2) + 1e-10
    with pytest.raises(DegenerateProblemError):
        lipschitz_bound(Problem(np.ones((2, 1)), np.zeros((2, 2)), 1.0))


def test_grad_bound_identity_example():
    # D = I, X0 = 0, ||Y||_F^2 = 1  ->  G = 2
    Y = np.array([[1.0], [0.0]])
    P = Problem(Y, np.eye(2), 3.0)
    X0 = FactoredIterate.zeros((2, 1))
    assert grad_bound(P, X0) == pytest.approx(2.0)
    assert grad_bound(P, X0, "spectral-norm") == pytest.approx(2.0)
    with pytest.raises(InputError):
        grad_bound(P, X0, "nope")


def _plan_with(lam, G, L):
    # D = sqrt(L/2) I (1x1), X0 = 0, Y chosen so that G = 2 c sqrt(F(X0))
    c = np.sqrt(L / 2.0)
    y = G / (2.0 * c)
    P = Problem(np.array([[y]]), np.array([[c]]), lam)
    return step_size(P, FactoredIterate.zeros((1, 1)))


def test_step_size_examples():
    assert _plan_with(1.0, 2.0, 2.0).s == pytest.approx(0.5)
    assert _plan_with(1.0, 2.0, 4.0).s == pytest.approx(0.25)


def test_step_size_auto_exact(rng):
    for _ in range(30):
        P = Problem(rng.standard_normal((6, 3)), rng.standard_normal((6, 5)),
                    float(rng.uniform(0.1, 100)))
        plan = step_size(P, default_x0(P))
        assert plan.s * plan.G ** 2 <= 2 * P.lam
        assert plan.s * plan.L <= 1.0
        assert plan.satisfies_condition
        assert plan.s == pytest.approx(min(2 * P.lam / plan.G ** 2, 1 / plan.L))


def test_step_size_manual_and_errors():
    P = Problem(np.ones((2, 1)), np.eye(2), 1.0)
    X0 = FactoredIterate.zeros((2, 1))
    ok = step_size(P, X0, "manual", s=0.01)
    assert ok.satisfies_condition and ok.mode == "manual"
    bad = step_size(P, X0, "manual", s=10.0)
    assert not bad.satisfies_condition
    with pytest.raises(InputError):
        step_size(P, X0, "manual", s=-1)
    with pytest.raises(InputError):
        step_size(P, X0, "sometimes")
    Pz = Problem(np.zeros((2, 1)), np.eye(2), 1.0)
    with pytest.raises(DegenerateProblemError):
        step_size(Pz, X0)


def test_default_x0(rng):
    P = Problem(rng.standard_normal((6, 3)), rng.standard_normal((6, 5)), 1.0)
    X0 = default_x0(P)
    expect = P.D.T @ P.Y / np.linalg.norm(P.D, 2) ** 2
    assert np.allclose(reconstruct(X0), expect, atol=1e-12)
    assert X0.rank == 3
