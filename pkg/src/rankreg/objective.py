"""Rank-regularized least squares: ``F(X) = ||Y - D X||_F^2 + lam * rank(X)``.

Also holds the step-size rule ``s <= min(2 lam / G^2, 1 / L)`` under which
the thresholding iterations keep their singular value support nested.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .exceptions import DegenerateProblemError, InputError
from .spectral import (FactoredIterate, as_matrix, factor, max_column_norm,
                       reconstruct, spectral_norm)

__all__ = [
    "SmoothLoss",
    "SquaredLoss",
    "Problem",
    "StepSizePlan",
    "g_value",
    "g_grad",
    "f_value",
    "lipschitz_bound",
    "grad_bound",
    "step_size",
    "default_x0",
]

ESTIMATORS = ("column-norm", "spectral-norm")


class SmoothLoss(Protocol):
    """Smooth convex data term ``g``. Only :class:`SquaredLoss` ships."""

    def value(self, X: np.ndarray) -> float: ...

    def grad(self, X: np.ndarray) -> np.ndarray: ...

    def lipschitz(self) -> float: ...


class SquaredLoss:
    """``g(X) = ||Y - D X||_F^2`` with gradient ``2 D^T (D X - Y)``."""

    def __init__(self, Y, D):
        self.Y = Y
        self.D = D

    def value(self, X):
        R = self.Y - self.D @ X
        return float(np.vdot(R, R))

    def grad(self, X):
        return 2.0 * (self.D.T @ (self.D @ X - self.Y))

    def lipschitz(self):
        return 2.0 * spectral_norm(self.D) ** 2


@dataclass(frozen=True, eq=False)
class Problem:
    """Data ``(Y, D, lam)`` of the rank-regularized least-squares problem.

    ``Y`` is ``d x k``, ``D`` is ``d x n`` and the unknown ``X`` is ``n x k``.
    """

    Y: np.ndarray
    D: np.ndarray
    lam: float

    def __post_init__(self):
        Y = as_matrix(self.Y, "Y")
        D = as_matrix(self.D, "D")
        if Y.shape[0] != D.shape[0]:
            raise InputError(f"Y has {Y.shape[0]} rows but D has {D.shape[0]}")
        lam = float(self.lam)
        if not np.isfinite(lam) or lam <= 0:
            raise InputError(f"lambda must be positive, got {self.lam}")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "lam", lam)

    @property
    def x_shape(self):
        return (self.D.shape[1], self.Y.shape[1])

    @property
    def loss(self) -> SmoothLoss:
        return SquaredLoss(self.Y, self.D)

    def check_x(self, X):
        X = as_matrix(X, "X")
        if X.shape != self.x_shape:
            raise InputError(f"X has shape {X.shape}, expected {self.x_shape}")
        return X


def _dense(P, X):
    if isinstance(X, FactoredIterate):
        if tuple(X.shape) != P.x_shape:
            raise InputError(f"X has shape {X.shape}, expected {P.x_shape}")
        return reconstruct(X)
    return P.check_x(X)


def g_value(P: Problem, X) -> float:
    return P.loss.value(_dense(P, X))


def g_grad(P: Problem, X) -> np.ndarray:
    return P.loss.grad(_dense(P, X))


def f_value(P: Problem, X: FactoredIterate) -> float:
    """Full objective ``g(X) + lam * rank(X)`` of a factored iterate."""
    if not isinstance(X, FactoredIterate):
        raise InputError("f_value expects a FactoredIterate")
    return g_value(P, X) + P.lam * X.rank


def lipschitz_bound(P: Problem) -> float:
    """Lipschitz constant ``L = 2 sigma_max(D)^2`` of the gradient."""
    L = P.loss.lipschitz()
    if L == 0:
        raise DegenerateProblemError("D is the zero matrix")
    return L


def grad_bound(P: Problem, X0: FactoredIterate, estimator="column-norm"):
    """Bound ``G`` on ``sigma_max(grad g)`` over ``{X : F(X) <= F(X0)}``.

    ``G = 2 c sqrt(F(X0))`` where ``c`` is the largest column norm of ``D``
    (``"column-norm"``) or its spectral norm (``"spectral-norm"``). Only the
    spectral variant is a worst-case bound; the column variant is the sharper
    estimate used for the high-probability step-size argument on Gaussian
    designs.
    """
    if estimator == "column-norm":
        c = max_column_norm(P.D)
    elif estimator == "spectral-norm":
        c = spectral_norm(P.D)
    else:
        raise InputError(f"unknown gradient-bound estimator {estimator!r}")
    return 2.0 * c * float(np.sqrt(f_value(P, X0)))


@dataclass(frozen=True)
class StepSizePlan:
    """Step size `s` with the bounds ``L`` and ``G`` it was derived from.

    ``satisfies_condition`` records whether ``s <= min(2 lam / G^2, 1 / L)``;
    it is always true in auto mode.
    """

    L: float
    G: float
    s: float
    mode: str = "auto"
    g_estimator: str = "column-norm"
    satisfies_condition: bool = True

    def __post_init__(self):
        if not self.s > 0:
            raise InputError(f"step size must be positive, got {self.s}")

    def to_dict(self):
        return {"L": self.L, "G": self.G, "s": self.s, "mode": self.mode,
                "g_estimator": self.g_estimator,
                "satisfies_condition": self.satisfies_condition}


def step_size(P: Problem, X0: FactoredIterate, mode="auto", s=None,
              estimator="column-norm") -> StepSizePlan:
    """Pick (``mode="auto"``) or vet (``mode="manual"``) the step size.

    Auto mode returns exactly ``min(2 lam / G^2, 1 / L)``. Manual mode keeps
    the user's `s` and records whether it meets that condition.
    """
    L = lipschitz_bound(P)
    G = grad_bound(P, X0, estimator)
    if mode == "auto":
        if G == 0:
            raise DegenerateProblemError(
                "gradient bound G is zero (F(X0) == 0); auto step size undefined")
        s_val = min(2.0 * P.lam / G**2, 1.0 / L)
        # round down so both inequalities hold in floating point too
        while s_val * G**2 > 2.0 * P.lam or s_val * L > 1.0:
            s_val = float(np.nextafter(s_val, 0.0))
        ok = True
    elif mode == "manual":
        if s is None or not s > 0:
            raise InputError(f"manual step size must be positive, got {s}")
        s_val = float(s)
        ok = s_val * L <= 1.0 and s_val * G**2 <= 2.0 * P.lam
    else:
        raise InputError(f"unknown step-size mode {mode!r}")
    return StepSizePlan(L=L, G=G, s=s_val, mode=mode, g_estimator=estimator,
                        satisfies_condition=bool(ok))


def default_x0(P: Problem) -> FactoredIterate:
    """``D^T Y / sigma_max(D)^2`` in factored form (generically full rank)."""
    L = lipschitz_bound(P)
    return factor(P.D.T @ P.Y * (2.0 / L))
