"""Proximal gradient solvers for rank-regularized least squares.

Three schemes share one prox step ``T_theta(V - s grad g(V))`` with
``theta = sqrt(2 lam s)``:

* ``pgd``    -- plain proximal gradient descent from ``X^t``;
* ``apg-nm`` -- non-monotone accelerated variant; the extrapolated point is
  projected onto the singular value support of ``X^t`` before the step;
* ``apg-m``  -- monotone accelerated variant; the step produces a candidate
  ``Z^{t+1}`` which replaces ``X^t`` only if it does not increase ``F``.

Every solve returns ``(final_iterate, Trace)``. Traces start at ``t = 0``
with the initial point; for the accelerated schemes record ``t = 1`` repeats
it, since those schemes start from ``X^1 = X^0``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import InputError
from .objective import Problem, StepSizePlan
from .spectral import (FactoredIterate, _hard_threshold, _support_project,
                       hard_threshold, reconstruct)

__all__ = [
    "ALGORITHMS",
    "SolverConfig",
    "IterRecord",
    "Trace",
    "pgd_step",
    "fixpoint_residual",
    "alpha_next",
    "solve_pgd",
    "solve_apg_nonmonotone",
    "solve_apg_monotone",
    "solve",
    "default_tol",
]

ALGORITHMS = ("pgd", "apg-nm", "apg-m")


def default_tol(P: Problem) -> float:
    return 1e-9 * max(1.0, float(np.linalg.norm(P.Y)))


@dataclass(frozen=True)
class SolverConfig:
    """Run settings. ``tol=None`` means :func:`default_tol` of the problem."""

    algorithm: str
    plan: StepSizePlan
    max_iters: int = 10000
    tol: float | None = None
    alpha0: float = 1.0
    keep_iterates: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InputError(f"unknown algorithm {self.algorithm!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InputError(f"max_iters must be a positive integer")
        if self.tol is not None and not self.tol > 0:
            raise InputError(f"tol must be positive, got {self.tol}")
        if not self.alpha0 >= 1:
            raise InputError(f"alpha0 must be >= 1, got {self.alpha0}")

    def to_dict(self):
        return {"algorithm": self.algorithm, "plan": self.plan.to_dict(),
                "max_iters": self.max_iters, "tol": self.tol,
                "alpha0": self.alpha0}


@dataclass
class IterRecord:
    iter: int
    objective: float
    g_part: float
    rank: int
    step_norm: float
    fixpoint_residual: float
    alpha: float | None = None
    z_accepted: bool | None = None
    # apg-m only: the candidate sequence Z^t
    z_rank: int | None = None
    z_objective: float | None = None

    @property
    def support_size(self):
        return self.rank


@dataclass
class Trace:
    records: list
    terminated_by: str
    final: FactoredIterate
    config: SolverConfig
    problem: Problem
    iterates: list | None = None
    z_iterates: list | None = None
    # iterations where sigma_max of the gradient exceeded the plan's G
    grad_bound_exceeded: list = field(default_factory=list)

    @property
    def algorithm(self):
        return self.config.algorithm

    @property
    def s(self):
        return self.config.plan.s

    @property
    def L(self):
        return self.config.plan.L

    def objectives(self):
        return np.array([r.objective for r in self.records])

    def ranks(self):
        return [r.rank for r in self.records]

    def to_rows(self):
        return [asdict(r) for r in self.records]


def _fro(A):
    return math.sqrt(float(np.vdot(A, A)))


def _threshold(P, s):
    return math.sqrt(2.0 * P.lam * s)


def pgd_step(P: Problem, X: FactoredIterate, s: float) -> FactoredIterate:
    """One proximal gradient step ``T_sqrt(2 lam s)(X - s grad g(X))``."""
    if not s > 0:
        raise InputError(f"step size must be positive, got {s}")
    Xd = reconstruct(X)
    return hard_threshold(Xd - s * P.loss.grad(Xd), _threshold(P, s))


def fixpoint_residual(P: Problem, X: FactoredIterate, s: float) -> float:
    """``||X - pgd_step(X)||_F``; zero exactly at prox fixed points."""
    return float(np.linalg.norm(reconstruct(X) - reconstruct(pgd_step(P, X, s))))


def alpha_next(alpha: float) -> float:
    """Momentum recursion ``(sqrt(1 + 4 alpha^2) + 1) / 2``."""
    if not alpha >= 1:
        raise InputError(f"alpha must be >= 1, got {alpha}")
    return (math.sqrt(1.0 + 4.0 * alpha * alpha) + 1.0) / 2.0


class _Run:
    """Loop bookkeeping shared by the three solvers."""

    def __init__(self, P, X0, cfg, algorithm):
        if cfg.algorithm != algorithm:
            raise InputError(
                f"config is for {cfg.algorithm!r}, not {algorithm!r}")
        if tuple(X0.shape) != P.x_shape:
            raise InputError(f"X0 has shape {X0.shape}, expected {P.x_shape}")
        self.P = P
        self.lam = P.lam
        self.D, self.Y = P.D, P.Y
        self.cfg = cfg
        self.s = cfg.plan.s
        # (2 s D^T) R is the step s * grad g(X) for residual R = D X - Y
        self.Ds = np.ascontiguousarray((2.0 * self.s) * P.D.T)
        self.gbound = self.s * cfg.plan.G
        self.theta = _threshold(P, self.s)
        self.tol = default_tol(P) if cfg.tol is None else cfg.tol
        self.records = []
        self.iterates = [] if cfg.keep_iterates else None
        self.z_iterates = [] if (cfg.keep_iterates and algorithm == "apg-m") else None
        self.exceeded = []

    def value_grad(self, Xd):
        # squared loss and the scaled gradient s * grad g from one residual
        R = self.D @ Xd - self.Y
        return float(np.vdot(R, R)), self.Ds @ R

    def grad(self, Xd):
        return self.Ds @ (self.D @ Xd - self.Y)

    def check_grad(self, t, SG):
        # compares s * sigma_max(grad g) with s * G; the Frobenius norm
        # dominates the spectral norm, so the SVD is skipped when it can be
        bound = self.gbound
        if _fro(SG) > bound and np.linalg.norm(SG, 2) > bound:
            self.exceeded.append(t)

    def prox(self, Xd, SG):
        return _hard_threshold(Xd - SG, self.theta)

    def record(self, rec, X, Z=None):
        self.records.append(rec)
        if self.iterates is not None:
            self.iterates.append(X)
        if self.z_iterates is not None:
            self.z_iterates.append(Z)

    def done(self, t, res):
        if res <= self.tol:
            return "tolerance"
        if t >= self.cfg.max_iters:
            return "max_iters"
        return None

    def trace(self, final, reason):
        return Trace(self.records, reason, final, self.cfg, self.P,
                     self.iterates, self.z_iterates, self.exceeded)


def solve_pgd(P: Problem, X0: FactoredIterate, cfg: SolverConfig):
    """Proximal gradient descent.

    Stops once ``fixpoint_residual(X^t) <= tol`` or after ``max_iters``
    updates. Returns the last iterate and the trace.
    """
    run = _Run(P, X0, cfg, "pgd")
    lam = run.lam
    X, Xd = X0, reconstruct(X0)
    prev_d = Xd
    t = 0
    while True:
        g, SG = run.value_grad(Xd)
        run.check_grad(t, SG)
        Xn = run.prox(Xd, SG)
        Xnd = reconstruct(Xn)
        res = _fro(Xd - Xnd)
        run.record(IterRecord(t, g + lam * X.rank, g, X.rank, _fro(Xd - prev_d),
                              res), X)
        reason = run.done(t, res)
        if reason:
            return X, run.trace(X, reason)
        prev_d = Xd
        X, Xd = Xn, Xnd
        t += 1


def solve_apg_nonmonotone(P: Problem, X0: FactoredIterate, cfg: SolverConfig):
    """Accelerated proximal gradient with support projection (non-monotone).

    Per iteration ``t >= 1``::

        U = X^t + (alpha^{t-1} - 1) / alpha^t * (X^t - X^{t-1})
        V = best rank-(rank X^t) approximation of U
        X^{t+1} = T_theta(V - s grad g(V))

    The objective may increase between iterations.
    """
    run = _Run(P, X0, cfg, "apg-nm")
    lam = run.lam
    X = X0
    Xd = Xprev_d = reconstruct(X0)
    a_prev = a = cfg.alpha0
    t = 0
    while True:
        g, SG = run.value_grad(Xd)
        res = _fro(Xd - reconstruct(run.prox(Xd, SG)))
        run.record(IterRecord(t, g + lam * X.rank, g, X.rank, _fro(Xd - Xprev_d),
                              res, alpha=a), X)
        reason = run.done(t, res)
        if reason:
            return X, run.trace(X, reason)
        if t == 0:
            # X^1 = X^0; only the momentum scalar advances
            a_prev, a = a, alpha_next(a)
            t = 1
            continue

        U = Xd + ((a_prev - 1.0) / a) * (Xd - Xprev_d)
        Vd = reconstruct(_support_project(U, X.rank))
        SGV = run.grad(Vd)
        run.check_grad(t, SGV)
        X = run.prox(Vd, SGV)
        Xprev_d, Xd = Xd, reconstruct(X)
        a_prev, a = a, alpha_next(a)
        t += 1


def solve_apg_monotone(P: Problem, X0: FactoredIterate, cfg: SolverConfig):
    """Accelerated proximal gradient with support projection (monotone).

    Per iteration ``t >= 1``::

        U = X^t + (alpha^{t-1} - 1) / alpha^t * (X^t - X^{t-1})
                + (alpha^t - 1) / alpha^t * (Z^t - X^t)
        V = best rank-(rank Z^t) approximation of U
        Z^{t+1} = T_theta(V - s grad g(V))
        X^{t+1} = Z^{t+1} if F(Z^{t+1}) <= F(X^t) else X^t

    ``IterRecord.z_accepted`` tells which branch produced ``X^t``.
    """
    run = _Run(P, X0, cfg, "apg-m")
    lam = run.lam
    X = Z = X0
    Xd = Xprev_d = Zd = reconstruct(X0)
    g, SG = run.value_grad(Xd)
    F = FZ = g + lam * X.rank
    res = _fro(Xd - reconstruct(run.prox(Xd, SG)))
    accepted = True
    a_prev = a = cfg.alpha0
    t = 0
    while True:
        run.record(IterRecord(t, F, g, X.rank, _fro(Xd - Xprev_d), res,
                              alpha=a, z_accepted=accepted, z_rank=Z.rank,
                              z_objective=FZ), X, Z)
        reason = run.done(t, res)
        if reason:
            return X, run.trace(X, reason)
        if t == 0:
            # Z^1 = X^1 = X^0; only the momentum scalar advances
            a_prev, a = a, alpha_next(a)
            t = 1
            continue

        U = (Xd + ((a_prev - 1.0) / a) * (Xd - Xprev_d)
             + ((a - 1.0) / a) * (Zd - Xd))
        Vd = reconstruct(_support_project(U, Z.rank))
        SGV = run.grad(Vd)
        run.check_grad(t, SGV)
        Z = run.prox(Vd, SGV)
        Zd = reconstruct(Z)
        gZ, SGZ = run.value_grad(Zd)
        FZ = gZ + lam * Z.rank
        Xprev_d = Xd
        accepted = FZ <= F
        if accepted:
            X, Xd, F, g = Z, Zd, FZ, gZ
            res = _fro(Xd - reconstruct(run.prox(Xd, SGZ)))
        # a held iterate keeps its residual
        a_prev, a = a, alpha_next(a)
        t += 1


_SOLVERS = {
    "pgd": solve_pgd,
    "apg-nm": solve_apg_nonmonotone,
    "apg-m": solve_apg_monotone,
}


def solve(P: Problem, X0: FactoredIterate, cfg: SolverConfig):
    """Dispatch to the solver named by ``cfg.algorithm``."""
    return _SOLVERS[cfg.algorithm](P, X0, cfg)
