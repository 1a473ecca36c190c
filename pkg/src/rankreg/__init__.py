"""Rank-regularized least squares solved by proximal gradient methods.

``F(X) = ||Y - D X||_F^2 + lam * rank(X)`` is minimized by plain proximal
gradient descent and two accelerated variants that project the extrapolated
point onto the current singular value support. The package also ships the
oracles and Monte Carlo harnesses used to check the support-shrinkage,
descent and rate properties of the iterates.
"""
from .exceptions import (DegenerateProblemError, InputError,
                         InsufficientDataError, PropertyViolation, RankRegError)
from .objective import (Problem, SquaredLoss, StepSizePlan, default_x0,
                        f_value, g_grad, g_value, grad_bound, lipschitz_bound,
                        step_size)
from .solvers import (ALGORITHMS, IterRecord, SolverConfig, Trace, alpha_next,
                      fixpoint_residual, pgd_step, solve, solve_apg_monotone,
                      solve_apg_nonmonotone, solve_pgd)
from .spectral import (FactoredIterate, SvdFactors, factor, frobenius_norm,
                       hard_threshold, max_column_norm, reconstruct,
                       spectral_norm, support_project, svd)

__version__ = "0.1.0"
