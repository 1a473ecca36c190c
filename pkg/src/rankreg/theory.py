"""Empirical checks of the convergence-rate and probability bounds.

Rate bounds are evaluated on recorded traces against a converged reference
point ``X*``. The Monte Carlo checks draw every trial from its own random
stream derived from ``(seed, trial index)``, so reports are reproducible and
independent of evaluation order.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import mpmath
import numpy as np

from .exceptions import InputError, InsufficientDataError
from .objective import Problem, f_value, grad_bound, lipschitz_bound
from .solvers import SolverConfig, solve
from .spectral import FactoredIterate, as_matrix, reconstruct

__all__ = [
    "MonteCarloReport",
    "RateBoundReport",
    "stabilization_index",
    "converged_reference",
    "rate_bound_thm2",
    "rate_bound_thm3",
    "rate_bound_thm4",
    "theorem1_required_n",
    "theorem1_bound",
    "theorem1_trial",
    "theorem1_montecarlo",
    "laurent_massart_check",
    "davidson_szarek_check",
]

REFERENCE_TOL = 1e-11


# --- rate bounds ---------------------------------------------------------

@dataclass
class RateBoundReport:
    theorem: str
    t0: int
    bound_constant: float
    f_star: float
    slack: float
    violations: list = field(default_factory=list)
    margin_series: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        d["min_margin"] = min(self.margin_series) if self.margin_series else None
        del d["margin_series"]
        return d


def stabilization_index(sizes) -> int:
    """Position right after the last change in a support-size sequence."""
    t0 = 0
    for i in range(1, len(sizes)):
        if sizes[i] != sizes[i - 1]:
            t0 = i
    return t0


def converged_reference(P: Problem, X0: FactoredIterate, cfg: SolverConfig,
                        tol=REFERENCE_TOL, max_iters=200000):
    """Re-run `cfg` to ``tol`` with iterates kept; returns ``(X*, trace)``.

    Raises InsufficientDataError if the run stops on ``max_iters`` instead.
    """
    ref_cfg = SolverConfig(cfg.algorithm, cfg.plan, max_iters=max_iters,
                           tol=tol, alpha0=cfg.alpha0, keep_iterates=True)
    X, trace = solve(P, X0, ref_cfg)
    if trace.terminated_by != "tolerance":
        raise InsufficientDataError(
            f"reference run did not reach residual {tol} in {max_iters} iterations")
    return X, trace


def _prepare(trace, X_star, s, sizes):
    if trace.iterates is None:
        raise InsufficientDataError("trace was recorded without iterates")
    s = trace.s if s is None else s
    if X_star.rank != sizes[-1]:
        raise InsufficientDataError(
            f"X* has rank {X_star.rank} but the trace stabilizes at {sizes[-1]}")
    P = trace.problem
    f_star = f_value(P, X_star)
    slack = 1e-8 * max(1.0, trace.records[0].objective)
    return s, f_star, slack


def _check_tail(trace, t0, f_star, slack, rhs):
    last = len(trace.records) - 1
    if t0 >= last:
        raise InsufficientDataError(
            f"no iterations after the stabilization index {t0}")
    bad, margins = [], []
    for m in range(t0, last):
        margin = rhs(m) - (trace.records[m + 1].objective - f_star)
        margins.append(margin)
        if margin < -slack:
            bad.append(m)
    return bad, margins


def rate_bound_thm2(trace, X_star: FactoredIterate, s=None) -> RateBoundReport:
    """PGD: ``F(X^{m+1}) - F* <= ||X^{t0} - X*||_F^2 / (2 s (m - t0 + 1))``."""
    sizes = trace.ranks()
    s, f_star, slack = _prepare(trace, X_star, s, sizes)
    t0 = stabilization_index(sizes)
    dist2 = float(np.sum((reconstruct(trace.iterates[t0]) - reconstruct(X_star)) ** 2))
    bad, margins = _check_tail(
        trace, t0, f_star, slack, lambda m: dist2 / (2.0 * s * (m - t0 + 1)))
    return RateBoundReport("thm2", t0, dist2 / (2.0 * s), f_star, slack,
                           bad, margins)


def _accelerated_constant(trace, X_star, s, f_star, t0, lead):
    # (1/2s) ||(a - 1) X^{t0-1} - a * lead + X*||^2 + a^2 (F(X^{t0}) - F*),
    # with a = alpha^{t0-1}
    a = trace.records[t0 - 1].alpha
    A = ((a - 1.0) * reconstruct(trace.iterates[t0 - 1]) - a * reconstruct(lead)
         + reconstruct(X_star))
    return (float(np.sum(A * A)) / (2.0 * s)
            + a * a * (trace.records[t0].objective - f_star))


def rate_bound_thm3(trace, X_star: FactoredIterate, s=None) -> RateBoundReport:
    """apg-nm: ``F(X^{m+1}) - F* <= 4 V / (m + 1)^2`` for ``m >= t0``."""
    if trace.algorithm != "apg-nm":
        raise InputError("rate_bound_thm3 expects an apg-nm trace")
    sizes = trace.ranks()
    s, f_star, slack = _prepare(trace, X_star, s, sizes)
    t0 = max(1, stabilization_index(sizes))
    V = _accelerated_constant(trace, X_star, s, f_star, t0, trace.iterates[t0])
    bad, margins = _check_tail(trace, t0, f_star, slack,
                               lambda m: 4.0 * V / (m + 1) ** 2)
    return RateBoundReport("thm3", t0, V, f_star, slack, bad, margins)


def rate_bound_thm4(trace, X_star: FactoredIterate, s=None) -> RateBoundReport:
    """apg-m: as :func:`rate_bound_thm3` with ``Z^{t0}`` in place of ``X^{t0}``.

    ``t0`` is the later of the X and Z stabilization indices.
    """
    if trace.algorithm != "apg-m":
        raise InputError("rate_bound_thm4 expects an apg-m trace")
    sizes = trace.ranks()
    s, f_star, slack = _prepare(trace, X_star, s, sizes)
    z_sizes = [r.z_rank for r in trace.records]
    t0 = max(1, stabilization_index(sizes), stabilization_index(z_sizes))
    W = _accelerated_constant(trace, X_star, s, f_star, t0, trace.z_iterates[t0])
    bad, margins = _check_tail(trace, t0, f_star, slack,
                               lambda m: 4.0 * W / (m + 1) ** 2)
    return RateBoundReport("thm4", t0, W, f_star, slack, bad, margins)


# --- Monte Carlo ---------------------------------------------------------

@dataclass
class MonteCarloReport:
    """Empirical frequency of an event against an analytic probability bound.

    ``direction="at_least"``: the bound is a lower bound on the success
    probability. ``"at_most"``: an upper bound on a tail frequency. The
    comparison allows a three-sigma binomial margin.
    """

    name: str
    trials: int
    successes: int
    theoretical_bound: float
    direction: str
    parameters: dict
    seed: int
    details: dict = field(default_factory=dict)

    @property
    def empirical_probability(self):
        return self.successes / self.trials

    @property
    def margin(self):
        p = min(max(self.theoretical_bound, 0.0), 1.0)
        return 3.0 * float(np.sqrt(p * (1.0 - p) / self.trials))

    @property
    def vacuous(self):
        if self.direction == "at_least":
            return self.theoretical_bound <= 0.0
        return self.theoretical_bound >= 1.0

    @property
    def passed(self):
        if self.vacuous:
            ok = True
        elif self.direction == "at_least":
            ok = self.empirical_probability >= self.theoretical_bound - self.margin
        else:
            ok = self.empirical_probability <= self.theoretical_bound + self.margin
        return ok and self.details.get("extra_checks_passed", True)

    def to_dict(self):
        d = asdict(self)
        d.update(empirical_probability=self.empirical_probability,
                 margin=self.margin, vacuous=self.vacuous, passed=self.passed)
        return d


def _trial_rng(seed, i):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


def theorem1_required_n(d, a, lam, x0, s_card) -> int:
    """Smallest integer ``n`` with
    ``n >= (sqrt(d) + a + sqrt((d + 2 sqrt(d a) + 2 a)(x0 + lam |S|) / lam))^2``,
    evaluated in 50-digit arithmetic.
    """
    if d < 1 or not a > 0 or not lam > 0 or x0 < 0 or s_card < 0:
        raise InputError("need d >= 1, a > 0, lam > 0, x0 >= 0, s_card >= 0")
    with mpmath.workdps(50):
        d_, a_, lam_ = mpmath.mpf(d), mpmath.mpf(a), mpmath.mpf(lam)
        inner = (d_ + 2 * mpmath.sqrt(d_ * a_) + 2 * a_) * (mpmath.mpf(x0) + lam_ * s_card) / lam_
        val = (mpmath.sqrt(d_) + a_ + mpmath.sqrt(inner)) ** 2
        return int(mpmath.ceil(val))


def theorem1_bound(n, a) -> float:
    """``1 - exp(-a^2 / 2) - n exp(-a)`` (may be negative, i.e. vacuous)."""
    with mpmath.workdps(50):
        return float(1 - mpmath.exp(-mpmath.mpf(a) ** 2 / 2) - n * mpmath.exp(-mpmath.mpf(a)))


def _zero_x0(X0, n, k):
    if X0 is None:
        return FactoredIterate.zeros((n, k))
    if X0.rank != 0:
        raise InputError("the Monte Carlo harness supports X0 = 0 only")
    return FactoredIterate.zeros((n, k))


def theorem1_trial(d, n, lam, Y, X0, rng) -> bool:
    """Draw ``D ~ N(0, 1)^{d x n}`` and test ``1/L <= 2 lam / G^2``.

    ``G`` uses the column-norm estimator. Equivalent to ``G^2 <= 2 lam L``.
    """
    Y = as_matrix(Y, "Y")
    if Y.shape[0] != d or n < d:
        raise InputError(f"need Y with {d} rows and n >= d")
    D = rng.standard_normal((d, n))
    P = Problem(Y, D, lam)
    X0 = X0 if X0 is not None else FactoredIterate.zeros(P.x_shape)
    L = lipschitz_bound(P)
    G = grad_bound(P, X0, "column-norm")
    return bool(G * G <= 2.0 * lam * L)


def theorem1_montecarlo(d, a, lam, Y, X0=None, trials=500, seed=0) -> MonteCarloReport:
    """Frequency of ``1/L <= 2 lam / G^2`` over Gaussian designs at the
    sample size given by :func:`theorem1_required_n`, with ``X0 = 0``.
    """
    if trials < 100:
        raise InputError("theorem1_montecarlo needs at least 100 trials")
    Y = as_matrix(Y, "Y")
    x0 = float(np.sum(Y * Y))
    n = theorem1_required_n(d, a, lam, x0, 0)
    X0 = _zero_x0(X0, n, Y.shape[1])
    hits = sum(theorem1_trial(d, n, lam, Y, X0, _trial_rng(seed, i))
               for i in range(trials))
    return MonteCarloReport(
        "theorem1", trials, int(hits), theorem1_bound(n, a), "at_least",
        {"d": d, "a": a, "lambda": lam, "x0": x0, "s_card": 0, "n": n,
         "k": Y.shape[1]}, seed)


def laurent_massart_check(a_vec, t, trials=100000, seed=0, chunk=10000) -> MonteCarloReport:
    """Tail of ``Z = sum a_i (Y_i^2 - 1)`` at ``2 ||a||_2 sqrt(t) + 2 ||a||_inf t``
    against ``exp(-t)``.

    Samples come in chunks; chunk ``c`` uses the stream ``(seed, c)``.
    """
    a = np.asarray(a_vec, dtype=float).ravel()
    if a.size == 0 or not (a > 0).all():
        raise InputError("a_vec entries must be positive")
    if not t > 0:
        raise InputError("t must be positive")
    thresh = 2.0 * np.linalg.norm(a) * np.sqrt(t) + 2.0 * np.max(a) * t
    hits = 0
    for c, start in enumerate(range(0, trials, chunk)):
        m = min(chunk, trials - start)
        Yc = _trial_rng(seed, c).standard_normal((m, a.size))
        Z = (Yc * Yc - 1.0) @ a
        hits += int(np.count_nonzero(Z >= thresh))
    return MonteCarloReport(
        "laurent_massart", trials, hits, float(np.exp(-t)), "at_most",
        {"a": a.tolist(), "t": t, "threshold": float(thresh)}, seed)


def davidson_szarek_check(m, n, trials=20000, t=0.2, seed=0, batch=500) -> MonteCarloReport:
    """Extreme singular values of ``A ~ N(0, 1/m)^{m x n}``.

    ``successes`` counts the upper event ``sigma_1 >= 1 + sqrt(n/m) + t``;
    ``details`` holds the lower event ``sigma_n <= 1 - sqrt(n/m) - t`` and
    the sample means of ``sigma_1`` and ``sigma_n`` checked against
    ``1 -/+ sqrt(n/m)``. Both events are compared with ``exp(-m t^2 / 2)``.
    """
    if m < n or n < 1:
        raise InputError("need m >= n >= 1")
    if not t > 0:
        raise InputError("t must be positive")
    r = np.sqrt(n / m)
    smax = np.empty(trials)
    smin = np.empty(trials)
    for start in range(0, trials, batch):
        idx = range(start, min(start + batch, trials))
        A = np.stack([_trial_rng(seed, i).standard_normal((m, n)) for i in idx])
        sv = np.linalg.svd(A / np.sqrt(m), compute_uv=False)
        smax[start:start + len(idx)] = sv[:, 0]
        smin[start:start + len(idx)] = sv[:, -1]
    bound = float(np.exp(-m * t * t / 2.0))
    upper = int(np.count_nonzero(smax >= 1.0 + r + t))
    lower = int(np.count_nonzero(smin <= 1.0 - r - t))
    lower_freq = lower / trials
    margin = 3.0 * float(np.sqrt(bound * (1.0 - bound) / trials))
    mean_max, mean_min = float(smax.mean()), float(smin.mean())
    se_max = 3.0 * float(smax.std(ddof=1)) / np.sqrt(trials) if trials > 1 else 0.0
    se_min = 3.0 * float(smin.std(ddof=1)) / np.sqrt(trials) if trials > 1 else 0.0
    checks = {
        "lower_tail": bool(lower_freq <= bound + margin),
        "mean_sigma_max": bool(mean_max <= 1.0 + r + se_max),
        "mean_sigma_min": bool(mean_min >= 1.0 - r - se_min),
    }
    details = {
        "lower_tail_count": lower,
        "lower_tail_frequency": lower_freq,
        "mean_sigma_max": mean_max,
        "mean_sigma_min": mean_min,
        "expectation_upper": float(1.0 + r),
        "expectation_lower": float(1.0 - r),
        "checks": checks,
        "extra_checks_passed": all(checks.values()),
    }
    return MonteCarloReport("davidson_szarek", trials, upper, bound, "at_most",
                            {"m": m, "n": n, "t": t}, seed, details)
