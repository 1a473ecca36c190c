"""Independent checks for the spectral operators and for solver traces.

Nothing here calls the thresholding operator or the solvers: the prox oracle
enumerates ranks from a bare SVD, and the trace checks read only the recorded
numbers.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import InputError, PropertyViolation
from .objective import Problem, g_grad, g_value
from .spectral import FactoredIterate, as_matrix, svd

__all__ = [
    "SupportSegment",
    "ShrinkageReport",
    "DecreaseReport",
    "prox_rank_bruteforce",
    "weyl_verify",
    "segment_trace",
    "check_support_shrinkage",
    "check_sufficient_decrease",
    "check_monotone",
    "check_acceptance_flags",
    "grad_fd_check",
]


def prox_rank_bruteforce(M, lambda_s) -> FactoredIterate:
    """Prox of ``lambda_s * rank`` by enumerating every candidate rank.

    For each ``r`` the best rank-``r`` matrix is the SVD truncation, with cost
    ``lambda_s * r + 0.5 * sum_{i > r} sigma_i^2``. The cheapest ``r`` wins;
    ties go to the smaller rank.
    """
    if not lambda_s > 0:
        raise InputError(f"lambda_s must be positive, got {lambda_s}")
    A = as_matrix(M)
    f = svd(A)
    sq = f.sigma ** 2
    best_r, best_cost = 0, None
    for r in range(len(sq) + 1):
        cost = lambda_s * r + 0.5 * float(np.sum(sq[r:]))
        if best_cost is None or cost < best_cost:
            best_r, best_cost = r, cost
    keep = f.sigma[:best_r] > 0
    return FactoredIterate(f.U[:, :best_r][:, keep], f.sigma[:best_r][keep],
                           f.V[:, :best_r][:, keep], A.shape)


def weyl_verify(A, B, i, j) -> bool:
    """Check ``sigma_{i+j-1}(A + B) <= sigma_i(A) + sigma_j(B)`` (1-based)."""
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape != B.shape:
        raise InputError(f"shapes differ: {A.shape} vs {B.shape}")
    p = min(A.shape)
    if i < 1 or j < 1 or i + j - 1 > p:
        raise InputError(f"indices i={i}, j={j} out of range for min dim {p}")
    sa, sb, sab = svd(A).sigma, svd(B).sigma, svd(A + B).sigma
    slack = 1e-10 * (sa[0] + sb[0])
    return bool(sab[i + j - 2] <= sa[i - 1] + sb[j - 1] + slack)


@dataclass(frozen=True)
class SupportSegment:
    """Maximal run of iterations sharing one support size.

    ``end_iter`` is ``None`` for the final, open-ended segment.
    """

    support_size: int
    start_iter: int
    end_iter: int | None


def _support_sizes(trace, sequence):
    if sequence == "x":
        return [(r.iter, r.rank) for r in trace.records]
    if sequence == "z":
        if trace.records and trace.records[0].z_rank is None:
            raise InputError("trace has no Z sequence (apg-m only)")
        return [(r.iter, r.z_rank) for r in trace.records]
    raise InputError(f"unknown sequence {sequence!r}")


def segment_trace(trace, sequence="x"):
    """Split a trace into subsequences of constant, shrinking support.

    Raises PropertyViolation at the first iteration whose support is larger
    than its predecessor's. Supports are prefixes, so equal sizes mean equal
    supports and a smaller size means a strict subset.
    """
    sizes = _support_sizes(trace, sequence)
    if not sizes:
        raise InputError("empty trace")
    segments = []
    start, cur = sizes[0]
    prev_t = start
    for t, r in sizes[1:]:
        if r > cur:
            raise PropertyViolation(
                f"support grew from {cur} to {r} at iteration {t}", iteration=t)
        if r < cur:
            segments.append(SupportSegment(cur, start, prev_t))
            start, cur = t, r
        prev_t = t
    segments.append(SupportSegment(cur, start, None))
    if len(segments) > sizes[0][1] + 1:
        raise PropertyViolation(
            f"{len(segments)} segments exceed initial support size + 1")
    return segments


@dataclass
class ShrinkageReport:
    sequence: str
    checked: int
    violations: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations

    def to_dict(self):
        return {**asdict(self), "passed": self.passed}


@dataclass
class DecreaseReport:
    checked: int
    slack: float
    violations: list = field(default_factory=list)
    min_margin: float | None = None
    applicable: bool = True
    note: str = ""

    @property
    def passed(self):
        return not self.violations

    def to_dict(self):
        return {**asdict(self), "passed": self.passed}


def check_support_shrinkage(trace, sequence="x") -> ShrinkageReport:
    """List every ``t`` with ``support(t+1) > support(t)``.

    Exact integer comparison: supports are stored as prefix lengths.
    """
    sizes = _support_sizes(trace, sequence)
    bad = [t1 for (t0, r0), (t1, r1) in zip(sizes, sizes[1:]) if r1 > r0]
    return ShrinkageReport(sequence, max(len(sizes) - 1, 0), bad)


def _slack(trace):
    return 1e-8 * max(1.0, trace.records[0].objective)


def check_sufficient_decrease(trace, s=None, L=None) -> DecreaseReport:
    """Check ``F(X^{t+1}) <= F(X^t) - (1/(2s) - L/2) ||X^{t+1} - X^t||_F^2``.

    Applies to PGD traces; other algorithms get an empty, non-applicable
    report. ``step_norm`` of record ``t+1`` is ``||X^{t+1} - X^t||_F``.
    """
    s = trace.s if s is None else s
    L = trace.L if L is None else L
    slack = _slack(trace)
    if trace.algorithm != "pgd":
        return DecreaseReport(0, slack, applicable=False,
                              note=f"not applicable to {trace.algorithm}")
    coef = 1.0 / (2.0 * s) - L / 2.0
    recs = trace.records
    bad, margins = [], []
    for a, b in zip(recs, recs[1:]):
        margin = a.objective - coef * b.step_norm ** 2 - b.objective
        margins.append(margin)
        if margin < -slack:
            bad.append(a.iter)
    return DecreaseReport(len(margins), slack, bad,
                          min(margins) if margins else None)


def check_monotone(trace, atol=1e-12) -> list:
    """Iterations ``t`` where ``F(X^{t+1}) > F(X^t) + atol``."""
    recs = trace.records
    return [a.iter for a, b in zip(recs, recs[1:])
            if b.objective > a.objective + atol]


def check_acceptance_flags(trace) -> list:
    """Iterations of an apg-m trace whose acceptance flag is inconsistent.

    Accepted: ``F(Z^{t+1}) <= F(X^t)`` and ``X^{t+1}`` carries Z's objective.
    Held: ``F(Z^{t+1}) > F(X^t)`` and ``X^{t+1} = X^t`` exactly.
    """
    if trace.algorithm != "apg-m":
        raise InputError("acceptance flags exist only for apg-m traces")
    bad = []
    recs = trace.records
    for a, b in zip(recs[1:], recs[2:]):
        if b.z_accepted:
            ok = b.z_objective <= a.objective and b.objective == b.z_objective
        else:
            ok = (b.z_objective > a.objective and b.objective == a.objective
                  and b.rank == a.rank and b.step_norm == 0.0)
        if not ok:
            bad.append(b.iter)
    return bad


def grad_fd_check(P: Problem, X, h=1e-5, max_entries=64, seed=0) -> float:
    """Largest central-difference error of the gradient, relative to
    ``max(1, ||grad g(X)||_F)``.

    All entries are probed when ``X`` has at most `max_entries` of them,
    otherwise a seeded random subset of that size.
    """
    if not h > 0:
        raise InputError(f"h must be positive, got {h}")
    X = P.check_x(X)
    grad = g_grad(P, X)
    n, k = X.shape
    idx = [(i, j) for i in range(n) for j in range(k)]
    if len(idx) > max_entries:
        rng = np.random.default_rng(seed)
        idx = [idx[m] for m in rng.choice(len(idx), max_entries, replace=False)]
    scale = max(1.0, float(np.linalg.norm(grad)))
    worst = 0.0
    for i, j in idx:
        E = np.zeros_like(X)
        E[i, j] = h
        fd = (g_value(P, X + E) - g_value(P, X - E)) / (2.0 * h)
        worst = max(worst, abs(fd - grad[i, j]) / scale)
    return worst
