import numpy as np
import pytest

from rankreg.objective import Problem, StepSizePlan
from rankreg.solvers import IterRecord, SolverConfig, Trace
from rankreg.spectral import FactoredIterate

# filled by test_acceptance; printed once at the end of the session
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_trace(ranks, algorithm="pgd", objectives=None, z_ranks=None):
    """Hand-built trace with the given rank sequence (for oracle tests)."""
    P = Problem(np.eye(2), np.eye(2), 1.0)
    plan = StepSizePlan(L=2.0, G=2.0, s=0.25)
    cfg = SolverConfig(algorithm, plan)
    objectives = objectives or [float(10 - t) for t in range(len(ranks))]
    recs = []
    for t, r in enumerate(ranks):
        recs.append(IterRecord(t, objectives[t], objectives[t] - r, r, 0.0, 1.0,
                               z_rank=None if z_ranks is None else z_ranks[t]))
    return Trace(recs, "max_iters", FactoredIterate.zeros((2, 2)), cfg, P)
