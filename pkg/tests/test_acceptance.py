"""Acceptance criteria, one test each, at their stated tolerances.

Every test records a one-line PASS/FAIL summary; the lines are printed
together at the end of the pytest run. Run this file directly for just the
acceptance summary::

    python tests/test_acceptance.py
"""
import math
import sys
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from rankreg import oracles, suites, theory
from rankreg.cli import main

N_BUNDLES = 50
N_RATE_RUNS = 20


def _record(num, title, passed, detail):
    line = f"criterion {num:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES[num] = line
    print(line)
    return passed


@pytest.fixture(scope="module")
def bundle_runs():
    """All three solvers on the 50 standard bundles, with wall time."""
    t = time.perf_counter()
    runs = {}
    for seed in range(N_BUNDLES):
        P = suites.standard_bundle(seed).problem()
        runs[seed] = {alg: tr for alg, (_, tr) in suites.run_all(P).items()}
    return runs, time.perf_counter() - t


def test_criterion_01_prox_oracle_equivalence():
    t = time.perf_counter()
    rep = suites.prox_equivalence(seed=0, count=500)
    dt = time.perf_counter() - t
    ok = rep["passed"] and dt < 10.0
    _record(1, "prox oracle equivalence", ok,
            f"500 matrices x {len(rep['lambda_s'])} lambda*s, rank mismatches="
            f"{len(rep['rank_mismatches'])}, max gap={rep['max_frobenius_gap']:.2e} "
            f"(<= 1e-9), {dt:.1f}s (< 10s)")
    assert ok


def test_criterion_02_support_shrinkage(bundle_runs):
    runs, solve_time = bundle_runs
    t = time.perf_counter()
    bad = []
    for seed, by_alg in runs.items():
        for alg, tr in by_alg.items():
            for seq in (("x", "z") if alg == "apg-m" else ("x",)):
                rep = oracles.check_support_shrinkage(tr, seq)
                if rep.violations:
                    bad.append((seed, alg, seq, rep.violations[:3]))
                oracles.segment_trace(tr, seq)
    dt = solve_time + time.perf_counter() - t
    ok = not bad and dt < 60.0
    _record(2, "support shrinkage", ok,
            f"{N_BUNDLES} bundles x 3 algorithms, violations={len(bad)}, "
            f"{dt:.1f}s (< 60s)")
    assert not bad, bad[:5]
    assert dt < 60.0


def test_criterion_03_sufficient_decrease(bundle_runs):
    runs, _ = bundle_runs
    bad, worst = [], math.inf
    for seed, by_alg in runs.items():
        rep = oracles.check_sufficient_decrease(by_alg["pgd"])
        assert rep.applicable
        worst = min(worst, rep.min_margin / rep.slack)
        if rep.violations:
            bad.append((seed, rep.violations[:3]))
    ok = not bad
    _record(3, "sufficient decrease (pgd)", ok,
            f"{N_BUNDLES} traces, violations={len(bad)}, "
            f"smallest margin/slack={worst:.3g}")
    assert ok, bad[:5]


def test_criterion_04_monotonicity(bundle_runs):
    runs, _ = bundle_runs
    bad, held = [], 0
    for seed, by_alg in runs.items():
        for alg in ("pgd", "apg-m"):
            v = oracles.check_monotone(by_alg[alg], atol=1e-12)
            if v:
                bad.append((seed, alg, "monotone", v[:3]))
        tr = by_alg["apg-m"]
        v = oracles.check_acceptance_flags(tr)
        if v:
            bad.append((seed, "apg-m", "flags", v[:3]))
        held += sum(1 for r in tr.records[2:] if not r.z_accepted)
    ok = not bad
    _record(4, "monotone objective and acceptance flags", ok,
            f"{N_BUNDLES} bundles, violations={len(bad)}, held apg-m "
            f"iterates explained={held}")
    assert ok, bad[:5]


def test_criterion_05_rate_bounds():
    bad, checked = [], 0
    for seed in range(N_RATE_RUNS):
        P = suites.standard_bundle(seed).problem()
        for alg in ("pgd", "apg-nm", "apg-m"):
            rep = suites.rate_check(P, alg, seed)
            checked += 1
            if not rep["passed"]:
                bad.append((seed, alg, rep.get("error"),
                            rep.get("violations", [])[:3]))
    ok = not bad
    _record(5, "rate bounds after support stabilization", ok,
            f"{N_RATE_RUNS} converged runs per algorithm ({checked} total), "
            f"failing runs={len(bad)}")
    assert ok, bad[:5]


def test_criterion_06_step_condition_montecarlo():
    n = theory.theorem1_required_n(4, 10, 1, 25, 0)
    t = time.perf_counter()
    Y = np.zeros((4, 1))
    Y[0, 0] = 5.0
    rep = theory.theorem1_montecarlo(4, 10, 1.0, Y, trials=500, seed=0)
    dt = time.perf_counter() - t
    ok = (n == 1787 and abs(rep.theoretical_bound - 0.9189) < 5e-5
          and not rep.vacuous and rep.passed and dt < 120.0)
    _record(6, "step-size condition Monte Carlo", ok,
            f"n={n}, empirical={rep.empirical_probability:.4f} >= "
            f"{rep.theoretical_bound:.4f} - {rep.margin:.4f}, {dt:.1f}s (< 120s)")
    assert ok


def test_criterion_07_tail_bounds():
    lm = theory.laurent_massart_check(np.ones(5), 1.0, trials=100000, seed=0)
    ds = theory.davidson_szarek_check(400, 25, trials=20000, t=0.2, seed=0)
    ok = lm.passed and ds.passed
    _record(7, "chi-square and extreme singular value tails", ok,
            f"chi-square tail {lm.empirical_probability:.4f} <= "
            f"{lm.theoretical_bound:.4f}+{lm.margin:.4f}; sigma_max tail "
            f"{ds.empirical_probability:.2e}, sigma_min tail "
            f"{ds.details['lower_tail_frequency']:.2e} <= "
            f"{ds.theoretical_bound:.2e}+{ds.margin:.2e}")
    assert ok, (lm.to_dict(), ds.to_dict())


def test_criterion_08_gradient_fd():
    rep = suites.fd_gradient(seed=0, count=100)
    ok = rep["passed"]
    _record(8, "gradient vs finite differences", ok,
            f"100 instances, max relative error={rep['max_relative_error']:.2e} (<= 1e-6)")
    assert ok


def test_criterion_09_acceleration(bundle_runs):
    runs, _ = bundle_runs
    n_pgd = suites.iterations_to_reach(runs[0]["pgd"], 1e-6)
    n_apg = suites.iterations_to_reach(runs[0]["apg-m"], 1e-6)
    ok = n_apg <= n_pgd
    _record(9, "apg-m reaches its final objective no later than pgd", ok,
            f"standard bundle seed 0: apg-m {n_apg} iterations, pgd {n_pgd} "
            f"iterations to within 1e-6 of final")
    assert ok


def _run_twice(tmp_path, argv_fn):
    blobs = []
    for k in (1, 2):
        d = tmp_path / f"run{k}"
        d.mkdir(parents=True, exist_ok=True)
        code = main(argv_fn(d))
        blobs.append((code, {p.relative_to(d).as_posix(): p.read_bytes()
                             for p in sorted(d.rglob("*")) if p.is_file()}))
    return blobs


def test_criterion_10_determinism(tmp_path):
    src = tmp_path / "bundle"
    assert main(["--seed", "7", "synth", "--out", str(src)]) == 0
    commands = {
        "synth": lambda d: ["--seed", "7", "synth", "--out", str(d / "b")],
        "compare": lambda d: ["compare", str(src), "--out-dir", str(d / "c")],
        "verify-operators": lambda d: ["verify", "operators", "--out", str(d / "r.json")],
        "verify-lemmas": lambda d: ["verify", "lemmas", "--bundles", "1",
                                    "--out", str(d / "r.json")],
        "verify-rates": lambda d: ["verify", "rates", "--bundles", "1",
                                   "--out", str(d / "r.json")],
        "verify-theorem1": lambda d: ["verify", "theorem1", "--out", str(d / "r.json")],
        "verify-tails": lambda d: ["verify", "tails", "--out", str(d / "r.json")],
    }
    for alg in ("pgd", "apg-nm", "apg-m"):
        commands[f"solve-{alg}"] = (
            lambda d, alg=alg: ["solve", str(src), "--algo", alg,
                                "--trace-out", str(d / "t.csv"),
                                "--x-out", str(d / "x.csv")])
    differing = []
    for name, fn in commands.items():
        (a_code, a), (b_code, b) = _run_twice(tmp_path / name, fn)
        if a_code != 0 or b_code != 0 or not a or a != b:
            differing.append(name)
    ok = not differing
    _record(10, "byte-identical reruns", ok,
            f"{len(commands)} commands rerun, differing outputs={differing or 'none'}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
