"""Walk through the independent checks shipped with the package.

1. the hard-threshold prox against a brute-force search over ranks
2. support shrinkage and descent on a few solver traces
3. the post-stabilization rate bounds against a tightly converged X*
4. Monte Carlo checks of the step-size probability and two tail bounds

    python demos/verification_tour.py
"""
import math

import numpy as np

from rankreg import hard_threshold, reconstruct
from rankreg.oracles import prox_rank_bruteforce
from rankreg.suites import (lemmas_suite, prox_equivalence, rate_check,
                            standard_bundle, tails_suite, theorem1_suite)

# one prox by hand: keep sigma above sqrt(2 lam s), drop the rest
M = np.diag([3.0, 1.0, 0.5])
ls = 2.0
B = prox_rank_bruteforce(M, ls)
H = hard_threshold(M, math.sqrt(2 * ls))
print(f"brute force rank {B.rank}, threshold rank {H.rank}, gap "
      f"{np.linalg.norm(reconstruct(B) - reconstruct(H)):.1e}")

rep = prox_equivalence(seed=0, count=500)
print(f"prox sweep: {len(rep['rank_mismatches'])} rank mismatches, "
      f"max gap {rep['max_frobenius_gap']:.1e}")

rep = lemmas_suite(seed=0, bundles=3)
tally = {}
for c in rep["checks"]:
    ok, n = tally.get(c["name"], (0, 0))
    tally[c["name"]] = (ok + bool(c["passed"]), n + 1)
for name, (ok, n) in tally.items():
    print(f"  {name:<20s} {ok}/{n} checks passed")

P = standard_bundle(seed=1).problem()
for alg in ("pgd", "apg-nm", "apg-m"):
    r = rate_check(P, alg, "seed1")
    print(f"rate bound {alg:7s}: t0={r['t0']}, violations={len(r['violations'])}, "
          f"min margin {r['min_margin']:.3e}")

for suite in (theorem1_suite(seed=0), tails_suite(seed=0)):
    for c in suite["checks"]:
        rel = ">=" if c["direction"] == "at_least" else "<="
        print(f"{c['name']:<16s} empirical {c['empirical_probability']:.4f} "
              f"{rel} bound {c['theoretical_bound']:.4g} (margin {c['margin']:.4f})"
              f"  {'ok' if c['passed'] else 'FAILED'}")
