"""Run all three solvers on one bundle and chart the objective curves.

Writes per-algorithm trace CSVs, a combined long-format CSV and an SVG
line chart to ``demo_output/`` (or the directory given as argument).

    python demos/compare_algorithms.py [out_dir]
"""
import sys
from pathlib import Path

from rankreg import io
from rankreg.suites import iterations_to_reach, run_all, standard_bundle

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(parents=True, exist_ok=True)

P = standard_bundle(seed=0).problem()
runs = run_all(P)
traces = {alg: tr for alg, (_, tr) in runs.items()}

for alg, tr in traces.items():
    io.write_trace(out / f"trace_{alg}.csv", tr)
io.write_combined(out / "combined.csv", traces)
io.write_svg(out / "objective.svg",
             {alg: tr.objectives().tolist() for alg, tr in traces.items()},
             title="objective by iteration")

print(f"{'algo':8s} {'iters':>7s} {'to 1e-6':>8s} {'final objective':>18s} rank")
for alg, tr in traces.items():
    last = tr.records[-1]
    print(f"{alg:8s} {last.iter:7d} {iterations_to_reach(tr):8d} "
          f"{last.objective:18.9f} {last.rank}")
finals = [tr.records[-1].objective for tr in traces.values()]
print(f"spread of final objectives: {max(finals) - min(finals):.2e}")
print(f"wrote {out}/")
