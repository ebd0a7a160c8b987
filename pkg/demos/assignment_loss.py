"""Task assignment under packet loss.

Nine agents sit on a grid over a planar scenario with four vehicles, seven
targets and ten candidate paths.  An agent knows the rows whose geometry
lies within its radius and talks to its grid neighbours.  Each message is
dropped independently with probability p.

    python3 demos/assignment_loss.py [reps]
"""

import json
import sys
from pathlib import Path

from dimilp import sweeps

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 5
spec = sweeps.loss_scenario()
out = Path(__file__).parent / "data" / "assignment_scenario.json"
out.write_text(json.dumps(spec.to_json(), indent=1) + "\n")

setup = sweeps.assignment_setup(spec)
print(f"scenario written to {out}")
print(f"{len(spec.paths)} paths, {setup.instance.n} rows, rows per agent {[len(p) for p in setup.parts]}")

rows = list(sweeps.loss_sweep(reps=reps))
print(f"optimal makespan {rows[0]['oracle_cost']}")
print(" p     median  min  max  all converged  worst final cost")
for entry in sweeps.summarize(rows, "p"):
    group = [r for r in rows if r["p"] == entry["p"]]
    print(f"{entry['p']:.1f}  {entry['median']:7.1f} {entry['min']:4.0f} {entry['max']:4.0f}  "
          f"{str(all(r['status'] == 'converged' for r in group)):>13}  "
          f"{float(max(r['final_cost'] for r in group)):.3f}")
