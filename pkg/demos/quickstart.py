"""Solve a small pure-integer MILP with eight agents on a directed ring.

Each agent knows two of the sixteen constraints.  The run is compared with
the exhaustive optimum and with a centralized cutting-plane loop.

    python3 demos/quickstart.py
"""

from dimilp import agent as ag
from dimilp import netsim
from dimilp.oracle import brute_force_milp, centralized_gomory
from dimilp.problems import gen_random_milp, partition

inst = gen_random_milp(seed=6, d=5, d_Z=5, n=16, M=10, integer_cost=True)
parts = partition(inst, 8)
model = netsim.StaticCyclic(8)

trace = netsim.run(inst, parts, model, variant=ag.INT, halt_threshold=netsim.halt_threshold_for(model),
                   stop_at_fixed_point=False)
exact = brute_force_milp(inst)
central = centralized_gomory(inst)

print(f"status            {trace.status.value}")
print(f"consensus round   {netsim.consensus_round(trace)} (halted at {sorted(set(trace.halt_rounds.values()))})")
print(f"agent 0 point     {[int(x) for x in trace.final_states[0].z]}")
print(f"distributed cost  {trace.final_states[0].cost}")
print(f"exhaustive cost   {exact.cost} at {[int(x) for x in exact.z]}")
print(f"centralized cost  {central.cost} after {central.iterations} iterations")
print()
print("round  " + " ".join(f"agent{i:<3}" for i in range(trace.N)))
for rec in trace.records[: netsim.consensus_round(trace) + 1]:
    print(f"{rec.round:5d}  " + " ".join(f"{float(c):8.2f}" for c in rec.costs))
