"""Accuracy against speed for the epsilon variant on one mixed-integer instance.

    python3 demos/eps_tradeoff.py
"""

from dimilp import sweeps

print(" eps    gap to optimum  consensus round")
for row in sweeps.eps_sweep():
    print(f"{row['eps']:>5}  {float(row['gap']):14.4f}  {row['rounds']:15d}")
