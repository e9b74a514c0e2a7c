"""
Block dynamics against the dense simulator
==========================================

The lossy register never leaves a two-dimensional span per surviving
qubit count, so three numbers (p, w, u) per sector describe it.  Here we
check that claim against full density matrices for a handful of runs.
"""

import numpy as np

from lossy_grover import RegisterConfig
from lossy_grover import exact_oracle as eo
from lossy_grover.subspace import evolve_discrete, single_loss_constants
from lossy_grover.verification import compare_schedule, oracle_check

# A five-qubit search where qubit 3 is lost after two Grover steps and
# qubit 0 after four.
cfg = RegisterConfig(n=5, target="10110", n_steps=8)
schedule = [(2, 3), (4, 0)]
traj = evolve_discrete(cfg, schedule)
for k in range(cfg.n_steps + 1):
    print(k, traj.m[k], np.round(traj.block(k), 6))

# The dense route: 32x32 density matrix, partial traces, projection.
print("max deviation, leakage, Im coherence:", compare_schedule(cfg, schedule))

# Single-loss constants measured from a partial trace.
for m in range(1, 5):
    M = 2**m
    A, B = single_loss_constants(m)
    print(f"m={m}  A={A:.6f} = 1/(2M-1)={1 / (2 * M - 1):.6f}  B={B:.6f}")

# The full randomized check used by the command line.
for line in oracle_check(n_max=6, cases=60).lines():
    print(line)
