"""
Sampled loss histories against the ensemble
===========================================

Trials can be drawn two ways: from the master-equation ensemble at the
readout time, or by sampling an exponential loss time for each qubit and
evolving one conditional block.  Both give the same readout statistics.
"""

import numpy as np

from lossy_grover import Bit, RegisterConfig
from lossy_grover.master_eq import binomial_weights
from lossy_grover.trials import TrialParams, generate_table

n, gamma, N = 6, 5e-3, 20_000
cfg = RegisterConfig(n=n, target="011010", gamma=gamma, n_steps=200)
tgt = np.array(cfg.target)

for mode in ("ensemble", "trajectory"):
    params = TrialParams(cfg, mode=mode)
    rows = generate_table(params, N, np.random.default_rng(0)).rows
    read = rows != Bit.LOST
    hist = np.bincount(read.sum(axis=1), minlength=n + 1) / N
    bit = np.count_nonzero(read & (rows == tgt)) / read.sum()
    print(f"{mode:10s} survivors {np.round(hist, 4)}  per-bit correct {bit:.4f}")

print("binomial  ", np.round(binomial_weights(n, gamma, params.readout_time), 4))
