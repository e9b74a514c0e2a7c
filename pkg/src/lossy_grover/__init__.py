"""Grover search on a register that loses qubits: block dynamics, master
equation, trial sampling and bitstring reconstruction."""

__version__ = "0.1.0"

from .core import (Bit, Block, BlockState, ExperimentTable, ReconstructionResult,
                   RegisterConfig, TrialRecord, init_symmetric, make_rng,
                   target_fraction, validate_block_state, weighted_target_probability)
from .master_eq import OdeParams, averaged_model, binomial_weights, integrate
from .reconstruct import (chi, count_correct, experiment_statistics, majority_vote,
                          trial_scores, weighted_estimate)
from .subspace import basis_coefficients, evolve_discrete, loss_map, rotate_block
from .trials import TrialParams, generate_table, generate_trial
