"""Decoding lossy trial tables into a full target estimate.

Entries are handled as spins s = 2(b - 1/2): ONE -> +1, ZERO -> -1 and
LOST -> 0.  The bitwise agreement of two entries is then s_a * s_b, and the
score of trial k is its total agreement with every other trial.  The
correlated decoder weights each trial's spins by its score; the baseline is
a per-column majority vote.  Ties in either decoder are broken by a coin
drawn per bit position, and flagged in ``unresolved``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Bit, ExperimentTable, ReconstructionResult, RegisterConfig
from .trials import Mode, TrialParams, ensemble_state, generate_table

_SPIN = {Bit.ZERO: -1, Bit.ONE: 1, Bit.LOST: 0}


def chi(a: Bit | int, b: Bit | int) -> int:
    """+1 for equal readouts, -1 for opposite ones, 0 if either is LOST."""
    return _SPIN[Bit(a)] * _SPIN[Bit(b)]


def trial_scores(t: ExperimentTable) -> np.ndarray:
    """Agreement score C_k of each trial with all the others (integers)."""
    if t.K < 2:
        raise ValueError("scores need at least two trials")
    S = t.spins()
    G = S @ S.T
    return G.sum(axis=1) - np.diag(G)


def _finish(arg: np.ndarray, rng: np.random.Generator) -> ReconstructionResult:
    # one coin per column, drawn whether or not it is used, so the outcome
    # does not depend on row order or on which columns tie
    coins = rng.integers(0, 2, size=arg.size).astype(np.int8)
    unresolved = arg == 0
    est = np.where(arg > 0, 1, 0).astype(np.int8)
    est[unresolved] = coins[unresolved]
    return ReconstructionResult(est, unresolved)


def weighted_estimate(t: ExperimentTable, rng: np.random.Generator) -> ReconstructionResult:
    """Score-weighted vote: bit i follows the sign of sum_k C_k s_ki."""
    C = trial_scores(t)
    return _finish(C @ t.spins(), rng)


def majority_vote(t: ExperimentTable, rng: np.random.Generator) -> ReconstructionResult:
    """Per-column majority over the non-LOST entries."""
    return _finish(t.spins().sum(axis=0), rng)


def count_correct(r: ReconstructionResult, target: Sequence[int]) -> int:
    target = np.asarray(target, dtype=np.int8)
    if target.shape != r.estimate.shape:
        raise ValueError(f"estimate has {r.n} bits, target has {target.size}")
    return int(np.count_nonzero(r.estimate == target))


def with_reference(r: ReconstructionResult, target: Sequence[int]) -> ReconstructionResult:
    return ReconstructionResult(r.estimate, r.unresolved, count_correct(r, target))


# -- repeated experiments ----------------------------------------------------

@dataclass(frozen=True)
class MethodStats:
    """Distribution of the number of correct bits n_c for one decoder.

    ``histogram[j]`` counts experiments with n_c = j.  The ``strict`` fields
    treat unresolved (coin-flipped) bits as wrong.
    """

    histogram: np.ndarray
    strict_histogram: np.ndarray

    @property
    def n(self) -> int:
        return self.histogram.size - 1

    @property
    def n_experiments(self) -> int:
        return int(self.histogram.sum())

    def _mean(self, h):
        return float(np.arange(h.size) @ h) / (self.n * h.sum())

    @property
    def mean_fraction(self) -> float:
        return self._mean(self.histogram)

    @property
    def p_all_correct(self) -> float:
        return float(self.histogram[-1]) / self.n_experiments

    @property
    def strict_mean_fraction(self) -> float:
        return self._mean(self.strict_histogram)

    @property
    def strict_p_all_correct(self) -> float:
        return float(self.strict_histogram[-1]) / self.n_experiments

    def summary(self) -> dict:
        return {"mean_fraction": self.mean_fraction, "p_all_correct": self.p_all_correct,
                "strict_mean_fraction": self.strict_mean_fraction,
                "strict_p_all_correct": self.strict_p_all_correct}


@dataclass(frozen=True)
class ExperimentStats:
    majority: MethodStats
    weighted: MethodStats
    n_c_majority: np.ndarray
    n_c_weighted: np.ndarray
    bits_read: int
    bits_read_correct: int
    survivor_counts: np.ndarray

    @property
    def bit_marginal(self) -> float:
        """Fraction of surviving-qubit readouts equal to the target bit."""
        return self.bits_read_correct / self.bits_read if self.bits_read else float("nan")

    def histogram_csv(self) -> str:
        lines = ["n_c,count_majority,count_weighted"]
        for j in range(self.majority.n + 1):
            lines.append(f"{j},{int(self.majority.histogram[j])},{int(self.weighted.histogram[j])}")
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {"majority": self.majority.summary(), "weighted": self.weighted.summary(),
                "bit_marginal": self.bit_marginal,
                "mean_survivors": float(self.survivor_counts.mean()),
                "n_experiments": self.majority.n_experiments}


def _one_experiment(params, K, precomputed, rng):
    trial_rng, tie_rng = rng.spawn(2)
    table = generate_table(params, K, trial_rng, precomputed)
    target = np.asarray(params.config.target, dtype=np.int8)
    maj = majority_vote(table, tie_rng)
    wtd = weighted_estimate(table, tie_rng) if K >= 2 else maj
    read = table.rows != Bit.LOST
    row = (count_correct(maj, target), count_correct(wtd, target),
           int(np.count_nonzero(maj.estimate[~maj.unresolved] == target[~maj.unresolved])),
           int(np.count_nonzero(wtd.estimate[~wtd.unresolved] == target[~wtd.unresolved])),
           int(read.sum()), int(np.count_nonzero(read & (table.rows == target))))
    return row, read.sum(axis=1)


def experiment_statistics(config: RegisterConfig, K: int, n_experiments: int,
                          rng: np.random.Generator, params=None,
                          threads: int = 1) -> ExperimentStats:
    """Run ``n_experiments`` experiments of K trials and histogram n_c.

    ``params`` is a TrialParams (defaults to ensemble mode, readout at the
    half-life).  Each experiment owns a child stream of ``rng``, so the result
    does not depend on ``threads``.
    """
    if n_experiments < 1:
        raise ValueError("n_experiments must be >= 1")
    if params is None:
        params = TrialParams(config)
    elif params.config != config:
        raise ValueError("params.config differs from config")
    precomputed = ensemble_state(params) if params.mode is Mode.ENSEMBLE else None
    streams = rng.spawn(n_experiments)

    def run(g):
        return _one_experiment(params, K, precomputed, g)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, streams))
    else:
        results = [run(g) for g in streams]
    rows = np.array([r[0] for r in results], dtype=np.int64)
    survivors = np.concatenate([r[1] for r in results])
    n = config.n

    def hist(col):
        return np.bincount(rows[:, col], minlength=n + 1)

    return ExperimentStats(
        majority=MethodStats(hist(0), hist(2)),
        weighted=MethodStats(hist(1), hist(3)),
        n_c_majority=rows[:, 0], n_c_weighted=rows[:, 1],
        bits_read=int(rows[:, 4].sum()), bits_read_correct=int(rows[:, 5].sum()),
        survivor_counts=survivors)
