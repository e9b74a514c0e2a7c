"""Monte Carlo readout tables for the lossy Grover search.

Two sampling routes produce the same single-trial statistics:

* ``ENSEMBLE`` draws the survivor count from the master-equation weights at
  the readout time and reads out the normalised block of that sector.
* ``TRAJECTORY`` draws an exponential loss time per qubit and evolves one
  conditional block through Grover rotations and single-qubit loss maps.

Measurement probabilities are linear in the state, so the two routes agree
in distribution up to the continuous-vs-discrete rotation difference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .core import Bit, Block, BlockState, ExperimentTable, RegisterConfig, TrialRecord, symmetric_block
from .exact_oracle import basis_index
from .master_eq import OdeParams, half_life, omega, state_at
from .subspace import grover_angle, loss_map, rotate_bloch


class Mode(str, Enum):
    ENSEMBLE = "ensemble"
    TRAJECTORY = "trajectory"


class Survivors(str, Enum):
    BINOMIAL = "binomial"  # survivor count drawn from p_m(t)
    HALF = "half"          # condition on exactly n // 2 survivors


@dataclass(frozen=True)
class TrialParams:
    """How trials are drawn.

    ``readout_time`` defaults to ln2/gamma, where half the qubits remain on
    average.  ``rotation`` applies to trajectory mode only: ``discrete``
    applies whole Grover steps with the exact angle, ``continuous`` rotates at
    the small-angle rate between loss events like the master equation does.
    ``dt`` is the RK4 step of the ensemble integration.
    """

    config: RegisterConfig
    readout_time: float | None = None
    mode: Mode = Mode.ENSEMBLE
    survivors: Survivors = Survivors.BINOMIAL
    rotation: str = "discrete"
    dt: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "survivors", Survivors(self.survivors))
        if self.readout_time is None:
            g = self.config.gamma
            t = half_life(g) if g > 0 else float(self.config.n_steps)
            object.__setattr__(self, "readout_time", t)
        if self.readout_time < 0:
            raise ValueError("readout_time must be >= 0")
        if self.config.n_steps and self.readout_time > self.config.n_steps:
            raise ValueError(f"readout_time {self.readout_time} exceeds the step budget "
                             f"{self.config.n_steps}")
        if self.rotation not in ("discrete", "continuous"):
            raise ValueError(f"unknown rotation {self.rotation!r}")
        if self.mode is Mode.TRAJECTORY and self.survivors is Survivors.HALF:
            raise ValueError("survivor conditioning is only available in ensemble mode")


def sample_survivor_set(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random m-subset of the labels 0..n-1, sorted."""
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got m={m}, n={n}")
    return np.sort(rng.choice(n, size=m, replace=False))


def sample_readout(b: Block, m: int, target_sub: Sequence[int],
                   rng: np.random.Generator) -> np.ndarray:
    """Computational-basis readout of a unit-trace block on m qubits.

    The target string comes out with probability (1 + w)/2; otherwise one of
    the other 2^m - 1 strings, uniformly.
    """
    if m < 1 or len(target_sub) != m:
        raise ValueError("need m >= 1 and a target of length m")
    if abs(b.p - 1.0) > 1e-9:
        raise ValueError("block must be normalised to p = 1")
    target_sub = np.asarray(target_sub, dtype=np.int8)
    if rng.random() < 0.5 * (1.0 + b.w):
        return target_sub.copy()
    t = basis_index(target_sub)
    r = int(rng.integers(0, 2**m - 1))
    idx = r + (r >= t)
    shifts = np.arange(m - 1, -1, -1)
    return ((idx >> shifts) & 1).astype(np.int8)


def _record(n: int, survivors: np.ndarray, bits: np.ndarray) -> TrialRecord:
    row = np.full(n, Bit.LOST, dtype=np.int8)
    row[survivors] = bits
    return TrialRecord(row)


def ensemble_state(params: TrialParams) -> BlockState:
    """Master-equation state at the readout time."""
    c = params.config
    return state_at(OdeParams(c.n, c.gamma, params.readout_time, params.dt),
                    params.readout_time)


def trajectory_block(n: int, loss_times: np.ndarray, readout_time: float,
                     rotation: str = "discrete") -> tuple[Block, np.ndarray]:
    """Conditional block at ``readout_time`` given each qubit's loss time.

    Returns the unit-trace block of the surviving register and the labels
    still present.
    """
    order = np.argsort(loss_times, kind="stable")
    b = symmetric_block(n)
    m = n
    done = 0.0  # steps applied (discrete) or time reached (continuous)
    for q in order:
        tau = loss_times[q]
        if tau >= readout_time:
            break
        if rotation == "discrete":
            k = math.floor(tau)
            b = rotate_bloch(b, 2.0 * (k - done) * grover_angle(m))
            done = k
        else:
            b = rotate_bloch(b, 2.0 * float(omega(m)) * (tau - done))
            done = tau
        m -= 1
        b = loss_map(b, m)
        if m == 0:
            break
    if m > 0:
        if rotation == "discrete":
            b = rotate_bloch(b, 2.0 * (math.floor(readout_time) - done) * grover_angle(m))
        else:
            b = rotate_bloch(b, 2.0 * float(omega(m)) * (readout_time - done))
    survivors = np.flatnonzero(loss_times >= readout_time)
    return b, survivors


def generate_trial(params: TrialParams, precomputed: BlockState | None,
                   rng: np.random.Generator) -> TrialRecord:
    """One readout string; ``precomputed`` is the ensemble state (ensemble mode)."""
    c = params.config
    n = c.n
    target = np.asarray(c.target, dtype=np.int8)
    if params.mode is Mode.ENSEMBLE:
        if precomputed is None:
            raise ValueError("ensemble mode needs the state at the readout time")
        if params.survivors is Survivors.HALF:
            m = n // 2
        else:
            p = np.clip(precomputed.p, 0.0, None)
            m = int(rng.choice(n + 1, p=p / p.sum()))
        survivors = sample_survivor_set(n, m, rng)
        if m == 0:
            return _record(n, survivors, np.empty(0, np.int8))
        b = precomputed.block(m).normalized()
    else:
        if c.gamma > 0:
            loss_times = rng.exponential(1.0 / c.gamma, size=n)
        else:
            loss_times = np.full(n, np.inf)
        b, survivors = trajectory_block(n, loss_times, params.readout_time, params.rotation)
        m = survivors.size
        if m == 0:
            return _record(n, survivors, np.empty(0, np.int8))
    bits = sample_readout(b, m, target[survivors], rng)
    return _record(n, survivors, bits)


def generate_table(params: TrialParams, K: int, rng: np.random.Generator,
                   precomputed: BlockState | None = None) -> ExperimentTable:
    """K independent trials, each on its own child stream of ``rng``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if params.mode is Mode.ENSEMBLE and precomputed is None:
        precomputed = ensemble_state(params)
    children = rng.spawn(K)
    return ExperimentTable.from_records(
        [generate_trial(params, precomputed, child) for child in children])
