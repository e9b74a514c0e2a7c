"""Exact reduced dynamics on the (p, w, u) blocks.

A Grover step on m qubits rotates the (w, 2u) Bloch vector of the block by
twice the Grover angle theta_m = 2 asin(2^{-m/2}).  Losing one qubit maps the
block of m + 1 qubits into the block of m qubits through the partial trace.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import Block, BlockState, RegisterConfig, symmetric_block


@dataclass(frozen=True)
class LossCoefficients:
    """Basis-decomposition weights for n -> m plus the single-loss constants.

    ``A`` and ``B`` describe losing one qubit into an m-qubit block
    (n = m + 1): A = g^2 and B = h for that pair.
    """

    f: float
    g: float
    h: float
    A: float
    B: float


def basis_coefficients(n: int, m: int) -> tuple[float, float, float]:
    """Weights of |s_n> on |s_m s_r>, |t_m s_r> and |s_m t_r> (r = n - m)."""
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got n={n}, m={m}")
    N = 2.0**n
    M = 2.0**m
    f = math.sqrt((N - M) * (M - 1) / (M * (N - 1)))
    g = math.sqrt((N - M) / (M * (N - 1)))
    h = math.sqrt((M - 1) / (N - 1))
    return f, g, h


def single_loss_constants(m: int) -> tuple[float, float]:
    """(A_m, B_m) for one qubit lost into an m-qubit block.

    A_m = 1/(2M - 1) and B_m = sqrt((M - 1)/(2M - 1)), M = 2^m.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    M = 2.0**m
    return 1.0 / (2.0 * M - 1.0), math.sqrt((M - 1.0) / (2.0 * M - 1.0))


def loss_coefficients(m: int) -> LossCoefficients:
    f, g, h = basis_coefficients(m + 1, m)
    A, B = single_loss_constants(m)
    return LossCoefficients(f, g, h, A, B)


def loss_map(b: Block, m_to: int) -> Block:
    """Trace one qubit out of an (m_to + 1)-qubit block.

    ``m_to = 0`` leaves only the scalar weight.
    """
    p, w, u = b
    if m_to == 0:
        return Block(p, 0.0, 0.0)
    if m_to < 0:
        raise ValueError("m_to must be >= 0")
    A, B = single_loss_constants(m_to)
    M = 2.0**m_to
    c = B / (2.0 * math.sqrt(2.0 * M - 1.0))
    return Block(p, (1.0 - A) * w + A * p, B * u + c * (p - w))


def grover_angle(m: int) -> float:
    """Rotation angle of one Grover step on m qubits."""
    return 2.0 * math.asin(2.0 ** (-0.5 * m))


def rotate_bloch(b: Block, phi: float) -> Block:
    """Rotate (w, 2u) by ``phi`` towards the target (w -> +p)."""
    c, s = math.cos(phi), math.sin(phi)
    p, w, u = b
    return Block(p, c * w + 2.0 * s * u, 0.5 * (-s * w) + c * u)


def rotate_block(b: Block, m: int, k: int) -> Block:
    """Apply k Grover steps to a block of m qubits."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return Block(*b)
    return rotate_bloch(b, 2.0 * k * grover_angle(m))


def bloch_length2(b: Block) -> float:
    return b.w**2 + 4.0 * b.u**2


@dataclass(frozen=True)
class DiscreteTrajectory:
    """Per-step record of a single run with a known loss schedule.

    ``states[k]`` is the register after k Grover steps (and after any losses
    scheduled at step k).  ``survivors[k]`` lists the qubit labels present.
    """

    states: list[BlockState]
    m: np.ndarray
    survivors: list[tuple[int, ...]]
    purity: np.ndarray

    def block(self, k: int) -> Block:
        return self.states[k].block(int(self.m[k]))


def _check_schedule(n: int, schedule: Sequence[tuple[int, int]]):
    lost = set()
    last = -1
    for step, q in schedule:
        if step < last:
            raise ValueError("loss schedule must be ordered by step")
        if not 0 <= q < n:
            raise ValueError(f"qubit label {q} out of range for n={n}")
        if q in lost:
            raise ValueError(f"qubit {q} scheduled to be lost twice")
        lost.add(q)
        last = step


def evolve_discrete(config: RegisterConfig,
                    loss_schedule: Sequence[tuple[int, int]] = ()) -> DiscreteTrajectory:
    """Run ``config.n_steps`` Grover steps with losses at given step indices.

    A loss entry ``(k, q)`` removes qubit ``q`` after k steps have been applied,
    so ``(0, q)`` loses it before the first step.
    """
    n = config.n
    schedule = sorted(((int(k), int(q)) for k, q in loss_schedule), key=lambda e: e[0])
    _check_schedule(n, schedule)
    present = list(range(n))
    b = symmetric_block(n)
    m = n
    queue = list(schedule)

    states, ms, survivors, purities = [], [], [], []

    def apply_losses(k):
        nonlocal b, m
        while queue and queue[0][0] == k:
            _, q = queue.pop(0)
            present.remove(q)
            m -= 1
            b = loss_map(b, m)

    def record():
        states.append(BlockState.single(n, m, b))
        ms.append(m)
        survivors.append(tuple(present))
        purities.append(b.purity() if m > 0 else 1.0)

    for k in range(config.n_steps + 1):
        if k > 0 and m > 0:
            b = rotate_block(b, m, 1)
        apply_losses(k)
        record()
    if queue:
        raise ValueError(f"losses scheduled after the last step: {queue}")
    return DiscreteTrajectory(states, np.array(ms), survivors, np.array(purities))


def read_loss_schedule(path) -> list[tuple[int, int]]:
    """Read ``step,qubit`` pairs; a header line is optional."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                out.append((int(row[0]), int(row[1])))
            except ValueError:
                if out:
                    raise
    return out


def write_loss_schedule(path, schedule: Iterable[tuple[int, int]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "qubit"])
        w.writerows(schedule)
