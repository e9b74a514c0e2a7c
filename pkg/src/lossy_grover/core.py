"""Domain types shared by the simulator, sampler and decoders.

A register state under loss is block diagonal: one 2x2 block per number of
surviving qubits ``m``.  Each block is stored as three reals ``(p, w, u)``:
the block trace, the target-minus-complement population difference and the
real part of the target/complement coherence, all scaled by the block weight.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple, Sequence

import numpy as np

#: slack for positivity / single-state trace checks
EPS = 1e-12
#: accumulated trace drift allowed over an integration run
TRACE_TOL = 1e-9


class UndefinedSectorError(ValueError):
    """Raised when a quantity is requested for an (almost) empty sector."""


class TableParseError(ValueError):
    """A trial table file holds an entry outside {0, 1, 0.5} or ragged rows."""

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        super().__init__(message)
        self.row = row
        self.col = col


class Bit(IntEnum):
    ZERO = 0
    ONE = 1
    LOST = 2


def _freeze(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _as_bitstring(target) -> tuple[int, ...]:
    if isinstance(target, str):
        target = [int(c) for c in target]
    return tuple(int(b) for b in target)


@dataclass(frozen=True)
class RegisterConfig:
    """One search instance: register size, target, loss rate and budget.

    ``gamma`` is the per-qubit loss probability per Grover step, used as a
    continuous loss rate.  ``n_steps`` is the Grover-step budget.
    """

    n: int
    target: tuple[int, ...]
    gamma: float = 0.0
    n_steps: int = 0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "target", _as_bitstring(self.target))
        if not 1 <= self.n <= 30:
            raise ValueError(f"n must be in 1..30, got {self.n}")
        if len(self.target) != self.n:
            raise ValueError(f"target has {len(self.target)} bits, expected {self.n}")
        if any(b not in (0, 1) for b in self.target):
            raise ValueError("target bits must be 0 or 1")
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma}")
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be >= 0, got {self.n_steps}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @classmethod
    def with_random_target(cls, n: int, gamma: float = 0.0, n_steps: int = 0,
                           seed: int = 0) -> "RegisterConfig":
        """Draw the target bitstring from a substream of ``seed``."""
        rng = make_rng(seed, 0xA11)
        target = tuple(int(b) for b in rng.integers(0, 2, size=n))
        return cls(n=n, target=target, gamma=gamma, n_steps=n_steps, seed=seed)

    def to_dict(self) -> dict:
        return {"n": self.n, "target": "".join(map(str, self.target)),
                "gamma": self.gamma, "n_steps": self.n_steps, "seed": self.seed}


class Block(NamedTuple):
    p: float
    w: float
    u: float

    @property
    def rho11(self) -> float:
        return 0.5 * (self.p + self.w)

    @property
    def rho22(self) -> float:
        return 0.5 * (self.p - self.w)

    def normalized(self) -> "Block":
        if self.p <= EPS:
            raise UndefinedSectorError("cannot normalize an empty block")
        return Block(1.0, self.w / self.p, self.u / self.p)

    def purity(self) -> float:
        """Tr(rho^2) of the block renormalised to unit trace."""
        b = self.normalized()
        return 0.5 * (1.0 + b.w**2 + 4.0 * b.u**2)


@dataclass(frozen=True)
class BlockState:
    """Block-diagonal register state, blocks indexed m = 0..n.

    The m = 0 block is a scalar weight; its ``w`` and ``u`` stay zero.
    """

    p: np.ndarray
    w: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        p = _freeze(self.p, float)
        w = _freeze(self.w, float)
        u = _freeze(self.u, float)
        if not (p.ndim == 1 and p.shape == w.shape == u.shape and p.size >= 1):
            raise ValueError("p, w, u must be equal-length 1-d arrays")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return self.p.size - 1

    def block(self, m: int) -> Block:
        return Block(float(self.p[m]), float(self.w[m]), float(self.u[m]))

    @classmethod
    def from_blocks(cls, blocks: Sequence[Block | tuple]) -> "BlockState":
        arr = np.asarray([tuple(b) for b in blocks], dtype=float).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])

    @classmethod
    def single(cls, n: int, m: int, block: Block | tuple) -> "BlockState":
        """All weight in sector ``m`` of an ``n``-qubit register."""
        arr = np.zeros((n + 1, 3))
        arr[m] = tuple(block)
        if m == 0:
            arr[0, 1:] = 0.0
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])

    def as_array(self) -> np.ndarray:
        return np.stack([self.p, self.w, self.u], axis=1)


def symmetric_block(m: int) -> Block:
    """Uniform superposition of m qubits in the (target, complement) basis."""
    M = 2.0**m
    return Block(1.0, 2.0 / M - 1.0, math.sqrt(M - 1.0) / M)


def init_symmetric(n: int) -> BlockState:
    """Lossless initial state: every qubit in (|0> + |1>)/sqrt(2)."""
    return BlockState.single(n, n, symmetric_block(n))


def validate_block_state(s: BlockState, eps: float = EPS,
                         trace_tol: float = TRACE_TOL) -> list[str]:
    """List every violated invariant of ``s``; an empty list means valid."""
    out = []
    total = float(np.sum(s.p))
    if abs(total - 1.0) > trace_tol:
        out.append(f"trace: sum(p) = {total!r} != 1")
    for m in range(s.n + 1):
        p, w, u = s.block(m)
        if p < -eps:
            out.append(f"block {m}: p = {p!r} < 0")
        if m == 0:
            if w != 0.0 or u != 0.0:
                out.append(f"block 0: scalar sector carries w={w!r}, u={u!r}")
            continue
        if abs(w) > p + eps:
            out.append(f"block {m}: |w| = {abs(w)!r} > p = {p!r}")
        det = 0.25 * (p * p - w * w) - u * u
        if det < -eps:
            out.append(f"block {m}: positivity (p^2 - w^2)/4 - u^2 = {det!r} < 0")
    return out


def target_fraction(s: BlockState, m: int) -> float:
    """Conditional target probability F_m = rho11_m / p_m in sector m."""
    p = float(s.p[m])
    if m < 1 or p <= EPS:
        raise UndefinedSectorError(f"sector m={m} has weight {p!r}")
    return (p + float(s.w[m])) / (2.0 * p)


def weighted_target_probability(s: BlockState) -> float:
    """Probability that all surviving bits read the target; m = 0 counts as 0."""
    return float(0.5 * np.sum(s.p[1:] + s.w[1:]))


# -- RNG ---------------------------------------------------------------------

def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream ``key`` of ``seed``.

    Identical ``(seed, key)`` pairs always give identical streams, so work can
    be split across threads without changing results.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


# -- trial records -------------------------------------------------------------

_TO_NUMBER = {Bit.ZERO: "0", Bit.ONE: "1", Bit.LOST: "0.5"}


@dataclass(frozen=True)
class TrialRecord:
    """Readout of one trial: one Bit per register position."""

    bits: np.ndarray

    def __post_init__(self):
        bits = _freeze(self.bits, np.int8)
        if bits.ndim != 1 or np.any((bits < 0) | (bits > 2)):
            raise ValueError("bits must be a 1-d sequence of Bit values")
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return self.bits.size

    @property
    def n_survivors(self) -> int:
        return int(np.count_nonzero(self.bits != Bit.LOST))

    def to_row(self) -> list[float]:
        return [0.5 if b == Bit.LOST else float(b) for b in self.bits]

    @classmethod
    def from_row(cls, row: Sequence[float]) -> "TrialRecord":
        bits = []
        for col, v in enumerate(row):
            bits.append(_number_to_bit(v, None, col))
        return cls(np.array(bits, dtype=np.int8))

    def __str__(self) -> str:
        return "".join("01-"[b] for b in self.bits)


def _number_to_bit(v, row, col) -> Bit:
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise TableParseError(f"row {row}, column {col}: not a number: {v!r}", row, col)
    if x == 0.0:
        return Bit.ZERO
    if x == 1.0:
        return Bit.ONE
    if x == 0.5:
        return Bit.LOST
    raise TableParseError(f"row {row}, column {col}: {v!r} not in {{0, 1, 0.5}}", row, col)


@dataclass(frozen=True)
class ExperimentTable:
    """K trial readouts of a common register, stored as a K x n Bit array."""

    rows: np.ndarray

    def __post_init__(self):
        rows = _freeze(self.rows, np.int8)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ValueError("a table needs at least one row of equal length")
        if np.any((rows < 0) | (rows > 2)):
            raise ValueError("entries must be Bit values")
        object.__setattr__(self, "rows", rows)

    @property
    def K(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def from_records(cls, records: Sequence[TrialRecord]) -> "ExperimentTable":
        lengths = {r.n for r in records}
        if len(lengths) != 1:
            raise ValueError(f"records have differing lengths {sorted(lengths)}")
        return cls(np.stack([r.bits for r in records]))

    def records(self) -> list[TrialRecord]:
        return [TrialRecord(r) for r in self.rows]

    def spins(self) -> np.ndarray:
        """Entries mapped to 2*(b - 1/2): ONE -> +1, ZERO -> -1, LOST -> 0."""
        s = np.where(self.rows == Bit.ONE, 1, -1).astype(np.int64)
        s[self.rows == Bit.LOST] = 0
        return s

    def to_csv(self) -> str:
        return "".join(",".join(_TO_NUMBER[Bit(b)] for b in row) + "\n" for row in self.rows)

    @classmethod
    def from_csv(cls, text: str) -> "ExperimentTable":
        rows = []
        for r, line in enumerate(io.StringIO(text)):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            rows.append([_number_to_bit(c, r, col) for col, c in enumerate(cells)])
            if len(rows[-1]) != len(rows[0]):
                raise TableParseError(
                    f"row {r}: {len(rows[-1])} entries, expected {len(rows[0])}", r, None)
        if not rows:
            raise TableParseError("table is empty")
        return cls(np.array(rows, dtype=np.int8))


@dataclass(frozen=True)
class ReconstructionResult:
    estimate: np.ndarray
    unresolved: np.ndarray
    n_correct: int | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "estimate", _freeze(self.estimate, np.int8))
        object.__setattr__(self, "unresolved", _freeze(self.unresolved, bool))
        if self.estimate.shape != self.unresolved.shape:
            raise ValueError("estimate and unresolved mask differ in length")
        if np.any((self.estimate != 0) & (self.estimate != 1)):
            raise ValueError("estimate must be a definite bitstring")

    @property
    def n(self) -> int:
        return self.estimate.size

    def __str__(self) -> str:
        return "".join(map(str, self.estimate))
