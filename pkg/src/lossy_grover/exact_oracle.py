"""Brute-force density-matrix simulator for small registers.

Ground truth for the block dynamics: full 2^m x 2^m density matrices, Grover
steps as two reflections, and partial traces over labelled qubits.  Qubit
``labels[0]`` is the most significant bit of the basis index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 10


@dataclass(frozen=True)
class DenseState:
    matrix: np.ndarray
    labels: tuple[int, ...]

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        labels = tuple(int(q) for q in self.labels)
        if mat.shape != (2 ** len(labels),) * 2:
            raise ValueError(f"matrix shape {mat.shape} does not match {len(labels)} qubits")
        if len(set(labels)) != len(labels):
            raise ValueError("qubit labels must be distinct")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return 2**self.m

    def check(self, tol: float = 1e-12) -> list[str]:
        """Density-operator sanity checks; empty list when all hold."""
        rho = self.matrix
        out = []
        if np.max(np.abs(rho - rho.conj().T)) > tol:
            out.append("not Hermitian")
        if abs(np.trace(rho) - 1.0) > tol:
            out.append(f"trace {np.trace(rho).real!r} != 1")
        if self.dim > 1 and np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -1e-10:
            out.append("negative eigenvalue")
        return out


def init_symmetric_dense(n: int) -> DenseState:
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"dense oracle supports 1 <= n <= {MAX_QUBITS}, got {n}")
    N = 2**n
    return DenseState(np.full((N, N), 1.0 / N), tuple(range(n)))


def pure_dense(vec, labels: Sequence[int]) -> DenseState:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return DenseState(np.outer(v, v.conj()), tuple(labels))


def basis_index(bits: Sequence[int]) -> int:
    idx = 0
    for b in bits:
        idx = 2 * idx + int(b)
    return idx


def _check_target(s: DenseState, target: Sequence[int]) -> int:
    if len(target) != s.m:
        raise ValueError(f"target has {len(target)} bits but {s.m} qubits are present")
    return basis_index(target)


def grover_step_dense(s: DenseState, target: Sequence[int]) -> DenseState:
    """Apply U = D O: sign flip on the target, then inversion about the mean."""
    t = _check_target(s, target)
    rho = np.array(s.matrix)
    rho[t, :] *= -1
    rho[:, t] *= -1
    # D rho D with D = 2|sym><sym| - I; mean over rows/cols is <sym|.|sym> scaled
    N = s.dim
    col_mean = rho.mean(axis=0, keepdims=True)
    rho = 2.0 * np.broadcast_to(col_mean, rho.shape) - rho
    row_mean = rho.mean(axis=1, keepdims=True)
    rho = 2.0 * np.broadcast_to(row_mean, rho.shape) - rho
    return DenseState(rho, s.labels)


def apply_grover_steps(s: DenseState, target: Sequence[int], k: int) -> DenseState:
    for _ in range(k):
        s = grover_step_dense(s, target)
    return s


def partial_trace(s: DenseState, lost: Iterable[int]) -> DenseState:
    """Trace out the qubits with labels in ``lost``.

    Tracing out every qubit gives the 1x1 state [[1]] with no labels.
    """
    lost = set(int(q) for q in lost)
    missing = lost - set(s.labels)
    if missing:
        raise ValueError(f"labels {sorted(missing)} are not present")
    keep = [i for i, q in enumerate(s.labels) if q not in lost]
    drop = [i for i, q in enumerate(s.labels) if q in lost]
    m = s.m
    tensor = s.matrix.reshape((2,) * (2 * m))
    # bring kept row axes, kept col axes, then traced pairs to the back
    order = keep + [m + i for i in keep] + drop + [m + i for i in drop]
    tensor = tensor.transpose(order)
    dk, dd = 2 ** len(keep), 2 ** len(drop)
    tensor = tensor.reshape(dk, dk, dd, dd)
    reduced = np.trace(tensor, axis1=2, axis2=3)
    return DenseState(reduced, tuple(s.labels[i] for i in keep))


def _span_elements(s: DenseState, target: Sequence[int]):
    """<t|rho|t>, <s|rho|s>, <t|rho|s> for the target and its complement."""
    t = _check_target(s, target)
    rho = s.matrix
    M = s.dim
    r_tt = rho[t, t]
    row_t = rho[t, :].sum()
    col_t = rho[:, t].sum()
    if M == 1:
        return r_tt.real, 0.0, 0.0j
    r_ss = (rho.sum() - row_t - col_t + r_tt) / (M - 1)
    r_ts = (row_t - r_tt) / np.sqrt(M - 1)
    return r_tt.real, r_ss.real, complex(r_ts)


def project_block(s: DenseState, target: Sequence[int]) -> tuple[float, float, float, float]:
    """Project onto span{|target>, |complement>}; returns (p, w, u, leakage)."""
    r_tt, r_ss, r_ts = _span_elements(s, target)
    p = r_tt + r_ss
    leakage = float(np.trace(s.matrix).real) - p
    return float(p), float(r_tt - r_ss), float(r_ts.real), float(leakage)


def coherence(s: DenseState, target: Sequence[int]) -> complex:
    """Complex coherence <target|rho|complement>."""
    return _span_elements(s, target)[2]


def target_population(s: DenseState, target: Sequence[int]) -> float:
    t = _check_target(s, target)
    return float(s.matrix[t, t].real)


def purity(s: DenseState) -> float:
    rho = s.matrix
    return float(np.real(np.vdot(rho.conj().T, rho)))


def restrict(target: Sequence[int], labels: Sequence[int]) -> tuple[int, ...]:
    """Target bits for the given qubit labels (``target`` indexed by label)."""
    return tuple(int(target[q]) for q in labels)
