"""Continuous-time ensemble dynamics of a register under random qubit loss.

The state is the full block-diagonal ensemble: sector m carries weight p_m
and the (w_m, u_m) of its 2x2 block.  Each sector rotates at the small-angle
Grover rate omega_m = 2/sqrt(M) per step, decays at m*gamma, and is fed by
the single-loss map from sector m + 1.

Time is measured in Grover steps.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import comb

from .core import EPS, TRACE_TOL, BlockState, init_symmetric, symmetric_block
from .subspace import single_loss_constants


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class OdeParams:
    n: int
    gamma: float
    t_end: float
    dt: float = 0.1

    def __post_init__(self):
        if not 1 <= self.n <= 30:
            raise ValueError(f"n must be in 1..30, got {self.n}")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if not 0 < self.dt <= 0.5:
            raise ValueError(f"dt must be in (0, 0.5], got {self.dt}")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.t_end / self.dt - 1e-9)) if self.t_end > 0 else 0

    @property
    def step(self) -> float:
        """Actual RK4 step: the largest value <= dt landing exactly on t_end."""
        return self.t_end / self.n_steps if self.n_steps else self.dt


def omega(m) -> np.ndarray:
    """Continuous Grover rotation rate 2/sqrt(2^m)."""
    return 2.0 * 2.0 ** (-0.5 * np.asarray(m, dtype=float))


class _Coefficients:
    """Per-sector rate constants for a register of n qubits."""

    def __init__(self, n: int):
        m = np.arange(n + 1, dtype=float)
        self.m = m
        self.omega = np.zeros(n + 1)
        self.A = np.zeros(n + 1)
        self.B = np.zeros(n + 1)
        self.C = np.zeros(n + 1)
        for k in range(1, n + 1):
            A, B = single_loss_constants(k)
            self.A[k] = A
            self.B[k] = B
            self.C[k] = B / (2.0 * math.sqrt(2.0 ** (k + 1) - 1.0))
        self.omega[1:] = omega(m[1:])


def _rates(p, w, u, gamma, co: _Coefficients):
    m = co.m
    p_up = np.append(p[1:], 0.0)
    w_up = np.append(w[1:], 0.0)
    u_up = np.append(u[1:], 0.0)
    feed = (m + 1.0) * gamma
    dp = -m * gamma * p + feed * p_up
    dw = (4.0 * co.omega * u - m * gamma * w
          + feed * ((1.0 - co.A) * w_up + co.A * p_up))
    du = (-co.omega * w - m * gamma * u
          + feed * (co.B * u_up - co.C * (w_up - p_up)))
    dw[0] = 0.0
    du[0] = 0.0
    return dp, dw, du


def derivative(s: BlockState, params: OdeParams) -> BlockState:
    """Time derivative of every block; returned in BlockState shape.

    The result holds rates, not a state, so it is not expected to validate.
    """
    if s.n != params.n:
        raise ValueError(f"state has n={s.n}, params have n={params.n}")
    dp, dw, du = _rates(s.p, s.w, s.u, params.gamma, _Coefficients(params.n))
    return BlockState(dp, dw, du)


def generator_matrix(params: OdeParams) -> np.ndarray:
    """Matrix L with d/dt [p, w, u] = L [p, w, u] (the equations are linear)."""
    n1 = params.n + 1
    co = _Coefficients(params.n)
    L = np.empty((3 * n1, 3 * n1))
    eye = np.eye(3 * n1)
    for j in range(3 * n1):
        y = eye[j]
        L[:, j] = np.concatenate(_rates(y[:n1], y[n1:2 * n1], y[2 * n1:], params.gamma, co))
    return L


def rk4_step(f: Callable, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution: ``p``, ``w``, ``u`` have shape (len(t), n + 1)."""

    t: np.ndarray
    p: np.ndarray
    w: np.ndarray
    u: np.ndarray

    @property
    def n(self) -> int:
        return self.p.shape[1] - 1

    def __len__(self) -> int:
        return self.t.size

    def state(self, i: int) -> BlockState:
        return BlockState(self.p[i], self.w[i], self.u[i])

    def index(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.t - t)))
        if abs(self.t[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"t={t} is not a sample time")
        return i

    def target_fractions(self) -> np.ndarray:
        """F_m(t) for m = 0..n; NaN where the sector is empty (and for m = 0)."""
        with np.errstate(invalid="ignore", divide="ignore"):
            F = (self.p + self.w) / (2.0 * self.p)
        F[self.p <= EPS] = np.nan
        F[:, 0] = np.nan
        return F

    def weighted_target_probability(self) -> np.ndarray:
        return 0.5 * np.sum(self.p[:, 1:] + self.w[:, 1:], axis=1)

    def mean_survivors(self) -> np.ndarray:
        return self.p @ np.arange(self.n + 1)

    def to_csv(self) -> str:
        """CSV with t, p_0..p_n, F_1..F_n, F_weighted, w_bar, u_bar."""
        n = self.n
        cols = (["t"] + [f"p_{m}" for m in range(n + 1)]
                + [f"F_{m}" for m in range(1, n + 1)] + ["F_weighted", "w_bar", "u_bar"])
        F = self.target_fractions()
        Fw = self.weighted_target_probability()
        wb = self.w.sum(axis=1)
        ub = self.u.sum(axis=1)
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for i in range(len(self)):
            vals = [self.t[i], *self.p[i], *F[i, 1:], Fw[i], wb[i], ub[i]]
            buf.write(",".join(_fmt(v) for v in vals) + "\n")
        return buf.getvalue()


def _fmt(v: float) -> str:
    return "" if np.isnan(v) else f"{v:.12g}"


def _check_states(p, w, u, where: str):
    drift = np.max(np.abs(p.sum(axis=1) - 1.0))
    if drift > TRACE_TOL:
        raise IntegrationError(f"{where}: trace drift {drift:.3g} exceeds {TRACE_TOL}")
    bad_p = np.min(p) < -EPS
    bad_w = np.max(np.abs(w[:, 1:]) - p[:, 1:]) > EPS
    bad_det = np.min(0.25 * (p[:, 1:] ** 2 - w[:, 1:] ** 2) - u[:, 1:] ** 2) < -EPS
    if bad_p or bad_w or bad_det:
        raise IntegrationError(f"{where}: block positivity violated")


def _split_generator(params: OdeParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """L = R + D + F: rotation, per-sector decay -m gamma (diagonal) and feed from m + 1."""
    L = generator_matrix(params)
    R = generator_matrix(OdeParams(params.n, 0.0, params.t_end, params.dt))
    m = np.tile(np.arange(params.n + 1, dtype=float), 3)
    D = -params.gamma * m
    F = L - R - np.diag(D)
    return R, D, F


def lawson_rk4_propagator(params: OdeParams, h: float) -> np.ndarray:
    """One integrating-factor RK4 step as a matrix.

    Over [t, t + h] the exact decay is factored out, z = exp(-D (s - t)) y,
    leaving z' = (R + exp(-gamma (s - t)) F) z.  Classic RK4 on z followed by
    y = exp(D h) z gives the step.  RK4 on a pure rotation only shrinks the
    Bloch vector, so a pure block cannot leave the positive cone.
    """
    R, D, F = _split_generator(params)
    I = np.eye(R.shape[0])
    e1, e2 = math.exp(-0.5 * params.gamma * h), math.exp(-params.gamma * h)
    A0, A1, A2 = R + F, R + e1 * F, R + e2 * F
    K1 = A0
    K2 = A1 @ (I + 0.5 * h * K1)
    K3 = A1 @ (I + 0.5 * h * K2)
    K4 = A2 @ (I + h * K3)
    step = I + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
    return np.exp(D * h)[:, None] * step


def integrate(params: OdeParams, s0: BlockState | None = None,
              sample_every: float | None = None, check: bool = True) -> Trajectory:
    """Fixed-step RK4 solution of the block master equation.

    Uses the integrating-factor form of RK4 (see ``lawson_rk4_propagator``);
    the equations are linear, so the step is a constant matrix and output
    strides are matrix powers of it.

    ``s0`` defaults to the symmetric initial state.  ``sample_every`` (in
    Grover steps) thins the output; it is rounded to a whole number of RK4
    steps.  The run aborts with IntegrationError if the trace drifts by more
    than 1e-9 or a block leaves the positive cone.
    """
    n = params.n
    if s0 is None:
        s0 = init_symmetric(n)
    if s0.n != n:
        raise ValueError(f"state has n={s0.n}, params have n={n}")
    n_steps, h = params.n_steps, params.step
    stride = 1 if sample_every is None else max(1, int(round(sample_every / h)))
    idx = list(range(0, n_steps + 1, stride))
    if idx[-1] != n_steps:
        idx.append(n_steps)

    P = lawson_rk4_propagator(params, h)
    powers = {}
    y = np.concatenate([s0.p, s0.w, s0.u])
    out = np.empty((len(idx), y.size))
    out[0] = y
    for j in range(1, len(idx)):
        k = idx[j] - idx[j - 1]
        if k not in powers:
            powers[k] = np.linalg.matrix_power(P, k)
        y = powers[k] @ y
        out[j] = y
    n1 = n + 1
    p, w, u = out[:, :n1], out[:, n1:2 * n1], out[:, 2 * n1:]
    if check:
        _check_states(p, w, u, "integrate")
    return Trajectory(np.array(idx) * h, p, w, u)


def state_at(params: OdeParams, t: float, s0: BlockState | None = None) -> BlockState:
    """Ensemble state at time ``t`` (integrating exactly up to ``t``)."""
    run = integrate(OdeParams(params.n, params.gamma, t, params.dt), s0,
                    sample_every=max(t, params.dt))
    return run.state(len(run) - 1)


def binomial_weights(n: int, gamma: float, t: float) -> np.ndarray:
    """Closed-form survivor distribution p_m(t), m = 0..n."""
    if gamma * t < 0:
        raise ValueError("gamma * t must be >= 0")
    q = math.exp(-gamma * t)
    m = np.arange(n + 1)
    return comb(n, m) * q**m * (1.0 - q) ** (n - m)


def mean_survivors(n: int, gamma: float, t) -> np.ndarray:
    return n * np.exp(-gamma * np.asarray(t, dtype=float))


def half_life(gamma: float) -> float:
    """Time at which on average half the qubits remain."""
    return math.log(2.0) / gamma


# -- averaged two-level model ------------------------------------------------

@dataclass(frozen=True)
class AveragedTrajectory:
    t: np.ndarray
    w_bar: np.ndarray
    u_bar: np.ndarray

    @property
    def target_probability(self) -> np.ndarray:
        return 0.5 * (1.0 + self.w_bar)


def dephasing_rate(n: int, gamma: float, t, form: str = "exact"):
    """Coherence damping rate of the averaged model.

    ``exact`` evaluates m_bar - (m_bar + 1) B(m_bar) at m_bar = n exp(-gamma t)
    with B(x) = sqrt((2^x - 1)/(2^{x+1} - 1)); ``approx`` is its large-M form
    gamma/sqrt(2) + (1 - 1/sqrt(2)) n gamma exp(-gamma t).
    """
    mbar = mean_survivors(n, gamma, t)
    if form == "exact":
        X = 2.0**mbar
        B = np.sqrt((X - 1.0) / (2.0 * X - 1.0))
        return (mbar - (mbar + 1.0) * B) * gamma
    if form == "approx":
        r = 1.0 / math.sqrt(2.0)
        return gamma * r + (1.0 - r) * n * gamma * np.exp(-gamma * np.asarray(t, float))
    raise ValueError(f"unknown dephasing form {form!r}")


def averaged_model(params: OdeParams, form: str = "exact",
                   sample_every: float | None = None) -> AveragedTrajectory:
    """Two-level reduction: summed (w, u) with m-dependent rates at m_bar(t)."""
    n, gamma = params.n, params.gamma

    def f(t, y):
        mbar = n * math.exp(-gamma * t)
        om = 2.0 ** (-(mbar - 2.0) / 2.0)
        G = float(dephasing_rate(n, gamma, t, form))
        return np.array([4.0 * om * y[1], -om * y[0] - G * y[1]])

    b = symmetric_block(n)
    y = np.array([b.w, b.u])
    n_steps, h = params.n_steps, params.step
    stride = 1 if sample_every is None else max(1, int(round(sample_every / h)))
    ts, ws, us = [0.0], [y[0]], [y[1]]
    for k in range(1, n_steps + 1):
        y = rk4_step(f, (k - 1) * h, y, h)
        if k % stride == 0 or k == n_steps:
            ts.append(k * h)
            ws.append(y[0])
            us.append(y[1])
    return AveragedTrajectory(np.array(ts), np.array(ws), np.array(us))
