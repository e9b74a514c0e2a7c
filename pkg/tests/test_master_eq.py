import math

import numpy as np
import pytest
from scipy.linalg import expm

from lossy_grover import exact_oracle as eo
from lossy_grover.core import BlockState, init_symmetric, symmetric_block, validate_block_state
from lossy_grover.master_eq import (IntegrationError, OdeParams, averaged_model,
                                    binomial_weights, dephasing_rate, derivative,
                                    generator_matrix, half_life, integrate, mean_survivors,
                                    omega, rk4_step, state_at)
from lossy_grover.trials import trajectory_block


def test_params_validation():
    for bad in (dict(dt=0.0), dict(dt=0.6), dict(t_end=-1.0)):
        kw = dict(n=4, gamma=1e-3, t_end=10.0) | bad
        with pytest.raises(ValueError):
            OdeParams(**kw)
    with pytest.raises(ValueError):
        OdeParams(n=4, gamma=-1.0, t_end=1.0)
    p = OdeParams(4, 0.0, 1.05, 0.1)
    assert p.n_steps == 11 and p.step * p.n_steps == pytest.approx(1.05)


def test_no_loss_means_no_population_flow():
    d = derivative(init_symmetric(5), OdeParams(5, 0.0, 1.0))
    assert np.all(d.p == 0.0)


def test_pure_target_rates():
    n = 6
    s = BlockState.single(n, n, (1, 1, 0))
    d = derivative(s, OdeParams(n, 0.0, 1.0))
    assert d.w[n] == 0.0
    assert d.u[n] == pytest.approx(-omega(n))


def test_feed_matches_dense_loss():
    # only sector 2 populated: the rates into sector 1 are 2 gamma times the traced block
    gamma = 1e-3
    b = symmetric_block(2)
    pt, wt, ut, _ = eo.project_block(eo.partial_trace(eo.init_symmetric_dense(2), [1]), (1,))
    d = derivative(BlockState.single(2, 2, b), OdeParams(2, gamma, 1.0))
    assert d.p[1] == pytest.approx(2 * gamma * pt, abs=1e-15)
    assert d.w[1] == pytest.approx(2 * gamma * wt, abs=1e-15)
    assert d.u[1] == pytest.approx(2 * gamma * ut, abs=1e-15)


def test_feed_finite_difference_of_discrete_loss():
    # small-gamma loss over dt, read off the exact per-qubit loss probability
    n, gamma, dt = 3, 1e-6, 1e-3
    s = BlockState.single(n, n, (1.0, -1.0, 0.0))
    d = derivative(s, OdeParams(n, gamma, 1.0))
    dense = eo.pure_dense(np.r_[np.ones(7), 0.0] / math.sqrt(7), range(3))
    q = 1 - math.exp(-gamma * dt)
    for lost in range(3):
        r = eo.partial_trace(dense, [lost])
        _, w, u, _ = eo.project_block(r, eo.restrict((1, 1, 1), r.labels))
        assert d.w[2] == pytest.approx(3 * gamma * w, rel=1e-12)
        assert d.u[2] == pytest.approx(3 * gamma * u, rel=1e-12)
    assert d.p[2] * dt == pytest.approx(3 * q, rel=1e-5)


def test_rk4_step_exact_on_cubic():
    # y' = 3t^2 is integrated exactly by a 4th-order method
    assert rk4_step(lambda t, y: 3 * t * t, 0.0, 0.0, 0.5) == pytest.approx(0.125, abs=1e-15)


def test_integrate_matches_matrix_exponential():
    params = OdeParams(6, 5e-3, 40.0, 0.1)
    y0 = np.concatenate([init_symmetric(6).p, init_symmetric(6).w, init_symmetric(6).u])
    ref = expm(generator_matrix(params) * 40.0) @ y0
    run = integrate(params, sample_every=40.0)
    got = np.concatenate([run.p[-1], run.w[-1], run.u[-1]])
    assert got == pytest.approx(ref, abs=1e-6)


def test_pure_top_block_stays_positive_at_default_dt():
    run = integrate(OdeParams(8, 2e-3, 600.0), sample_every=1.0)
    det = 0.25 * (run.p[:, 8] ** 2 - run.w[:, 8] ** 2) - run.u[:, 8] ** 2
    assert det.min() >= -1e-12


def test_generator_matches_derivative():
    params = OdeParams(4, 3e-3, 1.0)
    rng = np.random.default_rng(0)
    s = BlockState(rng.random(5), rng.random(5), rng.random(5))
    d = derivative(s, params)
    y = np.concatenate([s.p, s.w, s.u])
    assert generator_matrix(params) @ y == pytest.approx(np.concatenate([d.p, d.w, d.u]))


def test_lossless_continuous_n12():
    run = integrate(OdeParams(12, 0.0, 50.0, 0.05))
    assert run.weighted_target_probability()[-1] >= 0.999


def test_binomial_law_n24():
    n, g = 24, 4e-4
    run = integrate(OdeParams(n, g, 5 / g, 0.1), sample_every=250)
    for i, t in enumerate(run.t):
        assert run.p[i] == pytest.approx(binomial_weights(n, g, t), abs=1e-8)
    assert run.mean_survivors() == pytest.approx(mean_survivors(n, g, run.t), abs=1e-8)


def test_binomial_weights_examples():
    assert binomial_weights(3, 1e-3, 0.0).tolist() == [0, 0, 0, 1]
    w = binomial_weights(2, 1.0, math.log(2))
    assert w == pytest.approx([0.25, 0.5, 0.25])
    assert half_life(4e-4) == pytest.approx(1732.868, abs=1e-3)


def test_outputs_validate():
    run = integrate(OdeParams(8, 2e-3, 600.0, 0.1), sample_every=20)
    for i in range(len(run)):
        assert validate_block_state(run.state(i)) == []


def test_trace_drift_raises():
    bad = BlockState(np.array([0.0, 0.0, 1.2]), np.zeros(3), np.zeros(3))
    with pytest.raises(IntegrationError):
        integrate(OdeParams(2, 1e-3, 1.0), bad)


def test_state_at_matches_trajectory():
    params = OdeParams(6, 1e-3, 300.0, 0.1)
    run = integrate(params, sample_every=100)
    s = state_at(params, 300.0)
    assert s.w == pytest.approx(run.w[-1], abs=1e-12)


def test_csv_schema():
    run = integrate(OdeParams(3, 0.0, 2.0, 0.5))
    lines = run.to_csv().splitlines()
    header = lines[0].split(",")
    assert header == ["t", "p_0", "p_1", "p_2", "p_3", "F_1", "F_2", "F_3",
                      "F_weighted", "w_bar", "u_bar"]
    row = lines[1].split(",")
    assert len(row) == len(header)
    # lossless: sectors 1 and 2 are empty, their F is blank
    assert row[5] == "" and row[6] == "" and row[7] != ""


def test_target_fraction_nan_when_empty():
    run = integrate(OdeParams(3, 0.0, 1.0, 0.5))
    F = run.target_fractions()
    assert np.isnan(F[:, :3]).all() and not np.isnan(F[:, 3]).any()


# -- averaged model ----------------------------------------------------------

def test_averaged_undamped_without_loss():
    n = 10
    av = averaged_model(OdeParams(n, 0.0, 200.0, 0.05))
    r2 = av.w_bar**2 + 4 * av.u_bar**2
    assert r2 == pytest.approx(np.full_like(r2, r2[0]), abs=1e-8)
    assert av.w_bar[0] == pytest.approx(2 / 2**n - 1)
    assert dephasing_rate(n, 0.0, 5.0) == 0.0


def test_dephasing_rate_forms():
    n, g = 24, 4e-4
    t = np.array([0.0, 1000.0, 1733.0])
    exact = dephasing_rate(n, g, t, "exact")
    approx = dephasing_rate(n, g, t, "approx")
    assert np.all(exact > 0)
    # large-M expansion of the exact bracket carries -gamma/sqrt(2), the short form +gamma/sqrt(2)
    assert exact == pytest.approx(approx - math.sqrt(2) * g, rel=1e-3)
    with pytest.raises(ValueError):
        dephasing_rate(n, g, t, "other")


def test_averaged_envelope_decays():
    av = averaged_model(OdeParams(24, 4e-4, 3000.0, 0.1), sample_every=10)
    r = np.sqrt(av.w_bar**2 + 4 * av.u_bar**2)
    assert r[-1] < 0.5 * r[0]
    assert np.all(np.diff(r) <= 1e-12)


def test_averaged_agrees_early():
    params = OdeParams(24, 4e-4, 300.0, 0.1)
    run = integrate(params, sample_every=10)
    full = run.w[:, 1:].sum(axis=1)
    for form in ("exact", "approx"):
        av = averaged_model(params, form, sample_every=10)
        assert np.all(np.abs(av.w_bar - full) <= 0.05 * np.abs(full))


@pytest.mark.xfail(strict=True, reason="averaged model ignores the spread of m: "
                                       "the full ensemble dephases faster after t ~ 400")
def test_averaged_within_ten_percent_while_mbar_at_least_8():
    n, g = 24, 4e-4
    t_end = math.log(n / 8) / g
    params = OdeParams(n, g, t_end, 0.1)
    run = integrate(params, sample_every=10)
    full = run.w[:, 1:].sum(axis=1)
    av = averaged_model(params, "exact", sample_every=10)
    assert np.all(np.abs(av.w_bar - full) <= 0.10 * np.abs(full))


# -- ensemble vs sampled trajectories ------------------------------------------

def test_master_equation_is_trajectory_average():
    """Small gamma: average of continuous-rotation trajectories equals the ODE."""
    n, g, t = 4, 1e-3, 400.0
    N = 20000
    rng = np.random.default_rng(5)
    W = np.zeros((N, n + 1))
    U = np.zeros((N, n + 1))
    P = np.zeros((N, n + 1))
    for i in range(N):
        b, surv = trajectory_block(n, rng.exponential(1 / g, n), t, "continuous")
        m = surv.size
        P[i, m], W[i, m], U[i, m] = 1.0, b.w, b.u
    s = state_at(OdeParams(n, g, t, 0.01), t)
    for est, ref in ((P, s.p), (W, s.w), (U, s.u)):
        mean = est.mean(axis=0)
        sigma = est.std(axis=0) / math.sqrt(N) + 1e-12
        assert np.all(np.abs(mean - ref) <= 4 * sigma + 1e-6)
