import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lossy_grover import exact_oracle as eo
from lossy_grover.core import Block, RegisterConfig, symmetric_block, validate_block_state
from lossy_grover.subspace import (basis_coefficients, bloch_length2, evolve_discrete,
                                   grover_angle, loss_coefficients, loss_map,
                                   read_loss_schedule, rotate_block, single_loss_constants,
                                   write_loss_schedule)
from lossy_grover.verification import compare_schedule, random_schedule


def eq5_map(b: Block, n: int, m: int) -> Block:
    """Multi-qubit loss n -> m written directly from the rho11/rho22/rho12 map."""
    f, g, h = basis_coefficients(n, m)
    r11, r22, r12 = b.rho11, b.rho22, b.u
    n11 = r11 + g * g * r22
    n22 = (1 - g * g) * r22
    return Block(n11 + n22, n11 - n22, h * r12 + f * g * r22)


def random_block(rng, p=1.0):
    # uniform point in the Bloch disc, scaled by p
    while True:
        w, v = rng.uniform(-1, 1, 2)
        if w * w + v * v <= 1:
            return Block(p, p * w, p * v / 2)


blocks = st.builds(lambda s, p: random_block(np.random.default_rng(s), p),
                   st.integers(0, 2**32 - 1), st.floats(1e-3, 1.0))


def test_basis_coefficients_n2_m1():
    assert basis_coefficients(2, 1) == pytest.approx((1 / math.sqrt(3),) * 3)


def test_basis_coefficients_n3_m1():
    f, g, h = basis_coefficients(3, 1)
    assert g * g == pytest.approx(3 / 7)


@pytest.mark.parametrize("n,m", [(n, m) for n in range(2, 25) for m in range(1, n)][::7])
def test_basis_normalisation(n, m):
    f, g, h = basis_coefficients(n, m)
    assert f * f + g * g + h * h == pytest.approx(1.0, abs=1e-12)


def test_basis_range():
    for n, m in [(3, 0), (3, 3), (2, 5)]:
        with pytest.raises(ValueError):
            basis_coefficients(n, m)


def test_loss_coefficients_match_single_loss():
    for m in range(1, 12):
        c = loss_coefficients(m)
        assert c.A == pytest.approx(c.g**2, abs=1e-15)
        assert c.B == pytest.approx(c.h, abs=1e-15)
        assert 0 <= c.A <= 1 and 0 <= c.B <= 1


def test_loss_map_pure_target_fixed():
    for m in range(1, 10):
        assert loss_map(Block(1, 1, 0), m) == pytest.approx((1, 1, 0))


def test_loss_map_complement_m1_against_oracle():
    # oracle route: |s_2><s_2| for target 11, trace one qubit, project
    s = eo.pure_dense([1, 1, 1, 0], (0, 1))
    for q in (0, 1):
        r = eo.partial_trace(s, [q])
        p, w, u, leak = eo.project_block(r, (1,))
        assert (p, w, u) == pytest.approx((1, -1 / 3, 1 / 3), abs=1e-14)
    assert loss_map(Block(1, -1, 0), 1) == pytest.approx((1, -1 / 3, 1 / 3), abs=1e-15)
    assert single_loss_constants(1) == pytest.approx((1 / 3, math.sqrt(1 / 3)))


def test_loss_map_to_zero_qubits():
    assert loss_map(Block(0.7, 0.2, 0.1), 0) == (0.7, 0.0, 0.0)


@given(blocks, st.integers(1, 20))
def test_loss_map_trace_and_positivity(b, m_to):
    out = loss_map(b, m_to)
    assert out.p == b.p
    assert abs(out.w) <= out.p + 1e-12
    det = 0.25 * (out.p**2 - out.w**2) - out.u**2
    assert det >= -1e-12


@given(blocks, st.integers(3, 20))
def test_two_losses_compose(b, n):
    seq = loss_map(loss_map(b, n - 1), n - 2)
    assert seq == pytest.approx(eq5_map(b, n, n - 2), abs=1e-12)


def test_eq5_map_agrees_with_dense_multi_loss():
    n, target = 5, (1, 0, 0, 1, 1)
    s = eo.apply_grover_steps(eo.init_symmetric_dense(n), target, 2)
    b = Block(*eo.project_block(s, target)[:3])
    r = eo.partial_trace(s, [1, 4])
    got = eo.project_block(r, eo.restrict(target, r.labels))[:3]
    assert eq5_map(b, 5, 3) == pytest.approx(got, abs=1e-13)


def test_rotate_identity():
    b = Block(1, 0.3, 0.2)
    assert rotate_block(b, 5, 0) == b


def test_rotate_n2_single_step():
    assert rotate_block(symmetric_block(2), 2, 1) == pytest.approx((1, 1, 0), abs=1e-15)


def test_rotate_closed_form_n8():
    n, k = 8, round(math.pi / 4 * 16)
    b = rotate_block(symmetric_block(n), n, k)
    theta = grover_angle(n)
    assert 0.5 * (1 + b.w) == pytest.approx(math.sin((2 * k + 1) * theta / 2) ** 2, abs=1e-12)


@given(blocks, st.integers(1, 24), st.integers(0, 5000))
def test_rotation_preserves_bloch_length(b, m, k):
    assert bloch_length2(rotate_block(b, m, k)) == pytest.approx(bloch_length2(b), abs=1e-12)


def test_evolve_lossless_n2():
    tr = evolve_discrete(RegisterConfig(n=2, target=(0, 1), n_steps=1))
    assert tr.block(1) == pytest.approx((1, 1, 0), abs=1e-15)
    assert tr.m.tolist() == [2, 2]


def test_evolve_matches_oracle_early_loss():
    cfg = RegisterConfig(n=4, target=(1, 0, 1, 1), n_steps=8)
    dev, leak, imag = compare_schedule(cfg, [(0, 2)])
    assert dev <= 1e-10 and leak <= 1e-10


def test_evolve_lose_everything():
    cfg = RegisterConfig(n=3, target=(1, 0, 1), n_steps=4)
    tr = evolve_discrete(cfg, [(1, 0), (2, 2), (2, 1)])
    assert tr.m[-1] == 0
    assert tr.states[-1].p[0] == 1.0
    assert all(validate_block_state(s) == [] for s in tr.states)


def test_evolve_schedule_errors():
    cfg = RegisterConfig(n=3, target=(1, 0, 1), n_steps=4)
    with pytest.raises(ValueError):
        evolve_discrete(cfg, [(1, 0), (2, 0)])
    with pytest.raises(ValueError):
        evolve_discrete(cfg, [(1, 7)])
    with pytest.raises(ValueError):
        evolve_discrete(cfg, [(9, 1)])


def test_evolve_purity_bookkeeping_matches_dense():
    cfg = RegisterConfig(n=5, target=(0, 0, 1, 1, 0), n_steps=6)
    sched = [(2, 1), (4, 3)]
    tr = evolve_discrete(cfg, sched)
    s = eo.init_symmetric_dense(5)
    s = eo.apply_grover_steps(s, cfg.target, 2)
    s = eo.partial_trace(s, [1])
    assert tr.purity[2] == pytest.approx(eo.purity(s), abs=1e-12)


def test_oracle_equivalence_exhaustive_small():
    """Every single- and two-loss schedule at random steps, n <= 8."""
    rng = np.random.default_rng(17)
    cases = 0
    for n in [*range(2, 9), *range(2, 9)]:
        target = tuple(int(b) for b in rng.integers(0, 2, n))
        n_steps = 6
        cfg = RegisterConfig(n=n, target=target, n_steps=n_steps)
        for q in range(n):
            sched = [(int(rng.integers(0, n_steps + 1)), q)]
            assert compare_schedule(cfg, sched)[0] <= 1e-10
            cases += 1
        for q1 in range(n):
            q2 = (q1 + 1 + int(rng.integers(0, n - 1))) % n
            k1, k2 = sorted(int(x) for x in rng.integers(0, n_steps + 1, 2))
            assert compare_schedule(cfg, [(k1, q1), (k2, q2)])[0] <= 1e-10
            cases += 1
    assert cases >= 100


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.integers(1, 10), st.integers(0, 2**31))
def test_oracle_equivalence_random(n, n_steps, seed):
    rng = np.random.default_rng(seed)
    target = tuple(int(b) for b in rng.integers(0, 2, n))
    cfg = RegisterConfig(n=n, target=target, n_steps=n_steps)
    dev, leak, imag = compare_schedule(cfg, random_schedule(n, n_steps, rng))
    assert dev <= 1e-10 and leak <= 1e-10 and imag <= 1e-12


def test_schedule_file_roundtrip(tmp_path):
    path = tmp_path / "sched.csv"
    write_loss_schedule(path, [(0, 2), (5, 1)])
    assert read_loss_schedule(path) == [(0, 2), (5, 1)]
    cfg = RegisterConfig(n=3, target=(1, 1, 0), n_steps=6)
    assert evolve_discrete(cfg, read_loss_schedule(path)).m[-1] == 1
