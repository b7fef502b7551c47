import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walkspectra import (
    DimensionMismatchError,
    LatticeState,
    MalformedOperatorError,
    PeriodicOperator,
    apply_direct,
    evolve_direct,
    probability,
    validate_unitarity,
)
from walkspectra.lattice import iter_direct

from conftest import random_state

S2 = 1 / np.sqrt(2)


def test_identity_coin_is_unitary():
    rep = validate_unitarity(PeriodicOperator({0: np.eye(3)}))
    assert rep.max_residual == 0 and rep.passed


def test_hadamard_unitarity_residual(hadamard):
    rep = validate_unitarity(hadamard)
    assert rep.max_residual <= 1e-15
    assert set(rep.per_gamma) == {(-2,), (0,), (2,)}
    assert rep.max_residual == max(rep.per_gamma.values())


def test_scaled_coin_fails(hadamard):
    steps = dict(hadamard.steps)
    steps[(1,)] = 1.01 * steps[(1,)]
    rep = validate_unitarity(PeriodicOperator(steps), tol=1e-10)
    assert not rep.passed
    # |1.01^2 - 1| on the diagonal of the gamma = 0 block
    assert rep.max_residual == pytest.approx(0.0201, rel=1e-6)


@pytest.mark.parametrize("steps", [
    {},
    {0: np.eye(2), 1: np.eye(3)},
    {(0, 0): np.eye(2), (1,): np.eye(2)},
    {0: np.ones((2, 3))},
])
def test_malformed_operators(steps):
    with pytest.raises(MalformedOperatorError):
        PeriodicOperator(steps)


def test_pure_shift_moves_delta(pure_shift):
    w = apply_direct(pure_shift, LatticeState.delta(0, [1.0]))
    assert w.support() == {(1,)}
    assert evolve_direct(pure_shift, LatticeState.delta(0, [1.0]), 5).support() == {(5,)}


def test_constant_coin_rotates_in_place(constant_coin):
    w = LatticeState.delta(0, [0.6, 0.8])
    out = apply_direct(constant_coin, w)
    np.testing.assert_allclose(out[0], [0.6, 0.8j])
    assert probability(out, 0) == pytest.approx(1.0)


def test_hadamard_one_step_by_hand(hadamard):
    w = apply_direct(hadamard, LatticeState.delta(0, [1, 0]))
    # (Uw)(x) = sum_a C(a) w(x - a): site -1 gets C(-1) e1, site +1 gets C(+1) e1
    np.testing.assert_allclose(w[-1], [S2, 0], atol=1e-15)
    np.testing.assert_allclose(w[1], [0, S2], atol=1e-15)
    assert probability(w, -1) == pytest.approx(0.5)
    assert probability(w, 7) == 0.0


def test_hadamard_two_steps_support(hadamard):
    w = evolve_direct(hadamard, LatticeState.delta(0, [1, 0]), 2)
    assert w.support() <= {(-2,), (0,), (2,)}


def test_evolve_zero_steps_is_identity(hadamard):
    w = LatticeState.delta(3, [0.3, 0.4j])
    assert evolve_direct(hadamard, w, 0).allclose(w, atol=0)


def test_dimension_mismatch(hadamard):
    with pytest.raises(DimensionMismatchError):
        apply_direct(hadamard, LatticeState.delta((0, 0), [1, 0]))


def test_probabilities_sum_to_norm(grover):
    rng = np.random.default_rng(5)
    w = random_state(rng, 2, 4)
    for s in iter_direct(grover, w, 12):
        total = sum(probability(s, x) for x in s.support())
        assert abs(total - w.norm_sq()) <= 1e-12 * w.norm_sq()


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), shift=st.tuples(st.integers(-5, 5), st.integers(-5, 5)))
def test_translation_equivariance(grover, seed, shift):
    w = random_state(np.random.default_rng(seed), 2, 4)
    a = apply_direct(grover, w.translate(shift))
    b = apply_direct(grover, w).translate(shift)
    assert a.allclose(b, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(0, 6))
def test_support_bound(grover, seed, n):
    w = random_state(np.random.default_rng(seed), 2, 4)
    reach = {tuple(x) for x in w.support()}
    for _ in range(n):
        reach = {tuple(np.add(x, a)) for x in reach for a in grover.steps}
    assert evolve_direct(grover, w, n).support() <= reach


def _random_split_walk(rng):
    """Shift-coin walk S C with a Haar coin: unitary by construction."""
    from scipy.stats import unitary_group
    C = unitary_group.rvs(2, random_state=rng)
    P0, P1 = np.diag([1.0, 0]), np.diag([0, 1.0])
    return PeriodicOperator({-1: P0 @ C, 1: P1 @ C})


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_norm_preservation(seed):
    rng = np.random.default_rng(seed)
    op = _random_split_walk(rng)
    assert validate_unitarity(op, 1e-12).passed
    w = random_state(rng, 1, 2)
    assert abs(apply_direct(op, w).norm_sq() - w.norm_sq()) <= 1e-10 * w.norm_sq()


def test_state_prune_and_lookup():
    w = LatticeState({(0,): [1, 0], (2,): [0, 0]})
    assert len(w.prune()) == 1
    np.testing.assert_array_equal(w[(5,)], [0, 0])
