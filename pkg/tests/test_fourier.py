import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walkspectra import (
    AliasingError,
    BoxState,
    DiscriminantProximityWarning,
    LatticeState,
    TorusGrid,
    apply_direct,
    evolve_direct,
    evolve_fourier,
    from_fourier,
    no_aliasing_size,
    project_state,
    site_amplitudes,
    site_readout_size,
    to_fourier,
)
from walkspectra.fourier import GridField, diagonalize_symbol, lattice_coordinates
from walkspectra.lattice import iter_direct

from conftest import random_state, random_unit


def test_signed_wrap():
    np.testing.assert_array_equal(lattice_coordinates(5), [0, 1, 2, -2, -1])
    np.testing.assert_array_equal(lattice_coordinates(4), [0, 1, 2, -1])


def test_delta_at_origin_is_constant():
    phi = np.array([1, 2j])
    f = to_fourier(LatticeState.delta(0, phi), TorusGrid(1, 8))
    np.testing.assert_allclose(f.values, np.broadcast_to(phi, (8, 2)), atol=1e-15)


def test_delta_at_e1_is_z1():
    grid = TorusGrid(2, 6)
    phi = np.array([1.0, -1.0])
    f = to_fourier(LatticeState.delta((1, 0), phi), grid)
    z1 = grid.points()[..., 0]
    np.testing.assert_allclose(f.values, z1[..., None] * phi, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), d=st.integers(1, 2))
def test_round_trip_and_parseval(seed, d):
    rng = np.random.default_rng(seed)
    w = random_state(rng, d, 3)
    grid = TorusGrid(d, 9)
    f = to_fourier(w, grid)
    assert abs(f.mean_norm_sq() - w.norm_sq()) <= 1e-12 * w.norm_sq()
    back = from_fourier(f).to_lattice(tol=1e-13)
    assert back.allclose(w, atol=1e-12)


def test_box_too_large_is_refused():
    w = LatticeState({(0,): [1.0], (8,): [1.0]})
    with pytest.raises(AliasingError):
        to_fourier(w, TorusGrid(1, 8))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_intertwining(grover, seed):
    rng = np.random.default_rng(seed)
    w = random_state(rng, 2, 4, radius=2)
    grid = TorusGrid(2, 8)
    lhs = to_fourier(apply_direct(grover, w), grid).values
    rhs = np.einsum("...ij,...j->...i", grover.symbol(grid.points()), to_fourier(w, grid).values)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


def test_evolve_zero_and_constant_coin(constant_coin):
    grid = TorusGrid(1, 8)
    f = to_fourier(LatticeState.delta(0, [0.6, 0.8]), grid)
    assert evolve_fourier(constant_coin, f, 0) is f
    g = evolve_fourier(constant_coin, f, 4)
    np.testing.assert_allclose(g.values, f.values, atol=1e-14)


def test_evolve_fallback_matches_powering(hadamard):
    grid = TorusGrid(1, 16)
    f = to_fourier(LatticeState.delta(0, [1, 0]), grid)
    U, lam, V = diagonalize_symbol(hadamard, grid)
    bad_V = V.copy()
    bad_V[3] = np.eye(2)  # corrupt one factorization to force the fallback
    g = evolve_fourier(hadamard, f, 5, diag=(U, lam, bad_V))
    ref = f.values[3]
    for _ in range(5):
        ref = U[3] @ ref
    np.testing.assert_allclose(g.values[3], ref, atol=1e-13)
    good = evolve_fourier(hadamard, f, 5)
    np.testing.assert_allclose(g.values, good.values, atol=1e-12)


@pytest.mark.parametrize("name,N", [("hadamard", 128), ("grover", 64)])
def test_fourier_matches_direct(name, N, request):
    op = request.getfixturevalue(name)
    rng = np.random.default_rng(11)
    w = LatticeState.delta((0,) * op.d, random_unit(rng, op.D))
    assert no_aliasing_size(op, (0,) * op.d, (0,) * op.d, 16) <= N
    grid = TorusGrid(op.d, N)
    f = to_fourier(w, grid)
    diag = diagonalize_symbol(op, grid)
    for n, ref in enumerate(iter_direct(op, w, 16)):
        box = from_fourier(evolve_fourier(op, f, n, diag=diag))
        for x in ref.support():
            assert np.max(np.abs(box[x] - ref[x])) <= 1e-10
        assert abs(box.norm_sq() - 1) <= 1e-12


def test_no_aliasing_bound_values(hadamard, grover):
    assert no_aliasing_size(hadamard, (0,), (0,), 16) == 33
    assert no_aliasing_size(grover, (-1, 0), (1, 0), 4) == 11
    assert site_readout_size(hadamard, (0,), (0,), (0,), 16) == 17


def test_site_amplitudes_match_direct(hadamard, grover):
    rng = np.random.default_rng(3)
    for op, n in ((hadamard, 60), (grover, 24)):
        ws = [random_state(rng, op.d, op.D, n_sites=3, radius=2) for _ in range(2)]
        x = (1,) * op.d
        amps = site_amplitudes(op, ws, x, n, chunk_size=97)
        for s, w in enumerate(ws):
            ref = np.array([st_[x] for st_ in iter_direct(op, w, n)])
            assert np.max(np.abs(amps[s] - ref)) <= 1e-12


def test_site_amplitudes_refuse_small_grid(hadamard):
    with pytest.raises(AliasingError):
        site_amplitudes(hadamard, LatticeState.delta(0, [1, 0]), 0, 20, N=10)


def test_constant_coin_projection_of_state(constant_coin):
    w = LatticeState.delta(0, [0.6, 0.8j])
    pw = project_state(constant_coin, w, TorusGrid(1, 8), 1.0).to_lattice(tol=1e-14)
    assert pw.allclose(LatticeState.delta(0, [0.6, 0]), atol=1e-14)


@pytest.fixture(scope="module")
def grover_projections(grover):
    rng = np.random.default_rng(8)
    w = LatticeState.delta((0, 0), random_unit(rng, 4))
    grid = TorusGrid(2, 64)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DiscriminantProximityWarning)
        p1 = project_state(grover, w, grid, 1.0)
        pm = project_state(grover, w, grid, -1.0)
    return w, grid, p1, pm


def test_grover_projection_norms(grover_projections):
    w, _, p1, pm = grover_projections
    total = p1.norm_sq() + pm.norm_sq()
    assert total < w.norm_sq() - 1e-3


def test_grover_projection_idempotent_and_orthogonal(grover, grover_projections):
    w, grid, p1, pm = grover_projections
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DiscriminantProximityWarning)
        again = project_state(grover, p1, grid, 1.0)
    assert np.sqrt(np.sum(np.abs(again.values - p1.values) ** 2)) <= 1e-8
    inner = np.vdot(p1.values, pm.values)
    assert abs(inner) <= 1e-8


def test_grover_projection_is_eigenvector(grover, grover_projections):
    _, _, p1, pm = grover_projections
    for om, p in ((1.0, p1), (-1.0, pm)):
        # compare away from the box boundary, where the truncated tail enters
        w = p.to_lattice()
        Uw = apply_direct(grover, w)
        inner = [x for x in w.support() if max(map(abs, x)) <= 20]
        err = max(np.max(np.abs(Uw[x] - om * w[x])) for x in inner)
        assert err <= 1e-8
