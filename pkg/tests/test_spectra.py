import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walkspectra import (
    DiscriminantProximityWarning,
    PeriodicOperator,
    PreconditionError,
    TorusGrid,
    certify_eigenvalue,
    contour_projection,
    detect_constant_eigenvalues,
    eigen_on_grid,
    eigenprojection_field,
    peel_point_spectrum,
)
from walkspectra._linalg import cluster_labels, unitary_eig
from walkspectra.laurent import ZetaPoly, zeta_eval
from walkspectra.spectra import contour_radius

S2 = 1 / np.sqrt(2)


@pytest.fixture(scope="module")
def grover_fields(grover):
    grid = TorusGrid(2, 16)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DiscriminantProximityWarning)
        return {w: eigenprojection_field(grover, grid, w) for w in (1.0, -1.0)}


def test_unitary_eig_on_random_unitaries():
    from scipy.stats import unitary_group
    U = unitary_group.rvs(5, size=50, random_state=np.random.default_rng(1))
    lam, V = unitary_eig(U)
    np.testing.assert_allclose(np.abs(lam), 1, atol=1e-8)
    VhV = np.conj(np.swapaxes(V, -1, -2)) @ V
    np.testing.assert_allclose(VhV, np.broadcast_to(np.eye(5), VhV.shape), atol=1e-10)
    np.testing.assert_allclose(U @ V, V * lam[:, None, :], atol=1e-10)
    assert np.all(np.diff(np.angle(lam), axis=-1) >= 0)


def test_unitary_eig_degenerate_matrix():
    lam, V = unitary_eig(np.diag([1, 1, -1, 1j]).astype(complex))
    np.testing.assert_allclose(np.sort_complex(lam), np.sort_complex([1, 1, -1, 1j]), atol=1e-14)


def test_cluster_labels_transitive():
    lam = np.array([1.0, 1.0 + 0.6e-8, 1.0 + 1.2e-8, -1.0])
    np.testing.assert_array_equal(cluster_labels(lam, 1e-8), [0, 0, 0, 3])


def test_constant_coin_eigenvalues(constant_coin):
    eig = eigen_on_grid(constant_coin, TorusGrid(1, 32))
    np.testing.assert_allclose(eig.eigenvalues, np.broadcast_to([1, 1j], (32, 2)))
    cands = detect_constant_eigenvalues(eig)
    assert sorted(np.angle([c.value for c in cands])) == pytest.approx([0, np.pi / 2])


def test_pure_shift_eigenvalues(pure_shift):
    grid = TorusGrid(1, 64)
    eig = eigen_on_grid(pure_shift, grid)
    np.testing.assert_allclose(eig.eigenvalues[:, 0], grid.points()[:, 0], atol=1e-15)
    assert detect_constant_eigenvalues(eig) == []


def test_hadamard_eigenvalues_at_theta_zero(hadamard):
    lam, _ = unitary_eig(hadamard.symbol(1.0))
    np.testing.assert_allclose(np.sort(lam.real), [-1, 1], atol=1e-14)


def test_hadamard_eigenvalues_solve_quadratic(hadamard):
    theta = np.linspace(0, 2 * np.pi, 9)
    lam, _ = unitary_eig(hadamard.symbol(np.exp(1j * theta)))
    resid = lam ** 2 + (2j * np.sin(theta) * S2)[:, None] * lam - 1
    assert np.max(np.abs(resid)) <= 1e-14


def test_certify_examples(constant_coin, hadamard, grover):
    ok, res = certify_eigenvalue(constant_coin, 1.0)
    assert ok and res <= 1e-12
    ok, res = certify_eigenvalue(hadamard, 1.0)
    assert not ok and res == pytest.approx(S2, abs=1e-12)
    for lam in (1.0, -1.0):
        ok, res = certify_eigenvalue(grover, lam)
        assert ok and res <= 1e-9


def test_certify_rejects_off_circle(hadamard):
    with pytest.raises(ValueError):
        certify_eigenvalue(hadamard, 0.5)


def test_peel_identity_coin():
    rep = peel_point_spectrum(PeriodicOperator({0: np.eye(2)}), TorusGrid(1, 8))
    assert rep.point_spectrum == pytest.approx([1.0])
    assert rep.multiplicities == [2]
    assert rep.quotient.degree == 0


def test_peel_hadamard(hadamard):
    rep = peel_point_spectrum(hadamard)
    assert rep.point_spectrum == []
    assert rep.quotient.allclose(rep.char_poly, 0)


def test_peel_grover_and_recompose(grover):
    rep = peel_point_spectrum(grover)
    assert np.allclose(sorted(np.real(rep.point_spectrum)), [-1, 1])
    m = dict(zip(np.round(np.real(rep.point_spectrum)).astype(int), rep.multiplicities))
    assert m == {1: 1, -1: 1} and rep.quotient.degree == 2
    back = rep.quotient
    for om, k in zip(rep.point_spectrum, rep.multiplicities):
        for _ in range(k):
            back = ZetaPoly.linear_factor(om, 2) * back
    rng = np.random.default_rng(2)
    for _ in range(10):
        zeta = complex(*rng.normal(size=2))
        z = np.exp(1j * rng.uniform(0, 2 * np.pi, size=2))
        assert abs(zeta_eval(back, zeta, z) - zeta_eval(rep.char_poly, zeta, z)) <= 1e-9


def test_certificate_soundness(grover):
    """A certified value is numerically constant on a finer grid than the one
    used for detection."""
    eig = eigen_on_grid(grover, TorusGrid(2, 37))
    for om in peel_point_spectrum(grover).point_spectrum:
        dev = np.min(np.abs(eig.eigenvalues - om), axis=-1)
        assert dev.max() <= 10 * 1e-6


def test_hadamard_band_report(hadamard):
    bands = peel_point_spectrum(hadamard, TorusGrid(1, 1024)).bands
    assert bands.discriminant_min == pytest.approx(2.0, abs=1e-9)
    assert not bands.collisions.any()


def test_constant_coin_bands_are_constant(constant_coin):
    rep = peel_point_spectrum(constant_coin)
    assert rep.bands.bands.shape[-1] == 0


def test_grover_collisions_where_bands_touch(grover):
    rep = peel_point_spectrum(grover, TorusGrid(2, 16))
    pts = rep.bands.collision_points
    assert len(pts) > 0
    eig = eigen_on_grid(grover, TorusGrid(2, 16))
    for p in pts:
        lam = eig.eigenvalues[tuple(p)]
        gaps = np.abs(lam[:, None] - lam[None, :]) + np.diag([np.inf] * 4)
        assert gaps.min() < 1e-6


def test_constant_coin_projection(constant_coin):
    f = eigenprojection_field(constant_coin, TorusGrid(1, 16), 1.0)
    np.testing.assert_allclose(f.R, np.broadcast_to(np.diag([1, 0]), (16, 2, 2)), atol=1e-15)
    assert not f.violations.any()


def test_projection_refused_without_eigenvalue(pure_shift):
    with pytest.raises(PreconditionError):
        eigenprojection_field(pure_shift, TorusGrid(1, 16), 1.0)


def test_grover_projection_algebra(grover, grover_fields):
    U = grover.symbol(TorusGrid(2, 16).points())
    for om, f in grover_fields.items():
        R, ok = f.R, f.valid
        assert np.max(np.abs(R @ R - R)[ok]) <= 1e-10
        assert np.max(np.abs(R - np.conj(np.swapaxes(R, -1, -2)))[ok]) <= 1e-10
        assert np.max(np.abs(U @ R - om * R)[ok]) <= 1e-9
        np.testing.assert_allclose(f.trace(), 1.0, atol=1e-10)


def test_grover_violations_flagged_and_repaired(grover_fields):
    for f in grover_fields.values():
        assert f.violations.any()
        assert f.repaired[f.violations].all()


def test_partition_of_unity(grover, grover_fields):
    """Projections onto +1, -1 and the remaining band eigenvectors sum to I."""
    eig = eigen_on_grid(grover, TorusGrid(2, 16))
    ok = grover_fields[1.0].valid & grover_fields[-1.0].valid
    band = np.ones(eig.eigenvalues.shape, bool)
    for om in (1.0, -1.0):
        band &= np.abs(eig.eigenvalues - om) > 1e-8
    Vb = eig.eigenvectors * band[..., None, :]
    total = grover_fields[1.0].R + grover_fields[-1.0].R + Vb @ np.conj(np.swapaxes(Vb, -1, -2))
    assert np.abs(total - np.eye(4))[ok].max() <= 1e-10


def test_contour_matches_eigenvectors(grover, grover_fields):
    rng = np.random.default_rng(4)
    grid = TorusGrid(2, 16)
    for om, f in grover_fields.items():
        idx = np.argwhere(f.valid)
        pick = idx[rng.choice(len(idx), size=40, replace=False)]
        z = grid.points()[tuple(pick.T)]
        P = contour_projection(grover, z, om, contour_radius(f))
        assert np.max(np.abs(P - f.R[tuple(pick.T)])) <= 1e-8


@settings(max_examples=20, deadline=None)
@given(theta=st.floats(0, 2 * np.pi))
def test_hadamard_unimodular_eigenvalues(hadamard, theta):
    lam, V = unitary_eig(hadamard.symbol(np.exp(1j * theta)))
    assert np.all(np.abs(np.abs(lam) - 1) <= 1e-8)
    assert np.max(np.abs(V.conj().T @ V - np.eye(2))) <= 1e-10
