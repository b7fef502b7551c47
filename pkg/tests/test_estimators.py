import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from walkspectra import LatticeState, PreconditionError
from walkspectra.estimators import LongTimeAverage, PointSpectrum
from walkspectra.cli.presets import preset_steps


def test_point_spectrum_estimator(grover, hadamard):
    est = PointSpectrum().fit(grover)
    assert sorted(est.eigenvalues_.real) == pytest.approx([-1, 1])
    assert est.predict() is True
    assert PointSpectrum().fit(hadamard).predict() is False


def test_params_and_clone():
    est = PointSpectrum(grid_n=32, certify_tol=1e-9)
    assert est.get_params()["grid_n"] == 32
    assert clone(est).get_params() == est.get_params()


def test_fit_accepts_step_mapping_and_checks_unitarity():
    assert PointSpectrum().fit(preset_steps("constant-coin")).eigenvalues_.size == 2
    steps = preset_steps("pure-shift")
    steps[(1,)] = 1.5 * steps[(1,)]
    with pytest.raises(PreconditionError):
        PointSpectrum().fit(steps)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        LongTimeAverage().transform(np.eye(2))


def test_long_time_average_constant_coin(constant_coin):
    est = LongTimeAverage(sites=[0, 1], grid_n=16).fit(constant_coin)
    out = est.transform(np.array([[0.6, 0.8], [1.0, 0.0]]))
    np.testing.assert_allclose(out, [[1.0, 0.0], [1.0, 0.0]], atol=1e-12)
    np.testing.assert_allclose(est.cesaro([LatticeState.delta(0, [1.0, 0])], 16), [[1.0, 0.0]])


def test_long_time_average_without_eigenvalues(hadamard):
    out = LongTimeAverage().fit(hadamard).transform(LatticeState.delta(0, [1.0, 0]))
    assert out.shape == (1, 1) and out[0, 0] == 0.0


def test_state_dimension_checked(grover):
    est = LongTimeAverage(grid_n=16).fit(grover)
    with pytest.raises(ValueError):
        est.transform(np.ones((1, 3)))
