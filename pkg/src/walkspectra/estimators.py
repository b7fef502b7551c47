"""Estimator-style wrappers.

``fit`` takes the walk (a :class:`PeriodicOperator`) instead of a data
matrix; ``transform`` / ``predict`` take initial states.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_operator, check_sites, check_states
from .spectra import TorusGrid, peel_point_spectrum
from .theorems import cesaro_average, point_spectrum_prediction, transition_series


class PointSpectrum(BaseEstimator):
    """Certified point spectrum of a walk.

    Parameters
    ----------
    grid_n : int or None
        Grid points per axis used for detection (default 256 for d=1, 16 otherwise).
    spread_tol, certify_tol, cluster_tol : float
        Passed to :func:`peel_point_spectrum`.

    Attributes
    ----------
    report_ : SpectralReport
    eigenvalues_ : ndarray of complex
    multiplicities_ : ndarray of int
    """

    def __init__(self, grid_n=None, spread_tol=1e-6, certify_tol=1e-8, cluster_tol=1e-8):
        self.grid_n = grid_n
        self.spread_tol = spread_tol
        self.certify_tol = certify_tol
        self.cluster_tol = cluster_tol

    def fit(self, op, y=None):
        op = check_operator(op)
        grid = None if self.grid_n is None else TorusGrid(op.d, self.grid_n)
        self.report_ = peel_point_spectrum(op, grid, spread_tol=self.spread_tol,
                                           certify_tol=self.certify_tol,
                                           cluster_tol=self.cluster_tol)
        self.operator_ = op
        self.eigenvalues_ = np.array(self.report_.point_spectrum, dtype=complex)
        self.multiplicities_ = np.array(self.report_.multiplicities, dtype=int)
        return self

    def predict(self, X=None):
        """True when the walk localizes, i.e. has an eigenvalue."""
        check_is_fitted(self, "report_")
        return bool(self.eigenvalues_.size)


class LongTimeAverage(TransformerMixin, BaseEstimator):
    """Long-time averages ``p_bar(w; x)`` of initial states.

    ``transform`` returns the predicted averages ``sum_j |(pi_j w)(x)|^2``,
    one row per state and one column per site; ``cesaro`` returns the
    observed means at a finite horizon for comparison.

    Parameters
    ----------
    sites : sequence of lattice points or None
        Default: the origin.
    grid_n : int or None
        Grid for the eigenprojections (default 1024 for d=1, 128 otherwise).
    """

    def __init__(self, sites=None, grid_n=None, cluster_tol=1e-8):
        self.sites = sites
        self.grid_n = grid_n
        self.cluster_tol = cluster_tol

    def fit(self, op, y=None):
        op = check_operator(op)
        self.operator_ = op
        self.sites_ = check_sites(self.sites, op.d)
        self.spectrum_ = peel_point_spectrum(op)
        self.grid_ = TorusGrid(op.d, self.grid_n or (1024 if op.d == 1 else 128))
        return self

    def transform(self, X):
        check_is_fitted(self, "operator_")
        states = check_states(X, self.operator_)
        out = np.zeros((len(states), len(self.sites_)))
        for i, w in enumerate(states):
            pred = point_spectrum_prediction(self.operator_, w, self.grid_, self.spectrum_,
                                             cluster_tol=self.cluster_tol)
            out[i] = [pred.at(s) for s in self.sites_]
        return out

    def cesaro(self, X, horizon: int = 1024) -> np.ndarray:
        """Observed means ``(1/N) sum_{n=1}^N p_n`` with ``N = horizon``."""
        check_is_fitted(self, "operator_")
        states = check_states(X, self.operator_)
        out = np.zeros((len(states), len(self.sites_)))
        for i, w in enumerate(states):
            for k, s in enumerate(self.sites_):
                p = transition_series(self.operator_, w, s, horizon)
                out[i, k] = cesaro_average(self.operator_, w, s, [horizon], series=p).final_mean
        return out
