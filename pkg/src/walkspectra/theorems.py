"""Long-time behaviour of walks: Cesàro means, their eigenprojection
prediction, decay checks, an exact finite-dimensional oracle and the
one-dimensional spectral density of the continuous part."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._linalg import cluster_labels, unitary_eig
from .exceptions import (
    DimensionMismatchError,
    PreconditionError,
    SpectrumGroupingWarning,
)
from .fourier import site_amplitudes, to_fourier
from .lattice import LatticeState, PeriodicOperator, _as_point, iter_direct
from .laurent import LaurentPoly, ZetaPoly, resultant_zeta
from .spectra import (
    DEFAULT_CLUSTER_TOL,
    ProjectionField,
    SpectralReport,
    TorusGrid,
    eigenprojection_field,
    peel_point_spectrum,
)

__all__ = [
    "AverageTrace",
    "PointSpectrumPrediction",
    "DecayReport",
    "FiniteUnitary",
    "OracleResult",
    "DensityProfile",
    "transition_series",
    "cesaro_average",
    "point_spectrum_prediction",
    "predicted_average",
    "decay_check",
    "finite_oracle_average",
    "brute_force_cesaro",
    "critical_angles_1d",
    "density_nodes",
    "spectral_density_1d",
    "geometric_schedule",
]

DIRECT_WORK = 2_000_000
FINITE_UNITARY_TOL = 1e-12
GROUPING_TOL = 1e-10


def geometric_schedule(cap: int, start: int = 1, ratio: int = 2) -> list[int]:
    """``start, start*ratio, ...`` up to and including ``cap`` (appended if missed)."""
    out, n = [], start
    while n < cap:
        out.append(n)
        n *= ratio
    out.append(cap)
    return out


def _default_grid_size(op: PeriodicOperator) -> int:
    return 1024 if op.d == 1 else 128


# --------------------------------------------------------------------------
# time series


def transition_series(op: PeriodicOperator, w: LatticeState, x, n_max: int,
                      method: str = "auto") -> np.ndarray:
    """``p_n(w; x) = |(U^n w)(x)|^2`` for ``n = 0..n_max``.

    ``method`` is ``"direct"`` (sparse iteration), ``"spectral"`` (exact grid
    readout, see :func:`site_amplitudes`) or ``"auto"``, which iterates while
    the estimated work ``n_max^(d+1) |S|`` stays small.
    """
    if method == "auto":
        work = float(n_max) ** (op.d + 1) * len(op.steps)
        method = "direct" if work <= DIRECT_WORK else "spectral"
    x = _as_point(x, op.d)
    if method == "direct":
        return np.array([np.sum(np.abs(s[x]) ** 2) for s in iter_direct(op, w, n_max)])
    if method == "spectral":
        a = site_amplitudes(op, w, x, n_max)
        return np.sum(np.abs(a) ** 2, axis=-1)
    raise ValueError(f"unknown method {method!r}")


# --------------------------------------------------------------------------
# prediction from eigenprojections


@dataclass
class PointSpectrumPrediction:
    """Eigenprojections ``pi_j w`` of a state on the full box of a grid.

    ``values[j]`` has shape ``grid.shape + (D,)`` in the grid's index layout
    (index ``m`` is the signed lattice coordinate of
    :func:`lattice_coordinates`).
    """

    grid: TorusGrid
    eigenvalues: list[complex]
    values: np.ndarray
    norms_sq: np.ndarray
    fields: list[ProjectionField] = field(default_factory=list, repr=False)

    def at(self, x) -> float:
        """``sum_j |(pi_j w)(x)|^2``."""
        if not self.eigenvalues:
            return 0.0
        x = _as_point(x, self.grid.d)
        half = self.grid.N // 2
        if any(abs(c) > half for c in x):
            return 0.0
        idx = tuple(c % self.grid.N for c in x)
        return float(np.sum(np.abs(self.values[(slice(None),) + idx]) ** 2))

    def site_map(self) -> np.ndarray:
        """``sum_j |(pi_j w)(x)|^2`` for every represented site (grid layout)."""
        if not self.eigenvalues:
            return np.zeros(self.grid.shape)
        return np.sum(np.abs(self.values) ** 2, axis=(0, -1))

    def mass(self) -> float:
        """``sum_x sum_j |(pi_j w)(x)|^2`` accumulated on the lattice side."""
        return float(np.sum(self.site_map()))

    @property
    def point_mass(self) -> float:
        """``|pi_p w|^2`` from the torus side, ``sum_j mean_k |R_j w_hat|^2``."""
        return float(np.sum(self.norms_sq))


def point_spectrum_prediction(op: PeriodicOperator, w: LatticeState,
                              grid: TorusGrid | None = None,
                              report: SpectralReport | None = None,
                              cluster_tol: float = DEFAULT_CLUSTER_TOL) -> PointSpectrumPrediction:
    """Project ``w`` onto every certified eigenspace of the operator."""
    if w.d != op.d or w.D != op.D:
        raise DimensionMismatchError("state and operator dimensions differ")
    grid = TorusGrid(op.d, _default_grid_size(op)) if grid is None else grid
    if report is None:
        report = peel_point_spectrum(op)
    omegas = list(report.point_spectrum)
    if not omegas:
        return PointSpectrumPrediction(grid, [], np.zeros((0,) + grid.shape + (op.D,)),
                                       np.zeros(0))
    wh = to_fourier(w, grid).values
    axes = tuple(range(grid.d))
    values, norms, fields = [], [], []
    for om in omegas:
        f = eigenprojection_field(op, grid, om, cluster_tol=cluster_tol)
        pw_hat = np.einsum("...ij,...j->...i", f.R, wh)
        norms.append(np.mean(np.sum(np.abs(pw_hat) ** 2, axis=-1)))
        values.append(np.fft.fft(pw_hat, axis=axes[0]) if grid.d == 1
                      else np.fft.fftn(pw_hat, axes=axes))
        fields.append(f)
    values = np.stack(values) / grid.size
    return PointSpectrumPrediction(grid, omegas, values, np.array(norms), fields)


def predicted_average(op: PeriodicOperator, w: LatticeState, x,
                      grid: TorusGrid | None = None,
                      report: SpectralReport | None = None) -> float:
    """Predicted long-time average ``sum_j |(pi_j w)(x)|^2`` (zero without
    point spectrum)."""
    return point_spectrum_prediction(op, w, grid, report).at(x)


# --------------------------------------------------------------------------
# Cesàro means


@dataclass
class AverageTrace:
    """Running means ``(1/N) sum_{n=1}^N p_n(w; x)`` at the checkpoints."""

    site: tuple[int, ...]
    schedule: list[int]
    means: np.ndarray
    norm_sq: float
    predicted: float | None = None

    @property
    def gaps(self) -> np.ndarray:
        if self.predicted is None:
            return np.full(len(self.schedule), np.nan)
        return np.abs(self.means - self.predicted)

    @property
    def final_gap(self) -> float:
        return float(self.gaps[-1])

    @property
    def final_mean(self) -> float:
        return float(self.means[-1])


def cesaro_average(op: PeriodicOperator, w: LatticeState, x,
                   schedule: Sequence[int] | int = 4096,
                   predicted: float | None = None,
                   method: str = "auto", series: np.ndarray | None = None) -> AverageTrace:
    """Cesàro means of ``p_n(w; x)`` over ``n = 1..N`` for every ``N`` in ``schedule``.

    An integer schedule means powers of two up to that cap. A precomputed
    ``series`` (``p_0..p_M``) can be passed to share one evolution between
    several sites or states.
    """
    if isinstance(schedule, (int, np.integer)):
        schedule = geometric_schedule(int(schedule))
    schedule = sorted(int(n) for n in schedule)
    if schedule[0] < 1:
        raise ValueError("checkpoints must be positive")
    x = _as_point(x, op.d)
    if series is None:
        series = transition_series(op, w, x, schedule[-1], method)
    elif len(series) <= schedule[-1]:
        raise ValueError("series is shorter than the last checkpoint")
    running = np.cumsum(series[1:schedule[-1] + 1])
    means = np.array([running[n - 1] / n for n in schedule])
    return AverageTrace(x, schedule, means, w.norm_sq(), predicted)


# --------------------------------------------------------------------------
# decay


@dataclass
class DecayReport:
    site: tuple[int, ...]
    window: tuple[int, int]
    sup: float
    slope: float
    series: np.ndarray = field(repr=False)


def decay_check(op: PeriodicOperator, w: LatticeState, x, window=(200, 400),
                method: str = "auto") -> DecayReport:
    """Largest ``p_n(w; x)`` over ``n0 <= n <= n1`` and the least-squares slope
    of ``log p_n`` against ``log n`` (NaN when some ``p_n`` vanishes)."""
    n0, n1 = (int(v) for v in window)
    if not 0 <= n0 <= n1:
        raise ValueError(f"bad window {window}")
    x = _as_point(x, op.d)
    p = transition_series(op, w, x, n1, method)[n0:]
    n = np.arange(n0, n1 + 1)
    pos = (p > 0) & (n > 0)
    slope = float("nan")
    if pos.all() and n.size > 1:
        slope = float(np.polyfit(np.log(n), np.log(p), 1)[0])
    return DecayReport(x, (n0, n1), float(p.max()), slope, p)


# --------------------------------------------------------------------------
# finite-dimensional oracle


class FiniteUnitary:
    """A unitary matrix with its eigenvalues grouped into distinct clusters.

    Parameters
    ----------
    matrix : (m, m) array
    tol : float
        Eigenvalues closer than ``tol`` are treated as one eigenvalue.
    """

    def __init__(self, matrix, tol: float = GROUPING_TOL):
        M = np.array(matrix, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {M.shape}")
        defect = np.linalg.norm(M.conj().T @ M - np.eye(len(M)), 2)
        if defect > FINITE_UNITARY_TOL:
            raise PreconditionError(f"matrix is not unitary (|M*M - I| = {defect:.3g})")
        self.matrix = M
        self.tol = tol
        lam, V = unitary_eig(M, sort=True)
        labels = cluster_labels(lam, tol)
        self.eigenvalues = []
        self.projectors = []
        for lab in np.unique(labels):
            sel = labels == lab
            self.eigenvalues.append(complex(np.mean(lam[sel])))
            Vs = V[:, sel]
            self.projectors.append(Vs @ Vs.conj().T)
        ev = np.array(self.eigenvalues)
        if len(ev) > 1:
            sep = np.abs(ev[:, None] - ev[None, :])
            self.separation = float(sep[~np.eye(len(ev), dtype=bool)].min())
        else:
            self.separation = float("inf")
        if self.separation < 100 * tol:
            warnings.warn(
                f"distinct eigenvalues only {self.separation:.3g} apart; the grouping "
                f"at tol={tol:g} is fragile and Cesàro means converge slowly",
                SpectrumGroupingWarning, stacklevel=2)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def multiplicities(self) -> list[int]:
        return [int(round(np.real(np.trace(P)))) for P in self.projectors]


@dataclass
class OracleResult:
    limit: np.ndarray
    cesaro: np.ndarray | None = None
    N: int | None = None


def brute_force_cesaro(M: FiniteUnitary, w, N: int, block: int = 64) -> np.ndarray:
    """``(1/N) sum_{n=1}^N |(M^n w)_i|^2`` for every coordinate, by iteration.

    Uses only matrix products (no eigendata): the stacked powers
    ``M^1..M^block`` advance the vector ``block`` steps at a time.
    """
    v = np.array(w, dtype=complex)
    powers = [M.matrix]
    for _ in range(block - 1):
        powers.append(M.matrix @ powers[-1])
    powers = np.stack(powers)
    acc = np.zeros(len(v))
    done = 0
    while done < N:
        k = min(block, N - done)
        vs = powers[:k] @ v
        acc += np.sum(np.abs(vs) ** 2, axis=0)
        v = vs[-1]
        done += k
    return acc / N


def finite_oracle_average(M: FiniteUnitary, w, i=None, N: int | None = None) -> OracleResult:
    """Exact long-time average ``sum_mu |<e_i, P_mu w>|^2``.

    With ``i`` omitted all coordinates are returned. With ``N`` the
    finite Cesàro mean at that horizon is attached for rate inspection.
    """
    w = np.asarray(w, dtype=complex)
    if w.shape != (M.m,):
        raise DimensionMismatchError(f"vector of shape {w.shape} for a {M.m}x{M.m} matrix")
    limit = sum(np.abs(P @ w) ** 2 for P in M.projectors)
    ces = brute_force_cesaro(M, w, N) if N else None
    if i is not None:
        limit = limit[i]
        ces = None if ces is None else ces[i]
    return OracleResult(limit, ces, N)


# --------------------------------------------------------------------------
# one-dimensional spectral density


@dataclass
class DensityProfile:
    """Samples of the density ``Gamma(t)``, ``t = exp(i phi)``, of the
    continuous spectral measure of a state.

    ``weights`` are quadrature weights for the normalized circle measure;
    ``excluded`` marks samples whose fiber could not be resolved.
    """

    phi: np.ndarray
    gamma: np.ndarray
    weights: np.ndarray
    excluded: np.ndarray
    branch_gamma: list[list[float]] = field(repr=False, default_factory=list)
    continuous_mass: float | None = None

    @property
    def t(self) -> np.ndarray:
        return np.exp(1j * self.phi)

    def integral(self) -> float:
        ok = ~self.excluded
        return float(np.sum(self.gamma[ok] * self.weights[ok]))


def _z_coefficients(p: LaurentPoly) -> tuple[np.ndarray, int]:
    """Dense coefficients (highest power first) of ``z^{-lo} p(z)`` and ``lo``."""
    if p.is_zero():
        return np.zeros(1, dtype=complex), 0
    lo, hi = (int(v[0]) for v in p.exponent_range())
    c = np.zeros(hi - lo + 1, dtype=complex)
    for (e,), v in p.terms.items():
        c[hi - e] = v
    return c, lo


def _unit_roots(p: LaurentPoly, tol: float = 1e-6) -> np.ndarray:
    c, _ = _z_coefficients(p)
    if len(c) < 2:
        return np.zeros(0, dtype=complex)
    r = np.roots(c)
    r = r[np.abs(np.abs(r) - 1) < tol]
    return r / np.abs(r)


def critical_angles_1d(quotient: ZetaPoly) -> np.ndarray:
    """Angles in ``[0, 2 pi)`` of the band values at critical points and
    collisions, sorted.

    A band ``lambda(z)`` has a horizontal tangent or meets another band exactly
    where ``q(zeta, z)`` and ``dq/dz`` share a root ``zeta``, i.e. on the unit
    roots of the resultant ``res_zeta(q, dq/dz)``.
    """
    if quotient.d != 1:
        raise DimensionMismatchError("critical values are implemented for d = 1 only")
    if quotient.degree < 1:
        return np.zeros(0)
    g = quotient.z_derivative(0)
    if g.degree < 1:
        return np.zeros(0)
    zs = _unit_roots(resultant_zeta(quotient, g))
    vals = []
    for z in zs:
        coeffs = np.array([complex(a(z)) for a in quotient.coeffs])
        dz = np.array([complex(a(z)) for a in g.coeffs])
        for zeta in np.roots(coeffs) if len(coeffs) > 1 else []:
            if abs(abs(zeta) - 1) > 1e-6:
                continue
            # keep the roots shared with dq/dz
            if abs(np.polyval(dz, zeta)) <= 1e-6 * max(1.0, np.max(np.abs(dz))):
                vals.append(np.mod(np.angle(zeta), 2 * np.pi))
    if not vals:
        return np.zeros(0)
    vals = np.sort(np.array(vals))
    keep = np.concatenate([[True], np.diff(vals) > 1e-12])
    return vals[keep]


def density_nodes(breaks: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Chebyshev nodes on each arc between consecutive breakpoints.

    The density has inverse square-root singularities at band extrema; the
    Chebyshev weight absorbs them. Nodes are shared out in proportion to arc
    length (at least two per arc). Weights refer to the normalized measure
    ``d phi / 2 pi``.
    """
    breaks = np.sort(np.mod(np.asarray(breaks, dtype=float), 2 * np.pi))
    if breaks.size == 0:
        phi = 2 * np.pi * (np.arange(n) + 0.5) / n
        return phi, np.full(n, 1.0 / n)
    ends = np.append(breaks[1:], breaks[0] + 2 * np.pi)
    lengths = ends - breaks
    alloc = np.maximum(2, np.floor(n * lengths / (2 * np.pi))).astype(int)
    while alloc.sum() > n and alloc.max() > 2:
        alloc[np.argmax(alloc)] -= 1
    while alloc.sum() < n:
        alloc[np.argmax(lengths / alloc)] += 1
    phis, wts = [], []
    for a, b, m in zip(breaks, ends, alloc):
        k = np.arange(1, m + 1)
        x = np.cos((2 * k - 1) * np.pi / (2 * m))
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        phis.append(mid + half * x)
        wts.append((np.pi / m) * half * np.sqrt(1 - x ** 2) / (2 * np.pi))
    return np.mod(np.concatenate(phis), 2 * np.pi), np.concatenate(wts)


def _state_hat(w: LatticeState, z: complex) -> np.ndarray:
    sites, vals = w.to_arrays()
    return np.sum(vals * (z ** sites[:, 0])[:, None], axis=0)


def spectral_density_1d(op: PeriodicOperator, w: LatticeState, t_samples=512,
                        report: SpectralReport | None = None,
                        edge_tol: float = 1e-9) -> DensityProfile:
    """Density ``Gamma(t) = sum over z with lambda_i(z) = t of
    |P_i(z) w_hat(z)|^2 / |d lambda_i / d theta|`` for a one-dimensional walk.

    Fibers are the unit roots in ``z`` of ``q(t, z)``, where ``q`` is the
    characteristic polynomial with the point spectrum divided out, so
    constant eigenvalues never contribute. ``t_samples`` is either a number of
    quadrature nodes (placed by :func:`density_nodes` between critical band
    values) or an array of angles, which then get uniform weights.
    """
    if op.d != 1:
        raise DimensionMismatchError("the fiber density is implemented for d = 1 only")
    if report is None:
        report = peel_point_spectrum(op)
    q = report.quotient
    breaks = critical_angles_1d(q)
    if np.isscalar(t_samples):
        phi, weights = density_nodes(breaks, int(t_samples))
    else:
        phi = np.mod(np.asarray(t_samples, dtype=float), 2 * np.pi)
        weights = np.full(phi.size, 1.0 / phi.size)
    gamma = np.zeros(phi.size)
    excluded = np.zeros(phi.size, dtype=bool)
    per_branch = []
    for k, ph in enumerate(phi):
        t = np.exp(1j * ph)
        if breaks.size and np.min(np.abs(np.angle(np.exp(1j * (breaks - ph))))) <= edge_tol:
            excluded[k] = True
            per_branch.append([])
            continue
        roots = _unit_roots(q.at_zeta(t)) if q.degree >= 1 else np.zeros(0)
        if roots.size > 1:
            roots = roots[np.concatenate(
                [[True], np.min(np.abs(roots[1:, None] - roots[None, :-1]), axis=1) > 1e-7])]
        contrib = []
        for z in roots:
            U = op.symbol(z)
            lam, V = unitary_eig(U)
            sel = np.abs(lam - t) <= max(1e-6, DEFAULT_CLUSTER_TOL)
            if not sel.any():
                excluded[k] = True
                continue
            Vs = V[:, sel]
            dU = op.angular_derivative(z, 0)
            # |d lambda / d theta| = |v* (dU/dtheta) v| for a simple eigenvalue
            speed = abs(np.trace(Vs.conj().T @ dU @ Vs) / sel.sum())
            if speed < 1e-8:
                excluded[k] = True
                continue
            wh = _state_hat(w, z)
            contrib.append(float(np.sum(np.abs(Vs.conj().T @ wh) ** 2) / speed))
        gamma[k] = sum(contrib)
        per_branch.append(contrib)
    cont = w.norm_sq()
    if report.point_spectrum:
        cont -= point_spectrum_prediction(op, w, report=report).point_mass
    return DensityProfile(phi, gamma, weights, excluded, per_branch, cont)
