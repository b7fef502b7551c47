"""Pointwise spectral analysis of operator symbols on the torus.

Grid sampling proposes candidate eigenvalues of the lattice operator (values
that are eigenvalues of the symbol at *every* grid point); a candidate is
accepted only if ``chi(lambda, z)`` vanishes identically as a Laurent
polynomial. Certified eigenvalues are then divided out of ``chi`` as often as
possible, and their pointwise eigenprojections are assembled into fields.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._linalg import cluster_labels, unitary_eig
from .exceptions import (
    DiscriminantProximityWarning,
    PreconditionError,
)
from .laurent import (
    LaurentPoly,
    ZetaPoly,
    char_poly,
    discriminant,
    divide_by_root,
    laurent_eval,
    symbol_matrix,
)
from .lattice import PeriodicOperator, validate_unitarity

__all__ = [
    "DEFAULT_CLUSTER_TOL",
    "DEFAULT_SPREAD_TOL",
    "DEFAULT_CERTIFY_TOL",
    "TorusGrid",
    "EigenData",
    "Candidate",
    "BandReport",
    "SpectralReport",
    "ProjectionField",
    "eigen_on_grid",
    "detect_constant_eigenvalues",
    "certify_eigenvalue",
    "peel_point_spectrum",
    "eigenprojection_field",
    "contour_projection",
    "band_report",
    "contour_radius",
]

DEFAULT_CLUSTER_TOL = 1e-8
DEFAULT_SPREAD_TOL = 1e-6
DEFAULT_CERTIFY_TOL = 1e-8
CONTOUR_NODES = 64

# Fixed irrational direction used to step off band collisions.
_NUDGE_STEPS = (1e-6, 1e-5, 1e-4)


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid ``z_k = exp(2 pi i k / N)`` on the d-torus, ``k in {0..N-1}^d``."""

    d: int
    N: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("grid dimension must be positive")
        if self.N < 2:
            raise ValueError("grid needs at least two points per axis")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def size(self) -> int:
        return self.N ** self.d

    def angles(self) -> np.ndarray:
        """Angles ``theta`` of shape ``(N,)*d + (d,)``."""
        t = 2 * np.pi * np.arange(self.N) / self.N
        mesh = np.meshgrid(*([t] * self.d), indexing="ij")
        return np.stack(mesh, axis=-1)

    def points(self) -> np.ndarray:
        """Torus points of shape ``(N,)*d + (d,)``."""
        return np.exp(1j * self.angles())

    def point(self, index) -> np.ndarray:
        index = np.atleast_1d(index)
        return np.exp(2j * np.pi * np.asarray(index) / self.N)


@dataclass
class EigenData:
    """Per-grid-point eigenvalues (sorted by argument), eigenvectors, clusters."""

    grid: TorusGrid
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    clusters: np.ndarray
    cluster_tol: float = DEFAULT_CLUSTER_TOL

    @property
    def D(self) -> int:
        return self.eigenvalues.shape[-1]


@dataclass
class Candidate:
    """A value that is (numerically) an eigenvalue of the symbol on the whole grid."""

    value: complex
    max_grid_deviation: float
    multiplicity_profile: np.ndarray
    symbolic_residual: float = float("nan")
    certified: bool = False
    multiplicity: int = 0


@dataclass
class BandReport:
    """Non-constant eigenvalue branches and collision diagnostics."""

    bands: np.ndarray
    discriminant: LaurentPoly | None
    discriminant_min: float | None
    repeated_factor: bool
    min_gap: np.ndarray
    collisions: np.ndarray
    gap_tol: float

    @property
    def collision_points(self) -> np.ndarray:
        return np.argwhere(self.collisions)


@dataclass
class SpectralReport:
    candidates: list[Candidate]
    quotient: ZetaPoly
    char_poly: ZetaPoly
    bands: BandReport | None = None
    grid: TorusGrid | None = None

    @property
    def point_spectrum(self) -> list[complex]:
        return [c.value for c in self.candidates if c.certified]

    @property
    def multiplicities(self) -> list[int]:
        return [c.multiplicity for c in self.candidates if c.certified]


@dataclass
class ProjectionField:
    """Pointwise orthogonal projections onto the ``omega``-eigenspace of the symbol.

    ``violations`` marks grid points where the ``omega`` cluster is not
    separated from the rest of the spectrum by more than ``2 * cluster_tol``;
    at those points ``R`` was taken from a nearby off-grid point when
    ``repaired`` is set.
    """

    grid: TorusGrid
    omega: complex
    R: np.ndarray
    gaps: np.ndarray
    violations: np.ndarray
    repaired: np.ndarray = field(default=None)
    cluster_tol: float = DEFAULT_CLUSTER_TOL

    @property
    def valid(self) -> np.ndarray:
        return ~self.violations

    def trace(self) -> np.ndarray:
        return np.real(np.trace(self.R, axis1=-2, axis2=-1))


def _certified_unitary(op: PeriodicOperator):
    report = validate_unitarity(op)
    if not report.passed:
        raise PreconditionError(
            f"operator fails the unitarity check (max residual {report.max_residual:.3g})")


def eigen_on_grid(op: PeriodicOperator, grid: TorusGrid,
                  cluster_tol: float = DEFAULT_CLUSTER_TOL,
                  check_unitary: bool = True) -> EigenData:
    """Diagonalize the symbol at every grid point."""
    if grid.d != op.d:
        raise ValueError(f"grid dimension {grid.d} does not match operator rank {op.d}")
    if check_unitary:
        _certified_unitary(op)
    U = op.symbol(grid.points())
    lam, V = unitary_eig(U)
    return EigenData(grid, lam, V, cluster_labels(lam, cluster_tol), cluster_tol)


def _circular_mean(values: np.ndarray) -> complex:
    m = np.mean(values)
    return complex(m / abs(m)) if abs(m) > 0 else complex(values.flat[0])


def detect_constant_eigenvalues(eig: EigenData,
                                spread_tol: float = DEFAULT_SPREAD_TOL) -> list[Candidate]:
    """Values that are within ``spread_tol`` of some eigenvalue at every grid point.

    Seeds are the eigenvalues at the first grid point; each accepted value is
    the circular mean of the matched eigenvalues. Sorted by argument.
    """
    lam = eig.eigenvalues.reshape(-1, eig.D)
    found: list[Candidate] = []
    for seed in lam[0]:
        if any(abs(seed - c.value) <= spread_tol for c in found):
            continue
        dist = np.abs(lam - seed)
        nearest = np.argmin(dist, axis=-1)
        if np.max(dist[np.arange(len(lam)), nearest]) > spread_tol:
            continue
        omega = _circular_mean(lam[np.arange(len(lam)), nearest])
        dist = np.abs(lam - omega)
        dev = float(np.max(np.min(dist, axis=-1)))
        profile = np.sum(dist <= spread_tol, axis=-1).reshape(eig.grid.shape)
        found.append(Candidate(omega, dev, profile))
    found.sort(key=lambda c: np.angle(c.value))
    return found


def certify_eigenvalue(op: PeriodicOperator, lam: complex,
                       certify_tol: float = DEFAULT_CERTIFY_TOL,
                       chi: ZetaPoly | None = None) -> tuple[bool, float]:
    """Decide whether ``lam`` is an eigenvalue of the lattice operator.

    ``lam`` is an eigenvalue iff ``chi(lam, z)`` is the zero Laurent
    polynomial; the residual is the largest coefficient modulus of that
    remainder.
    """
    if abs(abs(lam) - 1.0) > 1e-8:
        raise ValueError(f"candidate {lam} is not on the unit circle")
    if chi is None:
        chi = char_poly(symbol_matrix(op))
    _, r = divide_by_root(chi, lam)
    residual = r.max_abs_coeff()
    return residual <= certify_tol, residual


def _peel(chi: ZetaPoly, omega: complex, certify_tol: float) -> tuple[ZetaPoly, int]:
    f, m = chi, 0
    while f.degree >= 1:
        q, r = divide_by_root(f, omega)
        if r.max_abs_coeff() > certify_tol:
            break
        f, m = q, m + 1
    return f, m


def _default_grid(d: int) -> TorusGrid:
    return TorusGrid(d, 256 if d == 1 else 16)


def peel_point_spectrum(op: PeriodicOperator, grid: TorusGrid | None = None,
                        spread_tol: float = DEFAULT_SPREAD_TOL,
                        certify_tol: float = DEFAULT_CERTIFY_TOL,
                        cluster_tol: float = DEFAULT_CLUSTER_TOL,
                        gap_tol: float = 1e-6) -> SpectralReport:
    """Detect, certify and divide out the point spectrum.

    Every certified ``omega_j`` is removed from ``chi`` as many times as the
    division remainder stays below ``certify_tol``; the count is the reported
    multiplicity and what is left is the quotient carrying the
    non-constant bands.
    """
    grid = _default_grid(op.d) if grid is None else grid
    eig = eigen_on_grid(op, grid, cluster_tol)
    chi = char_poly(symbol_matrix(op))
    candidates = detect_constant_eigenvalues(eig, spread_tol)
    quotient = chi
    for cand in candidates:
        ok, res = certify_eigenvalue(op, cand.value, certify_tol, chi=chi)
        cand.certified, cand.symbolic_residual = ok, res
        if ok:
            quotient, cand.multiplicity = _peel(quotient, cand.value, certify_tol)
    certified = [c for c in candidates if c.certified]
    bands = band_report(eig, [c.value for c in certified],
                        [c.multiplicity for c in certified], quotient, gap_tol)
    return SpectralReport(candidates, quotient, chi, bands, grid)


def band_report(eig: EigenData, point_spectrum: Sequence[complex] = (),
                multiplicities: Sequence[int] | None = None,
                quotient: ZetaPoly | None = None,
                gap_tol: float = 1e-6) -> BandReport:
    """Split off the constant eigenvalues and scan for band collisions.

    Bands are argument-sorted per point; no continuation across points is
    attempted. When ``quotient`` has degree >= 2 its discriminant is formed
    and its minimum modulus over the grid reported; an identically vanishing
    discriminant sets ``repeated_factor`` and only the eigenvalue gaps are
    meaningful.
    """
    lam = eig.eigenvalues.copy()
    D = eig.D
    keep = np.ones(lam.shape, dtype=bool)
    mults = list(multiplicities) if multiplicities is not None else [1] * len(point_spectrum)
    for omega, m in zip(point_spectrum, mults):
        dist = np.where(keep, np.abs(lam - omega), np.inf)
        order = np.argsort(dist, axis=-1, kind="stable")[..., :m]
        np.put_along_axis(keep, order, False, axis=-1)
    L = D - sum(mults)
    bands = lam[keep].reshape(lam.shape[:-1] + (L,)) if L > 0 else lam[..., :0]
    if bands.size:
        order = np.argsort(np.angle(bands), axis=-1, kind="stable")
        bands = np.take_along_axis(bands, order, axis=-1)

    if D > 1:
        diff = np.abs(lam[..., :, None] - lam[..., None, :])
        diff = diff + np.diag(np.full(D, np.inf))
        min_gap = diff.min(axis=(-1, -2))
    else:
        min_gap = np.full(lam.shape[:-1], np.inf)

    disc, disc_min, repeated = None, None, False
    if quotient is not None and quotient.degree >= 2:
        disc = discriminant(quotient)
        if disc.is_zero():
            repeated = True
        else:
            disc_min = float(np.min(np.abs(laurent_eval(disc, eig.grid.points()))))
    return BandReport(bands, disc, disc_min, repeated, min_gap, min_gap < gap_tol, gap_tol)


def _cluster_projector(lam, V, omega, cluster_tol):
    sel = np.abs(lam - omega) <= cluster_tol
    Vs = V * sel[..., None, :]
    R = Vs @ np.conj(np.swapaxes(Vs, -1, -2))
    inside = np.where(sel, np.inf, np.abs(lam - omega))
    gap = inside.min(axis=-1)
    return R, sel.sum(axis=-1), gap


def _nudge_direction(d: int) -> np.ndarray:
    u = np.array([(np.sqrt(5) - 1) / 2] * d) ** np.arange(d)
    return u / np.linalg.norm(u)


def eigenprojection_field(op: PeriodicOperator, grid: TorusGrid, omega: complex,
                          cluster_tol: float = DEFAULT_CLUSTER_TOL,
                          certify_tol: float = DEFAULT_CERTIFY_TOL,
                          eig: EigenData | None = None,
                          repair: bool = True) -> ProjectionField:
    """Orthogonal projections onto the ``omega``-eigenspace of the symbol.

    Built from the orthonormal eigenvectors whose eigenvalues lie within
    ``cluster_tol`` of ``omega``. Points where the cluster is larger than the
    multiplicity of ``omega`` in ``chi``, or where another eigenvalue comes
    within ``2 * cluster_tol`` of it, sit on a band collision; they are
    flagged, a :class:`DiscriminantProximityWarning` is issued, and with
    ``repair`` their projection is recomputed at a slightly displaced torus
    point.
    """
    chi = char_poly(symbol_matrix(op))
    ok, res = certify_eigenvalue(op, omega, certify_tol, chi=chi)
    if not ok:
        raise PreconditionError(
            f"{omega} is not an eigenvalue of the operator (remainder {res:.3g})")
    _, mult = _peel(chi, omega, certify_tol)
    if eig is None:
        eig = eigen_on_grid(op, grid, cluster_tol)
    R, count, gap = _cluster_projector(eig.eigenvalues, eig.eigenvectors, omega, cluster_tol)
    if np.any(count == 0):
        bad = tuple(np.argwhere(count == 0)[0])
        raise PreconditionError(f"no eigenvalue near {omega} at grid point {bad}")
    violations = (gap <= 2 * cluster_tol) | (count != mult)
    repaired = np.zeros_like(violations)
    if np.any(violations):
        idx = np.argwhere(violations)
        warnings.warn(
            f"{len(idx)} grid point(s) lie on a band collision at {omega:.6g}; "
            + ("projection taken from a displaced point" if repair else "left unrepaired"),
            DiscriminantProximityWarning, stacklevel=2)
        if repair:
            theta = grid.angles()[tuple(idx.T)]
            u = _nudge_direction(op.d)
            todo = np.ones(len(idx), dtype=bool)
            for eta in _NUDGE_STEPS:
                if not todo.any():
                    break
                z = np.exp(1j * (theta[todo] + eta * u))
                lam, V = unitary_eig(op.symbol(z))
                Rn, cn, gn = _cluster_projector(lam, V, omega, cluster_tol)
                good = (gn > 2 * cluster_tol) & (cn == mult)
                sub = np.flatnonzero(todo)[good]
                R[tuple(idx[sub].T)] = Rn[good]
                repaired[tuple(idx[sub].T)] = True
                todo[sub] = False
    return ProjectionField(grid, omega, R, gap, violations, repaired, cluster_tol)


def contour_projection(op: PeriodicOperator, z, omega: complex, radius: float,
                       nodes: int = CONTOUR_NODES) -> np.ndarray:
    """Riesz projection ``(1/2 pi i) oint (zeta - U(z))^{-1} d zeta`` on a circle.

    Trapezoidal rule with ``nodes`` points on the circle of ``radius`` around
    ``omega``; ``z`` has shape ``(..., d)``.
    """
    U = op.symbol(z)
    D = U.shape[-1]
    phase = np.exp(2j * np.pi * (np.arange(nodes) + 0.5) / nodes)
    P = np.zeros(U.shape, dtype=complex)
    eye = np.eye(D)
    for ph in phase:
        zeta = omega + radius * ph
        P += radius * ph * np.linalg.inv(zeta * eye - U)
    return P / nodes


def contour_radius(field_: ProjectionField) -> float:
    """Half the smallest gap between ``omega`` and the rest of the spectrum
    over the points that clear the gap condition."""
    gaps = field_.gaps[field_.valid]
    finite = gaps[np.isfinite(gaps)]
    return 0.5 * float(finite.min()) if finite.size else 0.5
