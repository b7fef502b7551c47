"""Discrete Fourier transport between lattice boxes and torus grids.

Conventions
-----------
* lattice -> torus: ``w_hat(z_k) = sum_x w(x) z_k^x`` (no prefactor),
* torus -> lattice: ``w(x) = N^{-d} sum_k z_k^{-x} w_hat(z_k)``,
* grid index ``m`` stands for the lattice coordinate ``m`` if ``m <= N // 2``
  and ``m - N`` otherwise.

On a grid of ``N`` points per axis a state is represented faithfully as long
as its support spans at most ``N`` sites per axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Sequence

import numpy as np
import scipy.sparse

from ._linalg import unitary_eig
from .exceptions import AliasingError, DimensionMismatchError
from .lattice import LatticeState, PeriodicOperator, _as_point
from .spectra import (
    DEFAULT_CLUSTER_TOL,
    ProjectionField,
    TorusGrid,
    eigenprojection_field,
)

__all__ = [
    "BoxState",
    "GridField",
    "lattice_coordinates",
    "full_box",
    "to_fourier",
    "from_fourier",
    "diagonalize_symbol",
    "evolve_fourier",
    "project_state",
    "no_aliasing_size",
    "site_readout_size",
    "site_amplitudes",
]

FACTORIZATION_RESID_TOL = 1e-10


@dataclass(frozen=True)
class BoxState:
    """Dense state on the box ``lo + [0, shape)``.

    ``values`` has shape ``shape + (D,)``.
    """

    lo: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.ndim != len(self.lo) + 1:
            raise DimensionMismatchError(
                f"values of rank {vals.ndim} do not fit a {len(self.lo)}-dimensional box")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "lo", tuple(int(c) for c in self.lo))

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def D(self) -> int:
        return self.values.shape[-1]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape[:-1]

    @property
    def hi(self) -> tuple[int, ...]:
        return tuple(a + n - 1 for a, n in zip(self.lo, self.shape))

    @classmethod
    def from_lattice(cls, w: LatticeState, lo=None, shape=None) -> "BoxState":
        """Embed a sparse state; the default box is its bounding box."""
        blo, bhi = w.bounds()
        lo = blo if lo is None else np.array(_as_point(lo, w.d))
        shape = (bhi - lo + 1) if shape is None else np.array(shape)
        if np.any(blo < lo) or np.any(bhi > lo + shape - 1):
            raise ValueError("state support does not fit in the requested box")
        vals = np.zeros(tuple(int(s) for s in shape) + (w.D,), dtype=complex)
        for x, v in w.amplitudes.items():
            vals[tuple(np.array(x) - lo)] = v
        return cls(tuple(int(c) for c in lo), vals)

    def to_lattice(self, tol: float | None = None) -> LatticeState:
        """Sparse copy; with ``tol`` sites of norm ``<= tol`` are dropped."""
        idx = np.indices(self.shape).reshape(self.d, -1).T
        vals = self.values.reshape(-1, self.D)
        if tol is not None:
            keep = np.linalg.norm(vals, axis=-1) > tol
            idx, vals = idx[keep], vals[keep]
        return LatticeState.from_arrays(idx + np.array(self.lo), vals, d=self.d, D=self.D)

    def __getitem__(self, x) -> np.ndarray:
        rel = np.array(_as_point(x, self.d)) - np.array(self.lo)
        if np.any(rel < 0) or np.any(rel >= np.array(self.shape)):
            return np.zeros(self.D, dtype=complex)
        return self.values[tuple(rel)]

    def probability(self, x) -> float:
        return float(np.sum(np.abs(self[x]) ** 2))

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))


@dataclass(frozen=True)
class GridField:
    """Samples of a C^D-valued function on a torus grid; ``values`` has shape
    ``grid.shape + (D,)``."""

    grid: TorusGrid
    values: np.ndarray

    def mean_norm_sq(self) -> float:
        """Grid mean of ``|f(z_k)|^2``; equals the lattice norm by Parseval."""
        return float(np.mean(np.sum(np.abs(self.values) ** 2, axis=-1)))


def lattice_coordinates(N: int) -> np.ndarray:
    """Signed lattice coordinate represented by each grid index ``0..N-1``."""
    m = np.arange(N)
    return np.where(m <= N // 2, m, m - N)


def full_box(grid: TorusGrid) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """``(lo, shape)`` of the box of all lattice sites a grid represents."""
    lo = -((grid.N - 1) // 2)
    return (lo,) * grid.d, (grid.N,) * grid.d


def _as_box(w) -> BoxState:
    return BoxState.from_lattice(w) if isinstance(w, LatticeState) else w


def to_fourier(w, grid: TorusGrid) -> GridField:
    """``w_hat(z_k) = sum_x w(x) z_k^x`` on every grid point (via an inverse FFT)."""
    w = _as_box(w)
    if w.d != grid.d:
        raise DimensionMismatchError(f"state has d={w.d}, grid has d={grid.d}")
    if any(n > grid.N for n in w.shape):
        raise AliasingError(
            f"box of shape {w.shape} does not fit a grid with {grid.N} points per axis")
    A = np.zeros(grid.shape + (w.D,), dtype=complex)
    idx = np.ix_(*[(np.arange(n) + a) % grid.N for a, n in zip(w.lo, w.shape)])
    A[idx] = w.values
    axes = tuple(range(grid.d))
    return GridField(grid, np.fft.ifftn(A, axes=axes) * grid.size)


def from_fourier(f: GridField, box=None) -> BoxState:
    """Inverse transform read out on ``box = (lo, shape)``; defaults to the
    full box of the grid."""
    grid = f.grid
    lo, shape = full_box(grid) if box is None else box
    lo = tuple(int(c) for c in np.broadcast_to(lo, (grid.d,)))
    shape = tuple(int(c) for c in np.broadcast_to(shape, (grid.d,)))
    if any(n > grid.N for n in shape):
        raise AliasingError(f"box of shape {shape} exceeds grid periodicity {grid.N}")
    axes = tuple(range(grid.d))
    A = np.fft.fftn(f.values, axes=axes) / grid.size
    idx = np.ix_(*[(np.arange(n) + a) % grid.N for a, n in zip(lo, shape)])
    return BoxState(lo, A[idx])


def diagonalize_symbol(op: PeriodicOperator, grid: TorusGrid):
    """``(U, lam, V)`` at every grid point, with ``U = V diag(lam) V^*``."""
    U = op.symbol(grid.points())
    lam, V = unitary_eig(U, sort=False)
    return U, lam, V


def evolve_fourier(op: PeriodicOperator, f: GridField, n: int, diag=None) -> GridField:
    """Pointwise ``U(z_k)^n f(z_k)`` through a cached diagonalization.

    Points whose factorization residual ``|V diag(lam) V^* - U|`` exceeds
    ``1e-10`` fall back to repeated matrix-vector products.
    """
    if n < 0:
        raise ValueError("number of steps must be nonnegative")
    if f.grid.d != op.d or f.values.shape[-1] != op.D:
        raise DimensionMismatchError("field and operator dimensions differ")
    if n == 0:
        return f
    U, lam, V = diagonalize_symbol(op, f.grid) if diag is None else diag
    Vh = np.conj(np.swapaxes(V, -1, -2))
    recon = (V * lam[..., None, :]) @ Vh
    bad = np.max(np.abs(recon - U), axis=(-1, -2)) > FACTORIZATION_RESID_TOL
    coeff = np.einsum("...ij,...j->...i", Vh, f.values)
    out = np.einsum("...ij,...j->...i", V, lam ** n * coeff)
    if np.any(bad):
        v = f.values[bad]
        Ub = U[bad]
        for _ in range(n):
            v = np.einsum("pij,pj->pi", Ub, v)
        out[bad] = v
    return GridField(f.grid, out)


def project_state(op: PeriodicOperator, w, grid: TorusGrid, omega: complex,
                  box=None, field: ProjectionField | None = None,
                  cluster_tol: float = DEFAULT_CLUSTER_TOL) -> BoxState:
    """Eigenprojection of a lattice state: ``R_omega(z) w_hat(z)`` transformed back.

    The result is not finitely supported in general; it is returned on
    ``box`` (default: every site the grid represents).
    """
    if field is None:
        field = eigenprojection_field(op, grid, omega, cluster_tol=cluster_tol)
    wh = to_fourier(w, grid)
    proj = np.einsum("...ij,...j->...i", field.R, wh.values)
    return from_fourier(GridField(grid, proj), box)


def _reach(op: PeriodicOperator, lo, hi, n: int):
    smin, smax = op.step_extent()
    return np.asarray(lo) + n * smin, np.asarray(hi) + n * smax


def no_aliasing_size(op: PeriodicOperator, lo, hi, n: int) -> int:
    """Smallest grid size that holds ``U^k w`` for all ``k <= n`` without wrap-around,
    for ``w`` supported in the box ``[lo, hi]``."""
    rlo, rhi = _reach(op, lo, hi, n)
    rlo = np.minimum(rlo, lo)
    rhi = np.maximum(rhi, hi)
    return int(np.max(rhi - rlo + 1))


def site_readout_size(op: PeriodicOperator, lo, hi, x, n: int) -> int:
    """Smallest grid size for which the amplitude at site ``x`` of ``U^k w``
    (``k <= n``) is free of aliasing.

    Wrap-around only matters if some reachable site differs from ``x`` by a
    nonzero multiple of ``N`` along every axis, so ``N`` must exceed the largest
    per-axis distance from ``x`` to the reachable region.
    """
    x = np.asarray(x)
    rlo, rhi = _reach(op, lo, hi, n)
    rlo = np.minimum(rlo, lo)
    rhi = np.maximum(rhi, hi)
    dist = np.maximum(np.abs(rlo - x), np.abs(rhi - x))
    return int(np.max(dist) + 1)


def _stack_states(states: Sequence[LatticeState]):
    sites = sorted(set().union(*(s.support() for s in states)))
    P = np.array(sites, dtype=np.int64)
    vals = np.stack([np.stack([s[y] for y in sites]) for s in states])
    return P, vals


def site_amplitudes(op: PeriodicOperator, states, x, n_max: int, N: int | None = None,
                    chunk_size: int = 1 << 16, order: int | None = None) -> np.ndarray:
    """Amplitudes ``(U^n w)(x)`` for ``n = 0..n_max`` and several initial states.

    Each amplitude is the exact grid average
    ``N^{-d} sum_k sum_i lam_i(z_k)^n z_k^{-x} P_i(z_k) w_hat(z_k)``
    on a grid large enough that site ``x`` sees no wrap-around. The sums over
    ``n`` are evaluated for all ``n`` at once: eigenphases are binned on ``L``
    bins (``L >= 8 (n_max + 1)``), the in-bin offset is expanded in a Taylor
    series (``order`` terms, chosen from the bin width when omitted), and every series term is a binned histogram
    followed by one FFT. The grid is processed in chunks, so memory does not
    scale with ``N^d``.

    Returns
    -------
    array of shape ``(len(states), n_max + 1, D)`` (leading axis dropped for
    a single state).
    """
    single = isinstance(states, LatticeState)
    states = [states] if single else list(states)
    d, D = op.d, op.D
    for s in states:
        if s.d != d or s.D != D:
            raise DimensionMismatchError("state and operator dimensions differ")
    x = np.array(_as_point(x, d))
    bounds = [s.bounds() for s in states]
    lo = np.min([b[0] for b in bounds], axis=0)
    hi = np.max([b[1] for b in bounds], axis=0)
    need = site_readout_size(op, lo, hi, x, n_max)
    if N is None:
        N = need
    elif N < need:
        raise AliasingError(
            f"grid size {N} aliases site {tuple(x)} within {n_max} steps (need {need})")

    P, vals = _stack_states(states)
    S = len(states)
    cols = S * D
    L = 64
    while L < 8 * (n_max + 1):
        L *= 2
    h = np.pi / L
    if order is None:
        # truncation error of the in-bin Taylor series stays below 1e-17
        order, term, xmax = 1, 1.0, n_max * h
        while term > 1e-17:
            term *= xmax / order
            order += 1
    H = np.zeros((order, L, 2 * cols))
    rel = (P - x).astype(float)
    total = N ** d
    for start in range(0, total, chunk_size):
        idx = np.arange(start, min(start + chunk_size, total))
        theta = 2 * np.pi * np.stack(np.unravel_index(idx, (N,) * d), axis=-1) / N
        U = op.symbol(np.exp(1j * theta))
        lam, V = unitary_eig(U, sort=False)
        phase = np.exp(1j * theta @ rel.T)
        what = np.einsum("mp,spk->msk", phase, vals)
        a = np.einsum("mki,msk->msi", np.conj(V), what)
        # c[m, i, s, k] = V[m, k, i] a[m, s, i]
        c = np.einsum("mki,msi->misk", V, a).reshape(-1, cols).view(float)
        pos = np.mod(np.angle(lam).reshape(-1), 2 * np.pi) * (L / (2 * np.pi))
        b0 = np.rint(pos)
        t = 2.0 * (pos - b0)
        b = b0.astype(np.int64) % L
        # bin-indicator matrix, rows = bins; its data is rescaled by t per order
        order_idx = np.argsort(b, kind="stable")
        indptr = np.searchsorted(b[order_idx], np.arange(L + 1))
        ts = t[order_idx]
        M = scipy.sparse.csr_matrix((np.ones_like(ts), order_idx, indptr), shape=(L, b.size))
        for p in range(order):
            H[p] += M @ c
            M.data *= ts
    F = np.fft.ifft(H.view(complex), axis=1) * L
    n = np.arange(n_max + 1)
    coef = np.stack([(1j * n * h) ** p / factorial(p) for p in range(order)])
    amps = np.einsum("pn,pnc->nc", coef, F[:, n, :]) / total
    amps = amps.reshape(n_max + 1, S, D).transpose(1, 0, 2)
    return amps[0] if single else amps
