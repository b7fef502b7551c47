"""Periodic unitary transition operators on Z^d and finitely supported states.

An operator is given by a finite step set ``S`` and one ``D x D`` coin matrix
per step; it acts as

    (U w)(x) = sum_{a in S} C(a) w(x - a).

Everything here works directly in position space and serves as the exact
reference for the Fourier-side machinery.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .exceptions import DimensionMismatchError, MalformedOperatorError

__all__ = [
    "PeriodicOperator",
    "LatticeState",
    "UnitarityReport",
    "validate_unitarity",
    "apply_direct",
    "evolve_direct",
    "probability",
]

DEFAULT_UNITARITY_TOL = 1e-10


def _as_point(x, d=None) -> tuple[int, ...]:
    if np.isscalar(x):
        x = (x,)
    pt = tuple(int(c) for c in x)
    if any(int(c) != c for c in x):
        raise MalformedOperatorError(f"lattice point {x!r} has non-integer coordinates")
    if d is not None and len(pt) != d:
        raise DimensionMismatchError(f"lattice point {pt} does not have length {d}")
    return pt


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


class PeriodicOperator:
    """Translation-invariant unitary with finitely many steps.

    Parameters
    ----------
    steps : mapping
        ``{offset: coin}`` where ``offset`` is a length-``d`` integer tuple
        (an int is accepted for ``d = 1``) and ``coin`` a ``D x D`` complex
        matrix.
    """

    def __init__(self, steps: Mapping):
        if not steps:
            raise MalformedOperatorError("step set is empty")
        items = list(steps.items())
        d = len(_as_point(items[0][0]))
        coins = {}
        D = None
        for offset, coin in items:
            pt = _as_point(offset)
            if len(pt) != d:
                raise MalformedOperatorError(
                    f"step {pt} has length {len(pt)}, expected {d}")
            c = np.asarray(coin, dtype=complex)
            if c.ndim != 2 or c.shape[0] != c.shape[1]:
                raise MalformedOperatorError(
                    f"coin for step {pt} is not square: shape {c.shape}")
            if D is None:
                D = c.shape[0]
            elif c.shape[0] != D:
                raise MalformedOperatorError(
                    f"coin for step {pt} is {c.shape[0]}x{c.shape[0]}, expected {D}x{D}")
            if pt in coins:
                raise MalformedOperatorError(f"duplicate step {pt}")
            coins[pt] = _frozen(c)
        self._d = d
        self._D = D
        self._steps = MappingProxyType(dict(sorted(coins.items())))

    @property
    def d(self) -> int:
        """Lattice rank."""
        return self._d

    @property
    def D(self) -> int:
        """Coin (internal) dimension."""
        return self._D

    @property
    def steps(self) -> Mapping[tuple[int, ...], np.ndarray]:
        return self._steps

    @property
    def offsets(self) -> np.ndarray:
        """Step offsets as an ``(|S|, d)`` integer array, in sorted order."""
        return np.array(list(self._steps), dtype=np.int64).reshape(len(self._steps), self._d)

    @property
    def coins(self) -> np.ndarray:
        """Coin matrices stacked as ``(|S|, D, D)``, same order as ``offsets``."""
        return np.stack(list(self._steps.values()))

    def step_extent(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-axis minimum and maximum step coordinate."""
        off = self.offsets
        return off.min(axis=0), off.max(axis=0)

    def adjoint(self) -> "PeriodicOperator":
        """The operator ``U*``: coin ``C(a)^*`` placed at step ``-a``."""
        return PeriodicOperator(
            {tuple(-c for c in a): C.conj().T for a, C in self._steps.items()})

    def symbol(self, z) -> np.ndarray:
        """Evaluate ``sum_a z^a C(a)`` at points ``z`` of shape ``(..., d)``.

        Returns an array of shape ``(..., D, D)``.
        """
        z = np.asarray(z, dtype=complex)
        if self._d == 1 and (z.ndim == 0 or z.shape[-1] != 1):
            z = z[..., None]
        if z.shape[-1] != self._d:
            raise DimensionMismatchError(
                f"torus points have {z.shape[-1]} coordinates, operator has d={self._d}")
        if np.any(z == 0):
            raise ValueError("symbol evaluated at a point with a zero coordinate")
        out = np.zeros(z.shape[:-1] + (self._D, self._D), dtype=complex)
        for a, C in self._steps.items():
            mono = np.prod(z ** np.array(a), axis=-1)
            out += mono[..., None, None] * C
        return out

    def angular_derivative(self, z, axis: int) -> np.ndarray:
        """``d/d theta_axis`` of the symbol at ``z = exp(i theta)``."""
        z = np.asarray(z, dtype=complex)
        if self._d == 1 and (z.ndim == 0 or z.shape[-1] != 1):
            z = z[..., None]
        out = np.zeros(z.shape[:-1] + (self._D, self._D), dtype=complex)
        for a, C in self._steps.items():
            if a[axis] == 0:
                continue
            mono = 1j * a[axis] * np.prod(z ** np.array(a), axis=-1)
            out += mono[..., None, None] * C
        return out

    def __eq__(self, other):
        if not isinstance(other, PeriodicOperator):
            return NotImplemented
        return (self._steps.keys() == other._steps.keys()
                and all(np.array_equal(self._steps[k], other._steps[k]) for k in self._steps))

    def __repr__(self):
        return f"PeriodicOperator(d={self._d}, D={self._D}, steps={list(self._steps)})"


class LatticeState:
    """Finitely supported vector-valued function on Z^d.

    Amplitudes are stored sparsely as ``{site: vector}``. Entries are kept
    exactly as produced; use :meth:`prune` to drop small ones.
    """

    def __init__(self, amplitudes: Mapping, d: int | None = None, D: int | None = None):
        amps = {}
        for site, vec in amplitudes.items():
            pt = _as_point(site, d)
            if d is None:
                d = len(pt)
            v = np.asarray(vec, dtype=complex).reshape(-1)
            if D is None:
                D = v.shape[0]
            elif v.shape[0] != D:
                raise DimensionMismatchError(
                    f"amplitude at {pt} has length {v.shape[0]}, expected {D}")
            amps[pt] = _frozen(amps[pt] + v) if pt in amps else _frozen(v)
        if d is None or D is None:
            raise ValueError("empty state needs explicit d and D")
        self._d, self._D = d, D
        self._amps = MappingProxyType(amps)

    @classmethod
    def delta(cls, site, vector) -> "LatticeState":
        """The state ``delta_site (x) vector``."""
        return cls({_as_point(site): vector})

    @property
    def d(self) -> int:
        return self._d

    @property
    def D(self) -> int:
        return self._D

    @property
    def amplitudes(self) -> Mapping[tuple[int, ...], np.ndarray]:
        return self._amps

    def __getitem__(self, site) -> np.ndarray:
        pt = _as_point(site, self._d)
        if pt in self._amps:
            return self._amps[pt]
        return np.zeros(self._D, dtype=complex)

    def __len__(self):
        return len(self._amps)

    def support(self) -> set[tuple[int, ...]]:
        return set(self._amps)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-axis minimum and maximum site coordinate of the support."""
        if not self._amps:
            raise ValueError("empty state has no bounds")
        sites = np.array(list(self._amps), dtype=np.int64)
        return sites.min(axis=0), sites.max(axis=0)

    def norm_sq(self) -> float:
        if not self._amps:
            return 0.0
        vals = np.stack(list(self._amps.values()))
        return float(np.sum(np.abs(vals) ** 2))

    def translate(self, shift) -> "LatticeState":
        s = _as_point(shift, self._d)
        return LatticeState(
            {tuple(a + b for a, b in zip(x, s)): v for x, v in self._amps.items()},
            d=self._d, D=self._D)

    def prune(self, tol: float = 0.0) -> "LatticeState":
        """Drop sites whose amplitude norm is ``<= tol``."""
        return LatticeState(
            {x: v for x, v in self._amps.items() if np.linalg.norm(v) > tol},
            d=self._d, D=self._D)

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Sites ``(n, d)`` and amplitudes ``(n, D)`` in sorted site order."""
        keys = sorted(self._amps)
        sites = np.array(keys, dtype=np.int64).reshape(len(keys), self._d)
        vals = (np.stack([self._amps[k] for k in keys]) if keys
                else np.zeros((0, self._D), dtype=complex))
        return sites, vals

    @classmethod
    def from_arrays(cls, sites, values, d=None, D=None) -> "LatticeState":
        sites = np.asarray(sites, dtype=np.int64)
        values = np.asarray(values, dtype=complex)
        d = sites.shape[1] if d is None else d
        D = values.shape[1] if D is None else D
        state = cls.__new__(cls)
        state._d, state._D = d, D
        state._amps = MappingProxyType(
            {tuple(int(c) for c in s): _frozen(v) for s, v in zip(sites, values)})
        return state

    def allclose(self, other: "LatticeState", atol: float = 1e-12) -> bool:
        sites = self.support() | other.support()
        return all(np.allclose(self[x], other[x], rtol=0, atol=atol) for x in sites)

    def __repr__(self):
        return f"LatticeState(d={self._d}, D={self._D}, sites={len(self._amps)})"


@dataclass(frozen=True)
class UnitarityReport:
    """Operator-norm residuals of ``sum_{a-b=g} C(b)^* C(a) - delta_{g,0} I``."""

    max_residual: float
    per_gamma: dict = field(default_factory=dict)
    tol: float = DEFAULT_UNITARITY_TOL

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def __bool__(self):
        return self.passed


def _check_dims(op: PeriodicOperator, w: LatticeState):
    if w.d != op.d or w.D != op.D:
        raise DimensionMismatchError(
            f"state has (d, D)=({w.d}, {w.D}), operator has ({op.d}, {op.D})")


def validate_unitarity(op: PeriodicOperator, tol: float = DEFAULT_UNITARITY_TOL) -> UnitarityReport:
    """Check the coin relations that make ``U`` unitary.

    For every ``g`` in the difference set ``S - S`` the residual
    ``|| sum_{a - b = g} C(b)^* C(a) - delta_{g,0} I ||_2`` is recorded.
    """
    if not isinstance(op, PeriodicOperator):
        raise MalformedOperatorError(f"expected PeriodicOperator, got {type(op).__name__}")
    ident = np.eye(op.D)
    sums: dict[tuple[int, ...], np.ndarray] = {}
    for (a, Ca), (b, Cb) in product(op.steps.items(), repeat=2):
        g = tuple(x - y for x, y in zip(a, b))
        term = Cb.conj().T @ Ca
        sums[g] = sums[g] + term if g in sums else term
    per_gamma = {}
    for g in sorted(sums):
        target = ident if not any(g) else 0.0
        per_gamma[g] = float(np.linalg.norm(sums[g] - target, ord=2))
    return UnitarityReport(max(per_gamma.values()), per_gamma, tol)


def apply_direct(op: PeriodicOperator, w: LatticeState) -> LatticeState:
    """One exact step ``(U w)(x) = sum_a C(a) w(x - a)``."""
    _check_dims(op, w)
    sites, vals = w.to_arrays()
    if len(sites) == 0:
        return LatticeState({}, d=op.d, D=op.D)
    new_sites = []
    new_vals = []
    for a, C in op.steps.items():
        new_sites.append(sites + np.array(a, dtype=np.int64))
        new_vals.append(vals @ C.T)
    all_sites = np.concatenate(new_sites)
    all_vals = np.concatenate(new_vals)
    uniq, inverse = np.unique(all_sites, axis=0, return_inverse=True)
    out = np.zeros((len(uniq), op.D), dtype=complex)
    np.add.at(out, inverse.reshape(-1), all_vals)
    return LatticeState.from_arrays(uniq, out, d=op.d, D=op.D)


def evolve_direct(op: PeriodicOperator, w: LatticeState, n: int) -> LatticeState:
    """``U^n w`` by repeated :func:`apply_direct`."""
    if n < 0:
        raise ValueError("number of steps must be nonnegative")
    _check_dims(op, w)
    for _ in range(n):
        w = apply_direct(op, w)
    return w


def iter_direct(op: PeriodicOperator, w: LatticeState, n: int) -> Iterable[LatticeState]:
    """Yield ``U^k w`` for ``k = 0, ..., n``."""
    _check_dims(op, w)
    yield w
    for _ in range(n):
        w = apply_direct(op, w)
        yield w


def probability(w: LatticeState, x) -> float:
    """``||w(x)||^2``."""
    return float(np.sum(np.abs(w[x]) ** 2))
