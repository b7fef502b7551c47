"""Input coercion shared by the estimator front end."""
from __future__ import annotations

from typing import Mapping

import numpy as np

from .exceptions import DimensionMismatchError, PreconditionError
from .lattice import LatticeState, PeriodicOperator, validate_unitarity


def check_operator(op, tol: float = 1e-10) -> PeriodicOperator:
    """Accept a :class:`PeriodicOperator` or a step mapping and verify unitarity."""
    if isinstance(op, Mapping):
        op = PeriodicOperator(op)
    if not isinstance(op, PeriodicOperator):
        raise TypeError(f"expected a PeriodicOperator or a step mapping, got {type(op).__name__}")
    rep = validate_unitarity(op, tol)
    if not rep.passed:
        raise PreconditionError(
            f"operator is not unitary: max residual {rep.max_residual:.3g} > {tol:g}")
    return op


def check_states(X, op: PeriodicOperator) -> list[LatticeState]:
    """Coerce ``X`` into a list of lattice states matching ``op``.

    ``X`` may be a single state, a sequence of states, or an ``(n, D)`` array
    of coin vectors placed at the origin.
    """
    if isinstance(X, LatticeState):
        X = [X]
    elif isinstance(X, np.ndarray) or (isinstance(X, (list, tuple)) and X
                                      and not isinstance(X[0], LatticeState)):
        arr = np.atleast_2d(np.asarray(X, dtype=complex))
        if arr.ndim != 2 or arr.shape[1] != op.D:
            raise DimensionMismatchError(
                f"coin vectors must have shape (n, {op.D}), got {arr.shape}")
        X = [LatticeState.delta((0,) * op.d, v) for v in arr]
    states = list(X)
    if not states:
        raise ValueError("no states given")
    for s in states:
        if not isinstance(s, LatticeState):
            raise TypeError(f"expected LatticeState, got {type(s).__name__}")
        if s.d != op.d or s.D != op.D:
            raise DimensionMismatchError(
                f"state has (d, D) = ({s.d}, {s.D}); operator has ({op.d}, {op.D})")
    return states


def check_sites(sites, d: int) -> list[tuple[int, ...]]:
    if sites is None:
        return [(0,) * d]
    out = []
    for s in sites:
        s = tuple(int(c) for c in np.atleast_1d(s))
        if len(s) != d:
            raise DimensionMismatchError(f"site {s} does not have {d} coordinates")
        out.append(s)
    return out
