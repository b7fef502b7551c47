"""Named walks.

=================  ===  ===  ==============================================
name               d    D    coins
=================  ===  ===  ==============================================
``hadamard-1d``    1    2    ``C(-1) = [[1, 1], [0, 0]] / sqrt2``,
                             ``C(+1) = [[0, 0], [1, -1]] / sqrt2``
``grover-2d``      2    4    ``G = J/2 - I`` (``J`` all ones); chirality
                             ``j`` moves along ``+e1, -e1, +e2, -e2`` and
                             ``C(step_j)`` keeps row ``j`` of ``G``
``constant-coin``  1    2    ``C(0) = diag(1, i)``
``pure-shift``     1    1    ``C(+1) = [1]``
=================  ===  ===  ==============================================
"""
from __future__ import annotations

import numpy as np

PRESETS = {
    "hadamard-1d": {"d": 1, "coin_dim": 2},
    "grover-2d": {"d": 2, "coin_dim": 4},
    "constant-coin": {"d": 1, "coin_dim": 2},
    "pure-shift": {"d": 1, "coin_dim": 1},
}

GROVER_DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def grover_coin(D: int) -> np.ndarray:
    return np.full((D, D), 2.0 / D) - np.eye(D)


def preset_steps(name: str) -> dict:
    if name == "hadamard-1d":
        s = 1 / np.sqrt(2)
        return {(-1,): s * np.array([[1, 1], [0, 0]], dtype=complex),
                (1,): s * np.array([[0, 0], [1, -1]], dtype=complex)}
    if name == "grover-2d":
        G = grover_coin(4)
        steps = {}
        for j, a in enumerate(GROVER_DIRECTIONS):
            C = np.zeros((4, 4), dtype=complex)
            C[j] = G[j]
            steps[a] = C
        return steps
    if name == "constant-coin":
        return {(0,): np.diag([1, 1j])}
    if name == "pure-shift":
        return {(1,): np.eye(1, dtype=complex)}
    raise KeyError(name)
