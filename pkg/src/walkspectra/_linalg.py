"""Batched diagonalization of unitary matrices."""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .exceptions import EigensolverError

# Mixing weights for the Hermitian pencil Re(U) + c Im(U). Two unitary
# eigenvalues collide in the pencil only on a measure-zero set, which differs
# between the two weights.
_MIX = (0.6180339887498949, -1.4142135623730951)


def _pencil_eig(U: np.ndarray, c: float):
    Uh = np.conj(np.swapaxes(U, -1, -2))
    A = 0.5 * (U + Uh) + (c / 2j) * (U - Uh)
    _, V = np.linalg.eigh(A)
    UV = U @ V
    lam = np.sum(np.conj(V) * UV, axis=-2)
    resid = np.max(np.abs(UV - V * lam[..., None, :]), axis=(-1, -2))
    return lam, V, resid


def unitary_eig(U, resid_tol: float = 1e-10, sort: bool = True):
    """Eigenvalues and a unitary eigenvector matrix for a stack of unitaries.

    Parameters
    ----------
    U : array, shape (..., D, D)
    resid_tol : float
        Maximal accepted ``|U V - V diag(lam)|`` entry; points above it are
        recomputed with a second pencil and finally with a complex Schur form.
    sort : bool
        Sort eigenvalues by principal argument at each point.

    Returns
    -------
    lam : array, shape (..., D)
    V : array, shape (..., D, D)
        Columns are orthonormal eigenvectors.
    """
    U = np.asarray(U, dtype=complex)
    shape = U.shape[:-2]
    D = U.shape[-1]
    flat = U.reshape(-1, D, D)
    lam, V, resid = _pencil_eig(flat, _MIX[0])
    bad = np.flatnonzero(resid > resid_tol)
    if bad.size:
        lam2, V2, resid2 = _pencil_eig(flat[bad], _MIX[1])
        fixed = resid2 <= resid_tol
        lam[bad[fixed]] = lam2[fixed]
        V[bad[fixed]] = V2[fixed]
        for i in bad[~fixed]:
            T, Z = scipy.linalg.schur(flat[i], output="complex")
            off = np.max(np.abs(np.triu(T, 1))) if D > 1 else 0.0
            if off > resid_tol:
                raise EigensolverError(
                    f"matrix at grid point {np.unravel_index(i, shape)} is not normal "
                    f"(Schur off-diagonal {off:.3g})",
                    grid_index=np.unravel_index(i, shape))
            lam[i] = np.diag(T)
            V[i] = Z
    if sort:
        order = np.argsort(np.angle(lam), axis=-1, kind="stable")
        lam = np.take_along_axis(lam, order, axis=-1)
        V = np.take_along_axis(V, order[:, None, :], axis=-1)
    return lam.reshape(shape + (D,)), V.reshape(shape + (D, D))


def cluster_labels(lam: np.ndarray, tol: float) -> np.ndarray:
    """Label eigenvalues closer than ``tol`` (transitively) with a common id.

    The label of a cluster is the smallest index it contains.
    """
    lam = np.asarray(lam)
    D = lam.shape[-1]
    adj = np.abs(lam[..., :, None] - lam[..., None, :]) <= tol
    reach = adj.copy()
    for _ in range(max(D - 1, 0).bit_length()):
        reach = np.einsum("...ij,...jk->...ik", reach.astype(np.int8),
                          reach.astype(np.int8)) > 0
    return np.argmax(reach, axis=-1)
