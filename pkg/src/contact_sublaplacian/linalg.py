"""Small dense linear-algebra helpers: constrained orthonormal bases and ranks."""

from __future__ import annotations

import numpy as np

from .errors import NumericalError

RANK_TOL = 1e-8


def null_space(C: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Orthonormal (Euclidean) basis of ``ker C`` as columns."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    _, s, vt = np.linalg.svd(C)
    rank = int(np.sum(s > tol * max(1.0, s.max(initial=0.0))))
    return vt[rank:].T


def numerical_rank(M: np.ndarray, tol: float = RANK_TOL) -> int:
    s = np.linalg.svd(np.atleast_2d(M), compute_uv=False)
    return int(np.sum(s > tol))


def pivot_order(candidates: np.ndarray, Q: np.ndarray, dim: int) -> list[int]:
    """Indices picked by pivoted Gram-Schmidt (largest remaining Q-norm first)."""
    _, order = _pivoted_gs(candidates, Q, dim, None)
    return order


def gram_schmidt(candidates: np.ndarray, Q: np.ndarray, dim: int,
                 order: list[int] | None = None, where=None) -> np.ndarray:
    """Q-orthonormal vectors (rows) from the rows of ``candidates``.

    Without ``order`` the next vector is always the remaining candidate with
    largest residual Q-norm; with ``order`` the sequence is fixed, which keeps
    the output smooth in the candidates.
    """
    basis, _ = _pivoted_gs(candidates, Q, dim, order, where)
    return basis


def _pivoted_gs(candidates, Q, dim, order, where=None):
    cand = np.array(candidates, dtype=float)
    chosen: list[np.ndarray] = []
    picked: list[int] = []
    scale = max(1.0, float(np.max(np.abs(cand))))
    for step in range(dim):
        resid = cand.copy()
        for b in chosen:
            resid -= np.outer(resid @ Q @ b, b)
        norms2 = np.einsum("ij,jk,ik->i", resid, Q, resid)
        if order is None:
            norms2[picked] = -np.inf
            idx = int(np.argmax(norms2))
        else:
            idx = order[step]
        if not norms2[idx] > 1e-20 * scale**2:
            at = "" if where is None else f" at {np.asarray(where).tolist()}"
            raise NumericalError(f"Gram-Schmidt breakdown{at}")
        chosen.append(resid[idx] / np.sqrt(norms2[idx]))
        picked.append(idx)
    return np.array(chosen), picked


def constrained_orthonormal_basis(C: np.ndarray, Q: np.ndarray, dim: int,
                                  where=None) -> np.ndarray:
    """Q-orthonormal basis (rows) of ``ker C``, seeded from the ambient basis order."""
    m = Q.shape[0]
    C = np.atleast_2d(C)
    P = np.eye(m) - C.T @ np.linalg.pinv(C.T)
    return gram_schmidt(P, Q, dim, where=where)
