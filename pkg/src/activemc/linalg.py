"""Dense symmetric eigensolvers and the conventions shared by the estimators.

Two solvers are provided.  :func:`jacobi_eigh` is a cyclic Jacobi method
written out in full; it is slow but simple and accurate, and the test suite
uses it as an independent check on the LAPACK route used in production.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SYMMETRY_RTOL",
    "check_symmetric",
    "fix_signs",
    "jacobi_eigh",
    "sym_eig",
]

SYMMETRY_RTOL = 1e-10


def check_symmetric(M: np.ndarray, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Return ``M`` as a float array, raising if it is not square and symmetric."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 0.0)
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > rtol * scale:
        raise ValueError(f"matrix is not symmetric: max |M - M^T| = {asym:.3e}")
    return M


def fix_signs(W: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive.

    Ties in magnitude go to the lowest row index (``argmax`` semantics).
    """
    W = np.array(W, dtype=float, copy=True)
    if W.size == 0:
        return W
    rows = np.argmax(np.abs(W), axis=0)
    signs = np.sign(W[rows, np.arange(W.shape[1])])
    signs[signs == 0] = 1.0
    return W * signs


def jacobi_eigh(M, tol: float = 1e-15, max_sweeps: int = 100):
    """Cyclic Jacobi eigendecomposition of a real symmetric matrix.

    Parameters
    ----------
    M : (m, m) array_like
        Symmetric input.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm falls below
        ``tol * ||M||_F``.
    max_sweeps : int
        Hard cap on the number of full sweeps.

    Returns
    -------
    evals : (m,) ndarray
        Eigenvalues in descending order.
    W : (m, m) ndarray
        Orthogonal matrix whose columns are the matching eigenvectors.
    """
    A = check_symmetric(M).copy()
    m = A.shape[0]
    V = np.eye(m)
    total = np.linalg.norm(A)
    if total == 0.0:
        return np.zeros(m), V
    for _ in range(max_sweeps):
        # direct sum: ||A||^2 - ||diag A||^2 cancels to a sqrt(eps) floor
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * total:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                # Rutishauser's stable rotation angle
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                V[:, p] = c * vp - s * V[:, q]
                V[:, q] = s * vp + c * V[:, q]
    evals = np.diag(A).copy()
    order = np.argsort(-evals, kind="stable")
    return evals[order], V[:, order]


def sym_eig(M, method: str = "lapack"):
    """Descending eigenpairs of a symmetric matrix with fixed eigenvector signs.

    ``method`` is ``"lapack"`` (``numpy.linalg.eigh``) or ``"jacobi"``.
    """
    M = check_symmetric(M)
    if method == "lapack":
        # symmetrize away roundoff so eigh sees an exactly symmetric input
        evals, W = np.linalg.eigh(0.5 * (M + M.T))
        evals, W = evals[::-1], W[:, ::-1]
    elif method == "jacobi":
        evals, W = jacobi_eigh(M)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    return np.ascontiguousarray(evals), fix_signs(W)
