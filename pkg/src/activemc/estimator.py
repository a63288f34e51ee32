"""Monte Carlo estimate of the gradient outer-product matrix and its eigenpairs."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import fix_signs, sym_eig
from .sampling import GradientSampleSet

__all__ = [
    "ActiveSubspaceEstimate",
    "estimate_C",
    "eigendecompose",
    "estimate_via_svd",
    "estimate",
    "partition",
    "subspace_distance",
    "project_active",
    "mean_squared_directional_derivative",
]

CLAMP_RTOL = 1e-12
ORTHO_TOL = 1e-8


def _gradients(samples) -> np.ndarray:
    G = samples.gradients if isinstance(samples, GradientSampleSet) else np.asarray(samples, float)
    if G.ndim != 2 or G.shape[0] < 1:
        raise ValueError("empty gradient sample set")
    return G


def estimate_C(samples) -> np.ndarray:
    """Average outer product ``(1/N) sum_j g_j g_j^T`` of the gradient rows."""
    G = _gradients(samples)
    C = G.T @ G / G.shape[0]
    return 0.5 * (C + C.T)


def _clamp(evals: np.ndarray) -> np.ndarray:
    top = evals[0] if evals.size else 0.0
    floor = -CLAMP_RTOL * max(top, 0.0)
    if np.any(evals < floor):
        raise ValueError(
            f"matrix is not positive semidefinite: eigenvalue {evals.min():.3e} < {floor:.3e}"
        )
    return np.maximum(evals, 0.0)


def eigendecompose(C_hat, method: str = "lapack"):
    """Descending nonnegative eigenvalues and sign-fixed eigenvectors of ``C_hat``.

    Roundoff negatives down to ``-1e-12 * lambda_1`` are clamped to zero;
    anything more negative is rejected as not PSD.
    """
    evals, W = sym_eig(C_hat, method=method)
    return _clamp(evals), W


def estimate_via_svd(samples):
    """Same eigenpairs through the SVD of ``B = G^T / sqrt(N)``.

    Eigenvalues are the squared singular values padded with zeros up to m;
    eigenvectors are the left singular vectors under the same sign rule.
    """
    G = _gradients(samples)
    N, m = G.shape
    U, s, _ = np.linalg.svd(G.T / np.sqrt(N), full_matrices=True)
    evals = np.zeros(m)
    evals[: s.size] = s**2
    return evals, fix_signs(U)


@dataclass(frozen=True, eq=False)
class ActiveSubspaceEstimate:
    C_hat: np.ndarray
    eigenvalues: np.ndarray
    W: np.ndarray
    n: int | None = None
    provenance: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.W.shape[0]

    def with_dimension(self, n: int) -> "ActiveSubspaceEstimate":
        _check_n(n, self.m)
        return ActiveSubspaceEstimate(self.C_hat, self.eigenvalues, self.W, n, self.provenance)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "eigenvalues": self.eigenvalues.tolist(),
            "W": self.W.tolist(),
            "C_hat": self.C_hat.tolist(),
            "n": self.n,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ActiveSubspaceEstimate":
        W = np.asarray(d["W"], dtype=float)
        C = np.asarray(d["C_hat"], dtype=float) if "C_hat" in d else (W * d["eigenvalues"]) @ W.T
        return cls(C, np.asarray(d["eigenvalues"], dtype=float), W, d.get("n"),
                   d.get("provenance", {}))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def save_eigenvalues_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "lambda_hat"])
            for i, lam in enumerate(self.eigenvalues, start=1):
                w.writerow([i, repr(float(lam))])


def estimate(samples: GradientSampleSet, n: int | None = None, method: str = "lapack"):
    """Build ``C_hat`` from ``samples`` and decompose it."""
    C = estimate_C(samples)
    evals, W = eigendecompose(C, method=method)
    prov = samples.provenance() if isinstance(samples, GradientSampleSet) else {}
    est = ActiveSubspaceEstimate(C, evals, W, None, prov)
    return est if n is None else est.with_dimension(n)


def _check_n(n, m):
    if int(n) != n or not 1 <= n < m:
        raise ValueError(f"active dimension must satisfy 1 <= n < m = {m}, got {n}")


def partition(est: ActiveSubspaceEstimate, n: int):
    """Split eigenvectors and eigenvalues into the leading ``n`` and the rest.

    Returns ``(W1, W2, lam1, lam2)``.
    """
    _check_n(n, est.m)
    return est.W[:, :n], est.W[:, n:], est.eigenvalues[:n], est.eigenvalues[n:]


def _check_orthonormal(V, name):
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    err = np.max(np.abs(V.T @ V - np.eye(V.shape[1])))
    if err > ORTHO_TOL:
        raise ValueError(f"{name} does not have orthonormal columns (error {err:.2e})")
    return V


def subspace_distance(W1, V1, method: str = "projector") -> float:
    """Distance ``||W1 W1^T - V1 V1^T||_2`` between the column spans.

    ``method="complement"`` computes ``||W1^T V2||_2`` instead, with ``V2``
    an explicit orthonormal completion of ``V1``; the two agree for
    equal-dimensional subspaces.
    """
    W1 = _check_orthonormal(W1, "W1")
    V1 = _check_orthonormal(V1, "V1")
    if W1.shape != V1.shape:
        raise ValueError(f"subspace shapes differ: {W1.shape} vs {V1.shape}")
    if method == "projector":
        P = W1 @ W1.T - V1 @ V1.T
        d = float(np.linalg.norm(P, 2))
    elif method == "complement":
        m, n = V1.shape
        if n == m:
            return 0.0
        Q, _ = np.linalg.qr(V1, mode="complete")
        d = float(np.linalg.norm(W1.T @ Q[:, n:], 2))
    else:
        raise ValueError(f"unknown method {method!r}")
    return min(max(d, 0.0), 1.0)


def project_active(x, W1, W2):
    """Active and inactive coordinates ``(W1^T x, W2^T x)``."""
    x = np.asarray(x, dtype=float)
    W1 = np.asarray(W1, dtype=float)
    W2 = np.asarray(W2, dtype=float)
    if W1.ndim == 1:
        W1 = W1[:, None]
    if W2.ndim == 1:
        W2 = W2[:, None]
    if W1.shape[0] != x.size or W2.shape[0] != x.size:
        raise ValueError("x and the bases have mismatched dimensions")
    if W1.shape[1] + W2.shape[1] != x.size:
        raise ValueError("W1 and W2 together must have m columns")
    return W1.T @ x, W2.T @ x


def mean_squared_directional_derivative(samples, w) -> float:
    """Sample mean of ``(g_j^T w)^2`` for a unit vector ``w``."""
    w = np.asarray(w, dtype=float)
    if abs(np.linalg.norm(w) - 1.0) > 1e-10:
        raise ValueError("direction must have unit norm")
    G = _gradients(samples)
    return float(np.mean((G @ w) ** 2))
