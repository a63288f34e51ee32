"""Nonparametric bootstrap for eigenvalue intervals and subspace stability."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .estimator import eigendecompose, estimate_C

__all__ = [
    "DEFAULT_NBOOT",
    "BootstrapSummary",
    "bootstrap",
    "resample_indices",
    "suggest_dimension",
]

DEFAULT_NBOOT = 1000


@dataclass(frozen=True, eq=False)
class BootstrapSummary:
    """Replicate statistics for the leading ``k`` eigenvalues.

    Distance arrays are indexed by candidate dimension ``n = 1..k``; entries
    for ``n = m`` (whole space) are zero by definition.
    """

    n_boot: int
    seed: int
    point_eigenvalues: np.ndarray
    eigenvalue_lo: np.ndarray
    eigenvalue_hi: np.ndarray
    distance_mean: np.ndarray
    distance_min: np.ndarray
    distance_max: np.ndarray

    @property
    def k(self) -> int:
        return self.point_eigenvalues.size

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "n_boot": self.n_boot,
            "seed": self.seed,
            "k": self.k,
            "point_eigenvalues": self.point_eigenvalues.tolist(),
            "eigenvalue_lo": self.eigenvalue_lo.tolist(),
            "eigenvalue_hi": self.eigenvalue_hi.tolist(),
            "distance_mean": self.distance_mean.tolist(),
            "distance_min": self.distance_min.tolist(),
            "distance_max": self.distance_max.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BootstrapSummary":
        arr = lambda key: np.asarray(d[key], dtype=float)  # noqa: E731
        return cls(int(d["n_boot"]), int(d["seed"]), arr("point_eigenvalues"),
                   arr("eigenvalue_lo"), arr("eigenvalue_hi"), arr("distance_mean"),
                   arr("distance_min"), arr("distance_max"))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def write_eigs_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "lambda_hat", "lo", "hi"])
            for i in range(self.k):
                w.writerow([i + 1, repr(float(self.point_eigenvalues[i])),
                            repr(float(self.eigenvalue_lo[i])), repr(float(self.eigenvalue_hi[i]))])

    def write_subspace_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "dist_mean", "dist_min", "dist_max"])
            for i in range(self.k):
                w.writerow([i + 1, repr(float(self.distance_mean[i])),
                            repr(float(self.distance_min[i])), repr(float(self.distance_max[i]))])


def resample_indices(N: int, seed: int, i: int) -> np.ndarray:
    """Row indices for replicate ``i``; a function of ``(seed, i)`` only.

    Sorted, so a replicate's matrix depends only on the multiset of rows
    drawn and not on the summation order.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
    return np.sort(rng.integers(0, N, size=N))


def _leading_distances(W: np.ndarray, Wr: np.ndarray, k: int) -> np.ndarray:
    # dist(span W[:, :n], span Wr[:, :n]) = ||W[:, :n]^T Wr[:, n:]||_2; both
    # bases are complete, so one product serves every n
    m = W.shape[0]
    if np.array_equal(W, Wr):
        return np.zeros(k)
    M = W.T @ Wr
    d = np.zeros(k)
    for n in range(1, min(k, m - 1) + 1):
        d[n - 1] = np.linalg.norm(M[:n, n:], 2)
    return np.clip(d, 0.0, 1.0)


def bootstrap(samples, k: int, n_boot: int = DEFAULT_NBOOT, seed: int = 0, threads: int = 1):
    """Bootstrap the leading ``k`` eigenpairs of ``C_hat``.

    Each replicate resamples the N gradient rows with replacement, rebuilds
    and decomposes the matrix, and records its first ``k`` eigenvalues plus,
    for every ``n <= k``, the distance between the point estimate's leading
    n-dimensional subspace and the replicate's.
    """
    G = samples.gradients if hasattr(samples, "gradients") else np.asarray(samples, float)
    N, m = G.shape
    if int(k) != k or not 1 <= k <= m:
        raise ValueError(f"k must satisfy 1 <= k <= m = {m}, got {k}")
    if int(n_boot) != n_boot or n_boot < 1:
        raise ValueError(f"n_boot must be a positive integer, got {n_boot}")
    evals, W = eigendecompose(estimate_C(G))

    def replicate(i):
        Gi = G[resample_indices(N, seed, i)]
        ev, Wi = eigendecompose(estimate_C(Gi))
        return ev[:k], _leading_distances(W, Wi, k)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(replicate, range(n_boot)))
    else:
        results = [replicate(i) for i in range(n_boot)]
    E = np.array([r[0] for r in results])
    D = np.array([r[1] for r in results])
    return BootstrapSummary(
        n_boot=int(n_boot),
        seed=int(seed),
        point_eigenvalues=evals[:k].copy(),
        eigenvalue_lo=E.min(axis=0),
        eigenvalue_hi=E.max(axis=0),
        # fixed-order reduction over replicate index keeps results bitwise stable
        distance_mean=D.mean(axis=0),
        distance_min=D.min(axis=0),
        distance_max=D.max(axis=0),
    )


def suggest_dimension(summary: BootstrapSummary, rtol: float = 1e-12):
    """Pick ``n`` at the largest log-eigenvalue gap among the leading ``k``.

    A step down to a numerically zero eigenvalue counts as an infinite gap.
    Near-equal gaps (within ``rtol``) go to the smallest ``n``.  Returns
    ``(n, gap_found)`` where ``gap_found`` means the bootstrap intervals on
    either side of the gap do not overlap.
    """
    lam = np.asarray(summary.point_eigenvalues, dtype=float)
    if lam.size < 2:
        raise ValueError("need at least two eigenvalues to look for a gap")
    if not lam[0] > 0:
        raise ValueError("no usable spectrum: all eigenvalues are zero")
    tiny = 1e-14 * lam[0]
    pos = lam > tiny
    gaps = np.full(lam.size - 1, -np.inf)
    for j in range(lam.size - 1):
        if pos[j] and pos[j + 1]:
            gaps[j] = np.log(lam[j]) - np.log(lam[j + 1])
        elif pos[j]:
            gaps[j] = np.inf
    best = gaps.max()
    if np.isinf(best) and best > 0:
        j = int(np.argmax(gaps == np.inf))
    else:
        j = int(np.argmax(gaps >= best - rtol * abs(best)))
    gap_found = bool(summary.eigenvalue_hi[j + 1] < summary.eigenvalue_lo[j])
    return j + 1, gap_found
