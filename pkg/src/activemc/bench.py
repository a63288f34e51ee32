"""Desk-scale reruns of the quadratic and elliptic experiments.

Each run records every seed and parameter needed to regenerate it, and
writes ``<exp>.json``, ``<exp>_eigs.csv`` and ``<exp>_subspace.csv``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .bootstrap import DEFAULT_NBOOT, BootstrapSummary, bootstrap
from .bounds import heuristic_sample_count
from .elliptic import build_kl
from .estimator import eigendecompose, estimate, subspace_distance
from .models import GradientSource, analytic_C, build_quadratic_case
from .sampling import sample_gradients

__all__ = [
    "ExperimentReport",
    "run_quadratic_experiment",
    "run_elliptic_experiment",
    "quadratic_truth",
    "max_gradient_norm",
    "fd_error_split",
]


@dataclass(eq=False)
class ExperimentReport:
    name: str
    params: dict
    eigenvalues: np.ndarray
    bootstrap: BootstrapSummary
    true_eigenvalues: np.ndarray | None = None
    true_distances: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        opt = lambda a: None if a is None else np.asarray(a).tolist()  # noqa: E731
        return {
            "schema_version": 1,
            "name": self.name,
            "params": self.params,
            "eigenvalues": self.eigenvalues.tolist(),
            "true_eigenvalues": opt(self.true_eigenvalues),
            "true_distances": opt(self.true_distances),
            "bootstrap": self.bootstrap.to_dict(),
            "extra": self.extra,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        opt = lambda a: None if a is None else np.asarray(a, dtype=float)  # noqa: E731
        return cls(d["name"], d["params"], np.asarray(d["eigenvalues"], dtype=float),
                   BootstrapSummary.from_dict(d["bootstrap"]), opt(d.get("true_eigenvalues")),
                   opt(d.get("true_distances")), d.get("extra", {}))

    @classmethod
    def load(cls, path) -> "ExperimentReport":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def write(self, outdir, name: str | None = None) -> dict:
        """Write the JSON report and both CSVs into ``outdir``; return their paths."""
        name = name or self.name
        os.makedirs(outdir, exist_ok=True)
        paths = {
            "json": os.path.join(outdir, f"{name}.json"),
            "eigs": os.path.join(outdir, f"{name}_eigs.csv"),
            "subspace": os.path.join(outdir, f"{name}_subspace.csv"),
        }
        with open(paths["json"], "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
        self.bootstrap.write_eigs_csv(paths["eigs"])
        self.bootstrap.write_subspace_csv(paths["subspace"])
        return paths


def quadratic_truth(model):
    """Exact eigenvalues and eigenvectors of C for a quadratic on the hypercube."""
    return eigendecompose(analytic_C(model))


def max_gradient_norm(model) -> float:
    """``max ||A x||`` over the hypercube, attained at a vertex since the norm is convex."""
    m = model.dimension
    if m > 20:
        raise ValueError("vertex enumeration is limited to m <= 20")
    V = np.array(list(product((-1.0, 1.0), repeat=m)))
    return float(np.sqrt(np.max(np.sum((V @ model.A) ** 2, axis=1))))


def _source_name(source: GradientSource) -> str:
    return "exact" if source.kind == "exact" else f"fd{source.h:g}"


def run_quadratic_experiment(
    case: int,
    source: GradientSource = GradientSource.exact(),
    alpha: float = 2.0,
    k: int = 6,
    seed: int = 0,
    *,
    m: int = 10,
    model_seed: int = 0,
    n_boot: int = DEFAULT_NBOOT,
    N: int | None = None,
    threads: int = 1,
) -> ExperimentReport:
    """One quadratic run with bootstrap and true-subspace errors.

    ``model_seed`` fixes the shared eigenvectors of A; ``seed`` drives the
    input samples and bootstrap resampling.  ``N`` overrides the heuristic
    ``alpha k log(m)`` sample count.
    """
    if not 1 <= k <= m:
        raise ValueError(f"k must satisfy 1 <= k <= m = {m}")
    model = build_quadratic_case(case, m, model_seed)
    if N is None:
        N = heuristic_sample_count(k, m, alpha)
    samples = sample_gradients(model, model.density, N, seed, source, threads=threads)
    est = estimate(samples)
    boot = bootstrap(samples, k, n_boot, seed, threads=threads)
    lam, W = quadratic_truth(model)
    dists = np.array([subspace_distance(W[:, :n], est.W[:, :n]) if n < m else 0.0
                      for n in range(1, k + 1)])
    params = {
        "experiment": "quadratic", "case": case, "source": source.to_dict(), "alpha": alpha,
        "k": k, "seed": seed, "model_seed": model_seed, "m": m, "N": N, "n_boot": n_boot,
    }
    return ExperimentReport(
        f"quadratic_case{case}_{_source_name(source)}_seed{seed}",
        params,
        est.eigenvalues,
        boot,
        true_eigenvalues=lam,
        true_distances=dists,
        extra={"max_sampled_grad_norm": float(np.max(np.linalg.norm(samples.gradients, axis=1)))},
    )


@lru_cache(maxsize=8)
def _elliptic_model(beta: float, m: int, grid: int):
    return build_kl(beta, m, grid)


def run_elliptic_experiment(
    beta: float = 1.0,
    alpha: float = 2.0,
    k: int = 6,
    seed: int = 0,
    *,
    m: int = 100,
    grid: int = 512,
    n_boot: int = DEFAULT_NBOOT,
    threads: int = 1,
) -> ExperimentReport:
    """One elliptic run with adjoint gradients; subspace stability comes from the bootstrap only."""
    if not beta > 0:
        raise ValueError(f"correlation length must be positive, got {beta}")
    model = _elliptic_model(float(beta), int(m), int(grid))
    N = heuristic_sample_count(k, m, alpha)
    samples = sample_gradients(model, model.density, N, seed, threads=threads)
    est = estimate(samples)
    boot = bootstrap(samples, k, n_boot, seed, threads=threads)
    params = {
        "experiment": "elliptic", "beta": beta, "alpha": alpha, "k": k, "seed": seed,
        "m": m, "grid": grid, "N": N, "n_boot": n_boot, "source": {"kind": "exact", "h": None},
    }
    return ExperimentReport(
        f"elliptic_beta{beta:g}_alpha{alpha:g}_seed{seed}",
        params,
        est.eigenvalues,
        boot,
        extra={"kl_values": model.kl_values[:k].tolist()},
    )


def fd_error_split(reports, h: float):
    """Median relative eigenvalue error for true eigenvalues below and at-or-above ``h``.

    Pools the leading ``k`` eigenvalues of every report.
    """
    below, above = [], []
    for r in reports:
        k = r.bootstrap.k
        lam = r.true_eigenvalues[:k]
        rel = np.abs(r.eigenvalues[:k] - lam) / lam
        below.extend(rel[lam < h])
        above.extend(rel[lam >= h])
    med = lambda v: float(np.median(v)) if v else float("nan")  # noqa: E731
    return med(below), med(above)
