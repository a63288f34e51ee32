"""Input sampling and gradient sample sets.

Points come from a Philox stream keyed by the seed.  Each coordinate
consumes exactly one uniform double (Gaussians use the inverse normal CDF),
so row ``j`` always occupies the same stream positions and depends only on
``(seed, j)``.  Gradient evaluation may then run on any number of threads
without changing the result.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .models import GAUSSIAN, GradientSource, InputDensity, eval_grad_exact, eval_grad_fd

__all__ = [
    "CSVFormatError",
    "GradientSampleSet",
    "draw_points",
    "sample_gradients",
    "read_gradient_csv",
    "load_samples",
]


class CSVFormatError(ValueError):
    """Malformed gradient CSV; ``row`` is the 1-based line number."""

    def __init__(self, message: str, row: int):
        super().__init__(f"row {row}: {message}")
        self.row = row


def _stream(seed: int) -> np.random.Generator:
    key = np.random.SeedSequence(seed).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def draw_points(density: InputDensity, N: int, seed: int) -> np.ndarray:
    """Draw ``N`` i.i.d. points from ``density`` as an (N, m) array."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    m = density.dimension
    U = _stream(seed).random((int(N), m))
    if density.kind == GAUSSIAN:
        # random() yields k / 2**53; the half-step shift keeps ndtri finite
        return ndtri(U + 2.0 ** -54)
    return 2.0 * U - 1.0


@dataclass(frozen=True, eq=False)
class GradientSampleSet:
    """N gradient rows in m dimensions plus how they were produced.

    ``points`` is ``None`` and ``seed`` is ``"external"`` for gradients
    loaded from a simulation that did not record its inputs.
    """

    gradients: np.ndarray
    points: np.ndarray | None = None
    seed: int | str = "external"
    density: InputDensity | None = None
    source: GradientSource = GradientSource("external")

    def __post_init__(self):
        G = np.array(self.gradients, dtype=float)
        if G.ndim != 2 or G.shape[0] < 1:
            raise ValueError(f"gradients must be an (N, m) array with N >= 1, got shape {G.shape}")
        if not np.all(np.isfinite(G)):
            raise ValueError("gradients contain non-finite entries")
        G.setflags(write=False)
        object.__setattr__(self, "gradients", G)
        if self.points is not None:
            X = np.array(self.points, dtype=float)
            if X.shape[0] != G.shape[0]:
                raise ValueError("points and gradients have different row counts")
            X.setflags(write=False)
            object.__setattr__(self, "points", X)

    @property
    def N(self) -> int:
        return self.gradients.shape[0]

    @property
    def m(self) -> int:
        return self.gradients.shape[1]

    def provenance(self) -> dict:
        return {
            "seed": self.seed,
            "density": self.density.to_dict() if self.density else "external",
            "source": self.source.to_dict() if self.source.kind != "external" else "external",
            "N": self.N,
            "m": self.m,
        }

    def save(self, path) -> None:
        """Write ``path`` (CSV, header ``g1..gm``) and a JSON sidecar beside it."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"g{i + 1}" for i in range(self.m)])
            for row in self.gradients:
                w.writerow([repr(float(v)) for v in row])
        with open(_sidecar(path), "w") as fh:
            json.dump({"schema_version": 1, **self.provenance()}, fh, indent=2)


def _sidecar(path) -> str:
    return os.path.splitext(os.fspath(path))[0] + ".json"


def sample_gradients(
    model,
    density: InputDensity,
    N: int,
    seed: int,
    source: GradientSource = GradientSource.exact(),
    threads: int = 1,
) -> GradientSampleSet:
    """Draw ``N`` points and evaluate gradients according to ``source``.

    Forward differences may step past the hypercube boundary when the model's
    closed form holds there; otherwise the boundary error propagates with the
    sample index attached.
    """
    if model.dimension != density.dimension:
        raise ValueError(
            f"model dimension {model.dimension} != density dimension {density.dimension}"
        )
    X = draw_points(density, N, seed)

    if source.kind == "exact":
        def one(j):
            return eval_grad_exact(model, X[j])
    elif source.kind == "forward":
        def one(j):
            return eval_grad_fd(model, X[j], source.h, extrapolate=True)
    else:
        raise ValueError("cannot sample from an external gradient source")

    def guarded(j):
        try:
            return one(j)
        except (ValueError, TypeError, ArithmeticError) as exc:
            raise type(exc)(f"sample {j}: {exc}") from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(guarded, range(X.shape[0])))
    else:
        rows = [guarded(j) for j in range(X.shape[0])]
    return GradientSampleSet(np.vstack(rows), X, seed, density, source)


def read_gradient_csv(path) -> np.ndarray:
    """Parse an N x m comma-separated gradient table with an optional header line."""
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                vals = [float(c) for c in rec]
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise CSVFormatError(f"non-numeric entry in {rec!r}", lineno) from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise CSVFormatError(f"expected {width} columns, found {len(vals)}", lineno)
            if not all(np.isfinite(vals)):
                raise CSVFormatError("non-finite entry", lineno)
            rows.append(vals)
    if not rows:
        raise CSVFormatError("no gradient rows", 1)
    return np.array(rows, dtype=float)


def load_samples(path) -> GradientSampleSet:
    """Load a gradient CSV, restoring provenance and points from the sidecar if present."""
    G = read_gradient_csv(path)
    side = _sidecar(path)
    if not os.path.exists(side):
        return GradientSampleSet(G)
    with open(side) as fh:
        meta = json.load(fh)
    density = meta.get("density")
    density = None if density in (None, "external") else InputDensity.from_dict(density)
    source = GradientSource.from_dict(meta.get("source"))
    seed = meta.get("seed", "external")
    points = None
    if density is not None and isinstance(seed, int):
        points = draw_points(density, G.shape[0], seed)
    return GradientSampleSet(G, points, seed, density, source)
