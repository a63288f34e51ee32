"""Test functions, input densities and gradient sources.

Every model exposes ``dimension``, ``density``, ``f(x)`` and ``grad(x)``.
The module-level ``eval_*`` functions validate inputs against the density
before delegating, so model methods themselves stay unchecked and fast.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

__all__ = [
    "UNIFORM",
    "GAUSSIAN",
    "InputDensity",
    "SupportError",
    "GradientSource",
    "Model",
    "QuadraticModel",
    "IndexModel",
    "linear_model",
    "eval_f",
    "eval_grad_exact",
    "eval_grad_fd",
    "analytic_C",
    "quadratic_case_eigenvalues",
    "random_orthogonal",
    "build_quadratic_case",
    "model_from_dict",
    "load_model",
]

UNIFORM = "uniform"
GAUSSIAN = "gaussian"


class SupportError(ValueError):
    """A point (or a finite-difference stencil node) lies outside the density's support."""


@dataclass(frozen=True)
class InputDensity:
    """Input weight function: uniform on ``[-1, 1]^m`` or standard Gaussian on ``R^m``."""

    kind: str
    dimension: int

    def __post_init__(self):
        if self.kind not in (UNIFORM, GAUSSIAN):
            raise ValueError(f"unknown density kind {self.kind!r}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dimension}")

    @classmethod
    def uniform(cls, m: int) -> "InputDensity":
        return cls(UNIFORM, m)

    @classmethod
    def gaussian(cls, m: int) -> "InputDensity":
        return cls(GAUSSIAN, m)

    @property
    def weight(self) -> float | None:
        """Constant density value on the hypercube; ``None`` for the Gaussian."""
        return 2.0 ** -self.dimension if self.kind == UNIFORM else None

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if self.kind == GAUSSIAN:
            return bool(np.all(np.isfinite(x)))
        return bool(np.all(np.abs(x) <= 1.0))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dimension": self.dimension}

    @classmethod
    def from_dict(cls, d: dict) -> "InputDensity":
        return cls(d["kind"], int(d["dimension"]))


@dataclass(frozen=True)
class GradientSource:
    """How gradients are obtained: ``exact`` or ``forward`` differences with step ``h``."""

    kind: str = "exact"
    h: float | None = None

    def __post_init__(self):
        if self.kind == "exact":
            if self.h is not None:
                raise ValueError("exact gradient source takes no step size")
        elif self.kind == "forward":
            if self.h is None or not self.h > 0:
                raise ValueError(f"forward difference step must be positive, got {self.h}")
        elif self.kind != "external":
            raise ValueError(f"unknown gradient source {self.kind!r}")

    @classmethod
    def exact(cls) -> "GradientSource":
        return cls("exact")

    @classmethod
    def forward(cls, h: float) -> "GradientSource":
        return cls("forward", float(h))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "h": self.h}

    @classmethod
    def from_dict(cls, d) -> "GradientSource":
        if d == "external" or d is None:
            return cls("external")
        return cls(d["kind"], d.get("h"))


class Model(Protocol):
    dimension: int
    density: InputDensity
    # True when f has a closed form valid on all of R^m, so finite-difference
    # stencils may step past the hypercube boundary without changing f
    extends_beyond_support: bool

    def f(self, x: np.ndarray) -> float: ...

    def grad(self, x: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class QuadraticModel:
    """``f(x) = x^T A x / 2`` with symmetric positive-definite ``A``."""

    A: np.ndarray
    density: InputDensity = None
    extends_beyond_support: bool = field(default=True, init=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        scale = max(1.0, float(np.max(np.abs(A))))
        if np.max(np.abs(A - A.T)) > 1e-12 * scale:
            raise ValueError("A must be symmetric")
        if np.min(np.linalg.eigvalsh(A)) <= 0:
            raise ValueError("A must be positive definite")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        if self.density is None:
            object.__setattr__(self, "density", InputDensity.uniform(A.shape[0]))
        if self.density.dimension != A.shape[0]:
            raise ValueError("density dimension does not match A")

    @property
    def dimension(self) -> int:
        return self.A.shape[0]

    def f(self, x):
        return 0.5 * float(x @ self.A @ x)

    def grad(self, x):
        return self.A @ x

    def to_dict(self) -> dict:
        return {"kind": "quadratic", "A": self.A.tolist(), "density": self.density.to_dict()}


@dataclass(frozen=True, eq=False)
class IndexModel:
    """Ridge function ``f(x) = link(A^T x)`` with ``A`` of shape (m, k).

    ``link`` maps a k-vector to a scalar and ``link_grad`` returns its gradient.
    """

    A: np.ndarray
    link: Callable[[np.ndarray], float]
    link_grad: Callable[[np.ndarray], np.ndarray]
    density: InputDensity = None
    extends_beyond_support: bool = True

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim == 1:
            A = A[:, None]
        m, k = A.shape
        if k > m:
            raise ValueError(f"index model needs k <= m, got A of shape {A.shape}")
        if np.linalg.matrix_rank(A) < k:
            raise ValueError("columns of A must be linearly independent")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        if self.density is None:
            object.__setattr__(self, "density", InputDensity.uniform(m))
        if self.density.dimension != m:
            raise ValueError("density dimension does not match A")

    @property
    def dimension(self) -> int:
        return self.A.shape[0]

    def f(self, x):
        return float(self.link(self.A.T @ x))

    def grad(self, x):
        return self.A @ np.atleast_1d(self.link_grad(self.A.T @ x))


def linear_model(c, density: InputDensity | None = None) -> IndexModel:
    """The index model ``f(x) = c^T x``; its gradient is ``c`` everywhere."""
    c = np.asarray(c, dtype=float)
    if density is None:
        density = InputDensity.uniform(c.size)
    return IndexModel(c[:, None], lambda y: y[0], lambda y: np.ones(1), density)


def _check_point(model: Model, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dimension,):
        raise ValueError(f"expected a point of dimension {model.dimension}, got shape {x.shape}")
    if not model.density.contains(x):
        raise SupportError(f"point lies outside the {model.density.kind} support")
    return x


def eval_f(model: Model, x) -> float:
    return float(model.f(_check_point(model, x)))


def eval_grad_exact(model: Model, x) -> np.ndarray:
    x = _check_point(model, x)
    g = getattr(model, "grad", None)
    if g is None:
        raise TypeError(f"{type(model).__name__} has no closed-form gradient")
    return np.asarray(g(x), dtype=float)


def eval_grad_fd(model: Model, x, h: float, *, extrapolate: bool = False) -> np.ndarray:
    """Forward-difference gradient ``(f(x + h e_i) - f(x)) / h``.

    Stencil nodes outside the hypercube raise :class:`SupportError` unless
    ``extrapolate`` is set and the model's formula is valid past the boundary.
    """
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    x = _check_point(model, x)
    allow = extrapolate and getattr(model, "extends_beyond_support", False)
    if model.density.kind == UNIFORM and not allow:
        bad = np.flatnonzero(x + h > 1.0)
        if bad.size:
            i = int(bad[0])
            raise SupportError(
                f"forward-difference node x[{i}] + h = {x[i] + h:.6g} leaves [-1, 1]"
            )
    f0 = model.f(x)
    g = np.empty(x.size)
    xp = x.copy()
    for i in range(x.size):
        xp[i] = x[i] + h
        g[i] = (model.f(xp) - f0) / h
        xp[i] = x[i]
    return g


def analytic_C(model: QuadraticModel) -> np.ndarray:
    """Exact ``E[grad f grad f^T] = A^2 / 3`` for a quadratic under the uniform density."""
    if model.density.kind != UNIFORM:
        raise ValueError("analytic C is only available for the uniform hypercube density")
    A = model.A
    C = A @ A / 3.0
    return 0.5 * (C + C.T)


def quadratic_case_eigenvalues(case: int, m: int) -> np.ndarray:
    """Eigenvalues of ``A`` for the three decay profiles.

    Case 1 decays as ``10**(-(i-1)/2)``.  Case 2 multiplies the first value
    by 10 and case 3 the first three, opening a gap after index 1 or 3.
    """
    if case not in (1, 2, 3):
        raise ValueError(f"case must be 1, 2 or 3, got {case}")
    if m < 4:
        raise ValueError(f"quadratic cases need m >= 4, got {m}")
    a = 10.0 ** (-np.arange(m) / 2.0)
    if case == 2:
        a[:1] *= 10.0
    elif case == 3:
        a[:3] *= 10.0
    return a


def random_orthogonal(m: int, seed: int) -> np.ndarray:
    """Orthogonal factor of a seeded Gaussian matrix (QR with a sign-fixed R diagonal)."""
    Z = np.random.default_rng(seed).standard_normal((m, m))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


def build_quadratic_case(case: int, m: int = 10, seed: int = 0) -> QuadraticModel:
    a = quadratic_case_eigenvalues(case, m)
    Q = random_orthogonal(m, seed)
    A = (Q * a) @ Q.T
    return QuadraticModel(0.5 * (A + A.T))


def model_from_dict(d: dict):
    """Build a model from its JSON description.

    Recognised kinds: ``quadratic`` (``case``/``m``/``seed`` or explicit ``A``),
    ``linear`` (``c``) and ``elliptic`` (``beta``/``m``/``grid``).
    """
    kind = d.get("kind")
    density = InputDensity.from_dict(d["density"]) if "density" in d else None
    if kind == "quadratic":
        if "A" in d:
            return QuadraticModel(np.asarray(d["A"], dtype=float), density)
        if "case" not in d:
            raise ValueError("quadratic model needs either 'A' or 'case'")
        return build_quadratic_case(int(d["case"]), int(d.get("m", 10)), int(d.get("seed", 0)))
    if kind == "linear":
        return linear_model(d["c"], density)
    if kind == "elliptic":
        from .elliptic import build_kl

        return build_kl(float(d.get("beta", 1.0)), int(d.get("m", 100)), int(d.get("grid", 512)))
    raise ValueError(f"unknown model kind {kind!r}")


def load_model(path) -> object:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
