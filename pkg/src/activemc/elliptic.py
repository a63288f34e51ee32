"""One-dimensional elliptic test problem with a KL log-coefficient.

Solves ``-(a u')' = 1`` on ``[0, 1]`` with ``u(0) = 0`` and ``u'(1) = 0``,
where ``log a(s) = sum_i x_i gamma_i phi_i(s)`` and ``x ~ N(0, I_m)``.
The quantity of interest is ``u(1)``.

Discretization is linear finite elements on ``n_s`` uniform cells with the
coefficient constant on each cell (its value at the cell midpoint, which is
also where the KL modes live).  The stiffness matrix is then a symmetric
M-matrix and, for constant ``a``, the FE solution is exact at the nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import InputDensity

__all__ = [
    "EllipticModel",
    "build_kl",
    "solve_state",
    "qoi",
    "adjoint_gradient",
    "stiffness_matrix",
]


@dataclass(frozen=True, eq=False)
class EllipticModel:
    beta: float
    kl_values: np.ndarray
    kl_modes: np.ndarray
    grid: int
    density: InputDensity = None
    extends_beyond_support: bool = field(default=True, init=False)
    # kl_modes * kl_values, the cellwise sensitivity of log a to x
    _basis: np.ndarray = field(default=None, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_basis", self.kl_modes * self.kl_values)
        if self.density is None:
            object.__setattr__(self, "density", InputDensity.gaussian(self.kl_values.size))

    @property
    def dimension(self) -> int:
        return self.kl_values.size

    @property
    def m(self) -> int:
        return self.kl_values.size

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.grid) + 0.5) / self.grid

    def coefficient(self, x) -> np.ndarray:
        return np.exp(self._basis @ np.asarray(x, dtype=float))

    def f(self, x):
        return qoi(self, x)

    def grad(self, x):
        return adjoint_gradient(self, x)

    def to_dict(self) -> dict:
        return {"kind": "elliptic", "beta": self.beta, "m": self.m, "grid": self.grid}


def build_kl(beta: float = 1.0, m: int = 100, n_s: int = 512) -> EllipticModel:
    """Leading ``m`` eigenpairs of ``exp(-|s - t| / beta)`` on the cell midpoints.

    Modes are normalised so that ``sum_c phi_i(s_c) phi_j(s_c) / n_s = delta_ij``.
    """
    if not beta > 0:
        raise ValueError(f"correlation length must be positive, got {beta}")
    if m < 1 or m > n_s:
        raise ValueError(f"need 1 <= m <= n_s, got m={m}, n_s={n_s}")
    s = (np.arange(n_s) + 0.5) / n_s
    w = 1.0 / n_s
    K = np.exp(-np.abs(s[:, None] - s[None, :]) / beta) * w
    evals, V = np.linalg.eigh(K)
    evals, V = evals[::-1][:m], V[:, ::-1][:, :m]
    # sign convention: each mode has a positive mean
    sgn = np.sign(V.sum(axis=0))
    sgn[sgn == 0] = 1.0
    modes = V * sgn / np.sqrt(w)
    gam = np.sqrt(np.maximum(evals, 0.0))
    modes.setflags(write=False)
    gam.setflags(write=False)
    return EllipticModel(float(beta), gam, modes, int(n_s))


def stiffness_matrix(model: EllipticModel, x) -> np.ndarray:
    """Dense stiffness matrix on the unknowns ``u_1..u_n`` (for testing)."""
    k = model.coefficient(x) * model.grid
    D = np.eye(k.size) - np.eye(k.size, k=-1)
    return D.T @ (k[:, None] * D)


def _solve(k: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # K = D^T diag(k) D with D the nodal difference operator (u_0 = 0), so
    # K u = b is a reverse cumulative sum, a diagonal scale and a cumulative sum;
    # the flux through cell c equals the load carried by the nodes right of it
    flux = np.cumsum(rhs[::-1], axis=0)[::-1]
    du = flux / (k[:, None] if rhs.ndim == 2 else k)
    return np.cumsum(du, axis=0)


def _load(n: int) -> np.ndarray:
    b = np.full(n, 1.0 / n)
    b[-1] *= 0.5
    return b


def solve_state(model: EllipticModel, x) -> np.ndarray:
    """Nodal solution ``u`` at the ``grid + 1`` nodes, ``u[0] = 0``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.m,) or not np.all(np.isfinite(x)):
        raise ValueError(f"expected a finite parameter vector of length {model.m}")
    k = model.coefficient(x) * model.grid
    u = _solve(k, _load(model.grid))
    if not np.all(np.isfinite(u)):
        raise FloatingPointError("state solve produced non-finite values")
    return np.concatenate(([0.0], u))


def qoi(model: EllipticModel, x) -> float:
    return float(solve_state(model, x)[-1])


def adjoint_gradient(model: EllipticModel, x) -> np.ndarray:
    """Exact gradient of the discrete ``u(1)`` with respect to ``x``.

    With ``K(x) u = b`` and ``f = e_n^T u``, the adjoint ``K^T p = e_n`` gives
    ``df/dx_i = -p^T (dK/dx_i) u``.  Cell ``c`` contributes
    ``a_c gamma_i phi_i(s_c) (du_c)(dp_c) / h`` to ``p^T (dK/dx_i) u``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (model.m,) or not np.all(np.isfinite(x)):
        raise ValueError(f"expected a finite parameter vector of length {model.m}")
    n = model.grid
    a = model.coefficient(x)
    rhs = np.zeros((n, 2))
    rhs[:, 0] = _load(n)
    rhs[-1, 1] = 1.0
    # K is symmetric, so the adjoint solve reuses the state factorization
    sol = _solve(a * n, rhs)
    u = np.concatenate(([0.0], sol[:, 0]))
    p = np.concatenate(([0.0], sol[:, 1]))
    cell = a * np.diff(u) * np.diff(p) * n
    return -(model._basis.T @ cell)
