"""Sample-count heuristics and non-asymptotic error bounds.

All logarithms are natural.  Probabilities are clamped to ``[0, 1]``; the raw
Bernstein-type expressions exceed one when they are vacuous.  Sample counts
use the explicit constants from the proofs (4 and 8/3) with a failure
probability of ``m**-beta``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "BoundsInput",
    "heuristic_sample_count",
    "eigenvalue_deviation_probabilities",
    "required_N_eigenvalue",
    "matrix_error_probability",
    "required_N_matrix",
    "subspace_error_bound",
    "grad_error_matrix_bound",
    "eigenvalue_bias_bound",
    "eigenvalue_bias_terms",
    "subspace_error_bound_approx",
    "estimate_L_and_nu2",
    "evaluate_bounds",
]


@dataclass
class BoundsInput:
    """Quantities the bounds depend on; unused fields may stay ``None``.

    ``lam`` is the spectrum of C (true or estimated), descending.  ``k`` is
    the eigenvalue index of interest and ``n`` the subspace dimension, both
    1-based.
    """

    m: int
    lam: np.ndarray | None = None
    L: float | None = None
    nu2: float | None = None
    eps: float | None = None
    gamma_h: float = 0.0
    beta: float = 1.0
    k: int | None = None
    n: int | None = None
    N: int | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.lam is not None:
            lam = np.asarray(self.lam, dtype=float)
            if np.any(lam < 0) or np.any(np.diff(lam) > 0):
                raise ValueError("spectrum must be nonnegative and descending")
            self.lam = lam
        if self.L is not None and not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.gamma_h < 0:
            raise ValueError("gamma_h must be nonnegative")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")

    @classmethod
    def from_dict(cls, d: dict) -> "BoundsInput":
        d = dict(d)
        d.pop("schema_version", None)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown BoundsInput fields: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = None if self.lam is None else np.asarray(self.lam).tolist()
        del d["lam"]
        return d

    def _need(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ValueError(f"missing inputs: {', '.join(missing)}")


def _ceil(x: float) -> int:
    # absorb roundoff such as log(e**2) = 2.0000000000000004
    return max(1, math.ceil(x * (1.0 - 4 * np.finfo(float).eps)))


def _clip01(p: float) -> float:
    return float(min(1.0, max(0.0, p)))


def _lam_k(inp: BoundsInput, k: int) -> float:
    inp._need("lam")
    if not 1 <= k <= min(inp.lam.size, inp.m):
        raise ValueError(f"index {k} outside the spectrum of length {min(inp.lam.size, inp.m)}")
    lk = float(inp.lam[k - 1])
    if lk <= 0:
        raise ValueError(f"lambda_{k} = 0: bound is vacuous")
    return lk


def _check_eps_unit(eps):
    if eps is None or not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")


def heuristic_sample_count(k: int, m: int, alpha: float) -> int:
    """``max(k, ceil(alpha * k * log(m)))`` gradient samples."""
    if m < 2:
        raise ValueError(f"m must be at least 2, got {m}")
    if k < 1 or not alpha > 0:
        raise ValueError("k must be >= 1 and alpha > 0")
    return max(int(k), math.ceil(alpha * k * math.log(m)))


def eigenvalue_deviation_probabilities(inp: BoundsInput, N: int, k: int):
    """Upper bounds on ``P[lam_hat_k >= (1+eps) lam_k]`` and ``P[lam_hat_k <= (1-eps) lam_k]``."""
    _check_eps_unit(inp.eps)
    inp._need("L")
    lk = _lam_k(inp, k)
    l1 = float(inp.lam[0])
    e2, L2 = inp.eps**2, inp.L**2
    p_up = (inp.m - k + 1) * math.exp(-N * lk * e2 / (4 * L2))
    p_lo = k * math.exp(-N * lk**2 * e2 / (4 * l1 * L2))
    return _clip01(p_up), _clip01(p_lo)


def required_N_eigenvalue(inp: BoundsInput, k: int) -> int:
    """Samples so that ``|lam_hat_k - lam_k| <= eps lam_k`` fails with probability ``<= m**-beta`` per tail."""
    _check_eps_unit(inp.eps)
    inp._need("L")
    lk = _lam_k(inp, k)
    l1 = float(inp.lam[0])
    kappa = l1 / lk
    return _ceil(4 * (inp.beta + 1) * inp.L**2 * kappa**2 / (l1 * inp.eps**2) * math.log(inp.m))


def matrix_error_probability(inp: BoundsInput, N: int) -> float:
    """Bound on ``P[||C_hat - C|| >= eps ||C||]``; the branch switches at ``eps = nu2 / (lam_1 L^2)``."""
    inp._need("nu2", "L", "eps")
    if not inp.nu2 > 0:
        raise ValueError("nu2 must be positive")
    if not inp.eps > 0:
        raise ValueError("eps must be positive")
    l1 = _lam_k(inp, 1)
    L2 = inp.L**2
    if inp.eps <= inp.nu2 / (l1 * L2):
        expo = -3 * N * l1**2 * inp.eps**2 / (8 * inp.nu2)
    else:
        expo = -3 * N * l1 * inp.eps / (8 * L2)
    return _clip01(2 * inp.m * math.exp(expo))


def matrix_delta(inp: BoundsInput) -> float:
    l1 = _lam_k(inp, 1)
    return max(inp.nu2 / (l1 * inp.eps), inp.L**2)


def required_N_matrix(inp: BoundsInput) -> int:
    """Samples so that ``||C_hat - C|| <= eps ||C||`` fails with probability ``<= m**-beta``."""
    inp._need("nu2", "L", "eps")
    if not inp.nu2 > 0:
        raise ValueError("nu2 must be positive")
    if not inp.eps > 0:
        raise ValueError("eps must be positive")
    l1 = _lam_k(inp, 1)
    delta = matrix_delta(inp)
    return _ceil(8.0 / 3.0 * (inp.beta + 1) * delta / (l1 * inp.eps) * math.log(2 * inp.m))


class SubspaceBound(NamedTuple):
    bound: float
    valid: bool


def _gap(lam, n):
    lam = np.asarray(lam, dtype=float)
    if not 1 <= n < lam.size:
        raise ValueError(f"n must satisfy 1 <= n < {lam.size}, got {n}")
    g = float(lam[n - 1] - lam[n])
    if g <= 0:
        raise ValueError("zero spectral gap: bound undefined")
    return g


def subspace_error_bound(lam, n: int, eps: float) -> SubspaceBound:
    """``4 lam_1 eps / (lam_n - lam_{n+1})`` and whether ``eps <= min(1, gap / (5 lam_1))``."""
    gap = _gap(lam, n)
    l1 = float(np.asarray(lam)[0])
    valid = eps <= min(1.0, gap / (5 * l1))
    return SubspaceBound(4 * l1 * eps / gap, bool(valid))


def grad_error_matrix_bound(m: int, gamma_h: float, L: float) -> float:
    """Bound on ``||C_hat - G_hat||`` when every gradient error is at most ``sqrt(m) gamma_h``."""
    if gamma_h < 0 or not L > 0:
        raise ValueError("need gamma_h >= 0 and L > 0")
    r = math.sqrt(m) * gamma_h
    return r * (r + 2 * L)


def eigenvalue_bias_terms(inp: BoundsInput, k: int):
    """The two pieces of the approximate-gradient eigenvalue bound: ``(eps lam_k, matrix term)``."""
    _check_eps_unit(inp.eps)
    inp._need("L")
    lk = float(inp.lam[k - 1]) if inp.lam is not None else None
    if lk is None:
        raise ValueError("missing inputs: lam")
    return inp.eps * lk, grad_error_matrix_bound(inp.m, inp.gamma_h, inp.L)


def eigenvalue_bias_bound(inp: BoundsInput, k: int) -> float:
    """``|lam_k - theta_hat_k| <= eps lam_k + sqrt(m) gamma_h (sqrt(m) gamma_h + 2L)``."""
    a, b = eigenvalue_bias_terms(inp, k)
    return a + b


class ApproxSubspaceBound(NamedTuple):
    bound: float
    h_condition_met: bool


def approx_subspace_terms(inp: BoundsInput, n: int) -> dict:
    """Both terms of the approximate-gradient subspace bound plus the validity checks."""
    inp._need("lam", "L", "eps")
    lam = inp.lam
    gap = _gap(lam, n)
    ln, ln1, l1 = float(lam[n - 1]), float(lam[n]), float(lam[0])
    eps = inp.eps
    eps_valid = 0 < eps < min(1.0, gap / (5 * l1), gap / (ln + ln1))
    shrunk_gap = (1 - eps) * ln - (1 + eps) * ln1
    mat = grad_error_matrix_bound(inp.m, inp.gamma_h, inp.L)
    if shrunk_gap > 0:
        grad_term = 4 * mat / shrunk_gap
    else:
        grad_term = math.inf if mat > 0 else 0.0
    return {
        "gradient_term": grad_term,
        "sampling_term": 4 * l1 * eps / gap,
        "h_condition_met": bool(shrunk_gap > 0 and mat <= shrunk_gap / 5),
        "eps_valid": bool(eps_valid),
    }


def subspace_error_bound_approx(inp: BoundsInput, n: int) -> ApproxSubspaceBound:
    """Subspace error bound with approximate gradients, and whether the step-size condition holds."""
    t = approx_subspace_terms(inp, n)
    return ApproxSubspaceBound(t["gradient_term"] + t["sampling_term"], t["h_condition_met"])


def estimate_L_and_nu2(samples, C_hat=None):
    """Plug-in estimates ``max_j ||g_j||`` and ``||mean_j (g_j g_j^T - C_hat)^2||``."""
    G = samples.gradients if hasattr(samples, "gradients") else np.asarray(samples, float)
    N = G.shape[0]
    if N < 2:
        raise ValueError("need at least two gradient samples")
    S2 = G.T @ G / N
    C = S2 if C_hat is None else np.asarray(C_hat, dtype=float)
    sq = np.einsum("ij,ij->i", G, G)
    S4 = (G * sq[:, None]).T @ G / N
    M = S4 - S2 @ C - C @ S2 + C @ C
    M = 0.5 * (M + M.T)
    nu2 = float(np.max(np.abs(np.linalg.eigvalsh(M))))
    return float(np.sqrt(sq.max())), max(nu2, 0.0)


@dataclass
class BoundsReport:
    values: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"schema_version": 1, **self.values, "errors": self.errors}


def evaluate_bounds(inp: BoundsInput) -> BoundsReport:
    """Evaluate every quantity the supplied inputs allow; failures are listed in ``errors``."""
    rep = BoundsReport()

    def put(name, fn):
        try:
            v = fn()
        except (ValueError, TypeError) as exc:
            rep.errors[name] = str(exc)
            return
        if isinstance(v, tuple) and hasattr(v, "_asdict"):
            v = v._asdict()
        rep.values[name] = v

    k = inp.k or 1
    if inp.alpha is not None:
        put("heuristic_N", lambda: heuristic_sample_count(k, inp.m, inp.alpha))
    if inp.lam is not None and inp.lam.size:
        rep.values["kappa_k"] = (
            float(inp.lam[0] / inp.lam[k - 1]) if inp.lam[k - 1] > 0 else math.inf
        )
    if inp.lam is None:
        return rep
    put("required_N_eigenvalue", lambda: required_N_eigenvalue(inp, k))
    if inp.N is not None:
        put("eigenvalue_deviation_probabilities",
            lambda: dict(zip(("p_upper", "p_lower"), eigenvalue_deviation_probabilities(inp, inp.N, k))))
        put("matrix_error_probability", lambda: matrix_error_probability(inp, inp.N))
    put("delta", lambda: (inp._need("nu2", "L", "eps"), matrix_delta(inp))[1])
    put("required_N_matrix", lambda: required_N_matrix(inp))
    if inp.L is not None:
        put("grad_error_matrix_bound", lambda: grad_error_matrix_bound(inp.m, inp.gamma_h, inp.L))
        put("eigenvalue_bias_bound", lambda: eigenvalue_bias_bound(inp, k))
    if inp.n is not None:
        put("subspace_error_bound", lambda: subspace_error_bound(inp.lam, inp.n, inp.eps))
        put("subspace_error_bound_approx", lambda: approx_subspace_terms(inp, inp.n))
    return rep
