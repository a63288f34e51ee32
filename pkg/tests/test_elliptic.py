import numpy as np
import pytest

from activemc.elliptic import (
    _load,
    _solve,
    adjoint_gradient,
    build_kl,
    qoi,
    solve_state,
    stiffness_matrix,
)
from activemc.models import GAUSSIAN, model_from_dict


@pytest.fixture(scope="module")
def model():
    return build_kl(1.0, 100, 512)


def qoi_longdouble(model, x):
    """u(1) evaluated in extended precision: sum over cells of flux / coefficient."""
    basis = model._basis.astype(np.longdouble)
    a = np.exp(basis @ np.asarray(x, dtype=np.longdouble))
    n = model.grid
    b = np.full(n, np.longdouble(1) / n)
    b[-1] /= 2
    flux = np.cumsum(b[::-1])[::-1]
    return np.sum(flux / (a * n))


def central_fd(model, x, h=1e-6):
    x = np.asarray(x, dtype=np.longdouble)
    g = np.empty(x.size)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = float((qoi_longdouble(model, xp) - qoi_longdouble(model, xm)) / (2 * h))
    return g


class TestKL:
    def test_unweighted_diagonal_is_one(self):
        m = build_kl(0.3, 4, 16)
        # weighted operator trace equals n_s * (1 / n_s)
        assert np.sum(m.kl_values**2) <= 1.0 + 1e-12

    def test_two_node_closed_form(self):
        beta = 0.7
        m = build_kl(beta, 2, 2)
        d = 0.5
        np.testing.assert_allclose(m.kl_values**2 * 2, [1 + np.exp(-d / beta), 1 - np.exp(-d / beta)], rtol=1e-14)

    def test_modes_orthonormal(self, model):
        P = model.kl_modes.T @ model.kl_modes / model.grid
        np.testing.assert_allclose(P, np.eye(model.m), atol=1e-10)

    def test_eigenpairs_of_operator(self):
        m = build_kl(0.5, 5, 64)
        s = m.midpoints
        K = np.exp(-np.abs(s[:, None] - s[None, :]) / 0.5) / 64
        np.testing.assert_allclose(K @ m.kl_modes, m.kl_modes * m.kl_values**2, atol=1e-12)

    def test_descending_nonnegative(self, model):
        assert np.all(np.diff(model.kl_values) <= 0) and np.all(model.kl_values >= 0)

    def test_long_correlation_decays_faster(self):
        def modes_for_95(beta):
            lam = build_kl(beta, 100, 512).kl_values ** 2
            return int(np.searchsorted(np.cumsum(lam), 0.95)) + 1

        assert modes_for_95(1.0) < modes_for_95(0.01)

    def test_errors(self):
        with pytest.raises(ValueError):
            build_kl(1.0, 20, 10)
        with pytest.raises(ValueError):
            build_kl(0.0, 2, 10)

    def test_density_and_json(self):
        m = model_from_dict({"kind": "elliptic", "beta": 1.0, "m": 10, "grid": 64})
        assert m.density.kind == GAUSSIAN and m.dimension == 10 and m.grid == 64


class TestState:
    @pytest.mark.parametrize("n_s", [32, 100, 512])
    def test_constant_coefficient(self, n_s):
        m = build_kl(1.0, 3, n_s)
        u = solve_state(m, np.zeros(3))
        assert abs(u[-1] - 0.5) <= 5 / n_s**2
        s = m.nodes
        np.testing.assert_allclose(u, s - s**2 / 2, atol=1e-14)

    def test_scaling(self):
        rng = np.random.default_rng(0)
        k = np.exp(rng.standard_normal(64)) * 64
        b = _load(64)
        np.testing.assert_allclose(_solve(2 * k, b), _solve(k, b) / 2, rtol=1e-12)

    def test_against_dense_system(self, model):
        x = np.random.default_rng(1).standard_normal(model.m)
        u = solve_state(model, x)
        K = stiffness_matrix(model, x)
        b = _load(model.grid)
        assert np.linalg.norm(K @ u[1:] - b) <= 1e-10 * np.linalg.norm(K, 1) * np.abs(u).max()
        np.testing.assert_allclose(u[1:], np.linalg.solve(K, b), rtol=1e-9)

    def test_maximum_principle(self, model):
        rng = np.random.default_rng(2)
        for scale in (0.5, 1.0, 3.0):
            x = scale * rng.standard_normal(model.m)
            u = solve_state(model, x)
            assert np.all(u >= 0) and qoi(model, x) > 0

    def test_m_matrix(self, model):
        K = stiffness_matrix(model, np.random.default_rng(3).standard_normal(model.m))
        off = K - np.diag(np.diag(K))
        assert np.all(off <= 0) and np.all(np.diag(K) > 0)

    def test_nonfinite(self, model):
        with pytest.raises(ValueError):
            solve_state(model, np.full(model.m, np.nan))

    def test_wrong_length(self, model):
        with pytest.raises(ValueError):
            qoi(model, np.zeros(3))


class TestAdjoint:
    @pytest.mark.parametrize("seed", range(3))
    def test_matches_central_differences(self, model, seed):
        x = np.random.default_rng(seed).standard_normal(model.m)
        g = adjoint_gradient(model, x)
        fd = central_fd(model, x)
        assert np.max(np.abs(g - fd) / np.abs(fd)) <= 1e-5

    def test_oracle_agrees_with_double_qoi(self, model):
        x = np.random.default_rng(9).standard_normal(model.m)
        assert float(qoi_longdouble(model, x)) == pytest.approx(qoi(model, x), rel=1e-13)

    def test_deterministic_at_origin(self, model):
        a = adjoint_gradient(model, np.zeros(model.m))
        b = adjoint_gradient(model, np.zeros(model.m))
        assert a.tobytes() == b.tobytes()

    def test_gradient_of_constant_mode(self):
        # with x = 0, d u(1) / d x_i = -gamma_i * sum_c phi_i(s_c) flux_c / n_s
        m = build_kl(1.0, 4, 128)
        flux = np.cumsum(_load(128)[::-1])[::-1]
        expected = -(m._basis.T @ flux) / 128
        np.testing.assert_allclose(adjoint_gradient(m, np.zeros(4)), expected, rtol=1e-12)

    def test_decay_with_mode_index(self, model):
        X = np.random.default_rng(1).standard_normal((2000, model.m))
        a = np.mean([np.abs(adjoint_gradient(model, x)) for x in X], axis=0)
        smooth = np.convolve(a, np.ones(5) / 5, mode="valid")
        assert np.all(np.diff(smooth) <= 0)
