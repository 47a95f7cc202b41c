import math

import numpy as np
import pytest

from mehlerlab.functions import (
    SCALAR_MAPS,
    LipschitzFunction,
    compose_scalar,
    constant_function,
    coordinate_function,
    gaussian_bump,
    mollify_lipschitz,
    smoothed_abs,
    standard_suites,
)

RNG = np.random.default_rng(2024)


def finite_diff_grad(f, x, h=1e-5):
    d = x.size
    out = np.empty(d)
    for i in range(d):
        dx = np.zeros(d)
        dx[i] = h
        out[i] = (f((x + dx)[None, :])[0] - f((x - dx)[None, :])[0]) / (2 * h)
    return out


def finite_diff_hess(f, x, h=1e-4):
    d = x.size
    out = np.empty((d, d))
    for i in range(d):
        dx = np.zeros(d)
        dx[i] = h
        out[i] = (f.gradient(x + dx) - f.gradient(x - dx)) / (2 * h)
    return 0.5 * (out + out.T)


def all_suite_members(d=1):
    suites = standard_suites(d)
    for members in suites.values():
        yield from members


class TestEvaluation:
    def test_square_projection(self):
        f = compose_scalar(
            # <x, e1>^2 via the square map on the coordinate... use core
            gaussian_bump(3), SCALAR_MAPS["identity"])
        x = np.array([3.0, 1.0, -2.0])
        assert f(x[None, :])[0] == pytest.approx(math.exp(-9.0))

    def test_quadratic_coordinate(self):
        # f(x) = <x,h1>^2: value 9 and gradient (6, 0, ...) at x1 = 3
        d = 4
        e = np.eye(1, d)
        from mehlerlab.functions import CylindricalFunction
        f = CylindricalFunction(
            name="z^2", dimension=d, directions=e,
            core=lambda z: z[..., 0] ** 2,
            core_grad=lambda z: 2.0 * z,
            core_hess=lambda z: np.broadcast_to(
                2.0, z.shape[:-1] + (1, 1)).copy(),
            sup_norm=math.inf, grad_sup_norm=math.inf,
            infimum=0.0, lipschitz=math.inf)
        x = np.array([3.0, 0.5, -1.0, 2.0])
        assert f(x[None, :])[0] == 9.0
        assert np.allclose(f.gradient(x), [6.0, 0, 0, 0])

    def test_constant_gradient_zero(self):
        f = constant_function(2, 7.0)
        x = RNG.normal(size=2)
        assert not np.any(f.gradient(x))
        assert not np.any(f.hessian(x))

    def test_shifted_tanh_metadata(self):
        suites = standard_suites(1)
        two_tanh = next(f for f in suites["positive_infimum"]
                        if f.name == "2+tanh")
        assert two_tanh.infimum == 1.0
        assert two_tanh.sup_norm == 3.0
        assert two_tanh.lipschitz == 1.0


class TestCertifiedBounds:
    @pytest.mark.parametrize("d", [1, 2])
    def test_bounds_never_violated(self, d):
        xs = RNG.normal(scale=4.0, size=(4000, d))
        for f in all_suite_members(d):
            vals = f(xs)
            if math.isfinite(f.sup_norm):
                assert np.max(np.abs(vals)) <= f.sup_norm * (1 + 1e-9), f.name
            if math.isfinite(f.infimum):
                assert np.min(vals) >= f.infimum - 1e-9, f.name
            grads = f.core_grad(f.project(xs))
            gnorm = np.linalg.norm(grads, axis=-1)
            assert np.max(gnorm) <= f.grad_sup_norm * (1 + 1e-9), f.name
            assert np.max(gnorm) <= f.lipschitz * (1 + 1e-9), f.name

    def test_gradient_fd_consistency(self):
        xs = RNG.normal(scale=2.0, size=(100, 1))
        for f in all_suite_members(1):
            for x in xs:
                g = f.gradient(x)
                fd = finite_diff_grad(f, x)
                assert np.allclose(g, fd, rtol=1e-5, atol=1e-7), f.name

    def test_hessian_fd_consistency(self):
        xs = RNG.normal(scale=2.0, size=(100, 1))
        for f in all_suite_members(1):
            for x in xs:
                h = f.hessian(x)
                fd = finite_diff_hess(f, x)
                assert np.allclose(h, fd, rtol=1e-4, atol=1e-6), f.name


class TestSuites:
    def test_positive_infimum_suite(self):
        suite = standard_suites(1)["positive_infimum"]
        assert len(suite) >= 10
        for f in suite:
            assert 0.2 <= f.infimum <= 1.0, f.name

    def test_lipschitz_one_suite(self):
        suite = standard_suites(1)["lipschitz_one"]
        assert len(suite) >= 9
        for f in suite:
            assert f.lipschitz <= 1.0, f.name

    def test_mean_zero_ready_suite(self):
        suite = standard_suites(1)["mean_zero_ready"]
        assert len(suite) >= 10
        for f in suite:
            assert f.bounded, f.name

    def test_dimension_embedding(self):
        for f in all_suite_members(3):
            x = RNG.normal(size=(5, 3))
            assert f(x).shape == (5,)
            assert f.gradient(x).shape == (5, 3)


class TestComposeScalar:
    def test_identity_returns_same(self):
        f = gaussian_bump(1).shifted(0.5)
        assert compose_scalar(f, SCALAR_MAPS["identity"]) is f

    def test_entropy_potential_on_positive(self):
        f = gaussian_bump(1).shifted(0.5)  # range [0.5, 1.5]
        phi = SCALAR_MAPS["xlogx_minus_x"]
        g = compose_scalar(f, phi)
        xs = RNG.normal(scale=3.0, size=(500, 1))
        vals = g(xs)
        assert np.max(np.abs(vals)) <= g.sup_norm * (1 + 1e-9)
        assert np.min(vals) >= g.infimum - 1e-9

    def test_log_rejected_on_nonpositive_range(self):
        f = gaussian_bump(1)  # infimum 0
        with pytest.raises(ValueError, match="undefined"):
            compose_scalar(f, SCALAR_MAPS["log"])

    def test_exp_bound_oracle_dense_sampling(self):
        f = gaussian_bump(1)  # range [0, 1], sup 1
        g = compose_scalar(f, SCALAR_MAPS["exp"])
        assert g.sup_norm == pytest.approx(math.e, rel=1e-8)
        assert g.lipschitz == pytest.approx(math.e * f.lipschitz, rel=1e-8)
        xs = np.linspace(-6, 6, 2001)[:, None]
        assert np.max(g(xs)) <= g.sup_norm * (1 + 1e-12)

    def test_compose_derivatives(self):
        f = gaussian_bump(1).shifted(0.5)
        g = compose_scalar(f, SCALAR_MAPS["square"])
        for x in RNG.normal(size=(20, 1)):
            assert np.allclose(g.gradient(x), finite_diff_grad(g, x),
                               rtol=1e-5, atol=1e-8)
            assert np.allclose(g.hessian(x), finite_diff_hess(g, x),
                               rtol=1e-4, atol=1e-6)

    def test_unbounded_range_rejected(self):
        f = coordinate_function(1)
        with pytest.raises(ValueError, match="finite range"):
            compose_scalar(f, SCALAR_MAPS["exp"])


class TestMollify:
    def test_constant_preserved(self):
        g = LipschitzFunction("const", 2, lambda x: np.full(x.shape[:-1],
                                                            3.25), 0.0, 3.25)
        for n, m in [(1, 1), (2, 5), (1, 50)]:
            gm = mollify_lipschitz(g, n, m)
            xs = RNG.normal(size=(50, 2))
            assert np.allclose(gm(xs), 3.25, atol=1e-12)

    def test_abs_transport_bound(self):
        g = LipschitzFunction("abs", 1,
                              lambda x: np.abs(x[..., 0]), 1.0)
        m = 100
        gm = mollify_lipschitz(g, 1, m)
        xs = np.linspace(-3, 3, 801)[:, None]
        assert np.max(np.abs(gm(xs) - np.abs(xs[:, 0]))) <= 1.0 / m + 1e-12

    def test_sup_bounds_dense_sampling(self):
        g = LipschitzFunction("tanh", 2,
                              lambda x: np.tanh(x[..., 0]), 1.0, 1.0)
        gm = mollify_lipschitz(g, 2, 3)
        xs = RNG.normal(scale=3.0, size=(2000, 2))
        assert np.max(np.abs(gm(xs))) <= 1.0 + 1e-12
        grads = gm.gradient(xs)
        assert np.max(np.linalg.norm(grads, axis=-1)) <= 1.0 + 1e-6

    def test_pointwise_convergence(self):
        d = 3
        g = LipschitzFunction(
            "dist", d, lambda x: np.sqrt(np.sum(x * x, axis=-1) + 1.0) - 1.0,
            1.0)
        xs = RNG.normal(size=(20, d))
        # m -> inf at n = d recovers g pointwise
        errs = []
        for m in (10, 100, 1000):
            gm = mollify_lipschitz(g, d, m, nodes=80)
            errs.append(np.max(np.abs(gm(xs) - g.fn(xs))))
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] <= 1.0 / 1000 + 1e-9

    def test_truncation_dimension_checked(self):
        g = LipschitzFunction("abs", 2, lambda x: np.abs(x[..., 0]), 1.0)
        with pytest.raises(ValueError):
            mollify_lipschitz(g, 3, 10)

    def test_gradient_fd_consistency_mollified(self):
        # away from the O(1/m) smoothing window both quadratures are
        # machine-exact; inside it they are quadrature-limited
        g = LipschitzFunction("abs", 1, lambda x: np.abs(x[..., 0]), 1.0)
        m = 5
        gm = mollify_lipschitz(g, 1, m)
        xs = RNG.normal(scale=2.0, size=(40, 1))
        xs = xs[np.abs(xs[:, 0]) > 1.5 / m][:20]
        for x in xs:
            fd = finite_diff_grad(gm, x)
            assert np.allclose(gm.gradient(x), fd, rtol=1e-6, atol=1e-9)
        for x in np.linspace(-1.2 / m, 1.2 / m, 9)[:, None]:
            fd = finite_diff_grad(gm, x)
            assert np.allclose(gm.gradient(x), fd, atol=2e-2)

    def test_smoothed_abs_is_one_lipschitz(self):
        f = smoothed_abs(2)
        xs = RNG.normal(scale=5.0, size=(500, 2))
        g = np.linalg.norm(f.gradient(xs), axis=-1)
        assert np.max(g) <= 1.0
