import math

import numpy as np
import pytest

from mehlerlab.estimators import (
    dirichlet_form,
    empirical_char,
    estimate_entropy,
    estimate_mean,
    moment,
    nonlocal_entropy_form,
    semigroup_apply,
    tail_probability,
    weighted_increment_form,
)
from mehlerlab.functions import (
    constant_function,
    coordinate_function,
    gaussian_bump,
    standard_suites,
)
from mehlerlab.levy import (
    DivergenceError,
    EvolvedTriple,
    LevyTriple,
    SemigroupFamily,
    TailClass,
    line_measure,
)
from mehlerlab.sampling import JumpScheme, RandomStream, sample_invariant

from oracles import invariant_variance_from_char, trapezoid_form


def koponen_measure(c=1.0, s=0.75):
    dens = lambda y: c * np.exp(-y * y) * np.abs(y) ** (-1.0 - 2.0 * s)
    return line_measure(dens, 2.0 * s, TailClass.gaussian(), name="koponen")


def koponen_evolved(c=1.0, s=0.75, beta=1.0, b=0.0):
    return EvolvedTriple(LevyTriple([b], [[0.0]], koponen_measure(c, s)),
                         SemigroupFamily([[-beta]]))


SCHEME = JumpScheme(small_jump_cutoff=0.02)


@pytest.fixture(scope="module")
def sigma_samples():
    return sample_invariant(koponen_evolved(), 60_000, SCHEME,
                            RandomStream(123))


class TestMean:
    def test_constant(self, sigma_samples):
        est = estimate_mean(constant_function(1, 4.5), sigma_samples)
        assert est.value == 4.5 and est.std_error == 0.0

    def test_odd_function_symmetric_law(self, sigma_samples):
        est = estimate_mean(coordinate_function(1), sigma_samples)
        assert abs(est.value) <= 3 * est.std_error

    def test_second_moment_vs_char_curvature(self, sigma_samples):
        var_mc = float(np.mean(sigma_samples[:, 0] ** 2))
        se = float(np.std(sigma_samples[:, 0] ** 2, ddof=1)) \
            / math.sqrt(len(sigma_samples))
        var_char = invariant_variance_from_char(koponen_evolved())
        assert abs(var_mc - var_char) <= 3 * se

    def test_se_scaling_with_n(self):
        # doubling N shrinks the standard error by about 1/sqrt(2)
        rng = np.random.default_rng(0)
        f = coordinate_function(1)
        ratios = []
        for _ in range(20):
            a = rng.normal(size=(4000, 1))
            e1 = estimate_mean(f, a[:2000])
            e2 = estimate_mean(f, a)
            ratios.append(e1.std_error / e2.std_error)
        mean_ratio = np.mean(ratios)
        assert math.sqrt(2) / 1.3 <= mean_ratio <= math.sqrt(2) * 1.3


class TestEntropy:
    def test_constant_zero(self, sigma_samples):
        est = estimate_entropy(constant_function(1, 2.0), 1, sigma_samples)
        assert est.value == pytest.approx(0.0, abs=1e-14)

    def test_two_point_hand_value(self):
        samples = np.array([[1.0], [1.0], [3.0], [3.0]])
        est = estimate_entropy(coordinate_function(1), 1, samples)
        # mean 2, entropy (3 log 3)/2 - 2 log 2
        assert est.value == pytest.approx(1.5 * math.log(3)
                                          - 2 * math.log(2), rel=1e-12)
        assert est.value == pytest.approx(0.261624, abs=5e-7)

    def test_nonnegative_on_suite(self, sigma_samples):
        for f in standard_suites(1)["positive_infimum"]:
            est = estimate_entropy(f, 2, sigma_samples[:20_000])
            assert est.value >= -1e-12, f.name

    def test_nonpositive_rejected(self, sigma_samples):
        with pytest.raises(ValueError):
            estimate_entropy(coordinate_function(1), 1, sigma_samples)


class TestFormsAgainstBruteForce:
    def test_entropy_form_sin(self, sigma_samples):
        f = next(f for f in standard_suites(1)["positive_infimum"]
                 if f.name == "1+sin/2")
        X = sigma_samples[:512]
        est = nonlocal_entropy_form(f, 1, X, koponen_measure())
        oracle = trapezoid_form(X, koponen_measure().density,
                                lambda z: 1.0 + 0.5 * np.sin(z[..., 0]),
                                "entropy", 1)
        assert est.value == pytest.approx(oracle, rel=1e-3)

    def test_entropy_form_bump_p2(self, sigma_samples):
        f = gaussian_bump(1).shifted(0.5)
        X = sigma_samples[:512]
        est = nonlocal_entropy_form(f, 2, X, koponen_measure())
        oracle = trapezoid_form(X, koponen_measure().density,
                                lambda z: 0.5 + np.exp(-z[..., 0] ** 2),
                                "entropy", 2)
        assert est.value == pytest.approx(oracle, rel=1e-3)

    def test_dirichlet_form_tanh(self, sigma_samples):
        f = next(f for f in standard_suites(1)["mean_zero_ready"]
                 if f.name == "tanh")
        X = sigma_samples[:512]
        est = dirichlet_form(f, X, koponen_measure())
        oracle = trapezoid_form(X, koponen_measure().density,
                                lambda z: np.tanh(z[..., 0]), "dirichlet")
        assert est.value == pytest.approx(oracle, rel=1e-3)

    def test_dirichlet_form_gauss(self, sigma_samples):
        f = gaussian_bump(1)
        X = sigma_samples[:512]
        est = dirichlet_form(f, X, koponen_measure())
        oracle = trapezoid_form(X, koponen_measure().density,
                                lambda z: np.exp(-z[..., 0] ** 2),
                                "dirichlet")
        assert est.value == pytest.approx(oracle, rel=1e-3)

    def test_weighted_form_low_singularity(self):
        # p = 2.5 converges for alpha = 0.4 (< 3 - p); Koponen s = 0.2
        m = koponen_measure(s=0.2)
        ev = EvolvedTriple(LevyTriple([0.0], [[0.0]], m),
                           SemigroupFamily([[-1.0]]))
        X = sample_invariant(ev, 512, SCHEME, RandomStream(7))
        f = gaussian_bump(1).shifted(1.0)
        est = weighted_increment_form(f, 2.5, X, m)
        oracle = trapezoid_form(X, m.density,
                                lambda z: 1.0 + np.exp(-z[..., 0] ** 2),
                                "weighted", 2.5)
        assert est.value == pytest.approx(oracle, rel=1e-3)


class TestFormProperties:
    def test_constant_forms_vanish(self, sigma_samples):
        c = constant_function(1, 3.0)
        X = sigma_samples[:1000]
        assert nonlocal_entropy_form(c, 1, X, koponen_measure()).value == 0
        assert dirichlet_form(c, X, koponen_measure()).value == 0

    def test_entropy_form_homogeneity(self, sigma_samples):
        # doubling f at p = 1 doubles the form exactly on fixed samples
        f = gaussian_bump(1).shifted(0.5)
        X = sigma_samples[:2000]
        a = nonlocal_entropy_form(f, 1, X, koponen_measure())
        b = nonlocal_entropy_form(f.scaled(2.0), 1, X, koponen_measure())
        assert b.value == pytest.approx(2.0 * a.value, rel=1e-12)

    def test_dirichlet_shift_invariance(self, sigma_samples):
        f = gaussian_bump(1)
        X = sigma_samples[:2000]
        a = dirichlet_form(f, X, koponen_measure())
        b = dirichlet_form(f.shifted(5.0), X, koponen_measure())
        assert b.value == pytest.approx(a.value, rel=1e-12)

    def test_dirichlet_nonnegative(self, sigma_samples):
        for f in standard_suites(1)["mean_zero_ready"][:5]:
            est = dirichlet_form(f, sigma_samples[:2000], koponen_measure())
            assert est.value >= 0

    def test_split_radius_insensitive(self, sigma_samples):
        f = gaussian_bump(1).shifted(0.5)
        X = sigma_samples[:2000]
        a = nonlocal_entropy_form(f, 2, X, koponen_measure(), delta=0.05)
        b = nonlocal_entropy_form(f, 2, X, koponen_measure(), delta=0.025)
        assert b.value == pytest.approx(a.value, rel=1e-4)

    def test_weighted_divergence_flagged(self, sigma_samples):
        f = gaussian_bump(1).shifted(1.0)
        est = weighted_increment_form(f, 3.0, sigma_samples[:100],
                                      koponen_measure())
        assert est.divergent
        assert "divergent" in est.note


class TestMoment:
    def test_koponen_tail_first_moment_bound(self):
        # closed-form bound 2c/((2s+1)e) for the tail first moment
        est = moment(koponen_measure(), 1.0, "complement")
        assert est.value <= 2.0 / (2.5 * math.e) + 1e-12
        assert est.method == "quadrature"

    def test_sample_zeroth_moment(self, sigma_samples):
        est = moment(sigma_samples, 0.0)
        assert est.value == 1.0

    def test_divergent_raises_without_flag(self):
        with pytest.raises(DivergenceError):
            moment(koponen_measure(), 1.0, "ball")
        est = moment(koponen_measure(), 1.0, "ball", allow_divergent=True)
        assert est.divergent


class TestTailProbability:
    def test_half_at_zero_for_symmetric(self, sigma_samples):
        g = coordinate_function(1)
        est = tail_probability(g, sigma_samples, 0.0)
        assert abs(est.value - 0.5) <= 3 * est.std_error

    def test_monotone_and_vanishing(self, sigma_samples):
        g = coordinate_function(1)
        vals = [tail_probability(g, sigma_samples, t).value
                for t in (0.0, 0.5, 1.0, 2.0, 8.0)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 0.01


class TestSemigroupApply:
    def test_time_zero_exact(self):
        f = gaussian_bump(1)
        est = semigroup_apply(f, 0.0, [0.7], 100, koponen_evolved(),
                              SCHEME, RandomStream(0))
        assert est.value == pytest.approx(math.exp(-0.49), rel=1e-12)
        assert est.std_error == 0.0

    def test_sup_contraction(self):
        f = gaussian_bump(1)
        est = semigroup_apply(f, 0.7, [0.3], 20_000, koponen_evolved(),
                              SCHEME, RandomStream(1))
        assert est.value <= f.sup_norm + 3 * est.std_error

    def test_ergodic_limit(self, sigma_samples):
        f = gaussian_bump(1)
        target = estimate_mean(f, sigma_samples)
        est = semigroup_apply(f, 14.0, [2.0], 20_000, koponen_evolved(),
                              SCHEME, RandomStream(2))
        tol = 3 * math.hypot(est.std_error, target.std_error)
        assert abs(est.value - target.value) <= tol + 1e-3


class TestEmpiricalChar:
    def test_at_zero(self, sigma_samples):
        est = empirical_char(sigma_samples, [0.0])
        assert est.value == 1.0 + 0.0j

    def test_conjugate_symmetry(self, sigma_samples):
        a = empirical_char(sigma_samples, [1.3])
        b = empirical_char(sigma_samples, [-1.3])
        assert a.value == pytest.approx(b.value.conjugate(), abs=1e-14)

    def test_matches_quadrature_char(self, sigma_samples):
        ev = koponen_evolved()
        inv, _ = ev.invariant()
        from mehlerlab.levy import characteristic_exponent

        for xi in (0.5, 1.0):
            target = np.exp(-characteristic_exponent(inv, [xi]))
            est = empirical_char(sigma_samples, [xi])
            assert abs(est.value - target) <= 3 * est.std_error + 1e-3
