import math

import numpy as np
import pytest

from mehlerlab.functions import constant_function, gaussian_bump, \
    standard_suites
from mehlerlab.inequalities import (
    elementary_lemma_suite,
    generator_values,
    psi_inverse_table,
    verify_exp_entropy,
    verify_exp_integrability,
    verify_gradient_surrogate,
    verify_invariance_and_generator,
    verify_log_sobolev,
    verify_log_sobolev_floor,
    verify_log_sobolev_gaussian,
    verify_lp_bootstrap,
    verify_moment_transfer,
    verify_poincare,
    verify_tail_bound,
)
from mehlerlab.levy import apply_generator, psi_inverse, psi_of
from mehlerlab.models import build_alpha_stable, build_koponen, \
    with_gaussian_part
from mehlerlab.sampling import JumpScheme, RandomStream, sample_gaussian, \
    sample_invariant

SCHEME = JumpScheme(small_jump_cutoff=0.02)
N = 30_000


@pytest.fixture(scope="module")
def koponen():
    return build_koponen()


@pytest.fixture(scope="module")
def koponen_samples(koponen):
    return sample_invariant(koponen.evolved, N, SCHEME, RandomStream(7))


@pytest.fixture(scope="module")
def stable():
    return build_alpha_stable(alpha=1.5, beta=1.0, dimension=2)


@pytest.fixture(scope="module")
def stable_samples(stable):
    return sample_invariant(stable.evolved, N, SCHEME, RandomStream(8))


class TestLogSobolev:
    def test_constant_function_passes(self, koponen, koponen_samples):
        res = verify_log_sobolev(koponen, constant_function(1, 2.0), 1,
                                 koponen_samples)
        assert res.verdict == "pass"
        assert res.lhs.value == pytest.approx(0.0, abs=1e-13)

    def test_koponen_constant_value(self, koponen):
        assert koponen.h_l1 == pytest.approx(2.0 / 3.0)

    @pytest.mark.parametrize("p", [1, 2])
    def test_suite_never_fails(self, koponen, koponen_samples, p):
        for f in standard_suites(1)["positive_infimum"][:4]:
            res = verify_log_sobolev(koponen, f, p, koponen_samples)
            assert res.verdict in ("pass", "indeterminate"), \
                (f.name, res.margin)

    def test_stable_model(self, stable, stable_samples):
        for f in standard_suites(2)["positive_infimum"][:3]:
            res = verify_log_sobolev(stable, f, 2, stable_samples)
            assert res.verdict in ("pass", "indeterminate"), f.name

    def test_floor_variant(self, koponen, koponen_samples):
        f = gaussian_bump(1).shifted(0.5)
        res = verify_log_sobolev_floor(koponen, f, koponen_samples)
        assert res.verdict in ("pass", "indeterminate")
        assert res.constant == pytest.approx(koponen.h_l1 / 0.5)

    def test_floor_constant_halves_when_infimum_doubles(self, koponen,
                                                        koponen_samples):
        f1 = gaussian_bump(1).shifted(0.5)
        f2 = f1.scaled(2.0)  # infimum 1.0
        r1 = verify_log_sobolev_floor(koponen, f1, koponen_samples)
        r2 = verify_log_sobolev_floor(koponen, f2, koponen_samples)
        assert r2.constant == pytest.approx(r1.constant / 2.0)


class TestPoincare:
    def test_constant_passes_trivially(self, koponen, koponen_samples):
        res = verify_poincare(koponen, constant_function(1, 1.0),
                              koponen_samples)
        assert res.verdict == "pass"

    def test_suite(self, koponen, koponen_samples):
        for f in standard_suites(1)["mean_zero_ready"][:5]:
            res = verify_poincare(koponen, f, koponen_samples)
            assert res.verdict in ("pass", "indeterminate"), f.name
            assert res.constant == pytest.approx(math.sqrt(2 * 2 / 3))

    def test_shift_leaves_both_sides(self, koponen, koponen_samples):
        f = gaussian_bump(1)
        r1 = verify_poincare(koponen, f, koponen_samples)
        r2 = verify_poincare(koponen, f.shifted(3.0), koponen_samples)
        assert r1.lhs.value == pytest.approx(r2.lhs.value, rel=1e-12)
        assert r1.rhs.value == pytest.approx(r2.rhs.value, rel=1e-12)


class TestBootstrapAndMoments:
    def test_lp_bootstrap_vacuous_on_reference(self, koponen,
                                               koponen_samples):
        # alpha = 1.5 makes the p = 3 kernel integral infinite: vacuous pass
        f = standard_suites(1)["mean_zero_ready"][0]
        res = verify_lp_bootstrap(koponen, f, 3, koponen_samples)
        assert res.verdict == "pass"
        assert math.isinf(res.rhs.value)
        assert "vacuous" in res.constant_note

    def test_lp_bootstrap_quantitative_low_singularity(self):
        model = build_koponen(s=0.2)
        samples = sample_invariant(model.evolved, N, SCHEME,
                                   RandomStream(9))
        for f in standard_suites(1)["mean_zero_ready"][:3]:
            res = verify_lp_bootstrap(model, f, 2.5, samples)
            assert res.verdict in ("pass", "indeterminate"), f.name
            assert math.isfinite(res.rhs.value)
            assert res.constant > 0

    def test_moment_transfer_vacuous_on_reference(self, koponen,
                                                  koponen_samples):
        res = verify_moment_transfer(koponen, 3, koponen_samples)
        assert res.verdict == "pass"
        assert math.isinf(res.rhs.value)

    def test_moment_transfer_quantitative(self):
        model = build_koponen(s=0.2)
        samples = sample_invariant(model.evolved, N, SCHEME,
                                   RandomStream(10))
        res = verify_moment_transfer(model, 3, samples)
        assert res.verdict in ("pass", "indeterminate")
        assert math.isfinite(res.rhs.value)
        assert "Young epsilon" in res.constant_note

    def test_degenerate_model_all_zero(self):
        model = build_koponen()
        import dataclasses
        from mehlerlab.levy import EvolvedTriple, LevyTriple, \
            SemigroupFamily
        zero = model.measure.scaled(0.0)
        ev = EvolvedTriple(LevyTriple([0.0], [[0.0]], zero),
                           SemigroupFamily([[-1.0]]))
        degenerate = dataclasses.replace(model, evolved=ev)
        samples = np.zeros((1000, 1))
        res = verify_moment_transfer(degenerate, 3, samples)
        assert res.verdict == "pass"
        assert res.lhs.value == 0.0


class TestExpEntropy:
    def test_constant_passes(self, koponen, koponen_samples):
        res = verify_exp_entropy(koponen, constant_function(1, 0.3), 1.0,
                                 koponen_samples)
        assert res.verdict == "pass"

    def test_bounded_lipschitz_suite(self, koponen, koponen_samples):
        suite = [f for f in standard_suites(1)["lipschitz_one"]
                 if f.bounded][:4]
        for f in suite:
            res = verify_exp_entropy(koponen, f, 1.0, koponen_samples)
            assert res.verdict in ("pass", "indeterminate"), f.name

    def test_constant_scales_as_tau_squared_modulo_moment(self, koponen,
                                                          koponen_samples):
        from mehlerlab.levy import psi_second_moment
        f = next(f for f in standard_suites(1)["lipschitz_one"]
                 if f.name == "tanh")
        r1 = verify_exp_entropy(koponen, f, 1.0, koponen_samples)
        r2 = verify_exp_entropy(koponen, f, 2.0, koponen_samples)
        ratio = r2.constant / r1.constant
        m1 = psi_second_moment(koponen.measure, 2.0)
        m2 = psi_second_moment(koponen.measure, 4.0)
        assert ratio == pytest.approx(4.0 * m2 / m1, rel=1e-9)

    def test_lipschitz_precondition(self, koponen, koponen_samples):
        f = gaussian_bump(1)  # Lipschitz ~0.858
        with pytest.raises(ValueError):
            verify_exp_entropy(koponen, f, 0.5, koponen_samples)

    def test_heavy_tail_rejected(self, stable, stable_samples):
        from mehlerlab.levy import DivergenceError
        f = next(f for f in standard_suites(2)["lipschitz_one"]
                 if f.bounded)
        with pytest.raises(DivergenceError):
            verify_exp_entropy(stable, f, 1.0, stable_samples)


@pytest.fixture(scope="module")
def big_samples(koponen):
    return sample_invariant(koponen.evolved, 200_000,
                            JumpScheme(small_jump_cutoff=0.05),
                            RandomStream(77))


class TestTailMachinery:
    def test_tail_bound_fits_positive(self, koponen, big_samples):
        from mehlerlab.functions import smoothed_abs
        res = verify_tail_bound(koponen, smoothed_abs(1), big_samples)
        assert res.verdict in ("pass", "indeterminate")
        assert res.details.get("c0", 0) > 0
        assert res.details.get("c1", 0) > 0

    def test_tails_monotone(self, koponen, big_samples):
        from mehlerlab.estimators import tail_probability
        from mehlerlab.functions import smoothed_abs
        g = smoothed_abs(1)
        probs = [tail_probability(g, big_samples, t).value
                 for t in (0.5, 1.0, 2.0, 4.0)]
        assert all(a >= b for a, b in zip(probs, probs[1:]))

    def test_exp_integrability_stable_estimates(self, koponen, big_samples):
        from mehlerlab.functions import smoothed_abs
        g = smoothed_abs(1)
        for c in (0.05, 0.025):
            res = verify_exp_integrability(koponen, g, c, big_samples)
            assert res.verdict in ("pass", "indeterminate")
            assert math.isfinite(res.details["estimate"])

    def test_zero_function_integral_one(self, koponen, koponen_samples):
        res = verify_exp_integrability(koponen, constant_function(1, 0.0),
                                       0.05, koponen_samples)
        assert res.details["estimate"] == pytest.approx(1.0)

    def test_psi_inverse_table_round_trip(self, koponen):
        inv = psi_inverse_table(koponen.measure, 60.0)
        for s in (0.5, 1.5, 2.5):
            v = psi_of(koponen.measure, s)
            if v <= 60.0:
                assert inv(v) == pytest.approx(s, abs=2e-2)
        assert inv(0.0) == 0.0

    def test_moments_finite_ladder(self, koponen, big_samples):
        # stable MC estimates for p = 1..8 (independent-halves protocol)
        norms = np.abs(big_samples[:, 0])
        for p in range(1, 9):
            w = norms ** p
            a, b = w[: len(w) // 2], w[len(w) // 2:]
            sa = a.std(ddof=1) / math.sqrt(a.size)
            sb = b.std(ddof=1) / math.sqrt(b.size)
            assert abs(a.mean() - b.mean()) <= 6 * math.hypot(sa, sb), p


class TestSemigroupChecks:
    def test_generator_values_match_pointwise(self, koponen):
        f = gaussian_bump(1)
        X = np.array([[0.5], [-1.2], [2.0]])
        fast = generator_values(koponen.evolved, f, X)
        for i, x in enumerate(X):
            slow = apply_generator(koponen.evolved.triple,
                                   koponen.evolved.semigroup, f, x)
            assert fast[i] == pytest.approx(slow, rel=2e-4, abs=1e-6)

    def test_invariance_and_generator_koponen(self, koponen,
                                              koponen_samples):
        f = gaussian_bump(1)
        results = verify_invariance_and_generator(
            koponen, f, 1.0, koponen_samples, SCHEME, RandomStream(55))
        assert len(results) == 3
        for res in results:
            assert res.verdict in ("pass", "indeterminate"), res.name

    def test_constant_function_all_zero(self, koponen, koponen_samples):
        results = verify_invariance_and_generator(
            koponen, constant_function(1, 1.5), 0.5,
            koponen_samples[:2000], SCHEME, RandomStream(56))
        for res in results:
            assert res.verdict == "pass"

    def test_gradient_surrogate_koponen(self, koponen, koponen_samples):
        f = gaussian_bump(1)
        res = verify_gradient_surrogate(koponen, f, 1.0, 2,
                                        koponen_samples, SCHEME,
                                        RandomStream(57))
        assert res.verdict in ("pass", "indeterminate")

    def test_gradient_surrogate_stable_near_equality(self, stable,
                                                     stable_samples):
        # the pushforward is exactly h(t) M here, so the two sides agree in
        # distribution; margins hover at zero
        f = standard_suites(2)["positive_infimum"][0]
        res = verify_gradient_surrogate(stable, f, 0.5, 2, stable_samples,
                                        SCHEME, RandomStream(58))
        assert res.verdict in ("pass", "indeterminate")
        assert abs(res.margin) < 0.2

    def test_gradient_surrogate_constant(self, koponen, koponen_samples):
        res = verify_gradient_surrogate(koponen, constant_function(1, 1.0),
                                        1.0, 2, koponen_samples, SCHEME,
                                        RandomStream(59))
        assert res.verdict == "pass"


class TestGaussianExtension:
    def test_reduces_to_plain_without_q(self, koponen, koponen_samples):
        f = gaussian_bump(1).shifted(0.5)
        a = verify_log_sobolev_gaussian(koponen, f, 2, koponen_samples,
                                        np.zeros_like(koponen_samples))
        b = verify_log_sobolev(koponen, f, 2, koponen_samples)
        assert a.name == b.name
        assert a.lhs.value == pytest.approx(b.lhs.value)

    def test_with_gaussian_part(self, koponen, koponen_samples):
        model = with_gaussian_part(koponen, [[1.0]])
        gam = sample_gaussian(model.known_constants["gaussian_cov_limit"],
                              len(koponen_samples), RandomStream(60))
        f = gaussian_bump(1).shifted(0.5)
        for p in (1, 2):
            res = verify_log_sobolev_gaussian(model, f, p, koponen_samples,
                                              gam)
            assert res.verdict in ("pass", "indeterminate"), p

    def test_entropy_of_constant_still_zero(self, koponen, koponen_samples):
        model = with_gaussian_part(koponen, [[1.0]])
        gam = sample_gaussian(model.known_constants["gaussian_cov_limit"],
                              len(koponen_samples), RandomStream(61))
        res = verify_log_sobolev_gaussian(model, constant_function(1, 2.0),
                                          2, koponen_samples, gam)
        assert res.lhs.value == pytest.approx(0.0, abs=1e-13)
        assert res.verdict == "pass"


class TestElementaryLemmas:
    def test_all_pass_at_scale(self):
        report = elementary_lemma_suite(100_000, seed=3)
        assert report.all_pass
        assert all(c.trials == 100_000 for c in report.checks)
        assert len(report.checks) == 3

    def test_equality_edges(self):
        # r = s, a = b, x -> 1 are equality cases of the three lemmas
        r = s = 2.0
        assert r * math.log(r) - r - s * math.log(s) + s \
            - (r - s) * math.log(r) <= (r - s) ** 2 / s + 1e-12
        a = b = 1.7
        p = 2.5
        assert abs(abs(a) - abs(b)) ** p <= \
            abs(abs(a) ** p - abs(b) ** p) + 1e-12
        alpha, x = 1.3, 1.0 - 1e-12
        assert math.expm1(alpha * x) <= math.expm1(alpha) * x + 1e-10

    def test_seeded_reproducibility(self):
        a = elementary_lemma_suite(10_000, seed=5)
        b = elementary_lemma_suite(10_000, seed=5)
        assert [c.max_violation for c in a.checks] == \
            [c.max_violation for c in b.checks]
