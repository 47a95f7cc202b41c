"""Suite orchestration: run the named checker families over a model and
collect VerificationResult rows in a deterministic order."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import inequalities as ineq
from .functions import smoothed_abs, standard_suites
from .models import ModelSpec
from .sampling import JumpScheme, RandomStream, sample_gaussian, \
    sample_invariant

__all__ = ["SuiteContext", "run_suites", "SUITE_NAMES", "applicable_suites"]

SUITE_NAMES = (
    "log_sobolev", "log_sobolev_floor", "poincare", "lp_bootstrap",
    "moment_transfer", "exp_entropy", "invariance", "gradient_surrogate",
    "tail", "gaussian_extension",
)

# suites that need exponential moments of the jump measure
_EXP_MOMENT_SUITES = {"exp_entropy", "tail"}


@dataclass
class SuiteContext:
    model: ModelSpec
    seed: int
    n_samples: int = 100_000
    tail_samples: int | None = None
    chains: int = 1
    scheme: JumpScheme = field(
        default_factory=lambda: JumpScheme(small_jump_cutoff=1e-2))
    tail_scheme: JumpScheme = field(
        default_factory=lambda: JumpScheme(small_jump_cutoff=0.1))
    _cache: dict = field(default_factory=dict)

    def stream(self, k):
        return RandomStream(self.seed, stream_id=k)

    @property
    def samples(self):
        if "samples" not in self._cache:
            self._cache["samples"] = sample_invariant(
                self.model.evolved, self.n_samples, self.scheme,
                self.stream(1), chains=self.chains)
        return self._cache["samples"]

    @property
    def big_samples(self):
        n = self.tail_samples or self.n_samples
        if n == self.n_samples:
            return self.samples
        if "big" not in self._cache:
            self._cache["big"] = sample_invariant(
                self.model.evolved, n, self.tail_scheme, self.stream(2),
                chains=self.chains)
        return self._cache["big"]

    @property
    def gauss_samples(self):
        if "gauss" not in self._cache:
            Q = self.model.known_constants["gaussian_cov_limit"]
            self._cache["gauss"] = sample_gaussian(
                Q, self.n_samples, self.stream(3), chains=self.chains)
        return self._cache["gauss"]


def applicable_suites(model: ModelSpec):
    names = []
    for name in SUITE_NAMES:
        if name in _EXP_MOMENT_SUITES and \
                not model.measure.tail_class.allows(2.0, 1e-6):
            continue  # heavy tails: no exponential moments to test
        if name == "gaussian_extension" and not model.has_gaussian_part:
            continue
        names.append(name)
    return names


def _suite_log_sobolev(ctx):
    out = []
    for p in (1, 2):
        for f in standard_suites(ctx.model.dimension)["positive_infimum"]:
            out.append(ineq.verify_log_sobolev(ctx.model, f, p,
                                               ctx.samples))
    return out


def _suite_log_sobolev_floor(ctx):
    return [ineq.verify_log_sobolev_floor(ctx.model, f, ctx.samples)
            for f in standard_suites(ctx.model.dimension)
            ["positive_infimum"]]


def _suite_poincare(ctx):
    return [ineq.verify_poincare(ctx.model, f, ctx.samples)
            for f in standard_suites(ctx.model.dimension)
            ["mean_zero_ready"]]


def _suite_lp_bootstrap(ctx):
    return [ineq.verify_lp_bootstrap(ctx.model, f, 3.0, ctx.samples)
            for f in standard_suites(ctx.model.dimension)
            ["mean_zero_ready"]]


def _suite_moment_transfer(ctx):
    return [ineq.verify_moment_transfer(ctx.model, 3.0, ctx.samples)]


def _suite_exp_entropy(ctx):
    suite = [f for f in standard_suites(ctx.model.dimension)
             ["lipschitz_one"] if f.bounded]
    return [ineq.verify_exp_entropy(ctx.model, f, 1.0, ctx.samples)
            for f in suite]


def _suite_invariance(ctx):
    out = []
    suites = standard_suites(ctx.model.dimension)
    functions = suites["mean_zero_ready"][:6] \
        + suites["positive_infimum"][:4]
    key = "step_draws"
    if key not in ctx._cache:
        from .sampling import sample_mu_t
        ctx._cache[key] = sample_mu_t(ctx.model.evolved, 1.0,
                                      len(ctx.samples), ctx.scheme,
                                      ctx.stream(20), chains=ctx.chains)
    for k, f in enumerate(functions):
        out.extend(ineq.verify_invariance_and_generator(
            ctx.model, f, 1.0, ctx.samples, ctx.scheme,
            ctx.stream(21 + k), step_draws=ctx._cache[key]))
    return out


def _suite_gradient_surrogate(ctx):
    out = []
    suites = standard_suites(ctx.model.dimension)
    functions = suites["positive_infimum"][:3] \
        + suites["mean_zero_ready"][:2]
    for k, f in enumerate(functions):
        out.append(ineq.verify_gradient_surrogate(
            ctx.model, f, 1.0, 2.0, ctx.samples, ctx.scheme,
            ctx.stream(40 + k), n_inner=5000, blocks=5))
    return out


def _suite_tail(ctx):
    g = smoothed_abs(ctx.model.dimension)
    out = [ineq.verify_tail_bound(ctx.model, g, ctx.big_samples)]
    for c in (0.05, 0.025):
        out.append(ineq.verify_exp_integrability(ctx.model, g, c,
                                                 ctx.big_samples))
    return out


def _suite_gaussian_extension(ctx):
    out = []
    suite = standard_suites(ctx.model.dimension)["positive_infimum"][:5]
    for p in (1, 2):
        for f in suite:
            out.append(ineq.verify_log_sobolev_gaussian(
                ctx.model, f, p, ctx.samples, ctx.gauss_samples))
    return out


_RUNNERS = {
    "log_sobolev": _suite_log_sobolev,
    "log_sobolev_floor": _suite_log_sobolev_floor,
    "poincare": _suite_poincare,
    "lp_bootstrap": _suite_lp_bootstrap,
    "moment_transfer": _suite_moment_transfer,
    "exp_entropy": _suite_exp_entropy,
    "invariance": _suite_invariance,
    "gradient_surrogate": _suite_gradient_surrogate,
    "tail": _suite_tail,
    "gaussian_extension": _suite_gaussian_extension,
}


def run_suites(ctx: SuiteContext, suites=None):
    """Run the requested suites in registry order; returns the result rows.

    Unknown suite names raise; suites that do not apply to the model (heavy
    tails, missing Gaussian part) are skipped silently when auto-selected
    but raise when requested explicitly.
    """
    if suites is None:
        chosen = applicable_suites(ctx.model)
    else:
        chosen = list(suites)
        for name in chosen:
            if name not in _RUNNERS:
                raise KeyError(f"unknown suite {name!r}; choose from "
                               f"{SUITE_NAMES}")
    results = []
    for name in SUITE_NAMES:
        if name in chosen:
            results.extend(_RUNNERS[name](ctx))
    return results
