"""Levy characteristics, linear semigroups, and the evolved/invariant triples.

A Levy measure is represented either by a one-dimensional signed density or
by a finite spherical decomposition (unit directions with weights sharing a
radial kernel).  Both are reduced internally to *radial parts*, so every
integral against the measure becomes a sum of one-dimensional radial
integrals with a declared power singularity at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

from .quadrature import (
    QuadratureError,
    cos_minus_one,
    gauss_legendre_rule,
    integrate,
    integrate_algebraic_tail,
    integrate_oscillatory_tail,
    integrate_singular_zero,
    panel_rule,
    sin_minus_x,
)

__all__ = [
    "TailClass", "LevyMeasure", "LevyTriple", "SemigroupFamily",
    "EvolvedTriple", "HypothesisReport", "ClauseVerdict", "DominationResult",
    "DivergenceError", "characteristic_exponent", "apply_generator",
    "psi_of", "psi_second_moment", "psi_inverse", "line_measure",
    "spherical_measure",
]


class DivergenceError(ArithmeticError):
    """An integral against the Levy measure does not converge."""


@dataclass(frozen=True)
class TailClass:
    """Decay class of the measure far from the origin.

    ``rate`` means: decay exponent for ``exponential`` (density ~ e^{-rate r}),
    the supremum of finite absolute moments for ``power``, and the support
    radius for ``compact``.
    """

    kind: str
    rate: float | None = None

    @staticmethod
    def gaussian():
        return TailClass("gaussian")

    @staticmethod
    def exponential(rate):
        return TailClass("exponential", float(rate))

    @staticmethod
    def power(moment_sup):
        return TailClass("power", float(moment_sup))

    @staticmethod
    def compact(radius=1.0):
        return TailClass("compact", float(radius))

    def allows(self, poly_power=0.0, exp_rate=0.0):
        """Is ``|y|^p e^{s|y|}`` integrable against this tail?"""
        if self.kind in ("gaussian", "compact"):
            return True
        if self.kind == "exponential":
            return exp_rate < self.rate
        if self.kind == "power":
            return exp_rate <= 0.0 and poly_power < self.rate
        raise ValueError(f"unknown tail class {self.kind!r}")


@dataclass(frozen=True)
class RadialPart:
    direction: np.ndarray  # unit vector, shape (d,)
    weight: float
    radial: Callable       # q(r) for r > 0, vectorised


def _geometric_breaks(lo, hi, ratio=8.0):
    """Panel seeds spanning wide ranges (always includes 1 when interior)."""
    pts = set()
    if lo < 1.0 < hi:
        pts.add(1.0)
    p = max(lo, 1e-300) * ratio
    while p < hi:
        pts.add(p)
        p *= ratio
    return sorted(pts)


@dataclass(eq=False)
class LevyMeasure:
    """Levy measure with a declared origin singularity and tail class.

    Exactly one representation must be supplied: a 1-d ``density`` (signed
    argument) or ``spherical_atoms`` as (unit direction, weight) pairs with a
    shared ``radial_density``.  ``singularity_order`` is the alpha with
    density(y) ~ c |y|^{-d-alpha} near 0; alpha < 2 keeps y^2 integrable.
    """

    dimension: int
    singularity_order: float
    tail_class: TailClass
    density: Callable | None = None
    spherical_atoms: tuple[tuple[np.ndarray, float], ...] | None = None
    radial_density: Callable | None = None
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.singularity_order < 2.0:
            raise ValueError("singularity_order must lie in [0, 2)")
        if self.spherical_atoms is not None:
            if self.radial_density is None:
                raise ValueError("spherical atoms need a radial_density")
            atoms = []
            for u, w in self.spherical_atoms:
                u = np.asarray(u, dtype=float)
                if abs(np.linalg.norm(u) - 1.0) > 1e-9:
                    raise ValueError("atom directions must be unit vectors")
                if w < 0:
                    raise ValueError("atom weights must be nonnegative")
                atoms.append((u, float(w)))
            self.spherical_atoms = tuple(atoms)
        elif self.density is None:
            raise ValueError("supply a density or spherical atoms")
        elif self.dimension != 1:
            raise ValueError(
                "plain densities are integrable only in dimension 1; use a "
                "spherical decomposition for d >= 2")

    # -- radial decomposition -------------------------------------------------
    def radial_parts(self) -> list[RadialPart]:
        parts = self._cache.get("parts")
        if parts is None:
            if self.spherical_atoms is not None:
                parts = [RadialPart(u, w, self.radial_density)
                         for u, w in self.spherical_atoms]
            else:
                dens = self.density
                parts = [
                    RadialPart(np.array([1.0]), 1.0, lambda r: dens(r)),
                    RadialPart(np.array([-1.0]), 1.0, lambda r: dens(-r)),
                ]
            self._cache["parts"] = parts
        return parts

    def is_symmetric(self, probe=(0.3, 0.9, 2.2)):
        flag = self._cache.get("symmetric")
        if flag is None:
            parts = self.radial_parts()
            flag = True
            probe = np.asarray(probe)
            for part in parts:
                match = None
                for other in parts:
                    if np.allclose(other.direction, -part.direction):
                        match = other
                        break
                if match is None or abs(match.weight - part.weight) > 1e-12:
                    flag = False
                    break
                if not np.allclose(part.radial(probe), match.radial(probe),
                                   rtol=1e-10, atol=1e-300):
                    flag = False
                    break
            self._cache["symmetric"] = flag
        return flag

    # -- integration ----------------------------------------------------------
    def _tail_cut(self, exp_rate=0.0, poly_power=0.0, tol=1e-16):
        """Radius beyond which the integrand mass is numerically negligible."""
        key = ("cut", exp_rate, poly_power, tol)
        if key not in self._cache:
            tc = self.tail_class
            if tc.kind == "compact":
                cut = tc.rate
            else:
                q = self.radial_parts()[0].radial
                r = 4.0
                ref = None
                while r < 1e9:
                    mag = abs(float(np.max(q(np.array([r]))))) \
                        * r ** poly_power * math.exp(min(exp_rate * r, 700))
                    if ref is None:
                        ref = max(mag, 1e-300)
                    if mag < tol * ref and r > 8.0:
                        break
                    r *= 1.35
                cut = r
            self._cache[key] = cut
        return self._cache[key]

    def integral(self, f, lo=0.0, hi=math.inf, *, zero_order=2.0,
                 poly_power=0.0, exp_rate=0.0, allow_divergent=False,
                 rel_tol=1e-10, abs_tol=1e-13):
        """integral of f over {lo < |y| <= hi} against the measure.

        ``f`` maps points of shape (m, d) to (m,).  ``zero_order`` is the
        vanishing order of f at the origin (used to desingularise), while
        ``poly_power``/``exp_rate`` describe the growth of f for the tail
        convergence check.
        """
        alpha = self.singularity_order
        if lo == 0.0 and zero_order <= alpha:
            if allow_divergent:
                return math.inf
            raise DivergenceError(
                f"integrand vanishing order {zero_order:g} does not beat the "
                f"origin singularity alpha={alpha:g}")
        if hi == math.inf and not self.tail_class.allows(poly_power, exp_rate):
            if allow_divergent:
                return math.inf
            raise DivergenceError(
                f"tail class {self.tail_class.kind} cannot integrate growth "
                f"|y|^{poly_power:g} e^{{{exp_rate:g}|y|}}")
        total = 0.0
        for part in self.radial_parts():
            u = part.direction
            q = part.radial

            def g(r, u=u, q=q):
                pts = r[:, None] * u[None, :]
                return f(pts) * q(r)

            val = 0.0
            if lo == 0.0:
                split = min(hi, 0.5)
                val += integrate_singular_zero(
                    g, split, zero_order - 1.0 - alpha,
                    rel_tol=rel_tol, abs_tol=abs_tol).value
                lo_eff = split
            else:
                lo_eff = lo
            if hi == math.inf and self.tail_class.kind == "power":
                # slow algebraic decay: invert the tail, no cutoff
                decay = 1.0 + self.tail_class.rate - poly_power
                val += integrate_algebraic_tail(g, lo_eff, decay,
                                                rel_tol=rel_tol,
                                                abs_tol=abs_tol).value
            else:
                hi_eff = min(hi, self._tail_cut(exp_rate, poly_power))
                if hi_eff > lo_eff:
                    bps = _geometric_breaks(lo_eff, hi_eff)
                    val += integrate(g, lo_eff, hi_eff, break_points=bps,
                                     rel_tol=rel_tol, abs_tol=abs_tol).value
            total += part.weight * float(val)
        return total

    def radial_moment(self, p, lo=0.0, hi=math.inf, **kw):
        """sum over parts of w * integral r^p q(r) dr (scalar helper)."""
        if p == 0:
            f = lambda pts: np.ones(pts.shape[0])
        else:
            f = lambda pts: np.linalg.norm(pts, axis=-1) ** p
        return self.integral(f, lo, hi, zero_order=p, poly_power=p, **kw)

    def mass_above(self, eps):
        return self.radial_moment(0.0, lo=eps)

    def moment(self, p, region="all", *, allow_divergent=False):
        """absolute moment of order p on the unit ball, its complement, or all."""
        if region == "ball":
            return self.radial_moment(p, 0.0, 1.0,
                                      allow_divergent=allow_divergent)
        if region == "complement":
            return self.radial_moment(p, 1.0, math.inf,
                                      allow_divergent=allow_divergent)
        if region == "all":
            small = self.radial_moment(p, 0.0, 1.0,
                                       allow_divergent=allow_divergent)
            large = self.radial_moment(p, 1.0, math.inf,
                                       allow_divergent=allow_divergent)
            return small + large
        raise ValueError(f"unknown region {region!r}")

    def one_wedge_sq(self):
        """integral of (1 ^ |y|^2) against the measure."""
        key = "one_wedge_sq"
        if key not in self._cache:
            self._cache[key] = (self.radial_moment(2.0, 0.0, 1.0)
                                + self.mass_above(1.0))
        return self._cache[key]

    def second_moment_matrix(self, eps):
        """integral of y y^T over {|y| <= eps} (Gaussian-substitute variance)."""
        d = self.dimension
        out = np.zeros((d, d))
        alpha = self.singularity_order
        for part in self.radial_parts():
            def g(r, q=part.radial):
                return r * r * q(r)

            val = integrate_singular_zero(g, eps, 1.0 - alpha).value
            out += part.weight * float(val) * np.outer(part.direction,
                                                       part.direction)
        return out

    def compensator(self, eps):
        """integral of y over {eps < |y| <= 1} (drift removed by truncation)."""
        d = self.dimension
        out = np.zeros(d)
        if eps >= 1.0:
            return out
        for part in self.radial_parts():
            def g(r, q=part.radial):
                return r * q(r)

            val = integrate(g, eps, 1.0).value
            out += part.weight * float(val) * part.direction
        return out

    def quad_nodes(self, delta, *, exp_rate=0.0, poly_power=0.0,
                   nodes_per_decade=24, mass_tol=1e-9, hi=None):
        """Fixed composite rule for {delta < |y| < hi}: points (K, d) and
        weights (K,).

        Shared by the vectorised hybrid estimators (whose integrands are
        bounded); slow algebraic tails are cut where the remaining measure
        mass falls below ``mass_tol`` of the restricted mass.  Accuracy is
        validated against the adaptive driver in tests.
        """
        key = ("nodes", delta, exp_rate, poly_power, nodes_per_decade, hi)
        if key not in self._cache:
            if hi is None:
                if self.tail_class.kind == "power":
                    hi = delta * mass_tol ** (-1.0 / self.tail_class.rate)
                else:
                    hi = self._tail_cut(exp_rate, poly_power)
            n_panels = max(8, int(np.ceil(
                np.log10(hi / delta) * nodes_per_decade / 15)))
            pts, wts = [], []
            for part in self.radial_parts():
                r, w = panel_rule(delta, hi, n_panels)
                pts.append(r[:, None] * part.direction[None, :])
                wts.append(part.weight * w * part.radial(r))
            self._cache[key] = (np.concatenate(pts, axis=0),
                                np.concatenate(wts))
        return self._cache[key]

    def validate(self, *, probe_points=64, rng=None):
        """Check the declared invariants; raise with diagnostics on failure.

        Verifies nonnegativity on sampled points, finiteness of the small-ball
        quadratic moment and the tail mass, and that the declared singularity
        order matches the measured scaling of int_{|y|<delta} |y|^2 M(dy).
        """
        rng = rng or np.random.default_rng(0)
        for part in self.radial_parts():
            r = np.exp(rng.uniform(np.log(1e-6), np.log(3.0), probe_points))
            vals = part.radial(r)
            if np.any(vals < 0) or not np.all(np.isfinite(vals)):
                raise ValueError(f"radial density negative or non-finite "
                                 f"({self.name or 'measure'})")
        m2a = self.radial_moment(2.0, 0.0, 1e-2)
        m2b = self.radial_moment(2.0, 0.0, 1e-4)
        if m2b > 0:
            measured = 2.0 - (math.log(m2a) - math.log(m2b)) / math.log(1e2)
            if abs(measured - self.singularity_order) > 0.25:
                raise QuadratureError(
                    f"declared singularity order {self.singularity_order:g} "
                    f"inconsistent with measured {measured:.3f}")
        self.mass_above(1.0)
        self.radial_moment(2.0, 0.0, 1.0)
        return True

    def scaled(self, factor):
        """Same measure with all mass multiplied by ``factor >= 0``."""
        if self.spherical_atoms is not None:
            atoms = tuple((u, w * factor) for u, w in self.spherical_atoms)
            return LevyMeasure(self.dimension, self.singularity_order,
                               self.tail_class, spherical_atoms=atoms,
                               radial_density=self.radial_density,
                               name=self.name)
        dens = self.density
        return LevyMeasure(self.dimension, self.singularity_order,
                           self.tail_class,
                           density=lambda y: factor * dens(y),
                           name=self.name)


def line_measure(density, singularity_order, tail_class, name=""):
    return LevyMeasure(1, singularity_order, tail_class, density=density,
                       name=name)


def spherical_measure(directions, weights, radial_density, singularity_order,
                      tail_class, name=""):
    dirs = [np.asarray(u, dtype=float) for u in directions]
    d = dirs[0].size
    atoms = tuple((u, float(w)) for u, w in zip(dirs, weights))
    return LevyMeasure(d, singularity_order, tail_class,
                       spherical_atoms=atoms, radial_density=radial_density,
                       name=name)


@dataclass(eq=False)
class LevyTriple:
    """Characteristics [b, Q, M] of an infinitely divisible law."""

    drift: np.ndarray
    covariance: np.ndarray
    measure: LevyMeasure

    def __post_init__(self):
        self.drift = np.atleast_1d(np.asarray(self.drift, dtype=float))
        self.covariance = np.atleast_2d(np.asarray(self.covariance,
                                                   dtype=float))
        d = self.dimension
        if self.covariance.shape != (d, d):
            raise ValueError("covariance shape does not match dimension")
        if self.measure.dimension != d:
            raise ValueError("measure dimension does not match drift")
        if np.max(np.abs(self.covariance - self.covariance.T)) > 1e-12:
            raise ValueError("covariance must be symmetric (tol 1e-12)")
        if np.min(np.linalg.eigvalsh(self.covariance)) < -1e-12:
            raise ValueError("covariance must be positive semidefinite")

    @property
    def dimension(self):
        return self.drift.size


@dataclass(eq=False)
class SemigroupFamily:
    """The linear flow T_t = e^{tB} with a certified growth bound.

    ``growth_bound`` is (K, omega) with |T_t x| <= K e^{omega t} |x|; when not
    given it is derived from the eigenstructure (K = 1 for normal B).
    """

    generator: np.ndarray
    growth_bound: tuple[float, float] | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.generator = np.atleast_2d(np.asarray(self.generator,
                                                  dtype=float))
        B = self.generator
        if B.shape[0] != B.shape[1]:
            raise ValueError("generator must be square")
        if self.growth_bound is None:
            self.growth_bound = self._default_growth_bound()
        K, _ = self.growth_bound
        if K < 1.0:
            raise ValueError("growth bound requires K >= 1")

    def _default_growth_bound(self):
        B = self.generator
        omega = self.spectral_abscissa
        if np.allclose(B @ B.T, B.T @ B, atol=1e-12):
            return (1.0, omega)
        lam, V = np.linalg.eig(B)
        cond = np.linalg.cond(V)
        if np.isfinite(cond) and cond < 1e8:
            return (float(cond), omega)
        # defective generator: measure the transient bump numerically
        ts = np.linspace(0, 50, 201)[1:]
        K = max(np.linalg.norm(expm(t * B), 2) * math.exp(-omega * t)
                for t in ts)
        return (2.0 * float(K), omega)

    @property
    def dimension(self):
        return self.generator.shape[0]

    @property
    def spectral_abscissa(self):
        key = "abscissa"
        if key not in self._cache:
            self._cache[key] = float(np.max(np.real(
                np.linalg.eigvals(self.generator))))
        return self._cache[key]

    @property
    def is_stable(self):
        return self.spectral_abscissa < 0.0

    @property
    def scalar_rate(self):
        """c when B == c*I, else None (fast path used by the samplers)."""
        key = "scalar"
        if key not in self._cache:
            B = self.generator
            c = B[0, 0]
            self._cache[key] = (float(c) if np.allclose(
                B, c * np.eye(self.dimension), atol=1e-14) else None)
        return self._cache[key]

    def at(self, t):
        c = self.scalar_rate
        if c is not None:
            return math.exp(c * t) * np.eye(self.dimension)
        return expm(float(t) * self.generator)

    def adjoint_at(self, t):
        return self.at(t).T

    def apply(self, t, x):
        x = np.asarray(x, dtype=float)
        c = self.scalar_rate
        if c is not None:
            return math.exp(c * t) * x
        return x @ self.at(t).T

    def det_at(self, t):
        return math.exp(float(t) * float(np.trace(self.generator)))

    def flow_integral(self, t, v):
        """integral_0^t e^{sB} v ds via the augmented exponential."""
        d = self.dimension
        v = np.asarray(v, dtype=float).reshape(d)
        c = self.scalar_rate
        if c is not None:
            factor = t if abs(c) < 1e-300 else (math.expm1(c * t) / c)
            return factor * v
        aug = np.zeros((d + 1, d + 1))
        aug[:d, :d] = self.generator
        aug[:d, d] = v
        return expm(float(t) * aug)[:d, d]

    def time_to_contract(self, level):
        K, omega = self.growth_bound
        if omega >= 0:
            raise ValueError("contraction time needs a negative growth rate")
        return math.log(K / level) / (-omega)

    def semigroup_identity_defect(self, t, s):
        """max-norm defect of T_{t+s} - T_t T_s (property-test helper)."""
        return float(np.max(np.abs(self.at(t + s) - self.at(t) @ self.at(s))))


def characteristic_exponent(triple: LevyTriple, xi):
    """Levy symbol of [b, Q, M]: the exponent in E e^{i<xi,Y_1>} = e^{-lambda(xi)}.

    The origin-singular part of the jump integral is desingularised with the
    second-order bound |e^{iu} - 1 - iu| <= u^2/2.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    b = triple.drift
    Q = triple.covariance
    M = triple.measure
    val = -1j * float(xi @ b) + 0.5 * float(xi @ Q @ xi)
    alpha = M.singularity_order
    for part in M.radial_parts():
        c = float(part.direction @ xi)
        q = part.radial
        w = part.weight
        if w == 0.0 or c == 0.0:
            continue  # e^{irc} - 1 - irc vanishes identically when c = 0
        # inner piece (0, 1]: e^{irc} - 1 - irc is quadratic (real) and
        # cubic (imaginary) at the origin
        re_in = integrate_singular_zero(
            lambda r: cos_minus_one(r * c) * q(r), 1.0, 1.0 - alpha).value
        im_in = integrate_singular_zero(
            lambda r: sin_minus_x(r * c) * q(r), 1.0, 2.0 - alpha).value
        # outer piece (1, inf): e^{irc} - 1
        if M.tail_class.kind == "power":
            re_out = integrate_oscillatory_tail(q, c, 1.0, kind="cos").value \
                - integrate_algebraic_tail(q, 1.0,
                                           1.0 + M.tail_class.rate).value
            im_out = integrate_oscillatory_tail(q, c, 1.0, kind="sin").value
        else:
            hi = M._tail_cut()
            bps = _geometric_breaks(1.0, hi)
            re_out = integrate(lambda r: cos_minus_one(r * c) * q(r),
                               1.0, hi, break_points=bps).value
            im_out = integrate(lambda r: np.sin(r * c) * q(r), 1.0, hi,
                               break_points=bps).value
        val -= w * complex(re_in + re_out, im_in + im_out)
    return complex(val)


def psi_of(measure: LevyMeasure, s):
    """Exponential tail functional: integral of |y| e^{s|y|} over |y| > 1."""
    s = float(s)
    if s < 0:
        raise ValueError("psi is defined for s >= 0")
    if not measure.tail_class.allows(poly_power=1.0, exp_rate=s):
        raise DivergenceError(
            f"exponential moment e^{{{s:g}|y|}} diverges for tail class "
            f"{measure.tail_class.kind}")
    return measure.integral(
        lambda pts: np.linalg.norm(pts, axis=-1)
        * np.exp(s * np.linalg.norm(pts, axis=-1)),
        lo=1.0, poly_power=1.0, exp_rate=s)


def psi_second_moment(measure: LevyMeasure, s):
    """M_s := integral of |y|^2 e^{s|y|} over the whole space."""
    s = float(s)
    if not measure.tail_class.allows(poly_power=2.0, exp_rate=s):
        raise DivergenceError("second exponential moment diverges")
    return measure.integral(
        lambda pts: np.linalg.norm(pts, axis=-1) ** 2
        * np.exp(s * np.linalg.norm(pts, axis=-1)),
        lo=0.0, zero_order=2.0, poly_power=2.0, exp_rate=s)


def psi_inverse(measure: LevyMeasure, v, *, s_tol=1e-10):
    """Monotone inverse of psi by bisection with bracket expansion."""
    v = float(v)
    psi0 = measure.radial_moment(1.0, lo=1.0)
    if v <= psi0:
        raise ValueError(
            f"psi_inverse: target {v:g} is at or below psi(0+) = {psi0:g}")
    lo, hi = 0.0, 1e-3
    while psi_of(measure, hi) < v:
        lo, hi = hi, hi * 2.0
        if hi > 1e6:
            raise DivergenceError("psi_inverse bracket expansion ran away")
    while hi - lo > s_tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if psi_of(measure, mid) < v:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class ClauseVerdict:
    clause: str
    passed: bool | None  # None = not verified (not a failure)
    value: float | None
    bound: float | None
    note: str

    @property
    def label(self):
        return {True: "pass", False: "fail", None: "not-verified"}[self.passed]


@dataclass
class HypothesisReport:
    clauses: list[ClauseVerdict]

    @property
    def all_pass(self):
        return all(c.passed is not False for c in self.clauses)

    def clause(self, name):
        for c in self.clauses:
            if c.clause == name:
                return c
        raise KeyError(name)


@dataclass
class DominationResult:
    worst_margin: float  # normalised by the grid scale
    scale: float
    passed: bool
    margins: np.ndarray


@dataclass
class InvariantDiagnostics:
    horizon: float
    tail_fraction_bound: float


@dataclass(eq=False)
class EvolvedTriple:
    """[b, Q, M] pushed through the flow: b_t, Q_t, M_t and their limits."""

    triple: LevyTriple
    semigroup: SemigroupFamily
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.triple.dimension != self.semigroup.dimension:
            raise ValueError("triple and semigroup dimensions differ")

    @property
    def dimension(self):
        return self.triple.dimension

    @property
    def measure(self):
        return self.triple.measure

    # -- characteristic function ---------------------------------------------
    def exponent(self, xi):
        return characteristic_exponent(self.triple, xi)

    def mu_hat(self, t, xi):
        """Characteristic function of mu_t at xi."""
        t = float(t)
        if t < 0:
            raise ValueError("time must be nonnegative")
        if t == 0.0:
            return 1.0 + 0.0j
        xi = np.atleast_1d(np.asarray(xi, dtype=float))

        def lam_of_s(ss):
            out = np.empty((ss.size, 2))
            for i, s in enumerate(ss):
                lam = self.exponent(self.semigroup.adjoint_at(s) @ xi)
                out[i, 0] = lam.real
                out[i, 1] = lam.imag
            return out

        val = integrate(lam_of_s, 0.0, t, rel_tol=1e-11, abs_tol=1e-13).value
        z = complex(val[0], val[1])
        out = np.exp(-z)
        mag = abs(out)
        if mag > 1.0 + 1e-7:
            raise QuadratureError(
                f"|mu_hat| = {mag:.6f} > 1: quadrature inconsistency")
        return out if mag <= 1.0 else out / mag

    def semigroup_defect(self, t, s, xi):
        """|mu_hat_{t+s}(xi) - mu_hat_t(T_s^* xi) mu_hat_s(xi)|."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        lhs = self.mu_hat(t + s, xi)
        rhs = self.mu_hat(t, self.semigroup.adjoint_at(s) @ xi) \
            * self.mu_hat(s, xi)
        return abs(lhs - rhs)

    # -- evolved characteristics ----------------------------------------------
    def drift(self, t):
        """b_t: the flowed drift plus the truncation-mismatch correction."""
        t = float(t)
        term1 = self.semigroup.flow_integral(t, self.triple.drift)
        M = self.measure
        if M.is_symmetric():
            # paired parts (u, -u) share the crossing radius, so the band
            # integrals cancel exactly for any flow
            return term1

        def band_term(ss):
            out = np.zeros((ss.size, self.dimension))
            for i, s in enumerate(ss):
                Ts = self.semigroup.at(s)
                acc = np.zeros(self.dimension)
                for part in M.radial_parts():
                    tu = Ts @ part.direction
                    norm_tu = float(np.linalg.norm(tu))
                    if norm_tu <= 0:
                        continue
                    r_cross = 1.0 / norm_tu
                    a, b = min(1.0, r_cross), max(1.0, r_cross)
                    if b - a < 1e-300:
                        continue
                    sign = 1.0 if r_cross > 1.0 else -1.0
                    val = integrate(lambda r, q=part.radial: r * q(r),
                                    a, b).value
                    acc += part.weight * sign * float(val) * tu
                out[i] = acc
            return out

        term2 = integrate(band_term, 0.0, t, rel_tol=1e-9,
                          abs_tol=1e-12).value
        return term1 + np.atleast_1d(term2)

    def drift_limit(self, *, level=1e-10):
        T = self.semigroup.time_to_contract(level)
        return self.drift(T)

    def mt_density(self, t, y):
        """Pointwise density of M_t at y (adaptive in s; 1-d densities)."""
        M = self.measure
        if M.density is None:
            raise ValueError("mt_density needs a density measure; atomic "
                             "measures expose mt_measure radial kernels")
        y = float(np.atleast_1d(y)[0])
        if y == 0.0:
            raise ValueError("density undefined at the origin")
        B = self.semigroup

        def g(ss):
            out = np.empty(ss.size)
            for i, s in enumerate(ss):
                inv = B.at(-s)
                out[i] = M.density(np.atleast_1d(inv[0, 0] * y))[0] \
                    / B.det_at(s)
            return out

        return float(integrate(g, 0.0, float(t), rel_tol=1e-10).value)

    def _pushforward_parts(self, s):
        """Radial parts of M o T_s^{-1} (scalar flows for atomic measures)."""
        M = self.measure
        if M.density is not None:
            c = float(self.semigroup.at(s)[0, 0])
            dens = M.density
            det = abs(c)
            return [
                RadialPart(np.array([1.0]), 1.0,
                           lambda r: dens(r / c) / det),
                RadialPart(np.array([-1.0]), 1.0,
                           lambda r: dens(-r / c) / det),
            ]
        sr = self.semigroup.scalar_rate
        if sr is None:
            raise ValueError("atomic pushforward needs a scalar flow")
        scale = math.exp(sr * s)  # |T_s u| = scale
        return [RadialPart(p.direction, p.weight,
                           lambda r, q=p.radial: q(r / scale) / scale)
                for p in self.measure.radial_parts()]

    def mt_measure(self, t, *, s_nodes=96):
        """M_t as a Levy measure (fixed Gauss-Legendre rule in s)."""
        t = float(t)
        M = self.measure
        sn, sw = gauss_legendre_rule(0.0, t, s_nodes)
        B = self.semigroup
        if M.density is not None:
            dens = M.density
            scales = np.array([B.at(-s)[0, 0] for s in sn])
            dets = np.array([B.det_at(s) for s in sn])

            def mt_dens(y):
                y = np.atleast_1d(np.asarray(y, dtype=float))
                vals = dens(y[..., None] * scales)  # (..., K)
                return vals @ (sw / dets)

            return line_measure(mt_dens, M.singularity_order, M.tail_class,
                                name=f"{M.name or 'M'}_t={t:g}")
        sr = B.scalar_rate
        if sr is None:
            raise ValueError("mt_measure for atomic measures needs a "
                             "scalar flow")
        factors = np.exp(-sr * sn)  # 1/scale at each node

        def qt(r, q=M.radial_parts()[0].radial):
            r = np.atleast_1d(np.asarray(r, dtype=float))
            return (q(r[..., None] * factors) * factors) @ sw

        return LevyMeasure(M.dimension, M.singularity_order, M.tail_class,
                           spherical_atoms=M.spherical_atoms,
                           radial_density=qt,
                           name=f"{M.name or 'M'}_t={t:g}")

    def one_wedge_sq_bound(self, t):
        """Certified upper bound on the (1 ^ |x|^2)-mass of M_t.

        Uses 1 ^ |T_s x|^2 <= max(1, K^2 e^{2 omega s}) (1 ^ |x|^2), which is
        valid for every sign of omega; with omega >= 0 and K = 1 it reduces
        to the familiar (e^{2 omega t} - 1)/(2 omega) factor.
        """
        K, omega = self.semigroup.growth_bound
        t = float(t)
        if omega == 0.0:
            factor = max(1.0, K * K) * t
        else:
            # integral of max(1, K^2 e^{2 omega s}) over [0, t]
            s_star = math.log(1.0 / (K * K)) / (2.0 * omega)
            lo_piece = lambda a, b: b - a
            exp_piece = lambda a, b: K * K * (math.exp(2 * omega * b)
                                              - math.exp(2 * omega * a)) \
                / (2 * omega)
            if omega > 0:
                cut = min(max(s_star, 0.0), t)
                factor = lo_piece(0.0, cut) + exp_piece(cut, t)
            else:
                cut = min(max(s_star, 0.0), t)
                factor = exp_piece(0.0, cut) + lo_piece(cut, t)
        return factor * self.measure.one_wedge_sq()

    def _wedge_tail_bound(self, S):
        """Bound on the s-integral of the (1 ^ |T_s x|^2)-mass past S.

        Valid past the contraction time (K e^{omega S} <= 1): the unit-ball
        part decays like e^{2 omega s}; the tail part uses
        1 ^ v^2 <= v^{2 theta} with 2 theta chosen below the finite-moment
        threshold of the tail class.
        """
        K, omega = self.semigroup.growth_bound
        if omega >= 0:
            raise ValueError("tail bound needs a contracting flow")
        M = self.measure
        m2_ball = M.radial_moment(2.0, 0.0, 1.0)
        part1 = K * K * math.exp(2 * omega * S) / (2 * abs(omega)) * m2_ball
        if M.tail_class.allows(poly_power=2.0):
            p = 2.0
        else:
            rate = M.tail_class.rate
            p = 0.5 * (1.0 + rate) if rate > 1.0 else 0.75 * rate
        tail_mom = M.radial_moment(p, lo=1.0)
        part2 = K ** p * math.exp(p * omega * S) / (p * abs(omega)) * tail_mom
        return part1 + part2

    def gaussian_cov(self, t):
        """Q_t = integral of T_s Q T_s^* over [0, t]; t = inf via Lyapunov."""
        Q = self.triple.covariance
        d = self.dimension
        if not np.any(Q):
            return np.zeros((d, d))
        if t == math.inf:
            if not self.semigroup.is_stable:
                raise ValueError("Q_inf requires a stable flow")
            sol = solve_continuous_lyapunov(self.semigroup.generator, -Q)
            return 0.5 * (sol + sol.T)

        def g(ss):
            out = np.empty((ss.size, d * d))
            for i, s in enumerate(ss):
                Ts = self.semigroup.at(s)
                out[i] = (Ts @ Q @ Ts.T).ravel()
            return out

        val = integrate(g, 0.0, float(t), rel_tol=1e-11).value
        mat = np.asarray(val).reshape(d, d)
        return 0.5 * (mat + mat.T)

    def invariant(self, *, horizon_level=1e-5, s_nodes=160):
        """The limiting triple [b_inf, Q_inf, M_inf] with truncation report.

        The s-integral for the M_inf density is truncated at a horizon where
        the growth bound certifies the missing (1 ^ |y|^2)-mass to be below
        ``horizon_level`` squared, relative to the source measure.
        """
        rep = self.hypothesis_report()
        if not rep.all_pass:
            bad = [c.clause for c in rep.clauses if c.passed is False]
            raise ValueError(f"invariant triple undefined: clauses failed: "
                             f"{', '.join(bad)}")
        key = ("invariant", horizon_level, s_nodes)
        if key in self._cache:
            return self._cache[key]
        M = self.measure
        horizon = self.semigroup.time_to_contract(horizon_level)
        # certified remainder: (1 ^ |x|^2)-mass missing past the horizon,
        # relative to the same mass of the source measure
        m2_src = M.one_wedge_sq()
        tail_bound = self._wedge_tail_bound(horizon) / m2_src \
            if m2_src > 0 else 0.0
        b_inf = self.drift(self.semigroup.time_to_contract(
            min(horizon_level, 1e-9)))
        Q_inf = self.gaussian_cov(math.inf)
        B = self.semigroup
        sn, sw = gauss_legendre_rule(0.0, horizon, s_nodes)
        if M.density is not None:
            dens = M.density
            scales = np.array([B.at(-s)[0, 0] for s in sn])
            dets = np.array([B.det_at(s) for s in sn])
            coeff = sw / dets

            def minf_dens(y):
                y = np.atleast_1d(np.asarray(y, dtype=float))
                return dens(y[..., None] * scales) @ coeff

            M_inf = line_measure(minf_dens, M.singularity_order, M.tail_class,
                                 name=f"{M.name or 'M'}_inf")
        else:
            sr = B.scalar_rate
            if sr is None:
                raise ValueError("M_inf for atomic measures needs a "
                                 "scalar flow")
            factors = np.exp(-sr * sn)

            def qinf(r, q=M.radial_parts()[0].radial):
                r = np.atleast_1d(np.asarray(r, dtype=float))
                return (q(r[..., None] * factors) * factors) @ sw

            M_inf = LevyMeasure(M.dimension, M.singularity_order,
                                M.tail_class,
                                spherical_atoms=M.spherical_atoms,
                                radial_density=qinf,
                                name=f"{M.name or 'M'}_inf")
        out = (LevyTriple(b_inf, Q_inf, M_inf),
               InvariantDiagnostics(horizon, tail_bound))
        self._cache[key] = out
        return out

    # -- hypothesis machinery ---------------------------------------------
    def hypothesis_report(self):
        key = "hypotheses"
        if key in self._cache:
            return self._cache[key]
        clauses = []
        B = self.semigroup.generator
        M = self.measure
        K, omega = self.semigroup.growth_bound

        normal = np.allclose(B @ B.T, B.T @ B, atol=1e-12)
        clauses.append(ClauseVerdict(
            "eigenbasis", True if normal else None, None, None,
            "generator normal: orthonormal eigenbasis of the adjoint exists"
            if normal else "not verified: non-normal generator"))

        try:
            fm = M.radial_moment(1.0, lo=1.0)
            clauses.append(ClauseVerdict(
                "first_moment_tail", True, fm, None,
                "integral of |y| over |y|>1 is finite"))
        except DivergenceError as exc:
            clauses.append(ClauseVerdict("first_moment_tail", False,
                                         math.inf, None, str(exc)))

        abscissa = self.semigroup.spectral_abscissa
        stable = abscissa < 0
        clauses.append(ClauseVerdict(
            "stability", stable, abscissa, 0.0,
            f"spectral abscissa {abscissa:.6g} "
            + ("< 0" if stable else ">= 0: flow does not vanish")))

        if stable:
            tau = 1.0 / abs(omega)
            ts = tau * np.array([1.0, 2.0, 4.0, 8.0, 16.0, 32.0])
            bs = [self.drift(t) for t in ts]
            diffs = [float(np.linalg.norm(b2 - b1))
                     for b1, b2 in zip(bs, bs[1:])]
            tolerance = 1e-6 * (1.0 + float(np.linalg.norm(bs[-1])))
            cauchy = diffs[-1] <= tolerance and all(
                d2 <= 2.0 * d1 + 1e-12 for d1, d2 in zip(diffs, diffs[1:]))
            clauses.append(ClauseVerdict(
                "drift_limit", cauchy, diffs[-1], tolerance,
                "b_t Cauchy along the geometric grid"
                if cauchy else "b_t not settling on the geometric grid"))

            S = self.semigroup.time_to_contract(1e-8)

            def g(ss):
                out = np.empty(ss.size)
                for i, s in enumerate(ss):
                    Ts = self.semigroup.at(s)
                    def f(pts, Ts=Ts):
                        img = pts @ Ts.T
                        return np.minimum(
                            1.0, np.einsum("ij,ij->i", img, img))
                    out[i] = M.integral(f, zero_order=2.0)
                return out

            body = float(integrate(g, 0.0, S, rel_tol=1e-8,
                                   abs_tol=1e-10).value)
            tail = self._wedge_tail_bound(S)
            clauses.append(ClauseVerdict(
                "square_integrability", True, body + tail, None,
                f"certified tail bound {tail:.3e} past horizon {S:.3g}"))
        else:
            clauses.append(ClauseVerdict(
                "drift_limit", False, None, None,
                "unstable flow: no drift limit"))
            clauses.append(ClauseVerdict(
                "square_integrability", False, None, None,
                "unstable flow: s-integral diverges"))

        report = HypothesisReport(clauses)
        self._cache[key] = report
        return report

    def domination_margin(self, h, t, grid=None) -> DominationResult:
        """Check h(t) M - M o T_t^{-1} >= 0 on a radial grid."""
        t = float(t)
        ht = float(h(t))
        if grid is None:
            grid = np.geomspace(1e-3, 10.0, 60)
        grid = np.asarray(grid, dtype=float)
        base = self.measure.radial_parts()
        pushed = self._pushforward_parts(t)
        margins, scales = [], []
        for bp, pp in zip(base, pushed):
            lead = ht * bp.weight * bp.radial(grid)
            sub = pp.weight * pp.radial(grid)
            margins.append(lead - sub)
            scales.append(lead)
        margins = np.concatenate(margins)
        scale = float(np.max(np.concatenate(scales)))
        if scale <= 0.0:
            scale = max(float(np.max(np.abs(margins))), 1e-300)
        worst = float(np.min(margins)) / scale
        return DominationResult(worst, scale, worst >= -1e-10, margins)

    def minimal_domination(self, t, grid=None):
        """Smallest factor h(t) with h(t) M >= M o T_t^{-1} on the grid
        (the generic search that closed-form domination functions must
        match from above)."""
        t = float(t)
        if grid is None:
            grid = np.geomspace(1e-3, 10.0, 60)
        grid = np.asarray(grid, dtype=float)
        ratios = []
        for bp, pp in zip(self.measure.radial_parts(),
                          self._pushforward_parts(t)):
            base = bp.weight * bp.radial(grid)
            pushed = pp.weight * pp.radial(grid)
            good = base > 0
            ratios.append(np.max(pushed[good] / base[good]))
        return float(np.max(ratios))

    def generator_apply(self, f, x, *, inner_delta=1e-4):
        return apply_generator(self.triple, self.semigroup, f, x,
                               inner_delta=inner_delta)


def apply_generator(triple: LevyTriple, semigroup: SemigroupFamily, f, x,
                    *, inner_delta=1e-4):
    """Pointwise generator: diffusion + drift + compensated jump integral.

    ``f`` must expose vectorised ``__call__`` on (m, d) points together with
    ``gradient`` and ``hessian``.  Inside |y| <= inner_delta the integrand is
    replaced by its certified quadratic surrogate to avoid cancellation.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    M = triple.measure
    grad = f.gradient(x)
    hess = f.hessian(x)
    fx = float(f(x[None, :])[0])
    val = 0.5 * float(np.trace(triple.covariance @ hess)) \
        + float((semigroup.generator @ x) @ grad)
    alpha = M.singularity_order
    for part in M.radial_parts():
        u, w, q = part.direction, part.weight, part.radial
        if w == 0.0:
            continue
        gu = float(grad @ u)
        hu = float(u @ hess @ u)
        # (0, delta]: quadratic Taylor surrogate
        small = 0.5 * hu * integrate_singular_zero(
            lambda r: r * r * q(r), inner_delta, 1.0 - alpha).value

        def mid(r):
            pts = x[None, :] + r[:, None] * u[None, :]
            return (f(pts) - fx - gu * r) * q(r)

        def outer(r):
            pts = x[None, :] + r[:, None] * u[None, :]
            return (f(pts) - fx) * q(r)

        mid_val = integrate(mid, inner_delta, 1.0,
                            break_points=_geometric_breaks(inner_delta,
                                                           1.0)).value
        if M.tail_class.kind == "power":
            out_val = integrate_algebraic_tail(
                outer, 1.0, 1.0 + M.tail_class.rate).value
        else:
            hi = M._tail_cut()
            out_val = integrate(outer, 1.0, hi,
                                break_points=_geometric_breaks(1.0,
                                                               hi)).value
        val += w * (float(small) + float(mid_val) + float(out_val))
    return val
