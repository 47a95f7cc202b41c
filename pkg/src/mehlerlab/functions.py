"""Cylindrical C^2 test functions with certified bounds.

Each function is phi(<x,h_1>, ..., <x,h_n>) for orthonormal directions h_k,
carrying exact core derivatives plus certified metadata (sup norm, gradient
sup norm, infimum, Lipschitz constant) that the inequality checkers consume
as exact constants.  Sup norms and infima may be infinite sentinels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .quadrature import gauss_legendre_rule

__all__ = [
    "CylindricalFunction", "ScalarMap", "LipschitzFunction",
    "compose_scalar", "mollify_lipschitz", "standard_suites",
    "constant_function", "coordinate_function", "sine_function",
    "gaussian_bump", "smoothed_abs", "SCALAR_MAPS",
]


@dataclass(frozen=True)
class CylindricalFunction:
    name: str
    dimension: int
    directions: np.ndarray        # (n, d), orthonormal rows
    core: Callable                # phi(z), z of shape (..., n) -> (...)
    core_grad: Callable           # (..., n) -> (..., n)
    core_hess: Callable           # (..., n) -> (..., n, n)
    sup_norm: float
    grad_sup_norm: float
    infimum: float
    lipschitz: float

    def project(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.directions.T

    def __call__(self, x):
        return self.core(self.project(x))

    def shifted_values(self, x, shifts):
        """f(x_i + y_k) as an (n_x, n_y) matrix, projecting each factor
        once (the hot path of the double-integral estimators)."""
        zx = self.project(np.atleast_2d(x))
        zy = self.project(np.atleast_2d(shifts))
        return self.core(zx[:, None, :] + zy[None, :, :])

    def gradient(self, x):
        return self.core_grad(self.project(x)) @ self.directions

    def hessian(self, x):
        h = self.core_hess(self.project(x))
        return np.einsum("...ij,ik,jl->...kl", h, self.directions,
                         self.directions)

    @property
    def bounded(self):
        return math.isfinite(self.sup_norm)

    def shifted(self, c):
        """f + c with bounds moved accordingly."""
        core, grad, hess = self.core, self.core_grad, self.core_hess
        return replace(
            self, name=f"{self.name}+{c:g}",
            core=lambda z: core(z) + c,
            core_grad=grad, core_hess=hess,
            sup_norm=self.sup_norm + abs(c),
            infimum=self.infimum + c)

    def scaled(self, a):
        """a * f for a > 0."""
        core, grad, hess = self.core, self.core_grad, self.core_hess
        return replace(
            self, name=f"{a:g}*{self.name}",
            core=lambda z: a * core(z),
            core_grad=lambda z: a * grad(z),
            core_hess=lambda z: a * hess(z),
            sup_norm=a * self.sup_norm,
            grad_sup_norm=a * self.grad_sup_norm,
            infimum=a * self.infimum,
            lipschitz=a * self.lipschitz)


def _sech(v):
    # 1/cosh without overflow for large |v|
    a = np.exp(-np.abs(v))
    return 2.0 * a / (1.0 + a * a)


def _sigmoid(v):
    out = np.empty_like(np.asarray(v, dtype=float))
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _line(name, d, f, f1, f2, sup, grad_sup, inf, lip, direction=0):
    """1-d core along a coordinate direction."""
    e = np.zeros((1, d))
    e[0, direction] = 1.0
    return CylindricalFunction(
        name=name, dimension=d, directions=e,
        core=lambda z: f(z[..., 0]),
        core_grad=lambda z: f1(z[..., 0])[..., None],
        core_hess=lambda z: f2(z[..., 0])[..., None, None],
        sup_norm=sup, grad_sup_norm=grad_sup, infimum=inf, lipschitz=lip)


def constant_function(d, value):
    return CylindricalFunction(
        name=f"const({value:g})", dimension=d,
        directions=np.eye(1, d),
        core=lambda z: np.full(z.shape[:-1], float(value)),
        core_grad=lambda z: np.zeros(z.shape[:-1] + (1,)),
        core_hess=lambda z: np.zeros(z.shape[:-1] + (1, 1)),
        sup_norm=abs(value), grad_sup_norm=0.0, infimum=float(value),
        lipschitz=0.0)


def coordinate_function(d, axis=0):
    return _line(f"x_{axis + 1}", d, lambda v: v,
                 lambda v: np.ones_like(v), lambda v: np.zeros_like(v),
                 math.inf, 1.0, -math.inf, 1.0, direction=axis)


def sine_function(d, axis=0):
    return _line("sin", d, np.sin, np.cos, lambda v: -np.sin(v),
                 1.0, 1.0, -1.0, 1.0, direction=axis)


def gaussian_bump(d, center=0.0, width=1.0, axis=0):
    w2 = width * width

    def f(v):
        return np.exp(-((v - center) ** 2) / w2)

    def f1(v):
        return -2.0 * (v - center) / w2 * f(v)

    def f2(v):
        u = (v - center)
        return (4.0 * u * u / (w2 * w2) - 2.0 / w2) * f(v)

    # max |f'| at |v - center| = width/sqrt(2)
    lip = math.sqrt(2.0 / math.e) / width
    name = "gauss" if center == 0 and width == 1 else \
        f"gauss(c={center:g},w={width:g})"
    return _line(name, d, f, f1, f2, 1.0, lip, 0.0, lip, direction=axis)


def smoothed_abs(d, eps=1.0):
    """sqrt(|x|^2 + eps^2) - eps: a smooth 1-Lipschitz surrogate of |x|.

    Uses all d coordinates (n = d), so it sees the full norm.
    """
    e2 = eps * eps

    def f(z):
        return np.sqrt(np.sum(z * z, axis=-1) + e2) - eps

    def g(z):
        root = np.sqrt(np.sum(z * z, axis=-1) + e2)
        return z / root[..., None]

    def h(z):
        root = np.sqrt(np.sum(z * z, axis=-1) + e2)
        n = z.shape[-1]
        eye = np.eye(n)
        outer = z[..., :, None] * z[..., None, :]
        return eye / root[..., None, None] \
            - outer / (root ** 3)[..., None, None]

    return CylindricalFunction(
        name=f"smooth|x|(eps={eps:g})", dimension=d,
        directions=np.eye(d),
        core=f, core_grad=g, core_hess=h,
        sup_norm=math.inf, grad_sup_norm=1.0, infimum=0.0, lipschitz=1.0)


@dataclass(frozen=True)
class ScalarMap:
    """A C^2 map of the real line with derivatives and a validity domain."""

    name: str
    fn: Callable
    d1: Callable
    d2: Callable
    domain: tuple[float, float] = (-math.inf, math.inf)


SCALAR_MAPS = {
    "identity": ScalarMap("identity", lambda v: v,
                          lambda v: np.ones_like(v),
                          lambda v: np.zeros_like(v)),
    "square": ScalarMap("square", lambda v: v * v, lambda v: 2.0 * v,
                        lambda v: np.full_like(v, 2.0)),
    "exp": ScalarMap("exp", np.exp, np.exp, np.exp),
    "log": ScalarMap("log", np.log, lambda v: 1.0 / v,
                     lambda v: -1.0 / (v * v), domain=(0.0, math.inf)),
    "xlogx_minus_x": ScalarMap(
        "xlogx_minus_x", lambda v: v * np.log(v) - v, np.log,
        lambda v: 1.0 / v, domain=(0.0, math.inf)),
}


def compose_scalar(f: CylindricalFunction, phi: ScalarMap, *,
                   grid_points=8193) -> CylindricalFunction:
    """phi o f with bounds propagated over the certified range of f.

    The range of f is [infimum, sup_norm] (both must be finite); bounds of
    the composition come from a dense scan of phi over that interval, which
    is exact for the monotone/unimodal maps in the library.
    """
    lo = f.infimum
    hi = f.sup_norm
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("compose_scalar needs finite range metadata")
    # restricted domains are open at their finite endpoints (log at 0)
    if lo <= phi.domain[0] or hi >= phi.domain[1]:
        raise ValueError(
            f"map {phi.name!r} undefined on the range [{lo:g}, {hi:g}] of "
            f"{f.name!r}")
    if phi.name == "identity":
        return f
    grid = np.linspace(lo, hi, grid_points)
    vals = phi.fn(grid)
    slopes = np.abs(phi.d1(grid))
    new_sup = float(np.max(np.abs(vals)))
    new_inf = float(np.min(vals))
    max_slope = float(np.max(slopes))
    core, grad, hess = f.core, f.core_grad, f.core_hess

    def new_core(z):
        return phi.fn(core(z))

    def new_grad(z):
        return phi.d1(core(z))[..., None] * grad(z)

    def new_hess(z):
        g = grad(z)
        outer = g[..., :, None] * g[..., None, :]
        return phi.d2(core(z))[..., None, None] * outer \
            + phi.d1(core(z))[..., None, None] * hess(z)

    return CylindricalFunction(
        name=f"{phi.name}({f.name})", dimension=f.dimension,
        directions=f.directions, core=new_core, core_grad=new_grad,
        core_hess=new_hess, sup_norm=new_sup,
        grad_sup_norm=max_slope * f.grad_sup_norm, infimum=new_inf,
        lipschitz=max_slope * f.lipschitz)


@dataclass(frozen=True)
class LipschitzFunction:
    """A merely-Lipschitz function destined for mollification."""

    name: str
    dimension: int
    fn: Callable                  # vectorised on (..., d)
    lipschitz: float
    sup_norm: float = math.inf
    infimum: float = -math.inf


def _bump_tables(nodes):
    """Nodes/weights/derivatives of the unit-mass smooth bump on (-1, 1)."""
    v, w = gauss_legendre_rule(-1.0, 1.0, nodes)
    one_minus = 1.0 - v * v
    rho = np.exp(-1.0 / one_minus)
    mass = float(np.sum(w * rho))
    rho /= mass
    inner = 2.0 * v / one_minus ** 2
    rho1 = -rho * inner
    rho2 = rho * (inner * inner - 2.0 / one_minus ** 2
                  - 8.0 * v * v / one_minus ** 3)
    return v, w, rho, rho1, rho2


def mollify_lipschitz(g: LipschitzFunction, n, m, *,
                      nodes=400) -> CylindricalFunction:
    """Cylindrical mollification of a Lipschitz g: truncate to the first n
    coordinates and convolve with a smooth bump of radius 1/m.

    The tensor bump is shrunk by sqrt(n) so its support sits inside the unit
    ball; the quadrature weights are nonnegative and renormalised to unit
    mass, so ||g_{m,n}||_inf <= ||g||_inf and the transport bound
    |g_{m,n} - psi_n| <= Lip(g)/m hold exactly for the returned values.
    """
    if n < 1 or n > g.dimension:
        raise ValueError(f"truncation dimension {n} outside 1..{g.dimension}")
    if m < 1:
        raise ValueError("mollification index must be >= 1")
    d = g.dimension
    directions = np.eye(n, d)
    c = m * math.sqrt(n)
    n_nodes = nodes if n == 1 else 48
    v1, w1, rho, rho1, _ = _bump_tables(n_nodes)
    idx = np.stack(np.meshgrid(*([np.arange(n_nodes)] * n), indexing="ij"),
                   axis=-1).reshape(-1, n)          # (K, n)
    u = v1[idx]
    wprod = w1[idx].prod(-1)
    raw = wprod * rho[idx].prod(-1)
    W = np.maximum(raw, 0.0)
    W /= W.sum()
    GW = np.empty((len(W), n))
    for j in range(n):
        col = rho1[idx[:, j]].copy()
        for other in range(n):
            if other != j:
                col *= rho[idx[:, other]]  # rho underflows near the edge
        GW[:, j] = wprod * col
    GW /= raw.sum()
    shifts = u / c

    fn = g.fn

    def embed(z):
        # lift truncated coordinates back to the ambient space
        out = np.zeros(z.shape[:-1] + (d,))
        out[..., :n] = z
        return out

    def value(z):
        z = np.asarray(z, dtype=float)
        pts = z[..., None, :] - shifts[None, :, :]   # (..., K, n)
        return fn(embed(pts)) @ W

    # d/dz_j int psi(z - u/c) rho(u) du = c int psi(z - u/c) (d_j rho)(u) du
    def grad_value(z):
        z = np.asarray(z, dtype=float)
        pts = z[..., None, :] - shifts[None, :, :]
        vals = fn(embed(pts))
        return c * (vals[..., None] * GW[None, :, :]).sum(-2)

    eps_fd = 1e-4 / m

    def hess_value(z):
        z = np.asarray(z, dtype=float)
        out = np.empty(z.shape[:-1] + (n, n))
        for j in range(n):
            dz = np.zeros(n)
            dz[j] = eps_fd
            out[..., j, :] = (grad_value(z + dz) - grad_value(z - dz)) \
                / (2 * eps_fd)
        return 0.5 * (out + np.swapaxes(out, -1, -2))

    name = f"mollify({g.name},n={n},m={m})"
    return CylindricalFunction(
        name=name, dimension=d, directions=directions,
        core=value, core_grad=grad_value, core_hess=hess_value,
        sup_norm=g.sup_norm, grad_sup_norm=g.lipschitz,
        infimum=g.infimum, lipschitz=g.lipschitz)


def _positive_infimum_suite(d):
    suite = [
        gaussian_bump(d).shifted(0.5),
        _line("2+tanh", d, lambda v: 2.0 + np.tanh(v),
              lambda v: _sech(v) ** 2,
              lambda v: -2.0 * np.tanh(v) * _sech(v) ** 2,
              3.0, 1.0, 1.0, 1.0),
        _line("0.3+lorentz", d, lambda v: 0.3 + 1.0 / (1.0 + v * v),
              lambda v: -2.0 * v / (1.0 + v * v) ** 2,
              lambda v: (6.0 * v * v - 2.0) / (1.0 + v * v) ** 3,
              1.3, 0.6495190528383,
              0.3, 0.6495190528383),
        _line("1+sin/2", d, lambda v: 1.0 + 0.5 * np.sin(v),
              lambda v: 0.5 * np.cos(v), lambda v: -0.5 * np.sin(v),
              1.5, 0.5, 0.5, 0.5),
        _line("0.4+0.6sigmoid", d,
              lambda v: 0.4 + 0.6 * _sigmoid(v),
              lambda v: 0.6 * _sigmoid(v) * _sigmoid(-v),
              lambda v: 0.6 * _sigmoid(v) * _sigmoid(-v)
              * (1.0 - 2.0 * _sigmoid(v)),
              1.0, 0.15, 0.4, 0.15),
        gaussian_bump(d, center=1.0).shifted(0.2),
        _line("1+cos(2.)/2", d, lambda v: 1.0 + 0.5 * np.cos(2.0 * v),
              lambda v: -np.sin(2.0 * v), lambda v: -2.0 * np.cos(2.0 * v),
              1.5, 1.0, 0.5, 1.0),
        _line("0.6+0.3v2/(1+v2)", d,
              lambda v: 0.6 + 0.3 * v * v / (1.0 + v * v),
              lambda v: 0.6 * v / (1.0 + v * v) ** 2,
              lambda v: 0.6 * (1.0 - 3.0 * v * v) / (1.0 + v * v) ** 3,
              0.9, 0.6 * 3.0 * math.sqrt(3) / 16.0, 0.6,
              0.6 * 3.0 * math.sqrt(3) / 16.0),
        gaussian_bump(d, center=-2.0, width=math.sqrt(2)).scaled(0.4)
        .shifted(0.5),
        _line("2-sech", d, lambda v: 2.0 - _sech(v),
              lambda v: np.tanh(v) * _sech(v),
              lambda v: _sech(v) ** 3 - np.tanh(v) ** 2 * _sech(v),
              2.0, 0.5, 1.0, 0.5),
        _line("0.5+0.5exp(-v2/4)", d,
              lambda v: 0.5 + 0.5 * np.exp(-v * v / 4.0),
              lambda v: -0.25 * v * np.exp(-v * v / 4.0),
              lambda v: (0.125 * v * v - 0.25) * np.exp(-v * v / 4.0),
              1.0, 0.25 * math.sqrt(2.0) * math.exp(-0.5),
              0.5, 0.25 * math.sqrt(2.0) * math.exp(-0.5)),
    ]
    return suite


def _lipschitz_one_suite(d):
    logcosh = _line("logcosh", d,
                    lambda v: np.logaddexp(v, -v) - math.log(2.0),
                    np.tanh, lambda v: _sech(v) ** 2,
                    math.inf, 1.0, 0.0, 1.0)
    suite = [
        smoothed_abs(d, eps=1.0),
        smoothed_abs(d, eps=0.1),
        coordinate_function(d),
        _line("tanh", d, np.tanh, lambda v: _sech(v) ** 2,
              lambda v: -2.0 * np.tanh(v) * _sech(v) ** 2,
              1.0, 1.0, -1.0, 1.0),
        logcosh,
        sine_function(d),
        _line("softplus-", d,
              lambda v: 0.5 * (v + np.sqrt(v * v + 0.01)),
              lambda v: 0.5 * (1.0 + v / np.sqrt(v * v + 0.01)),
              lambda v: 0.005 / (v * v + 0.01) ** 1.5,
              math.inf, 1.0, 0.0, 1.0),
        _line("shifted-dist", d,
              lambda v: np.sqrt((v - 1.0) ** 2 + 1.0) - 1.0,
              lambda v: (v - 1.0) / np.sqrt((v - 1.0) ** 2 + 1.0),
              lambda v: 1.0 / ((v - 1.0) ** 2 + 1.0) ** 1.5,
              math.inf, 1.0, 0.0, 1.0),
        _line("atan", d, np.arctan, lambda v: 1.0 / (1.0 + v * v),
              lambda v: -2.0 * v / (1.0 + v * v) ** 2,
              math.pi / 2, 1.0, -math.pi / 2, 1.0),
        _line("3tanh(./3)", d, lambda v: 3.0 * np.tanh(v / 3.0),
              lambda v: _sech(v / 3.0) ** 2,
              lambda v: -(2.0 / 3.0) * np.tanh(v / 3.0)
              * _sech(v / 3.0) ** 2,
              3.0, 1.0, -3.0, 1.0),
    ]
    return suite


def _mean_zero_ready_suite(d):
    suite = [
        _line("tanh", d, np.tanh, lambda v: _sech(v) ** 2,
              lambda v: -2.0 * np.tanh(v) * _sech(v) ** 2,
              1.0, 1.0, -1.0, 1.0),
        sine_function(d),
        _line("v/(1+v2)", d, lambda v: v / (1.0 + v * v),
              lambda v: (1.0 - v * v) / (1.0 + v * v) ** 2,
              lambda v: 2.0 * v * (v * v - 3.0) / (1.0 + v * v) ** 3,
              0.5, 1.0, -0.5, 1.0),
        gaussian_bump(d),
        _line("v*gauss", d, lambda v: v * np.exp(-v * v),
              lambda v: (1.0 - 2.0 * v * v) * np.exp(-v * v),
              lambda v: (4.0 * v ** 3 - 6.0 * v) * np.exp(-v * v),
              math.exp(-0.5) / math.sqrt(2.0), 1.0,
              -math.exp(-0.5) / math.sqrt(2.0), 1.0),
        _line("cos", d, np.cos, lambda v: -np.sin(v),
              lambda v: -np.cos(v), 1.0, 1.0, -1.0, 1.0),
        _line("atan", d, np.arctan, lambda v: 1.0 / (1.0 + v * v),
              lambda v: -2.0 * v / (1.0 + v * v) ** 2,
              math.pi / 2, 1.0, -math.pi / 2, 1.0),
        _line("sigmoid-.5", d, lambda v: _sigmoid(v) - 0.5,
              lambda v: _sigmoid(v) * _sigmoid(-v),
              lambda v: _sigmoid(v) * _sigmoid(-v)
              * (1.0 - 2.0 * _sigmoid(v)),
              0.5, 0.25, -0.5, 0.25),
        _line("sin(2.)/2", d, lambda v: 0.5 * np.sin(2.0 * v),
              lambda v: np.cos(2.0 * v), lambda v: -2.0 * np.sin(2.0 * v),
              0.5, 1.0, -0.5, 1.0),
        _line("tanh(2.)/2", d, lambda v: 0.5 * np.tanh(2.0 * v),
              lambda v: _sech(2.0 * v) ** 2,
              lambda v: -4.0 * np.tanh(2.0 * v) * _sech(2.0 * v) ** 2,
              0.5, 1.0, -0.5, 1.0),
        gaussian_bump(d, center=0.7),
    ]
    return suite


def standard_suites(dimension=1):
    """Named suites consumed by the verification harness and the CLI.

    positive_infimum: bounded, infimum in [0.2, 1] (entropy estimates);
    lipschitz_one: certified Lipschitz constant <= 1 (tail estimates);
    mean_zero_ready: bounded with bounded slope, centred downstream
    (variance estimates).
    """
    return {
        "positive_infimum": _positive_infimum_suite(dimension),
        "lipschitz_one": _lipschitz_one_suite(dimension),
        "mean_zero_ready": _mean_zero_ready_suite(dimension),
    }
