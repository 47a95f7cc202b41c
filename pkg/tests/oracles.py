"""Independent brute-force oracles shared by the test modules.

These deliberately avoid the package's quadrature drivers: the inner
integral subtracts the Taylor surrogate of the increment (whose integral
against the measure is computed once on a dense logarithmic grid), leaving
a continuous remainder that a uniform trapezoid handles, so the production
estimators are checked through an unrelated numerical route.
"""

import numpy as np


def trapezoid_form(samples, density, f, kind, p=1.0, *, y_max=9.0,
                   n_inner=200_001, chunk=64):
    """Brute-force double integral: empirical outer measure, uniform inner
    trapezoid with the Taylor-subtracted singularity.

    kind: 'entropy'   -> |f^p(x+y)-f^p(x)|^2 / f^p(x)
          'dirichlet' -> |f(x+y)-f(x)|^2
          'weighted'  -> ||f|^p(x+y)-|f|^p(x)| * [1 outside B_1,
                          |y|^{2-p} inside]
    """
    samples = np.atleast_2d(samples)
    X = samples[:, 0]
    eps = 1e-9
    half = np.linspace(eps, y_max, n_inner)
    ys = np.concatenate([-half[::-1], half])
    my = density(ys)
    # the surrogate mass integrand can decay as slowly as y^{0.1} toward 0,
    # so its log grid must go very deep to capture all of it
    logy = np.geomspace(1e-60, y_max, 600_001)
    if kind == "weighted":
        kern = np.where(np.abs(ys) > 1.0, 1.0, np.abs(ys) ** (2.0 - p))
        wy = my * kern
        logkern = np.where(logy > 1.0, 1.0, logy ** (2.0 - p))
        sur_mass = 2.0 * np.trapezoid(logy * logkern * density(logy), logy)
        sur_grid = np.abs(ys) * kern * my
    else:
        wy = my
        sur_mass = 2.0 * np.trapezoid(logy ** 2 * density(logy), logy)
        sur_grid = ys * ys * my

    totals = np.empty(len(X))
    h = 1e-6
    for lo in range(0, len(X), chunk):
        xc = X[lo:lo + chunk]
        pts = (xc[:, None] + ys[None, :])[:, :, None]
        fx = f(xc[:, None, None])[:, 0]
        fpts = f(pts)
        d1 = (f((xc + h)[:, None, None])[:, 0]
              - f((xc - h)[:, None, None])[:, 0]) / (2 * h)
        if kind == "entropy":
            v = fx ** p
            inner = (fpts ** p - v[:, None]) ** 2 / v[:, None]
            a = (p * fx ** (p - 1.0) * d1) ** 2 / v
        elif kind == "dirichlet":
            inner = (fpts - fx[:, None]) ** 2
            a = d1 * d1
        elif kind == "weighted":
            v = np.abs(fx) ** p
            inner = np.abs(np.abs(fpts) ** p - v[:, None])
            a = np.abs(p * np.abs(fx) ** (p - 1.0) * np.sign(fx) * d1)
        else:
            raise ValueError(kind)
        # subtract the surrogate everywhere, add its log-grid mass back
        vals = inner * wy[None, :] - a[:, None] * sur_grid[None, :]
        neg = np.trapezoid(vals[:, :n_inner], ys[:n_inner], axis=1)
        pos = np.trapezoid(vals[:, n_inner:], ys[n_inner:], axis=1)
        totals[lo:lo + len(xc)] = neg + pos + a * sur_mass
    return float(totals.mean())


def invariant_variance_from_char(evolved, h=0.05):
    """Variance of the invariant law via the curvature of its log
    characteristic function (Richardson-extrapolated differences)."""
    from mehlerlab.levy import characteristic_exponent

    inv, _ = evolved.invariant()

    def lam(xi):
        return characteristic_exponent(inv, [xi]).real

    def second(hh):
        return (lam(hh) + lam(-hh)) / (hh * hh)

    d1, d2 = second(h), second(h / 2)
    return (4.0 * d2 - d1) / 3.0
