"""Small polynomial toolkit used by the profile and energy machinery.

One-dimensional polynomials are plain numpy coefficient arrays in the
numpy.polynomial convention (index = degree, low to high).  Bivariate
polynomials are 2-D arrays c[i, j] multiplying x^i * y^j.  Everything here is
deliberately exact: integrals of |poly| and of |affine|^p are evaluated by
antiderivatives, not quadrature, so the energy evaluator can promise
closed-form results on the piecewise-affine profiles that dominate this
project.
"""

import numpy as np
from numpy.polynomial import polynomial as npoly

__all__ = [
    "as_poly",
    "peval",
    "pder",
    "padd",
    "psub",
    "pmul",
    "pscale",
    "pshift",
    "pcompose",
    "definite",
    "real_roots_in",
    "integrate_abs",
    "poly_range",
    "as_poly2",
    "p2eval",
    "p2dx",
    "p2dy",
    "p2add",
    "p2sub",
    "p2scale",
    "p2compose_y",
    "p2at_x",
    "p2at_y",
    "p2affine",
    "p2is_constant",
    "depends_only_on_x",
    "depends_only_on_y",
]

_TRIM_TOL = 0.0  # trim exact zeros only; keep tiny coefficients


def as_poly(c) -> np.ndarray:
    """Coerce to a 1-D float coefficient array, trimming trailing exact zeros."""
    a = np.atleast_1d(np.asarray(c, dtype=float))
    if a.ndim != 1:
        raise ValueError("1-D coefficient array expected")
    nz = np.nonzero(a)[0]
    if nz.size == 0:
        return np.zeros(1)
    return a[: nz[-1] + 1]


def peval(c, x):
    return npoly.polyval(x, as_poly(c))


def pder(c):
    c = as_poly(c)
    if c.size == 1:
        return np.zeros(1)
    return npoly.polyder(c)


def padd(a, b):
    return as_poly(npoly.polyadd(as_poly(a), as_poly(b)))


def psub(a, b):
    return as_poly(npoly.polysub(as_poly(a), as_poly(b)))


def pmul(a, b):
    return as_poly(npoly.polymul(as_poly(a), as_poly(b)))


def pscale(a, s):
    return as_poly(as_poly(a) * float(s))


def pshift(c, dx):
    """Coefficients of p(x + dx)."""
    return pcompose(c, np.array([float(dx), 1.0]))


def pcompose(outer, inner):
    """Coefficients of outer(inner(x)) via Horner."""
    outer = as_poly(outer)
    inner = as_poly(inner)
    acc = np.array([outer[-1]])
    for k in range(outer.size - 2, -1, -1):
        acc = padd(pmul(acc, inner), [outer[k]])
    return acc


def definite(c, a, b):
    """Exact integral of the polynomial over [a, b]."""
    ci = npoly.polyint(as_poly(c))
    return float(npoly.polyval(b, ci) - npoly.polyval(a, ci))


def real_roots_in(c, a, b, tol=1e-9):
    """Sorted distinct real roots of the polynomial inside [a, b]."""
    c = as_poly(c)
    if c.size <= 1:
        return []
    scale = float(np.max(np.abs(c)))
    if scale == 0.0:
        return []
    roots = npoly.polyroots(c)
    span = max(abs(b - a), 1.0)
    out = []
    for r in roots:
        if abs(r.imag) > tol * span:
            continue
        x = float(r.real)
        if a - tol * span <= x <= b + tol * span:
            out.append(min(max(x, a), b))
    out.sort()
    dedup = []
    for x in out:
        if not dedup or x - dedup[-1] > tol * span:
            dedup.append(x)
    return dedup


def integrate_abs(c, a, b):
    """Exact integral of |p(x)| over [a, b] (sign-splitting at real roots)."""
    if b <= a:
        return 0.0
    c = as_poly(c)
    cuts = [a] + real_roots_in(c, a, b) + [b]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        total += abs(definite(c, lo, hi))
    return total


def poly_range(c, a, b):
    """(min, max) of the polynomial on [a, b], via critical points."""
    c = as_poly(c)
    xs = [a, b] + real_roots_in(pder(c), a, b)
    vals = [peval(c, x) for x in xs]
    return float(min(vals)), float(max(vals))


# ---------------------------------------------------------------------------
# bivariate helpers
# ---------------------------------------------------------------------------

def as_poly2(c) -> np.ndarray:
    a = np.atleast_2d(np.asarray(c, dtype=float))
    if a.ndim != 2:
        raise ValueError("2-D coefficient array expected")
    # trim all-zero trailing rows/columns
    while a.shape[0] > 1 and not np.any(a[-1]):
        a = a[:-1]
    while a.shape[1] > 1 and not np.any(a[:, -1]):
        a = a[:, :-1]
    return a


def p2eval(c, x, y):
    return npoly.polyval2d(x, y, as_poly2(c))


def p2dx(c):
    c = as_poly2(c)
    if c.shape[0] == 1:
        return np.zeros((1, 1))
    return as_poly2(npoly.polyder(c, axis=0))


def p2dy(c):
    c = as_poly2(c)
    if c.shape[1] == 1:
        return np.zeros((1, 1))
    return as_poly2(npoly.polyder(c, axis=1))


def p2add(a, b):
    a = as_poly2(a)
    b = as_poly2(b)
    n = max(a.shape[0], b.shape[0])
    m = max(a.shape[1], b.shape[1])
    out = np.zeros((n, m))
    out[: a.shape[0], : a.shape[1]] += a
    out[: b.shape[0], : b.shape[1]] += b
    return as_poly2(out)


def p2sub(a, b):
    return p2add(a, p2scale(b, -1.0))


def p2scale(a, s):
    return as_poly2(as_poly2(a) * float(s))


def p2compose_y(c, g):
    """1-D coefficients in x of c(x, g(x))."""
    c = as_poly2(c)
    g = as_poly(g)
    acc = np.zeros(1)
    gpow = np.ones(1)
    for j in range(c.shape[1]):
        acc = padd(acc, pmul(c[:, j], gpow))
        if j < c.shape[1] - 1:
            gpow = pmul(gpow, g)
    return acc


def p2at_x(c, x0):
    """1-D coefficients in y of c(x0, y)."""
    c = as_poly2(c)
    return as_poly(npoly.polyval(float(x0), c))


def p2at_y(c, y0):
    """1-D coefficients in x of c(x, y0)."""
    c = as_poly2(c)
    return as_poly(npoly.polyval(float(y0), c.T))


def p2affine(a0=0.0, ax=0.0, ay=0.0):
    """Coefficients of a0 + ax*x + ay*y."""
    return as_poly2([[a0, ay], [ax, 0.0]])


def p2is_constant(c, tol=0.0):
    c = as_poly2(c)
    mask = np.ones(c.shape, dtype=bool)
    mask[0, 0] = False
    return bool(np.all(np.abs(c[mask]) <= tol))


def depends_only_on_x(c, tol=0.0):
    c = as_poly2(c)
    return bool(np.all(np.abs(c[:, 1:]) <= tol)) if c.shape[1] > 1 else True


def depends_only_on_y(c, tol=0.0):
    c = as_poly2(c)
    return bool(np.all(np.abs(c[1:, :]) <= tol)) if c.shape[0] > 1 else True
