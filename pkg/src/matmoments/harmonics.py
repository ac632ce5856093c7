"""Real solid harmonics as explicit homogeneous polynomials.

Each degree ``l`` gives a vector ``Y_l : R^3 -> R^(2l+1)`` whose components are
homogeneous degree-``l`` polynomials stored in monomial-coefficient form, so
evaluation, differentiation, and symbolic-level golden checks are exact up to
float rounding.

Basis convention
----------------
The component polynomials are Racah-normalized real solid harmonics taken
about the **x** axis (the x coordinate plays the role usually given to z),
reordered and rescaled so that the low-degree matrix embeddings in
:mod:`matmoments.moments` come out in integer-coefficient form:

===  =====================================================================
l    components, in order
===  =====================================================================
0    ``1``
1    ``x, y, z``
2    ``yz, (y^2 - z^2)/2, xz, xy, (2x^2 - y^2 - z^2)/(2*sqrt(3))``
>=3  ``scale * [s_l, c_l, s_(l-1), c_(l-1), ..., s_1, c_1, c_0]`` where
     ``s_m / c_m`` are the sine / cosine azimuthal components about x and
     ``scale = 1/sqrt(3)`` continues the degree-2 normalization
===  =====================================================================

For ``l <= 1`` the scale factor is 1.  Under this convention the degree-1
representation matrices are ordinary 3x3 rotation matrices acting on
``(x, y, z)``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

_SCALE_HIGH = 1.0 / np.sqrt(3.0)

# A polynomial is a dict {(i, j, k): coeff} for the monomial x^i y^j z^k.


def _poly_add(p, q, factor=1.0):
    out = dict(p)
    for mono, c in q.items():
        out[mono] = out.get(mono, 0.0) + factor * c
    return {m: c for m, c in out.items() if c != 0.0}


def _poly_shift(p, axis, factor=1.0):
    """Multiply a polynomial by x, y, or z (axis 0, 1, 2)."""
    out = {}
    for (i, j, k), c in p.items():
        mono = (i + (axis == 0), j + (axis == 1), k + (axis == 2))
        out[mono] = out.get(mono, 0.0) + factor * c
    return out


def _poly_mul_r2(p, factor=1.0):
    out = {}
    for axis in range(3):
        for mono, c in _poly_shift(_poly_shift(p, axis), axis).items():
            out[mono] = out.get(mono, 0.0) + factor * c
    return out


@lru_cache(maxsize=None)
def _solid_harmonics_z(l_max):
    """Racah-normalized real solid harmonics about z, as monomial dicts.

    Returns a list indexed by l of dicts {m: polynomial} for m = -l..l,
    built with the standard two-term recursions (diagonal step for
    |m| = l, vertical step in l for fixed m).
    """
    tables = [{0: {(0, 0, 0): 1.0}}]
    for l in range(l_max):
        prev = tables[l]
        below = tables[l - 1] if l >= 1 else {}
        nxt = {}
        diag = np.sqrt((2.0 if l == 0 else 1.0) * (2 * l + 1) / (2 * l + 2))
        top = prev[l]
        bot = prev[-l] if l > 0 else {}
        nxt[l + 1] = _poly_add(_poly_shift(top, 0, diag), _poly_shift(bot, 1, -diag))
        nxt[-(l + 1)] = _poly_add(_poly_shift(top, 1, diag), _poly_shift(bot, 0, diag))
        for m in range(-l, l + 1):
            denom = np.sqrt((l + 1 + m) * (l + 1 - m))
            term = _poly_shift(prev[m], 2, (2 * l + 1) / denom)
            if abs(m) <= l - 1:
                term = _poly_add(
                    term, _poly_mul_r2(below[m]), -np.sqrt((l + m) * (l - m)) / denom
                )
            nxt[m] = term
        tables.append(nxt)
    return tables


def _component_order(l):
    """Order of the about-x azimuthal indices used for degree l."""
    if l == 0:
        return [0]
    if l == 1:
        return [0, 1, -1]
    order = []
    for m in range(l, 0, -1):
        order.extend([-m, m])
    order.append(0)
    return order


@lru_cache(maxsize=None)
def harmonic_polynomials(l_max):
    """Monomial tables for Y_0 ... Y_{l_max}.

    Returns:
        List indexed by l of pairs ``(exponents, coeffs)`` where
        ``exponents`` is an int array of shape (n_monomials, 3) and
        ``coeffs`` has shape (2l+1, n_monomials), so that component c of
        Y_l is ``sum_m coeffs[c, m] * x^e[m,0] * y^e[m,1] * z^e[m,2]``.
    """
    about_z = _solid_harmonics_z(l_max)
    tables = []
    for l in range(l_max + 1):
        scale = 1.0 if l <= 1 else _SCALE_HIGH
        monos = {}
        rows = []
        for m in _component_order(l):
            # About-x version: evaluate the about-z polynomial at (y, z, x),
            # i.e. send the monomial exponents (i, j, k) to (k, i, j).
            poly = {(k, i, j): c * scale for (i, j, k), c in about_z[l][m].items()}
            rows.append(poly)
            for mono in poly:
                monos.setdefault(mono, len(monos))
        exponents = np.zeros((len(monos), 3), dtype=np.int64)
        for mono, idx in monos.items():
            exponents[idx] = mono
        coeffs = np.zeros((2 * l + 1, len(monos)))
        for c, poly in enumerate(rows):
            for mono, val in poly.items():
                coeffs[c, monos[mono]] = val
        tables.append((exponents, coeffs))
    return tables


def _monomial_values(points, exponents):
    # points (n, 3), exponents (M, 3) -> (n, M)
    n = points.shape[0]
    max_pow = int(exponents.max()) if exponents.size else 0
    pows = np.ones((max_pow + 1, n, 3))
    for p in range(1, max_pow + 1):
        pows[p] = pows[p - 1] * points
    idx = np.arange(3)
    return pows[exponents[:, 0], :, 0].T * pows[exponents[:, 1], :, 1].T * pows[exponents[:, 2], :, 2].T


def evaluate_harmonics(points, l_max):
    """Evaluate Y_l at points for all l <= l_max.

    Args:
        points: array of shape (n, 3) or (3,).

    Returns:
        List indexed by l of arrays of shape (n, 2l+1) (or (2l+1,) for a
        single input point).
    """
    points = np.asarray(points, dtype=float)
    single = points.ndim == 1
    pts = points[None, :] if single else points
    out = []
    for exponents, coeffs in harmonic_polynomials(l_max):
        vals = _monomial_values(pts, exponents) @ coeffs.T
        out.append(vals[0] if single else vals)
    return out


def evaluate_harmonics_flat(points, l_max):
    """Evaluate all harmonics, concatenated over l into (n, (l_max+1)^2)."""
    return np.concatenate(evaluate_harmonics(np.atleast_2d(points), l_max), axis=1)


@lru_cache(maxsize=None)
def _gradient_tables(l_max):
    """Per-l monomial tables of dY_l/dx, dY_l/dy, dY_l/dz."""
    tables = []
    for exponents, coeffs in harmonic_polynomials(l_max):
        per_axis = []
        for axis in range(3):
            e = exponents.copy()
            keep = e[:, axis] > 0
            d_coeffs = coeffs[:, keep] * exponents[keep, axis]
            e = e[keep]
            e[:, axis] -= 1
            per_axis.append((e, d_coeffs))
        tables.append(per_axis)
    return tables


def evaluate_harmonics_with_gradient(points, l_max):
    """Values and Cartesian gradients of Y_l at each point.

    Returns:
        Pair ``(values, grads)``: lists over l of arrays with shapes
        (n, 2l+1) and (n, 2l+1, 3).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    values = evaluate_harmonics(points, l_max)
    grads = []
    for l, per_axis in enumerate(_gradient_tables(l_max)):
        g = np.zeros((points.shape[0], 2 * l + 1, 3))
        for axis, (exponents, d_coeffs) in enumerate(per_axis):
            if exponents.shape[0]:
                g[:, :, axis] = _monomial_values(points, exponents) @ d_coeffs.T
        grads.append(g)
    return values, grads
