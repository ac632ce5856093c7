"""Wigner 3j values and real coupling matrices at high degree.

The library's generator-based coupling construction is exact but scales too
steeply for the benchmark degrees, so this module computes 3j symbols with
the classical three-term recursion over the output degree (seeded exactly at
the top degree, recursed downward, which is the numerically growing and
therefore stable direction) and converts them to couplings between
*standard-basis* real harmonics (order sin l .. sin 1, m=0, cos 1 .. cos l).

Used by the scaling benchmark only; the small-degree tables everywhere else
come from :mod:`matmoments.so3`.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import gammaln


def _log_fact(n):
    return gammaln(np.asarray(n, dtype=float) + 1.0)


def wigner3j_pair(l1, l2):
    """All 3j symbols (l1 l2 j; m1 m2 -m1-m2) for j = |l1-l2| .. l1+l2.

    Returns:
        Array of shape (l1+l2+1 - |l1-l2|, 2*l1+1, 2*l2+1); entries with
        j < max(|l1-l2|, |m1+m2|) are zero.
    """
    d1, d2 = 2 * l1 + 1, 2 * l2 + 1
    j_lo, j_hi = abs(l1 - l2), l1 + l2
    width = j_hi - j_lo + 1
    m1 = np.arange(-l1, l1 + 1)[:, None]
    m2 = np.arange(-l2, l2 + 1)[None, :]
    m3 = m1 + m2  # the third projection is -m3

    # Exact top seed: 3j(l1 l2 l1+l2; m1 m2 -m3).
    log_top = 0.5 * (
        _log_fact(2 * l1) + _log_fact(2 * l2)
        + _log_fact(l1 + l2 + m3) + _log_fact(l1 + l2 - m3)
        - _log_fact(2 * l1 + 2 * l2 + 1)
        - _log_fact(l1 + m1) - _log_fact(l1 - m1)
        - _log_fact(l2 + m2) - _log_fact(l2 - m2)
    )
    sign = np.where((l1 - l2 + m3) % 2 == 0, 1.0, -1.0)
    out = np.zeros((width, d1, d2))
    out[-1] = sign * np.exp(log_top)
    if width == 1:
        return out

    def a_coef(j):
        val = ((j * j - (l1 - l2) ** 2) * ((l1 + l2 + 1) ** 2 - j * j)
               * (j * j - m3 * m3)).astype(float)
        return np.sqrt(np.maximum(val, 0.0))

    def b_coef(j):
        return -(2 * j + 1) * (
            -m3 * float(l1 * (l1 + 1) - l2 * (l2 + 1))
            - j * (j + 1) * (m2 - m1)
        )

    # Downward recursion: (j+1) A(j) f(j-1) = -(j A(j+1) f(j+1) + B(j) f(j)).
    for j in range(j_hi, j_lo, -1):
        a_j = a_coef(j)
        upper = j * a_coef(j + 1) * out[j + 1 - j_lo] if j < j_hi else 0.0
        num = -(upper + b_coef(j) * out[j - j_lo])
        with np.errstate(invalid="ignore", divide="ignore"):
            f_prev = num / ((j + 1) * a_j)
        out[j - 1 - j_lo] = np.where((np.abs(m3) <= j - 1) & (a_j > 0), f_prev, 0.0)
    # Zero out sub-threshold rows (|m3| > j).
    for j in range(j_lo, j_hi + 1):
        out[j - j_lo][np.abs(m3) > j] = 0.0
    return out


def clebsch_gordan_pair(l1, l2):
    """Complex-basis CG values C^(j, m1+m2)_(l1 m1, l2 m2), same layout."""
    f = wigner3j_pair(l1, l2)
    j_lo = abs(l1 - l2)
    m1 = np.arange(-l1, l1 + 1)[:, None]
    m2 = np.arange(-l2, l2 + 1)[None, :]
    phase = np.where((l1 - l2 + m1 + m2) % 2 == 0, 1.0, -1.0)
    for idx in range(f.shape[0]):
        f[idx] *= phase * np.sqrt(2 * (j_lo + idx) + 1.0)
    return f


def _conversion(l, m):
    """Real/imag parts of the complex expansion of real harmonic index |m|.

    For the standard real basis (index k = -l..l; k>0 cosine, k<0 sine,
    k=0 axial), the complex unit vector |m> appears in real vectors at the
    returned (index, weight) pairs:  re part and im part of <...>.
    """
    # mirrors the usual condon-shortley combination
    if m < 0:
        return (abs(m) + l, 1.0 / np.sqrt(2)), (m + l, -1.0 / np.sqrt(2))
    if m == 0:
        return (l, 1.0), (l, 0.0)
    if m % 2 == 0:
        return (m + l, 1.0 / np.sqrt(2)), (-m + l, 1.0 / np.sqrt(2))
    return (m + l, -1.0 / np.sqrt(2)), (-m + l, -1.0 / np.sqrt(2))


@lru_cache(maxsize=8)
def _conversion_tables(l):
    idx_re = np.zeros(2 * l + 1, dtype=np.int64)
    w_re = np.zeros(2 * l + 1)
    idx_im = np.zeros(2 * l + 1, dtype=np.int64)
    w_im = np.zeros(2 * l + 1)
    for m in range(-l, l + 1):
        (ir, wr), (ii, wi) = _conversion(l, m)
        idx_re[m + l], w_re[m + l] = ir, wr
        idx_im[m + l], w_im[m + l] = ii, wi
    return idx_re, w_re, idx_im, w_im


def real_coupling_block(cg_pair, l1, l2, l3):
    """Real-basis coupling block (2l3+1, 2l1+1, 2l2+1) from complex values.

    Rows are orthonormal; basis order is the standard real one on all three
    factors.  Only the m3 >= 0 anti-diagonals of the complex table are
    consumed; for odd l1+l2+l3 the roles of the real and imaginary
    combinations swap.
    """
    j_lo = abs(l1 - l2)
    d1, d2, d3 = 2 * l1 + 1, 2 * l2 + 1, 2 * l3 + 1
    block = np.zeros((d3, d1, d2))
    i1re, w1re, i1im, w1im = _conversion_tables(l1)
    i2re, w2re, i2im, w2im = _conversion_tables(l2)
    odd = (l1 + l2 + l3) % 2 == 1
    cg = cg_pair[l3 - j_lo]
    for mu in range(0, l3 + 1):
        m2 = np.arange(max(-l2, mu - l1), min(l2, mu + l1) + 1)
        if m2.size == 0:
            continue
        m1 = mu - m2
        c = cg[m1 + l1, m2 + l2]
        t1, t2 = m1 + l1, m2 + l2
        # products of (re + i im) conversion pairs; target row mu+l3 collects
        # the real combination, row -mu+l3 the imaginary one
        pieces_re = [(i1re[t1], i2re[t2], w1re[t1] * w2re[t2] * c),
                     (i1im[t1], i2im[t2], -w1im[t1] * w2im[t2] * c)]
        pieces_im = [(i1re[t1], i2im[t2], w1re[t1] * w2im[t2] * c),
                     (i1im[t1], i2re[t2], w1im[t1] * w2re[t2] * c)]
        if odd:
            pieces_re, pieces_im = [(a, b, -w) for a, b, w in pieces_im], pieces_re
        if mu == 0:
            for a, b, w in pieces_re:
                np.add.at(block[l3], (a, b), w)
            continue
        scale = np.sqrt(2.0) if mu % 2 == 0 else -np.sqrt(2.0)
        for a, b, w in pieces_re:
            np.add.at(block[mu + l3], (a, b), scale * w)
        for a, b, w in pieces_im:
            np.add.at(block[-mu + l3], (a, b), scale * w)
    return block


try:
    from numba import njit as _njit
except ImportError:  # pragma: no cover - numba is a hard dependency
    _njit = None


def _fill_pair_py(cg, l1, l2, l3_max, out_t):
    """Scalar filler for the pair matrix, transposed layout (cols, d1*d2).

    Columns are visited in order and written in a single pass (zeros
    included), so the construction is one sequential sweep over the output
    no matter how sparse the coupling is; this is what keeps table building
    affordable at the largest benchmark degrees.
    """
    d2 = 2 * l2 + 1
    j_lo = abs(l1 - l2)
    sqrt2 = np.sqrt(2.0)
    inv_sqrt2 = 1.0 / sqrt2
    at = 0
    for l3 in range(j_lo, min(l1 + l2, l3_max) + 1):
        odd = (l1 + l2 + l3) % 2 == 1
        for k3 in range(2 * l3 + 1):
            col = at + k3
            out_t[col] = 0.0
            mu = abs(k3 - l3)
            want_sin = k3 < l3
            scale = 1.0 if mu == 0 else (sqrt2 if mu % 2 == 0 else -sqrt2)
            for m2 in range(max(-l2, mu - l1), min(l2, mu + l1) + 1):
                m1 = mu - m2
                c = cg[l3 - j_lo, m1 + l1, m2 + l2]
                if c == 0.0:
                    continue
                # complex -> real conversion entries for each factor
                if m1 < 0:
                    i1r, w1r, i1i, w1i = -m1 + l1, inv_sqrt2, m1 + l1, -inv_sqrt2
                elif m1 == 0:
                    i1r, w1r, i1i, w1i = l1, 1.0, l1, 0.0
                elif m1 % 2 == 0:
                    i1r, w1r, i1i, w1i = m1 + l1, inv_sqrt2, -m1 + l1, inv_sqrt2
                else:
                    i1r, w1r, i1i, w1i = m1 + l1, -inv_sqrt2, -m1 + l1, -inv_sqrt2
                if m2 < 0:
                    i2r, w2r, i2i, w2i = -m2 + l2, inv_sqrt2, m2 + l2, -inv_sqrt2
                elif m2 == 0:
                    i2r, w2r, i2i, w2i = l2, 1.0, l2, 0.0
                elif m2 % 2 == 0:
                    i2r, w2r, i2i, w2i = m2 + l2, inv_sqrt2, -m2 + l2, inv_sqrt2
                else:
                    i2r, w2r, i2i, w2i = m2 + l2, -inv_sqrt2, -m2 + l2, -inv_sqrt2
                # real/imag parts of the product conversion; for odd degree
                # sums the real and (negated) imaginary combinations swap
                w_rr = w1r * w2r * c
                w_ri = -w1i * w2i * c
                w_ir = w1r * w2i * c
                w_ii = w1i * w2r * c
                if want_sin:
                    if odd:
                        out_t[col, i1r * d2 + i2r] += scale * w_rr
                        out_t[col, i1i * d2 + i2i] += scale * w_ri
                    else:
                        out_t[col, i1r * d2 + i2i] += scale * w_ir
                        out_t[col, i1i * d2 + i2r] += scale * w_ii
                else:
                    if odd:
                        out_t[col, i1r * d2 + i2i] -= scale * w_ir
                        out_t[col, i1i * d2 + i2r] -= scale * w_ii
                    else:
                        out_t[col, i1r * d2 + i2r] += scale * w_rr
                        out_t[col, i1i * d2 + i2i] += scale * w_ri
        at += 2 * l3 + 1


if _njit is not None:
    _fill_pair_fast = _njit(cache=True)(_fill_pair_py)
else:  # pragma: no cover
    _fill_pair_fast = _fill_pair_py


def real_pair_matrix(l1, l2, l3_max, use_reference=False, dtype=np.float64):
    """Dense coupling matrix (d1*d2, sum of 2l3+1 over admissible l3 <= l3_max).

    Columns are orthonormal: applying it to a flattened outer product of two
    feature vectors yields the concatenated degree components.  Returned in
    column-major (Fortran) layout, which keeps both the construction writes
    and the subsequent skinny matrix product on the fast path.  The
    ``use_reference`` flag selects the per-block numpy construction instead
    of the jitted scalar filler (used to cross-check the two in tests).
    """
    cols = sum(2 * l3 + 1 for l3 in range(abs(l1 - l2), min(l1 + l2, l3_max) + 1))
    cg = clebsch_gordan_pair(l1, l2)
    if use_reference:
        out = np.empty(((2 * l1 + 1) * (2 * l2 + 1), cols))
        at = 0
        for l3 in range(abs(l1 - l2), min(l1 + l2, l3_max) + 1):
            block = real_coupling_block(cg, l1, l2, l3)
            out[:, at:at + 2 * l3 + 1] = block.reshape(2 * l3 + 1, -1).T
            at += 2 * l3 + 1
        return out
    out_t = np.empty((cols, (2 * l1 + 1) * (2 * l2 + 1)), dtype=dtype)
    _fill_pair_fast(cg.astype(dtype), l1, l2, l3_max, out_t)
    return out_t.T
