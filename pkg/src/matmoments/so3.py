"""Irreducible SO(3)/O(3) representations on the real harmonic basis.

Provides, for every degree ``l``:

* the antisymmetric generator matrices of infinitesimal rotations,
* rotation (Wigner) matrices ``rho_l(g)`` via the matrix exponential,
* real Clebsch-Gordan coefficient blocks coupling two degrees into a third.

Everything is expressed in the harmonic basis fixed by
:mod:`matmoments.harmonics`, so ``Y_l(g r) = rho_l(g) Y_l(r)`` holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.spatial.transform import Rotation as _ScipyRotation

from .errors import NonOrthogonalRotation, TriangleViolation
from .harmonics import harmonic_polynomials

ORTHOGONALITY_TOL = 1e-10


@dataclass(frozen=True)
class Rotation:
    """Element of O(3): a proper rotation matrix plus a parity sign.

    ``parity == -1`` means the element is the rotation composed with -Id.
    """

    matrix: np.ndarray
    parity: int = 1

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        if m.shape != (3, 3):
            raise NonOrthogonalRotation(f"expected 3x3 matrix, got {m.shape}")
        if np.abs(m.T @ m - np.eye(3)).max() > ORTHOGONALITY_TOL:
            raise NonOrthogonalRotation("matrix is not orthogonal within 1e-10")
        if np.linalg.det(m) < 0:
            raise NonOrthogonalRotation(
                "matrix has determinant -1; store the sign in parity instead"
            )
        if self.parity not in (-1, 1):
            raise ValueError("parity must be +1 or -1")

    def apply(self, points):
        """Apply to points of shape (..., 3)."""
        out = np.asarray(points, dtype=float) @ self.matrix.T
        return -out if self.parity == -1 else out

    def compose(self, other: "Rotation") -> "Rotation":
        return Rotation(self.matrix @ other.matrix, self.parity * other.parity)

    @staticmethod
    def random(rng, parity=1) -> "Rotation":
        q = rng.normal(size=4)
        return Rotation(_ScipyRotation.from_quat(q / np.linalg.norm(q)).as_matrix(), parity)


def random_rotation(seed=0, parity=1) -> Rotation:
    return Rotation.random(np.random.default_rng(seed), parity=parity)


@lru_cache(maxsize=None)
def generators(l):
    """Antisymmetric generators (Lx, Ly, Lz) of degree l.

    Defined by d/dt Y_l(exp(t l_k) r) = L_k Y_l(r), i.e. the matrices of the
    rotational vector fields on the harmonic component polynomials.  They
    satisfy [Lx, Ly] = Lz (and cyclic) and Lx^2+Ly^2+Lz^2 = -l(l+1) Id.
    """
    exponents, coeffs = harmonic_polynomials(l)[l]
    index = {tuple(e): i for i, e in enumerate(exponents.tolist())}

    def field_matrix(minus_axis, plus_axis):
        # vector field  (-u dv + v du) with u = coord[minus_axis], v = coord[plus_axis]
        out = np.zeros_like(coeffs)
        for col, (i, j, k) in enumerate(exponents.tolist()):
            e = [i, j, k]
            for sign, d_axis, m_axis in ((-1.0, plus_axis, minus_axis), (1.0, minus_axis, plus_axis)):
                if e[d_axis] == 0:
                    continue
                mono = e.copy()
                mono[d_axis] -= 1
                mono[m_axis] += 1
                out[:, index[tuple(mono)]] += sign * e[d_axis] * coeffs[:, col]
        return out

    # D_x = -z d/dy + y d/dz, D_y = -x d/dz + z d/dx, D_z = -y d/dx + x d/dy
    mats = []
    for minus_axis, plus_axis in ((2, 1), (0, 2), (1, 0)):
        d_coeffs = field_matrix(minus_axis, plus_axis)
        sol, residual, *_ = np.linalg.lstsq(coeffs.T, d_coeffs.T, rcond=None)
        mats.append(sol.T)
    return tuple(m for m in mats)


def wigner_real(l, g: Rotation):
    """Rotation matrix rho_l(g) on the degree-l harmonic basis.

    Computed as the matrix exponential of the axis-angle contraction of the
    generators; for parity -1 the result picks up the factor (-1)^l.
    """
    if not isinstance(g, Rotation):
        g = Rotation(np.asarray(g))
    if l == 0:
        rho = np.eye(1)
    elif l == 1:
        rho = g.matrix.copy()
    else:
        rotvec = _ScipyRotation.from_matrix(g.matrix).as_rotvec()
        lx, ly, lz = generators(l)
        rho = scipy.linalg.expm(rotvec[0] * lx + rotvec[1] * ly + rotvec[2] * lz)
    if g.parity == -1 and l % 2 == 1:
        rho = -rho
    return rho


def block_diag_wigner(degrees, g: Rotation):
    """Block-diagonal rho over a list of degrees (with repetitions allowed)."""
    return scipy.linalg.block_diag(*[wigner_real(l, g) for l in degrees])


# ---------------------------------------------------------------------------
# Weight bases and Clebsch-Gordan blocks
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _weight_basis(l):
    """Unitary U with columns = eigenvectors of the weight operator.

    The weight (quantization) axis is x, matching the harmonic basis
    convention.  Column m (ordered m = -l..l) satisfies the standard ladder
    phase convention: <m+1| J+ |m> > 0 with J+ = i Ly - Lz.
    """
    lx, ly, lz = generators(l)
    j3 = 1j * lx
    evals, vecs = np.linalg.eigh(j3)
    order = np.argsort(evals)
    vecs = vecs[:, order]
    ms = np.rint(evals[order]).astype(int)
    assert list(ms) == list(range(-l, l + 1))
    anchor = vecs[np.argmax(np.abs(vecs[:, 0])), 0]
    vecs[:, 0] *= np.conj(anchor) / abs(anchor)
    jplus = 1j * ly - lz
    for col in range(2 * l):
        c = np.vdot(vecs[:, col + 1], jplus @ vecs[:, col])
        vecs[:, col + 1] *= c / abs(c)
    return vecs


def _ladder_factors(l, ms, raise_op):
    ms = np.asarray(ms, dtype=float)
    if raise_op:
        return np.sqrt((l - ms) * (l + ms + 1))
    return np.sqrt((l + ms) * (l - ms + 1))


def _apply_ladder_pair(c, l1, l2, raise_op):
    """Apply J+/J- of the tensor product to coefficients c[m1, m2]."""
    out = np.zeros_like(c)
    m1 = np.arange(-l1, l1 + 1)
    m2 = np.arange(-l2, l2 + 1)
    f1 = _ladder_factors(l1, m1, raise_op)
    f2 = _ladder_factors(l2, m2, raise_op)
    if raise_op:
        out[1:, :] += c[:-1, :] * f1[:-1, None]
        out[:, 1:] += c[:, :-1] * f2[None, :-1]
    else:
        out[:-1, :] += c[1:, :] * f1[1:, None]
        out[:, :-1] += c[:, 1:] * f2[None, 1:]
    return out


@lru_cache(maxsize=None)
def cg_block(l1, l2, l3):
    """Real Clebsch-Gordan block B of shape (2l3+1, 2l1+1, 2l2+1).

    Rows are orthonormal and intertwine the representations:
    ``einsum('kij,i,j->k', B, rho_l1(g) x, rho_l2(g) y) = rho_l3(g) .``
    Each (l1, l2, l3) block is unique up to sign (Schur); the sign makes the
    first nonzero entry positive.
    """
    if not abs(l1 - l2) <= l3 <= l1 + l2:
        raise TriangleViolation(f"({l1}, {l2}, {l3}) violates |l1-l2| <= l3 <= l1+l2")
    d1, d2, d3 = 2 * l1 + 1, 2 * l2 + 1, 2 * l3 + 1

    # Highest-weight vector: null space of the raising operator restricted to
    # the weight-l3 anti-diagonal of the (m1, m2) grid.
    grid = [(i1, i2) for i1 in range(d1) for i2 in range(d2)
            if (i1 - l1) + (i2 - l2) == l3]
    lifted = [(i1, i2) for i1 in range(d1) for i2 in range(d2)
              if (i1 - l1) + (i2 - l2) == l3 + 1]
    lift_index = {pos: row for row, pos in enumerate(lifted)}
    restricted = np.zeros((max(len(lifted), 1), len(grid)))
    for col, (i1, i2) in enumerate(grid):
        basis = np.zeros((d1, d2))
        basis[i1, i2] = 1.0
        up = _apply_ladder_pair(basis, l1, l2, raise_op=True)
        for pos, row in lift_index.items():
            restricted[row, col] = up[pos]
    _, s, vt = np.linalg.svd(restricted)
    null_mask = np.zeros(len(grid), dtype=bool)
    rank = int(np.sum(s > 1e-10 * (s[0] if s.size else 1.0))) if lifted else 0
    null_space = vt[rank:]
    assert null_space.shape[0] == 1, (l1, l2, l3, null_space.shape)
    hw = null_space[0]
    first = hw[np.argmax(np.abs(hw) > 1e-12)]
    hw = hw * np.sign(first)

    # Generate all weights of the l3 copy by lowering.
    rows_weight = np.zeros((d3, d1, d2))
    current = np.zeros((d1, d2))
    for col, (i1, i2) in enumerate(grid):
        current[i1, i2] = hw[col]
    rows_weight[-1] = current
    for m3 in range(l3, -l3, -1):
        current = _apply_ladder_pair(current, l1, l2, raise_op=False)
        current /= np.sqrt((l3 + m3) * (l3 - m3 + 1))
        rows_weight[m3 - 1 + l3] = current

    # Back to the real harmonic bases on all three factors.
    u1, u2, u3 = _weight_basis(l1), _weight_basis(l2), _weight_basis(l3)
    block = np.einsum("km,mij->kij", u3,
                      np.einsum("mab,ia,jb->mij", rows_weight, u1.conj(), u2.conj()))

    # The block spans a real subspace; remove the residual global phase.
    flat = block.ravel()
    phase = flat[np.argmax(np.abs(flat))]
    block = block * np.conj(phase / abs(phase))
    assert np.abs(block.imag).max() < 1e-8, (l1, l2, l3, np.abs(block.imag).max())
    block = block.real
    flat = block.ravel()
    first = flat[np.argmax(np.abs(flat) > 1e-12)]
    block = block * np.sign(first)
    return block


@dataclass
class CgTable:
    """Precomputed real Clebsch-Gordan blocks for all degrees <= l_max."""

    l_max: int
    _blocks: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for l1 in range(self.l_max + 1):
            for l2 in range(self.l_max + 1):
                for l3 in range(abs(l1 - l2), min(l1 + l2, self.l_max) + 1):
                    self._blocks[(l1, l2, l3)] = cg_block(l1, l2, l3)

    def block(self, l1, l2, l3):
        try:
            return self._blocks[(l1, l2, l3)]
        except KeyError:
            if not abs(l1 - l2) <= l3 <= l1 + l2:
                raise TriangleViolation(
                    f"({l1}, {l2}, {l3}) violates |l1-l2| <= l3 <= l1+l2"
                ) from None
            raise TriangleViolation(
                f"degrees ({l1}, {l2}, {l3}) exceed table l_max={self.l_max}"
            ) from None


def build_cg_table(l_max) -> CgTable:
    """Build the coupling table for all degree triples up to l_max."""
    return CgTable(l_max)


def cg_product(x, y, l1, l2, l3, table: CgTable):
    """Couple x in degree l1 with y in degree l2 into degree l3.

    Bilinear and covariant; supports leading batch/channel axes on x and y.
    """
    block = table.block(l1, l2, l3)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.einsum("kij,...i,...j->...k", block, x, y)
