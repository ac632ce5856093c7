import numpy as np
import pytest

from matmoments import so3
from matmoments.errors import NonOrthogonalRotation, TriangleViolation
from matmoments.harmonics import evaluate_harmonics

from conftest import random_rotation


def test_rotation_validation():
    with pytest.raises(NonOrthogonalRotation):
        so3.Rotation(np.eye(3) + 0.01)
    with pytest.raises(NonOrthogonalRotation):
        so3.Rotation(np.diag([1.0, 1.0, -1.0]))  # det -1 goes in parity
    g = so3.Rotation(np.eye(3), parity=-1)
    assert np.array_equal(g.apply([1.0, 0.0, 0.0]), [-1.0, 0.0, 0.0])


def test_generator_structure():
    for l in range(7):
        lx, ly, lz = so3.generators(l)
        for m in (lx, ly, lz):
            assert np.abs(m + m.T).max() < 1e-12
        assert np.abs(lx @ ly - ly @ lx - lz).max() < 1e-12
        assert np.abs(ly @ lz - lz @ ly - lx).max() < 1e-12
        assert np.abs(lz @ lx - lx @ lz - ly).max() < 1e-12
        casimir = lx @ lx + ly @ ly + lz @ lz
        assert np.abs(casimir + l * (l + 1) * np.eye(2 * l + 1)).max() < 1e-10


def test_degree_one_generators_are_classical():
    lx, ly, lz = so3.generators(1)
    assert np.array_equal(lx, [[0, 0, 0], [0, 0, -1], [0, 1, 0]])
    assert np.array_equal(ly, [[0, 0, 1], [0, 0, 0], [-1, 0, 0]])
    assert np.array_equal(lz, [[0, -1, 0], [1, 0, 0], [0, 0, 0]])


def test_wigner_identity_and_degree_one():
    rng = np.random.default_rng(0)
    g = random_rotation(rng)
    for l in (0, 2, 5):
        assert np.allclose(so3.wigner_real(l, so3.Rotation(np.eye(3))),
                           np.eye(2 * l + 1))
    assert np.allclose(so3.wigner_real(1, g), g.matrix)


def test_wigner_covariance_and_orthogonality():
    rng = np.random.default_rng(1)
    for trial in range(100):
        l = int(rng.integers(0, 7))
        g = random_rotation(rng)
        r = rng.normal(size=3)
        rho = so3.wigner_real(l, g)
        lhs = evaluate_harmonics(g.apply(r), l)[l]
        rhs = rho @ evaluate_harmonics(r, l)[l]
        scale = max(1.0, np.linalg.norm(rhs))
        assert np.abs(lhs - rhs).max() <= 1e-10 * scale
        assert np.abs(rho.T @ rho - np.eye(2 * l + 1)).max() < 1e-10


def test_wigner_homomorphism():
    rng = np.random.default_rng(2)
    for trial in range(30):
        l = int(rng.integers(0, 7))
        g, h = random_rotation(rng), random_rotation(rng)
        lhs = so3.wigner_real(l, g.compose(h))
        rhs = so3.wigner_real(l, g) @ so3.wigner_real(l, h)
        assert np.abs(lhs - rhs).max() <= 1e-9


def test_wigner_parity():
    rng = np.random.default_rng(3)
    g = random_rotation(rng)
    flipped = so3.Rotation(g.matrix, parity=-1)
    for l in range(5):
        sign = (-1) ** l
        assert np.allclose(so3.wigner_real(l, flipped),
                           sign * so3.wigner_real(l, g))
        # consistency with harmonics of the reflected point
        r = rng.normal(size=3)
        lhs = evaluate_harmonics(flipped.apply(r), l)[l]
        rhs = so3.wigner_real(l, flipped) @ evaluate_harmonics(r, l)[l]
        assert np.abs(lhs - rhs).max() < 1e-10


def test_cg_trivial_coupling_is_identity():
    for l in range(4):
        block = so3.cg_block(0, l, l)
        assert np.abs(block[:, 0, :] - np.eye(2 * l + 1)).max() < 1e-12
        block = so3.cg_block(l, 0, l)
        assert np.abs(block[:, :, 0] - np.eye(2 * l + 1)).max() < 1e-12


def test_cg_dot_and_cross(cg_table_3):
    rng = np.random.default_rng(4)
    v, w = rng.normal(size=3), rng.normal(size=3)
    dot = so3.cg_product(v, w, 1, 1, 0, cg_table_3)[0]
    assert abs(dot - (v @ w) / np.sqrt(3.0)) < 1e-12
    cross = so3.cg_product(v, w, 1, 1, 1, cg_table_3)
    assert np.abs(cross - np.cross(v, w) / np.sqrt(2.0)).max() < 1e-12
    # coupling a vector with itself into degree 1 vanishes
    assert np.abs(so3.cg_product(v, v, 1, 1, 1, cg_table_3)).max() < 1e-14


def test_cg_bilinear_and_zero(cg_table_3):
    rng = np.random.default_rng(5)
    x, y = rng.normal(size=5), rng.normal(size=7)
    zero = so3.cg_product(np.zeros(5), y, 2, 3, 2, cg_table_3)
    assert np.abs(zero).max() == 0.0
    a = so3.cg_product(2.0 * x, y, 2, 3, 2, cg_table_3)
    b = 2.0 * so3.cg_product(x, y, 2, 3, 2, cg_table_3)
    assert np.allclose(a, b, rtol=1e-14)


def test_cg_rows_orthonormal_and_covariant(cg_table_3):
    rng = np.random.default_rng(6)
    for (l1, l2, l3), block in cg_table_3._blocks.items():
        flat = block.reshape(2 * l3 + 1, -1)
        assert np.abs(flat @ flat.T - np.eye(2 * l3 + 1)).max() < 1e-10
        g = random_rotation(rng)
        x, y = rng.normal(size=2 * l1 + 1), rng.normal(size=2 * l2 + 1)
        lhs = so3.cg_product(so3.wigner_real(l1, g) @ x,
                             so3.wigner_real(l2, g) @ y, l1, l2, l3, cg_table_3)
        rhs = so3.wigner_real(l3, g) @ so3.cg_product(x, y, l1, l2, l3, cg_table_3)
        assert np.abs(lhs - rhs).max() < 1e-9


def test_cg_triangle_violation(cg_table_3):
    with pytest.raises(TriangleViolation):
        cg_table_3.block(1, 1, 3)
    with pytest.raises(TriangleViolation):
        so3.cg_block(2, 1, 0)


def test_cg_schur_uniqueness(cg_table_3):
    # independent second construction: the intertwiner equation
    # rho3(g) X = X (rho1 x rho2)(g) for a handful of random rotations has a
    # one-dimensional solution space; its basis vector must match our block
    # up to a single global sign
    rng = np.random.default_rng(7)
    for (l1, l2, l3) in [(1, 1, 1), (2, 1, 2), (2, 2, 3), (3, 2, 1)]:
        d1, d2, d3 = 2 * l1 + 1, 2 * l2 + 1, 2 * l3 + 1
        rows = []
        for _ in range(4):
            g = random_rotation(rng)
            r1, r2, r3 = (so3.wigner_real(l, g) for l in (l1, l2, l3))
            kron12 = np.kron(r1, r2)
            # constraint: r3 @ X - X @ kron12 = 0, X of shape (d3, d1*d2)
            rows.append(np.kron(r3, np.eye(d1 * d2))
                        - np.kron(np.eye(d3), kron12.T))
        system = np.concatenate(rows, axis=0)
        _, s, vt = np.linalg.svd(system)
        null_dim = int(np.sum(s < 1e-8 * s[0]))
        assert null_dim == 1
        independent = vt[-1].reshape(d3, d1, d2)
        ours = cg_table_3.block(l1, l2, l3)
        cos = np.sum(independent * ours) / (
            np.linalg.norm(independent) * np.linalg.norm(ours))
        assert abs(abs(cos) - 1.0) < 1e-10
