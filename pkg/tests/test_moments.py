import numpy as np
import pytest

from matmoments import so3
from matmoments.errors import ShapeMismatch, TriangleViolation, UnknownColor
from matmoments.harmonics import evaluate_harmonics
from matmoments.moments import (BlockLayout, ColoredConfig, assemble_block,
                                block_traces, chain_product, iota_embed,
                                layout_rotation, moment_matrix,
                                multiply_blocks)

from conftest import golden_3x3, golden_5x5, random_config, random_rotation


def single_point(r):
    return ColoredConfig([0], [r], 1)


def test_iota_zero_and_linearity():
    assert np.abs(iota_embed(1, 1, 2, np.zeros(5)).data).max() == 0.0
    rng = np.random.default_rng(0)
    v, w = rng.normal(size=5), rng.normal(size=5)
    lhs = iota_embed(2, 1, 2, 2 * v + w).data
    rhs = 2 * iota_embed(2, 1, 2, v).data + iota_embed(2, 1, 2, w).data
    assert np.abs(lhs - rhs).max() < 1e-12


def test_iota_triangle_violation():
    with pytest.raises(TriangleViolation):
        iota_embed(1, 1, 3, np.zeros(7))


def test_iota_covariance_and_cross_degree_orthogonality():
    rng = np.random.default_rng(1)
    for (a, b) in [(1, 1), (2, 1), (2, 3)]:
        g = random_rotation(rng)
        ra = so3.wigner_real(a, g)
        rb = so3.wigner_real(b, g)
        for l in range(abs(a - b), a + b + 1):
            v = rng.normal(size=2 * l + 1)
            lhs = iota_embed(a, b, l, so3.wigner_real(l, g) @ v).data
            rhs = rb @ iota_embed(a, b, l, v).data @ ra.T
            assert np.abs(lhs - rhs).max() < 1e-10
        for l1 in range(abs(a - b), a + b + 1):
            for l2 in range(l1 + 1, a + b + 1):
                m1 = iota_embed(a, b, l1, rng.normal(size=2 * l1 + 1)).data
                m2 = iota_embed(a, b, l2, rng.normal(size=2 * l2 + 1)).data
                assert abs(np.sum(m1 * m2)) < 1e-10 * np.linalg.norm(m1) * np.linalg.norm(m2)


def test_golden_3x3_matrices():
    rng = np.random.default_rng(2)
    for _ in range(20):
        r = rng.normal(size=3)
        cfg = single_point(r)
        for l in range(3):
            got = moment_matrix(cfg, 0, 1, 1, l).data
            assert np.abs(got - golden_3x3(l, *r)).max() < 1e-12


def test_golden_5x5_matrices():
    rng = np.random.default_rng(3)
    for _ in range(20):
        r = rng.normal(size=3)
        cfg = single_point(r)
        for l in range(5):
            got = moment_matrix(cfg, 0, 2, 2, l).data
            scale = max(1.0, np.abs(golden_5x5(l, *r)).max())
            assert np.abs(got - golden_5x5(l, *r)).max() < 1e-12 * scale


def test_spec_examples():
    # single point on the x axis, 3x3 degree-2 moment
    got = moment_matrix(single_point((1.0, 0.0, 0.0)), 0, 1, 1, 2).data
    assert np.abs(got - np.diag([2 / 3, -1 / 3, -1 / 3])).max() < 1e-14
    # unit coefficient at degree zero embeds as the identity
    assert np.abs(iota_embed(1, 1, 0, [1.0]).data - np.eye(3)).max() < 1e-14
    cross = iota_embed(1, 1, 1, np.array([0.3, -0.7, 1.1])).data
    assert np.abs(cross - golden_3x3(1, 0.3, -0.7, 1.1)).max() < 1e-14


def test_algebraic_identities():
    rng = np.random.default_rng(4)
    for _ in range(100):
        r = rng.normal(size=3)
        r2 = r @ r
        cfg = single_point(r)
        m1 = moment_matrix(cfg, 0, 1, 1, 1).data
        m2 = moment_matrix(cfg, 0, 1, 1, 2).data
        assert np.abs(m1 @ m1 - (m2 - (2 / 3) * r2 * np.eye(3))).max() < 1e-12 * max(1, r2)
        n1 = moment_matrix(cfg, 0, 2, 2, 1).data
        n2 = moment_matrix(cfg, 0, 2, 2, 2).data
        assert np.abs(n2 - (n1 @ n1 + 2 * r2 * np.eye(5))).max() < 1e-12 * max(1, r2) ** 2


def test_moment_matrix_additivity_and_errors():
    rng = np.random.default_rng(5)
    cfg = random_config(rng, 6, n_colors=2)
    with pytest.raises(UnknownColor):
        moment_matrix(cfg, 5, 1, 1, 1)
    empty = ColoredConfig(np.zeros(0, dtype=int), np.zeros((0, 3)), 1)
    assert np.abs(moment_matrix(empty, 0, 1, 1, 1).data).max() == 0.0
    # additive over disjoint point sets
    a = ColoredConfig([0, 0], cfg.positions[:2], 1)
    b = ColoredConfig([0], cfg.positions[2:3], 1)
    ab = ColoredConfig([0, 0, 0], cfg.positions[:3], 1)
    lhs = moment_matrix(ab, 0, 2, 1, 2).data
    rhs = moment_matrix(a, 0, 2, 1, 2).data + moment_matrix(b, 0, 2, 1, 2).data
    assert np.abs(lhs - rhs).max() < 1e-12


def test_moment_matrix_radial_weighting():
    cfg = single_point((0.6, -0.8, 0.0))  # radius 1
    plain = moment_matrix(cfg, 0, 1, 1, 2, radial=None).data
    weighted = moment_matrix(cfg, 0, 1, 1, 2, radial=lambda r: r ** 2).data
    assert np.abs(plain - weighted).max() < 1e-14
    scaled = moment_matrix(single_point((1.2, -1.6, 0.0)), 0, 1, 1, 2,
                           radial=lambda r: 1.0 / r ** 2).data
    assert np.abs(scaled - plain).max() < 1e-12


def test_chain_product_values():
    # two orthogonal unit points: squared norm of the vector sum is 2
    cfg = ColoredConfig([0, 0], [[1, 0, 0], [0, 1, 0]], 1)
    chain = chain_product([moment_matrix(cfg, 0, 0, 1, 1),
                           moment_matrix(cfg, 0, 1, 0, 1)])
    assert abs(chain.as_vector()[0] - 2.0) < 1e-12
    # antipodal pair sums to zero
    anti = ColoredConfig([0, 0], [[0, 0, 1], [0, 0, -1]], 1)
    chain0 = chain_product([moment_matrix(anti, 0, 0, 1, 1),
                            moment_matrix(anti, 0, 1, 0, 1)])
    assert abs(chain0.as_vector()[0]) < 1e-14
    # single factor is the embedded fundamental itself
    one = chain_product([moment_matrix(cfg, 0, 0, 1, 1)])
    assert np.abs(one.as_vector() - np.array([1.0, 1.0, 0.0])).max() < 1e-14


def test_chain_product_errors():
    cfg = ColoredConfig([0], [[1.0, 0.2, 0.3]], 1)
    with pytest.raises(ShapeMismatch):
        chain_product([])
    with pytest.raises(ShapeMismatch):
        chain_product([moment_matrix(cfg, 0, 1, 1, 1)])  # first factor a != 0
    with pytest.raises(ShapeMismatch):
        chain_product([moment_matrix(cfg, 0, 0, 1, 1),
                       moment_matrix(cfg, 0, 2, 1, 1)])


def test_chain_trace_identity():
    # trace of the squared antisymmetric embedding is -2 r^2
    rng = np.random.default_rng(6)
    r = rng.normal(size=3)
    m1 = moment_matrix(single_point(r), 0, 1, 1, 1).data
    assert abs(np.trace(m1 @ m1) + 2 * (r @ r)) < 1e-12
    m2 = moment_matrix(single_point(r), 0, 1, 1, 2).data
    assert abs(np.trace(m2)) < 1e-13


def test_chain_equivariance():
    rng = np.random.default_rng(7)
    for trial in range(50):
        cfg = random_config(rng, 6, n_colors=2)
        g = random_rotation(rng)
        n_fac = int(rng.integers(1, 4))
        degrees = [0] + list(rng.integers(0, 3, n_fac))
        chain = []
        ok = True
        for i in range(n_fac):
            a, b = degrees[i], degrees[i + 1]
            ls = list(range(abs(a - b), a + b + 1))
            l = int(rng.choice(ls))
            chain.append((a, b, l, int(rng.integers(0, 2))))
        def value(c):
            return chain_product([moment_matrix(c, col, a, b, l)
                                  for a, b, l, col in chain]).as_vector()
        lhs = value(cfg.transformed(g))
        rhs = so3.wigner_real(degrees[-1], g) @ value(cfg)
        scale = max(1.0, np.linalg.norm(rhs))
        assert np.abs(lhs - rhs).max() < 1e-9 * scale


def test_schur_factor_nonzero(cg_table_3):
    # the coupling content of a two-factor product is proportional to the
    # direct coupling of the underlying vectors, with a nonzero factor
    rng = np.random.default_rng(8)
    for (a, b, c, l1, l2) in [(0, 1, 1, 1, 2), (0, 2, 1, 2, 1), (0, 1, 2, 1, 1)]:
        x = rng.normal(size=2 * l1 + 1)
        y = rng.normal(size=2 * l2 + 1)
        first = iota_embed(a, b, l1, x)
        second = iota_embed(b, c, l2, y)
        chained = chain_product([first, second]).as_vector()
        for l3 in range(abs(l1 - l2), l1 + l2 + 1):
            if l3 != c:
                continue
            direct = so3.cg_product(y, x, l2, l1, l3, cg_table_3)
            denom = np.linalg.norm(direct)
            if denom < 1e-12:
                continue
            ratio = (chained @ direct) / denom ** 2
            assert abs(ratio) > 1e-6
            assert np.abs(chained - ratio * direct).max() < 1e-9 * max(1, abs(ratio))


def test_block_assembly_equivariance_and_traces():
    rng = np.random.default_rng(9)
    layout = BlockLayout((1, 2), mult=2)
    max_l = layout.max_degree()
    g = random_rotation(rng)
    fund = {l: rng.normal(size=(3, 2 * l + 1)) for l in range(max_l + 1)}
    fund_rot = {l: fund[l] @ so3.wigner_real(l, g).T for l in fund}
    weights = rng.normal(size=(layout.n_slots, layout.n_slots, max_l + 1, 3))
    a = assemble_block(layout, weights, fund, shift_by_id=True)
    a_rot = assemble_block(layout, weights, fund_rot, shift_by_id=True)
    p = layout_rotation(layout, g)
    scale = max(1.0, np.abs(a.data).max())
    assert np.abs(a_rot.data - p @ a.data @ p.T).max() < 1e-9 * scale

    prod = multiply_blocks([a, a, a], shift_by_id=True)
    prod_rot = multiply_blocks([a_rot, a_rot, a_rot], shift_by_id=True)
    t, t_rot = block_traces(prod), block_traces(prod_rot)
    assert len(t) == 2 * layout.mult ** 2
    assert np.abs(t - t_rot).max() < 1e-9 * max(1.0, np.abs(t).max())


def test_block_assembly_zero_weights_and_shape_errors():
    rng = np.random.default_rng(10)
    layout = BlockLayout((1,), mult=1)
    fund = {l: rng.normal(size=(1, 2 * l + 1)) for l in range(3)}
    zero = assemble_block(layout, np.zeros((1, 1, 3, 1)), fund, shift_by_id=False)
    assert np.abs(zero.data).max() == 0.0
    shifted = assemble_block(layout, np.zeros((1, 1, 3, 1)), fund, shift_by_id=True)
    prod = multiply_blocks([shifted, shifted], shift_by_id=True)
    assert np.abs(block_traces(prod)).max() == 0.0
    with pytest.raises(ShapeMismatch):
        assemble_block(layout, np.zeros((2, 1, 3, 1)), fund)


def test_block_single_degree_one_reproduces_cross_matrix():
    rng = np.random.default_rng(11)
    r = rng.normal(size=3)
    cfg = single_point(r)
    layout = BlockLayout((1,), mult=1)
    fund = {l: evaluate_harmonics(r, 2)[l][None, :] for l in range(3)}
    weights = np.zeros((1, 1, 3, 1))
    weights[0, 0, 1, 0] = 1.0
    a = assemble_block(layout, weights, fund)
    assert np.abs(a.data - golden_3x3(1, *r)).max() < 1e-12
