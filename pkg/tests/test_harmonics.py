import numpy as np

from matmoments.harmonics import (evaluate_harmonics, evaluate_harmonics_flat,
                                  evaluate_harmonics_with_gradient)


def test_degree_zero_is_constant_one():
    for pt in ([0.0, 0.0, 0.0], [1.0, 2.0, 3.0]):
        assert evaluate_harmonics(np.array(pt), 0)[0][0] == 1.0


def test_degree_one_is_cartesian_coordinates():
    pt = np.array([0.3, -1.7, 2.4])
    assert np.allclose(evaluate_harmonics(pt, 1)[1], pt, atol=0, rtol=0)


def test_degree_two_components():
    x, y, z = 1.0, 2.0, 3.0
    expected = np.array([y * z, (y * y - z * z) / 2, x * z, x * y,
                         (2 * x * x - y * y - z * z) / (2 * np.sqrt(3))])
    got = evaluate_harmonics(np.array([x, y, z]), 2)[2]
    assert np.abs(got - expected).max() < 1e-14
    # the xy component evaluates to exactly 2 at (1, 2, 3)
    assert abs(got[3] - 2.0) < 1e-12


def test_homogeneity():
    rng = np.random.default_rng(0)
    r = rng.normal(size=3)
    vals_r = evaluate_harmonics(r, 6)
    vals_2r = evaluate_harmonics(2.0 * r, 6)
    for l in range(7):
        assert np.allclose(vals_2r[l], 2.0 ** l * vals_r[l], rtol=1e-13)


def test_constant_norm_on_sphere():
    rng = np.random.default_rng(1)
    us = rng.normal(size=(20, 3))
    us /= np.linalg.norm(us, axis=1, keepdims=True)
    vals = evaluate_harmonics(us, 8)
    for l in range(9):
        norms = np.linalg.norm(vals[l], axis=1)
        assert np.ptp(norms) < 1e-12
        expected = 1.0 if l <= 1 else 1.0 / np.sqrt(3.0)
        assert abs(norms[0] - expected) < 1e-12


def test_harmonicity():
    # components satisfy the Laplace equation: check by finite differences
    rng = np.random.default_rng(2)
    r = rng.normal(size=3)
    h = 1e-4
    for l in range(2, 6):
        lap = np.zeros(2 * l + 1)
        for axis in range(3):
            e = np.zeros(3)
            e[axis] = h
            lap += (evaluate_harmonics(r + e, l)[l]
                    + evaluate_harmonics(r - e, l)[l]
                    - 2 * evaluate_harmonics(r, l)[l]) / h ** 2
        assert np.abs(lap).max() < 1e-4


def test_flat_layout():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(4, 3))
    flat = evaluate_harmonics_flat(pts, 4)
    assert flat.shape == (4, 25)
    vals = evaluate_harmonics(pts, 4)
    for l in range(5):
        assert np.array_equal(flat[:, l * l:(l + 1) ** 2], vals[l])


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(4)
    pts = rng.normal(size=(3, 3))
    _, grads = evaluate_harmonics_with_gradient(pts, 5)
    h = 1e-6
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = h
        plus = evaluate_harmonics(pts + e, 5)
        minus = evaluate_harmonics(pts - e, 5)
        for l in range(6):
            fd = (plus[l] - minus[l]) / (2 * h)
            assert np.abs(grads[l][:, :, axis] - fd).max() < 1e-7
