"""Shared fixtures: golden matrices and random draw helpers."""

import numpy as np
import pytest

from matmoments import so3
from matmoments.moments import ColoredConfig

SQ3 = np.sqrt(3.0)


# Golden closed forms for the low-degree moment matrices of a single point.

def golden_3x3(l, x, y, z):
    if l == 0:
        return np.eye(3)
    if l == 1:
        return np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]], dtype=float)
    if l == 2:
        return np.array([
            [(2 * x * x - y * y - z * z) / 3, x * y, x * z],
            [x * y, (2 * y * y - x * x - z * z) / 3, y * z],
            [x * z, y * z, (2 * z * z - x * x - y * y) / 3]])
    raise ValueError(l)


def _golden_5x5_d3(x, y, z):
    r2 = x * x + y * y + z * z
    d = np.zeros((5, 5))
    d[0, 1] = 3 * r2 * x - 5 * x ** 3
    d[0, 2] = 10 * z ** 3 - 6 * r2 * z
    d[0, 3] = 6 * x * x * y - 4 * y ** 3 + 6 * y * z * z
    d[0, 4] = 5 * SQ3 * (x * z * z - x * y * y)
    d[1, 2] = -6 * x * x * y - y ** 3 + 9 * y * z * z
    d[1, 3] = -6 * x * x * z + 9 * y * y * z - z ** 3
    d[1, 4] = 10 * SQ3 * x * y * z
    d[2, 3] = 10 * x ** 3 - 6 * r2 * x
    d[2, 4] = SQ3 * (r2 * y - 5 * x * x * y)
    d[3, 4] = -SQ3 * (r2 * z - 5 * x * x * z)
    return d


def _golden_5x5_d4(x, y, z):
    r2 = x * x + y * y + z * z
    d = np.zeros((5, 5))
    d[0, 1] = 70 * y * z * (y * y - z * z)
    d[0, 2] = -20 * x * y * (r2 - 7 * z * z)
    d[0, 3] = -20 * x * z * (r2 - 7 * y * y)
    d[0, 4] = -10 * SQ3 * y * z * (r2 - 7 * x * x)
    d[1, 2] = 10 * x * z * (2 * x * x + 9 * y * y - 5 * z * z)
    d[1, 3] = -10 * x * y * (2 * x * x - 5 * y * y + 9 * z * z)
    d[1, 4] = 5 * SQ3 * (6 * x * x * (y * y - z * z) - y ** 4 + z ** 4)
    d[2, 3] = -20 * y * z * (r2 - 7 * x * x)
    d[2, 4] = 10 * SQ3 * x * z * (7 * x * x - 3 * r2)
    d[3, 4] = 10 * SQ3 * x * y * (7 * x * x - 3 * r2)
    return d


def _golden_5x5_diag4(x, y, z):
    return np.array([
        4 * x ** 4 - 12 * x * x * y * y - 12 * x * x * z * z
        - 16 * y ** 4 + 108 * y * y * z * z - 16 * z ** 4,
        4 * x ** 4 - 12 * x * x * y * y - 12 * x * x * z * z
        + 19 * y ** 4 - 102 * y * y * z * z + 19 * z ** 4,
        -16 * x ** 4 - 12 * x * x * y * y + 108 * x * x * z * z
        + 4 * y ** 4 - 12 * y * y * z * z - 16 * z ** 4,
        -16 * x ** 4 + 108 * x * x * y * y - 12 * x * x * z * z
        - 16 * y ** 4 - 12 * y * y * z * z + 4 * z ** 4,
        24 * x ** 4 - 72 * x * x * y * y - 72 * x * x * z * z
        + 9 * y ** 4 + 18 * y * y * z * z + 9 * z ** 4])


def golden_5x5(l, x, y, z):
    r2 = x * x + y * y + z * z
    if l == 0:
        return np.eye(5)
    if l == 1:
        return np.array([
            [0, 2 * x, z, -y, 0],
            [-2 * x, 0, y, z, 0],
            [-z, -y, 0, x, -SQ3 * y],
            [y, -z, -x, 0, SQ3 * z],
            [0, 0, SQ3 * y, -SQ3 * z, 0]])
    if l == 2:
        return np.array([
            [-2 * x * x + y * y + z * z, 0, 3 * x * y, 3 * x * z, -2 * SQ3 * y * z],
            [0, -2 * x * x + y * y + z * z, -3 * x * z, 3 * x * y, SQ3 * (z * z - y * y)],
            [3 * x * y, -3 * x * z, x * x - 2 * y * y + z * z, 3 * y * z, SQ3 * x * z],
            [3 * x * z, 3 * x * y, 3 * y * z, x * x + y * y - 2 * z * z, SQ3 * x * y],
            [-2 * SQ3 * y * z, SQ3 * (z * z - y * y), SQ3 * x * z, SQ3 * x * y,
             2 * x * x - y * y - z * z]])
    if l == 3:
        d = _golden_5x5_d3(x, y, z)
        return d - d.T
    if l == 4:
        d = _golden_5x5_d4(x, y, z)
        return d + np.diag(_golden_5x5_diag4(x, y, z)) + d.T
    raise ValueError(l)


def random_rotation(rng, parity=1):
    return so3.Rotation.random(rng, parity=parity)


def random_config(rng, n_points, n_colors=1, on_sphere=False):
    pos = rng.normal(size=(n_points, 3))
    if on_sphere:
        pos /= np.linalg.norm(pos, axis=1, keepdims=True)
    return ColoredConfig(rng.integers(0, n_colors, n_points), pos, n_colors)


@pytest.fixture(scope="session")
def cg_table_3():
    return so3.build_cg_table(3)
