"""Line-oriented configuration files and the shipped fixture configurations.

File format: a header line ``n_points n_colors`` followed by ``n_points``
lines of ``color x y z`` (0-based integer color, decimal coordinates).
"""

from __future__ import annotations

import importlib.resources
from pathlib import Path

import numpy as np

from .errors import ParseError
from .moments import ColoredConfig


def parse_config_text(text) -> ColoredConfig:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("missing header 'n_points n_colors'", line=1)
    head = lines[0].split()
    if len(head) != 2:
        raise ParseError("header must be 'n_points n_colors'", line=1)
    try:
        n_points, n_colors = int(head[0]), int(head[1])
    except ValueError:
        raise ParseError("header fields must be integers", line=1) from None
    if n_points < 0 or n_colors < 1:
        raise ParseError("need n_points >= 0 and n_colors >= 1", line=1)
    colors = np.zeros(n_points, dtype=np.int64)
    positions = np.zeros((n_points, 3))
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != n_points:
        raise ParseError(
            f"expected {n_points} point lines, found {len(body)}", line=len(lines))
    for i, ln in enumerate(body):
        fields = ln.split()
        lineno = i + 2
        if len(fields) != 4:
            raise ParseError("point lines are 'color x y z'", line=lineno)
        try:
            color = int(fields[0])
        except ValueError:
            raise ParseError(f"bad color {fields[0]!r}", line=lineno) from None
        if not 0 <= color < n_colors:
            raise ParseError(
                f"color {color} outside palette of size {n_colors}", line=lineno)
        try:
            positions[i] = [float(v) for v in fields[1:]]
        except ValueError:
            raise ParseError("coordinates must be decimal numbers",
                             line=lineno) from None
        colors[i] = color
    return ColoredConfig(colors, positions, n_colors)


def read_config(path) -> ColoredConfig:
    return parse_config_text(Path(path).read_text())


def write_config(path, config: ColoredConfig):
    with open(path, "w") as fh:
        fh.write(f"{len(config)} {config.n_colors}\n")
        for c, pos in zip(config.colors, config.positions):
            fh.write("%d %.17g %.17g %.17g\n" % (c, pos[0], pos[1], pos[2]))


# ---------------------------------------------------------------------------
# Fixture configurations
# ---------------------------------------------------------------------------

def circle_config(turns, n_colors=1):
    """Points on the unit circle in the xy-plane at the given turn fractions."""
    angles = 2 * np.pi * np.asarray(turns, dtype=float)
    positions = np.stack([np.cos(angles), np.sin(angles),
                          np.zeros_like(angles)], axis=1)
    return ColoredConfig(np.zeros(len(angles), dtype=np.int64), positions, n_colors)


def five_point_circle_pair():
    """Five-point circle configurations sharing all pairwise angle sets.

    Both place points at multiples of 1/30 of a turn; the two index sets
    produce identical multisets of pairwise differences mod 30, so no
    3-body invariant can tell them apart.
    """
    a = circle_config(np.array([0, 1, 8, 11, 13]) / 30.0)
    b = circle_config(np.array([0, 10, 11, 13, 18]) / 30.0)
    return a, b


def four_point_circle_pair(alpha=0.4):
    """Parametric four-point circle pair with equal pairwise angle sets.

    For any angle ``alpha``, the angle multisets of
    {0, alpha, alpha + pi/2, pi} and {0, alpha, pi, alpha - pi/2} coincide.
    """
    tau = 2 * np.pi
    a = circle_config(np.array([0, alpha, alpha + np.pi / 2, np.pi]) / tau)
    b = circle_config(np.array([0, alpha, np.pi, alpha - np.pi / 2]) / tau)
    return a, b


def two_point_pair():
    """Two-point configurations with equal distances but different vector sum."""
    a = ColoredConfig([0, 0], [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]], 1)
    b = ColoredConfig([0, 0], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], 1)
    return a, b


def fixture_dir() -> Path:
    return Path(str(importlib.resources.files("matmoments"))) / "fixtures"


def fixture_pairs():
    """The shipped hard-to-distinguish configuration pairs."""
    return {
        "pair1": two_point_pair(),
        "pair2": four_point_circle_pair(),
        "pair3": five_point_circle_pair(),
    }


def write_fixture_files(target):
    """Write the fixture pairs as config files into a directory."""
    target = Path(target)
    target.mkdir(parents=True, exist_ok=True)
    for name, (a, b) in fixture_pairs().items():
        write_config(target / f"{name}a.cfg", a)
        write_config(target / f"{name}b.cfg", b)
