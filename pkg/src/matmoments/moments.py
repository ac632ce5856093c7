"""Matrix moments: degree vectors embedded as covariant matrices.

A degree-l vector can be packed into the (2b+1) x (2a+1) matrix block of
``Lin(H^a, H^b)`` whenever |a-b| <= l <= a+b.  Sums of embedded harmonics
over the points of one color give *moment matrices*; products of conforming
moment matrices are covariant, and traces of square blocks are invariant.

Embedding scale convention: the raw embedding built from the orthonormal
Clebsch-Gordan rows is Frobenius-isometric; a fixed per-(a, b, l) scale is
applied on top so the 3x3 (a=b=1) and 5x5 (a=b=2) matrices come out in the
classical integer-coefficient form (identity, cross-product matrix,
``r r^T - (r^2/3) Id``, ...).  Triples without a pinned scale use 1, and
(0, l, l) / (l, 0, l) embed as plain column / row vectors so that a
two-factor chain is exactly a scalar product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import so3
from .errors import ShapeMismatch, TriangleViolation, UnknownColor
from .harmonics import evaluate_harmonics

# Scales pinned by the low-degree golden matrices; everything else uses 1.
IOTA_SCALES = {
    (1, 1, 0): math.sqrt(3.0),
    (1, 1, 1): math.sqrt(2.0),
    (1, 1, 2): math.sqrt(2.0),
    (2, 2, 0): math.sqrt(5.0),
    (2, 2, 1): -math.sqrt(10.0),
    (2, 2, 2): -math.sqrt(42.0),
    (2, 2, 3): math.sqrt(120.0),
    (2, 2, 4): math.sqrt(3360.0),
}


@dataclass
class ColoredConfig:
    """A finite set of 3D points each tagged with a color index."""

    colors: np.ndarray
    positions: np.ndarray
    n_colors: int

    def __post_init__(self):
        self.colors = np.asarray(self.colors, dtype=np.int64).reshape(-1)
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        if self.colors.shape[0] != self.positions.shape[0]:
            raise ShapeMismatch("colors and positions disagree on the point count")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("positions must be finite")
        if self.colors.size and (self.colors.min() < 0 or self.colors.max() >= self.n_colors):
            raise UnknownColor(
                f"colors must lie in [0, {self.n_colors}); got range "
                f"[{self.colors.min()}, {self.colors.max()}]"
            )

    @classmethod
    def from_points(cls, points, n_colors=None):
        """Build from an iterable of ``(color, (x, y, z))`` pairs."""
        points = list(points)
        colors = np.array([c for c, _ in points], dtype=np.int64)
        positions = np.array([p for _, p in points], dtype=float).reshape(-1, 3)
        if n_colors is None:
            n_colors = int(colors.max()) + 1 if colors.size else 1
        return cls(colors, positions, n_colors)

    def __len__(self):
        return self.colors.shape[0]

    def of_color(self, color):
        if not 0 <= color < self.n_colors:
            raise UnknownColor(f"color {color} outside palette of size {self.n_colors}")
        return self.positions[self.colors == color]

    def transformed(self, g: so3.Rotation) -> "ColoredConfig":
        return ColoredConfig(self.colors.copy(), g.apply(self.positions), self.n_colors)


@dataclass
class MomentMatrix:
    """A (2b+1) x (2a+1) covariant matrix in Lin(H^a, H^b)."""

    a: int
    b: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (2 * self.b + 1, 2 * self.a + 1):
            raise ShapeMismatch(
                f"expected shape {(2 * self.b + 1, 2 * self.a + 1)}, got {self.data.shape}"
            )

    def as_vector(self):
        """The vector view, valid when a == 0."""
        if self.a != 0:
            raise ShapeMismatch("as_vector requires a == 0")
        return self.data[:, 0]


def iota_scale(a, b, l):
    return IOTA_SCALES.get((a, b, l), 1.0)


@lru_cache(maxsize=None)
def _iota_basis(a, b, l):
    """Stacked embedding matrices: (2l+1, 2b+1, 2a+1), already scaled."""
    block = so3.cg_block(a, b, l)  # (2l+1, 2a+1, 2b+1)
    return iota_scale(a, b, l) * np.swapaxes(block, 1, 2).copy()


def iota_embed(a, b, l, v) -> MomentMatrix:
    """Embed a degree-l vector into a (2b+1) x (2a+1) matrix.

    Linear in v and covariant: embedding rho_l(g) v equals
    rho_b(g) @ M @ rho_a(g)^T.
    """
    if not abs(a - b) <= l <= a + b:
        raise TriangleViolation(f"({a}, {b}, {l}) violates |a-b| <= l <= a+b")
    v = np.asarray(v, dtype=float).reshape(2 * l + 1)
    return MomentMatrix(a, b, np.einsum("kji,k->ji", _iota_basis(a, b, l), v))


def moment_matrix(config: ColoredConfig, color, a, b, l, radial=None) -> MomentMatrix:
    """Moment matrix of one color: embedded sum of (weighted) harmonics.

    Args:
        radial: optional callable mapping an array of radii to weights; None
            means unit weights.
    """
    pts = config.of_color(color)
    if pts.shape[0] == 0:
        return MomentMatrix(a, b, np.zeros((2 * b + 1, 2 * a + 1)))
    vals = evaluate_harmonics(pts, l)[l]
    if radial is not None:
        vals = vals * np.asarray(radial(np.linalg.norm(pts, axis=1)))[:, None]
    return iota_embed(a, b, l, vals.sum(axis=0))


def chain_product(factors) -> MomentMatrix:
    """Product of conforming moment matrices, first factor applied first.

    ``factors[0]`` must have a == 0, so the chain evaluates to a column
    vector in the final degree; the result is a degree polynomial of the
    point coordinates of total degree sum(l_i).
    """
    factors = list(factors)
    if not factors:
        raise ShapeMismatch("chain must contain at least one factor")
    if factors[0].a != 0:
        raise ShapeMismatch("first chain factor must have a == 0")
    for left, right in zip(factors[1:], factors[:-1]):
        if left.a != right.b:
            raise ShapeMismatch(
                f"factor with a={left.a} cannot follow factor with b={right.b}"
            )
    out = factors[0].data
    for factor in factors[1:]:
        out = factor.data @ out
    return MomentMatrix(0, factors[-1].b, out)


@dataclass(frozen=True)
class BlockLayout:
    """Row/column partition of a square block matrix.

    ``degrees`` lists the degree of each block group (nondecreasing) and
    every group is repeated ``mult`` times, giving side length
    ``mult * sum(2 l_i + 1)``.
    """

    degrees: tuple
    mult: int = 1

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(l) for l in self.degrees))
        if any(l < 0 for l in self.degrees) or self.mult <= 0:
            raise ShapeMismatch("degrees must be nonnegative and mult positive")
        if any(a > b for a, b in zip(self.degrees, self.degrees[1:])):
            raise ShapeMismatch("degrees must be nondecreasing")

    @property
    def slot_degrees(self):
        return [l for l in self.degrees for _ in range(self.mult)]

    @property
    def n_slots(self):
        return len(self.degrees) * self.mult

    @property
    def side(self):
        return sum(2 * l + 1 for l in self.slot_degrees)

    @property
    def offsets(self):
        out = [0]
        for l in self.slot_degrees:
            out.append(out[-1] + 2 * l + 1)
        return out

    def slot_slice(self, s):
        return slice(self.offsets[s], self.offsets[s + 1])

    def max_degree(self):
        return 2 * max(self.degrees)


@dataclass
class BlockMatrix:
    """A square matrix carrying a block layout; transforms by conjugation
    with the block-diagonal rotation matrix of the layout degrees."""

    layout: BlockLayout
    data: np.ndarray
    shifted: bool = False

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        k = self.layout.side
        if self.data.shape != (k, k):
            raise ShapeMismatch(f"expected shape {(k, k)}, got {self.data.shape}")


def layout_rotation(layout: BlockLayout, g: so3.Rotation):
    """Block-diagonal rho(g) matching the layout."""
    return so3.block_diag_wigner(layout.slot_degrees, g)


def assemble_block(layout: BlockLayout, weights, fundamentals, shift_by_id=False) -> BlockMatrix:
    """Fill a block matrix from weighted embeddings of fundamental features.

    Args:
        layout: block layout (degrees and multiplicity).
        weights: array of shape (n_slots, n_slots, max_l+1, n_channels);
            entry [q, p, l, c] weights the embedding of channel c of the
            degree-l fundamental into the (row q, col p) block.  Only
            entries with |l_p - l_q| <= l <= l_p + l_q are used.
        fundamentals: dict or list mapping degree l to an array of shape
            (n_channels, 2l+1).
        shift_by_id: add the identity to the assembled matrix (the shifted
            product convention subtracts it again after multiplying).

    Returns:
        BlockMatrix transforming as P(g) A P(g)^T.
    """
    slots = layout.slot_degrees
    n = layout.n_slots
    max_l = layout.max_degree()
    weights = np.asarray(weights, dtype=float)
    n_channels = None
    for l in range(max_l + 1):
        f = fundamentals[l] if not isinstance(fundamentals, dict) else fundamentals.get(l)
        if f is not None:
            n_channels = np.asarray(f).shape[0]
            break
    if n_channels is None:
        raise ShapeMismatch("fundamentals must cover at least one degree")
    if weights.shape != (n, n, max_l + 1, n_channels):
        raise ShapeMismatch(
            f"expected weights of shape {(n, n, max_l + 1, n_channels)}, got {weights.shape}"
        )

    out = np.zeros((layout.side, layout.side))
    for q in range(n):
        for p in range(n):
            lq, lp = slots[q], slots[p]
            block = np.zeros((2 * lq + 1, 2 * lp + 1))
            for l in range(abs(lp - lq), lp + lq + 1):
                f = fundamentals[l] if not isinstance(fundamentals, dict) else fundamentals.get(l)
                if f is None:
                    continue
                combined = weights[q, p, l] @ np.asarray(f, dtype=float)
                block += np.einsum("kji,k->ji", _iota_basis(lp, lq, l), combined)
            out[layout.slot_slice(q), layout.slot_slice(p)] = block
    if shift_by_id:
        out = out + np.eye(layout.side)
    return BlockMatrix(layout, out)


def multiply_blocks(factors, shift_by_id=False) -> BlockMatrix:
    """Multiply block matrices; with shift_by_id the factors are expected to
    already carry the +Id shift and the identity is subtracted at the end."""
    factors = list(factors)
    if not factors:
        raise ShapeMismatch("need at least one block factor")
    layout = factors[0].layout
    out = factors[0].data
    for f in factors[1:]:
        if f.layout != layout:
            raise ShapeMismatch("all block factors must share one layout")
        out = out @ f.data
    if shift_by_id:
        out = out - np.eye(layout.side)
    return BlockMatrix(layout, out, shifted=shift_by_id)


def block_traces(m: BlockMatrix):
    """Traces of all square sub-blocks (pairs of slots with equal degree).

    Rotation-invariant since square sub-blocks transform by conjugation.
    """
    layout = m.layout
    slots = layout.slot_degrees
    traces = []
    for i, li in enumerate(slots):
        for j, lj in enumerate(slots):
            if li == lj:
                traces.append(np.trace(m.data[layout.slot_slice(i), layout.slot_slice(j)]))
    return np.array(traces)
