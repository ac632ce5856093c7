"""Reference covariant construction by iterated Clebsch-Gordan coupling.

Builds the classical stack of covariants: row 1 holds the fundamental
features per degree, and row d+1 holds all couplings of row d with row 1.
This route is algebraically equivalent to the matrix-product chains but its
bilinear step costs O(L^6) instead of O(L^3); it serves as the equivalence
baseline and as the slow path in the training comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import so3
from .moments import ColoredConfig, MomentMatrix, chain_product, iota_embed


def _as_channel_dict(features):
    """Normalize {l: (channels, 2l+1)} input, promoting single vectors."""
    out = {}
    for l, arr in features.items():
        arr = np.asarray(arr, dtype=float)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.shape[-1] != 2 * l + 1:
            raise ValueError(f"degree {l} block has wrong width {arr.shape}")
        out[l] = arr
    return out


def cg_layer(stack_row, fundamentals, l_max, table: so3.CgTable, weights=None):
    """Couple every channel of a row with every fundamental channel.

    Args:
        stack_row: dict {l1: (n1, 2l1+1)} of current covariant channels.
        fundamentals: dict {l2: (n2, 2l2+1)} of degree-1 channels.
        l_max: truncation degree of the output row.
        table: coupling table covering l_max.
        weights: optional dict {(l1, l2, l3): (n_out, n1*n2)} mixing the
            enumerated channels; by default channels are enumerated.

    Returns:
        dict {l3: (channels, 2l3+1)} for l3 <= l_max.
    """
    stack_row = _as_channel_dict(stack_row)
    fundamentals = _as_channel_dict(fundamentals)
    out = {l3: [] for l3 in range(l_max + 1)}
    for l1, x in sorted(stack_row.items()):
        for l2, y in sorted(fundamentals.items()):
            for l3 in range(abs(l1 - l2), min(l1 + l2, l_max) + 1):
                block = table.block(l1, l2, l3)
                coupled = np.einsum("kij,ci,fj->cfk", block, x, y)
                coupled = coupled.reshape(-1, 2 * l3 + 1)
                if weights is not None:
                    w = weights.get((l1, l2, l3))
                    if w is None:
                        continue
                    coupled = np.asarray(w) @ coupled
                out[l3].append(coupled)
    return {l3: np.concatenate(parts, axis=0) if parts else np.zeros((0, 2 * l3 + 1))
            for l3, parts in out.items()}


@dataclass
class CovariantStack:
    """Rows of covariant channels by body order; row[0] = fundamentals."""

    rows: list
    l_max: int

    def row(self, order):
        """Channels of polynomial order `order` (body order order+1)."""
        return self.rows[order - 1]

    def invariants(self, max_order=None):
        """All scalar (l=0) channels up to the given polynomial order."""
        rows = self.rows if max_order is None else self.rows[:max_order]
        pieces = [r[0][:, 0] for r in rows if 0 in r and r[0].size]
        return np.concatenate(pieces) if pieces else np.zeros(0)


def build_stack(fundamentals, depth, l_max, table: so3.CgTable) -> CovariantStack:
    """Iterate the coupling layer ``depth - 1`` times over the fundamentals."""
    fundamentals = _as_channel_dict(fundamentals)
    rows = [fundamentals]
    for _ in range(depth - 1):
        rows.append(cg_layer(rows[-1], fundamentals, l_max, table))
    return CovariantStack(rows, l_max)


def config_fundamentals(config: ColoredConfig, l_max, radial=None):
    """Per-color fundamental features as a {l: (n_colors, 2l+1)} dict."""
    from .descriptors import fundamental_features

    feats = fundamental_features(config, l_max, radial)
    return {l: feats.values[l] for l in range(l_max + 1)}


# ---------------------------------------------------------------------------
# Matrix-product chains over the same abstract fundamentals
# ---------------------------------------------------------------------------

def enumerate_chains(n_factors, degree_cap, end_degree=None, start_l=None):
    """All (a_i, l_i, channel slot) chain shapes with degrees <= degree_cap.

    A chain shape is a tuple of (a_prev, a_next, l) triples, first factor
    with a_prev = 0 (so l_1 = a_1).  ``end_degree`` filters on the final
    degree a_m.
    """
    chains = []

    def extend(prefix, a_cur, remaining):
        if remaining == 0:
            if end_degree is None or a_cur == end_degree:
                chains.append(tuple(prefix))
            return
        for a_next in range(degree_cap + 1):
            for l in range(abs(a_cur - a_next), a_cur + a_next + 1):
                if l > degree_cap:
                    continue
                extend(prefix + [(a_cur, a_next, l)], a_next, remaining - 1)

    start = range(degree_cap + 1) if start_l is None else [start_l]
    for l1 in start:
        extend([(0, l1, l1)], l1, n_factors - 1)
    return chains


def chain_value(chain, fundamentals, channel_choice=None):
    """Evaluate a chain shape on abstract fundamentals.

    Args:
        chain: tuple of (a, b, l) factor shapes, first with a = 0.
        fundamentals: dict {l: (channels, 2l+1)}.
        channel_choice: per-factor channel indices; all-channel enumeration
            is up to the caller, a single index tuple is evaluated here.

    Returns:
        Vector in the final degree.
    """
    fundamentals = _as_channel_dict(fundamentals)
    if channel_choice is None:
        channel_choice = (0,) * len(chain)
    factors = []
    for (a, b, l), ch in zip(chain, channel_choice):
        factors.append(iota_embed(a, b, l, fundamentals[l][ch]))
    return chain_product(factors).as_vector()
