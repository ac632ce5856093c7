"""Dimension reduction of invariant feature maps by random projections.

An N-dimensional rotation-invariant feature map on configurations of at most
k points can be reduced to 6k - 5 coordinates by repeatedly projecting out a
random direction; with probability one no two inequivalent configurations
collide, and distances shrink by at most a factor that is bounded away from
zero on a fixed pool.  This module implements the projection chain and the
empirical distance-ratio report.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .cgref import chain_value, enumerate_chains
from .descriptors import fundamental_features
from .errors import DimensionTooSmall
from .moments import ColoredConfig


@dataclass
class FeatureMap:
    """A fixed-dimension invariant descriptor of colored configurations."""

    dimension: int
    evaluator: object

    def __call__(self, config: ColoredConfig):
        out = np.asarray(self.evaluator(config), dtype=float)
        assert out.shape == (self.dimension,)
        return out

    def matrix(self, configs):
        return np.array([self(c) for c in configs])


def target_dimension(k):
    """Number of feature coordinates sufficient for k-point configurations."""
    return 6 * k - 5


def random_pool(seed, n_configs, n_points=4, n_colors=1):
    """Seeded pool of generic configurations (pairwise inequivalent a.s.)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_configs):
        out.append(ColoredConfig(rng.integers(0, n_colors, n_points),
                                 rng.normal(size=(n_points, 3)), n_colors))
    return out


def standard_invariant_map(n_features, seed=0, degree_cap=3, max_factors=4,
                           n_colors=1) -> FeatureMap:
    """Deterministic battery of scalar chain invariants.

    Chains of 2..max_factors moment matrices with degrees <= degree_cap,
    ending in the scalar degree; a seeded choice of ``n_features`` shapes is
    fixed and each feature is normalized by its spread on a calibration pool
    so no single invariant dominates distances.
    """
    shapes = []
    for n in range(2, max_factors + 1):
        shapes.extend(enumerate_chains(n, degree_cap, end_degree=0))
    shapes = [s for s in shapes if any(l > 0 for _, _, l in s)]
    if len(shapes) < n_features:
        raise DimensionTooSmall(
            f"only {len(shapes)} chain shapes available, need {n_features}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(shapes))
    l_max = degree_cap
    calib_pool = random_pool(seed + 1, 64)
    calib_fund = []
    for c in calib_pool:
        feats = fundamental_features(c, l_max)
        calib_fund.append({l: feats.values[l] for l in range(l_max + 1)})

    # keep shapes with genuine spread on the calibration pool; chains that
    # vanish identically (antisymmetric self-contractions) would otherwise
    # contribute amplified float noise after normalization
    chosen, scales = [], []
    for idx in order:
        shape = shapes[idx]
        col = np.array([chain_value(shape, f)[0] for f in calib_fund])
        spread = col.std()
        if spread <= 1e-8 * max(1.0, np.abs(col).mean()):
            continue
        chosen.append(shape)
        scales.append(spread)
        if len(chosen) == n_features:
            break
    if len(chosen) < n_features:
        raise DimensionTooSmall(
            f"only {len(chosen)} nondegenerate chain shapes, need {n_features}")
    scale = np.array(scales)

    def raw(config):
        feats = fundamental_features(config, l_max)
        fund = {l: feats.values[l] for l in range(l_max + 1)}
        return np.array([chain_value(s, fund)[0] for s in chosen])

    return FeatureMap(n_features, lambda c: raw(c) / scale)


@dataclass
class ProjectionChain:
    """Record of the successive unit directions projected out."""

    seed: int
    directions: list
    basis: np.ndarray  # (reduced_dim, N) orthonormal rows


def project_features(feature_map: FeatureMap, k, seed=0) -> tuple:
    """Reduce a feature map to 6k - 5 coordinates by random projections.

    Each step removes one random direction (orthogonal projection onto its
    complement); the reduced map reads off coordinates in an orthonormal
    basis of the final subspace, so reduced distances never exceed the
    original ones.

    Returns:
        Pair (reduced FeatureMap, ProjectionChain).
    """
    n = feature_map.dimension
    target = target_dimension(k)
    if n < target:
        raise DimensionTooSmall(f"need more than {target} features, have {n}")
    rng = np.random.default_rng(seed)
    basis = np.eye(n)
    directions = []
    while basis.shape[0] > target:
        w = rng.normal(size=basis.shape[0]) @ basis
        u = w / np.linalg.norm(w)
        directions.append(u)
        reduced = basis - np.outer(basis @ u, u)
        # re-orthonormalize the remaining span
        q, r = np.linalg.qr(reduced.T, mode="reduced")
        keep = np.abs(np.diag(r)) > 1e-12
        basis = q.T[keep][:basis.shape[0] - 1]
    chain = ProjectionChain(seed, directions, basis)
    reduced_map = FeatureMap(target, lambda c: chain.basis @ feature_map(c))
    return reduced_map, chain


def distance_ratio_report(original: FeatureMap, reduced: FeatureMap, configs,
                          inequivalence_tol=1e-9):
    """Minimum ratio of reduced to original pairwise feature distances.

    Returns:
        dict with the empirical minimum ratio, the minimizing pair, and the
        number of collisions (reduced distance < 1e-12 while original
        distance > 1e-6).
    """
    orig = original.matrix(configs)
    red = reduced.matrix(configs)
    n = len(configs)
    min_ratio, min_pair = np.inf, None
    collisions = 0
    for i in range(n - 1):
        d_orig = np.linalg.norm(orig[i + 1:] - orig[i], axis=1)
        d_red = np.linalg.norm(red[i + 1:] - red[i], axis=1)
        if np.any(d_orig <= inequivalence_tol):
            raise ValueError("pool contains feature-equivalent configurations")
        collisions += int(np.sum((d_red < 1e-12) & (d_orig > 1e-6)))
        ratios = d_red / d_orig
        j = int(np.argmin(ratios))
        if ratios[j] < min_ratio:
            min_ratio, min_pair = float(ratios[j]), (i, i + 1 + j)
    return {"min_ratio": min_ratio, "min_pair": min_pair,
            "collisions": collisions, "pool_size": n}


def projection_report(pool_seed, projection_seeds, n_features=40, k=4,
                      pool_size=200):
    """Run the reduction over several seeds; one record per seed."""
    fmap = standard_invariant_map(n_features, seed=pool_seed)
    pool = random_pool(pool_seed, pool_size, n_points=k)
    rows = []
    for seed in projection_seeds:
        reduced, _ = project_features(fmap, k, seed=seed)
        rep = distance_ratio_report(fmap, reduced, pool)
        rows.append({
            "seed": seed, "pool_size": pool_size, "N": n_features,
            "reduced_dim": target_dimension(k),
            "min_ratio": rep["min_ratio"], "collisions": rep["collisions"],
        })
    return rows


def write_projection_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=[
            "seed", "pool_size", "N", "reduced_dim", "min_ratio", "collisions"])
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
