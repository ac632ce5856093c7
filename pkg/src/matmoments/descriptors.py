"""Fundamental features, radial bases, and the parameterized invariant model.

The model follows the block-matrix recipe: linear combinations of radially
weighted harmonic sums fill big square matrices, products of those matrices
hit bundles of column vectors, and scalar products against a second vector
bundle give invariants whose learnable linear combination is the output.
Position gradients are propagated by forward accumulation alongside values,
so forces come out of the same code path as energies.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import NonDifferentiablePoint, ShapeMismatch, SingularSystem
from .harmonics import evaluate_harmonics, evaluate_harmonics_with_gradient
from .moments import BlockLayout, ColoredConfig, _iota_basis

_MIN_RADIUS = 1e-10


@dataclass(frozen=True)
class RadialSpec:
    """Radial basis description.

    ``polynomial_r2k`` uses r^(2k) for k = 0..count-1 (smooth everywhere).
    ``exp_chebyshev`` uses Chebyshev polynomials T_j (j = 1..count) of a
    log-compressed radius, offset to vanish at r = 0 and multiplied by a
    cosine cutoff that vanishes at ``cutoff``.
    """

    kind: str = "polynomial_r2k"
    count: int = 1
    cutoff: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("polynomial_r2k", "exp_chebyshev"):
            raise ValueError(f"unknown radial kind {self.kind!r}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.kind == "exp_chebyshev" and (self.cutoff is None or self.cutoff <= 0):
            raise ValueError("exp_chebyshev requires a positive cutoff")

    def values(self, radii):
        """Basis values, shape (n, count)."""
        return self._evaluate(np.asarray(radii, dtype=float), derivative=False)

    def values_and_derivatives(self, radii):
        """Pair of (n, count) arrays: values and radial derivatives."""
        return self._evaluate(np.asarray(radii, dtype=float), derivative=True)

    def _evaluate(self, r, derivative):
        n = r.shape[0]
        if self.kind == "polynomial_r2k":
            vals = np.empty((n, self.count))
            vals[:, 0] = 1.0
            for k in range(1, self.count):
                vals[:, k] = vals[:, k - 1] * r * r
            if not derivative:
                return vals
            ders = np.zeros((n, self.count))
            for k in range(1, self.count):
                ders[:, k] = 2 * k * vals[:, k - 1] * r
            return vals, ders

        c = self.cutoff
        inside = r < c
        u = 2.0 * np.log1p(np.minimum(r, c)) / np.log1p(c) - 1.0
        # Chebyshev T_j(u) and U_{j-1}(u) by recursion, j = 1..count.
        t_prev, t_cur = np.ones_like(u), u
        u_prev, u_cur = np.zeros_like(u), np.ones_like(u)
        fc = np.where(inside, 0.5 * (1.0 + np.cos(np.pi * r / c)), 0.0)
        vals = np.empty((n, self.count))
        ders = np.empty((n, self.count)) if derivative else None
        du = np.where(inside, 2.0 / (np.log1p(c) * (1.0 + r)), 0.0)
        dfc = np.where(inside, -0.5 * np.pi / c * np.sin(np.pi * r / c), 0.0)
        sign = -1.0  # T_j(-1) = (-1)^j, starting at j = 1
        for j in range(1, self.count + 1):
            if j > 1:
                t_prev, t_cur = t_cur, 2 * u * t_cur - t_prev
                u_prev, u_cur = u_cur, 2 * u * u_cur - u_prev
            bracket = t_cur - sign
            vals[:, j - 1] = np.where(inside, bracket * fc, 0.0)
            if derivative:
                ders[:, j - 1] = np.where(inside, j * u_cur * du * fc + bracket * dfc, 0.0)
            sign = -sign
        return (vals, ders) if derivative else vals


def radial_separation_check(radii, radial: RadialSpec):
    """Coefficients of basis combinations hitting delta values at the radii.

    Solves f_i(t_j) = delta_ij for f_i = sum_j C[i, j] g_j; returns C of
    shape (len(radii), count).  Raises SingularSystem when the evaluation
    matrix cannot resolve the radii (e.g. radii at or beyond the cutoff).
    """
    radii = np.asarray(radii, dtype=float)
    if len(set(radii.tolist())) != radii.shape[0]:
        raise ValueError("radii must be distinct")
    g = radial.values(radii)  # (n_radii, count)
    coeffs, *_ = np.linalg.lstsq(g, np.eye(radii.shape[0]), rcond=None)
    residual = np.abs(g @ coeffs - np.eye(radii.shape[0])).max()
    if not np.isfinite(residual) or residual > 1e-8:
        raise SingularSystem(
            f"radial basis cannot separate the given radii (residual {residual:.2e})"
        )
    return coeffs.T


@dataclass
class FundamentalFeatures:
    """Per-(color, radial index, degree) harmonic sums.

    ``values[l]`` has shape (n_channels, 2l+1) with channel = color * n_radial
    + radial_index, plus optional appended constant channels.  ``jac[l]``,
    when present, has shape (n_channels, 2l+1, n_points, 3).
    """

    l_max: int
    n_colors: int
    n_radial: int
    values: list
    jac: Optional[list] = None

    @property
    def n_channels(self):
        return self.values[0].shape[0]

    def channel(self, color, radial_index):
        return color * self.n_radial + radial_index

    def get(self, color, radial_index, l):
        return self.values[l][self.channel(color, radial_index)]


def fundamental_features(config: ColoredConfig, l_max, radial: Optional[RadialSpec] = None,
                         with_jacobian=False) -> FundamentalFeatures:
    """Sum of radially weighted harmonics over the points of each color.

    One pass over the points; additive over configuration union and linear
    in point multiplicity.
    """
    radial = radial or RadialSpec()
    n = len(config)
    n_channels = config.n_colors * radial.count
    values = [np.zeros((n_channels, 2 * l + 1)) for l in range(l_max + 1)]
    jac = None
    if with_jacobian:
        jac = [np.zeros((n_channels, 2 * l + 1, n, 3)) for l in range(l_max + 1)]
    if n == 0:
        return FundamentalFeatures(l_max, config.n_colors, radial.count, values, jac)

    pts = config.positions
    radii = np.linalg.norm(pts, axis=1)
    if with_jacobian:
        if radial.kind == "exp_chebyshev" and np.any(radii < _MIN_RADIUS):
            raise NonDifferentiablePoint(
                "point at the origin: exp_chebyshev radial gradients are undefined there"
            )
        y_vals, y_grads = evaluate_harmonics_with_gradient(pts, l_max)
        w_vals, w_ders = radial.values_and_derivatives(radii)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(radii[:, None] > _MIN_RADIUS, pts / radii[:, None], 0.0)
    else:
        y_vals = evaluate_harmonics(pts, l_max)
        w_vals = radial.values(radii)

    for l in range(l_max + 1):
        # contributions (point, radial, component)
        contrib = w_vals[:, :, None] * y_vals[l][:, None, :]
        for color in range(config.n_colors):
            mask = config.colors == color
            if not mask.any():
                continue
            block = contrib[mask].sum(axis=0)  # (n_radial, 2l+1)
            sl = slice(color * radial.count, (color + 1) * radial.count)
            values[l][sl] = block
            if with_jacobian:
                # d/dr_p of w(|r_p|) Y_l(r_p): radial term + harmonic term
                g = (w_ders[mask][:, :, None, None] * unit[mask][:, None, None, :]
                     * y_vals[l][mask][:, None, :, None]
                     + w_vals[mask][:, :, None, None] * y_grads[l][mask][:, None, :, :])
                idx = np.nonzero(mask)[0]
                jac[l][sl, :, idx, :] = np.moveaxis(g, 0, 2)
    return FundamentalFeatures(l_max, config.n_colors, radial.count, values, jac)


def append_constant_channels(features: FundamentalFeatures, scalars) -> FundamentalFeatures:
    """Append configuration-independent channels (nonzero only at l = 0).

    Used for per-element additive constants: the extra channels contribute
    to l = 0 vector components and to identity coefficients of diagonal
    blocks, which are the only constant covariants.
    """
    scalars = np.asarray(scalars, dtype=float).reshape(-1)
    values = []
    jac = [] if features.jac is not None else None
    for l, v in enumerate(features.values):
        extra = np.zeros((scalars.shape[0], v.shape[1]))
        if l == 0:
            extra[:, 0] = scalars
        values.append(np.concatenate([v, extra], axis=0))
        if jac is not None:
            j = features.jac[l]
            jac.append(np.concatenate(
                [j, np.zeros((scalars.shape[0],) + j.shape[1:])], axis=0))
    return replace(features, values=values, jac=jac)


# ---------------------------------------------------------------------------
# Parameterized invariant model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelHyper:
    """Architecture of the parameterized invariant."""

    degrees: tuple
    mult: int = 1
    n_vec: int = 1
    body_orders: tuple = (2,)
    radial: RadialSpec = field(default_factory=RadialSpec)
    n_colors: int = 1
    shift_by_id: bool = True
    n_constant_channels: int = 0

    @property
    def layout(self):
        return BlockLayout(self.degrees, self.mult)

    @property
    def l_max(self):
        return 2 * max(self.degrees)

    @property
    def n_mat(self):
        return len(self.body_orders)

    @property
    def n_channels(self):
        return self.n_colors * self.radial.count + self.n_constant_channels

    @property
    def n_invariants(self):
        return sum(self.body_orders) * self.layout.n_slots * self.n_vec


@dataclass
class InvariantModel:
    """Hyperparameters plus the learnable coefficient arrays."""

    hyper: ModelHyper
    vec_in: list      # per product: (n_slots, n_vec, n_channels)
    vec_out: list     # per product: (n_slots, n_vec, n_channels)
    mats: list        # per product: (b_i, n_slots, n_slots, l_max+1, n_channels)
    out: np.ndarray   # (n_invariants,)

    def __post_init__(self):
        h = self.hyper
        n_slots = h.layout.n_slots
        for i, b in enumerate(h.body_orders):
            expect = (b, n_slots, n_slots, h.l_max + 1, h.n_channels)
            if self.mats[i].shape != expect:
                raise ShapeMismatch(f"mats[{i}]: expected {expect}, got {self.mats[i].shape}")
            expect_v = (n_slots, h.n_vec, h.n_channels)
            for name, arr in (("vec_in", self.vec_in[i]), ("vec_out", self.vec_out[i])):
                if arr.shape != expect_v:
                    raise ShapeMismatch(f"{name}[{i}]: expected {expect_v}, got {arr.shape}")
        if self.out.shape != (h.n_invariants,):
            raise ShapeMismatch(f"out: expected {(h.n_invariants,)}, got {self.out.shape}")


def param_init(hyper: ModelHyper, seed, factor_mat=None, factor_vec=None,
               factor_final=1.0) -> InvariantModel:
    """Seeded Gaussian initialization.

    The matrix factor is scaled down with the channel count and block size
    so that shifted products neither blow up nor vanish at typical sizes.
    """
    rng = np.random.default_rng(seed)
    h = hyper
    n_slots = h.layout.n_slots
    # Calibrated for configurations of ~20 points at unit radius: keeps the
    # output magnitude of random models within a few orders of 1.
    if factor_mat is None:
        factor_mat = 1.0 / (20.0 * np.sqrt(h.n_channels * (h.l_max + 1)))
    if factor_vec is None:
        factor_vec = 1.0 / np.sqrt(20.0 * h.n_channels)
    vec_in, vec_out, mats = [], [], []
    for b in h.body_orders:
        vec_in.append(factor_vec * rng.normal(size=(n_slots, h.n_vec, h.n_channels)))
        vec_out.append(factor_vec * rng.normal(size=(n_slots, h.n_vec, h.n_channels)))
        mats.append(factor_mat * rng.normal(size=(b, n_slots, n_slots, h.l_max + 1, h.n_channels)))
    out = factor_final * rng.normal(size=h.n_invariants)
    return InvariantModel(h, vec_in, vec_out, mats, out)


def _assemble_aug(layout: BlockLayout, weights, values, jac):
    """Assemble a block matrix (and optionally its jacobian stack)."""
    slots = layout.slot_degrees
    k = layout.side
    out = np.zeros((k, k))
    out_jac = None if jac is None else np.zeros((k, k) + jac[0].shape[2:])
    for q in range(layout.n_slots):
        for p in range(layout.n_slots):
            lq, lp = slots[q], slots[p]
            rs, cs = layout.slot_slice(q), layout.slot_slice(p)
            for l in range(abs(lp - lq), lp + lq + 1):
                w = weights[q, p, l]
                basis = _iota_basis(lp, lq, l)
                out[rs, cs] += np.einsum("kji,k->ji", basis, w @ values[l])
                if jac is not None:
                    out_jac[rs, cs] += np.einsum("kji,kpd->jipd", basis,
                                                 np.tensordot(w, jac[l], axes=(0, 0)))
    return out, out_jac


def _invariants_aug(model: InvariantModel, feats: FundamentalFeatures):
    """All harvested invariants (and jacobians) for a feature set."""
    h = model.hyper
    layout = h.layout
    slots = layout.slot_degrees
    with_jac = feats.jac is not None
    inv, inv_jac = [], []
    for i, b in enumerate(h.body_orders):
        k = layout.side
        v = np.zeros((k, h.n_vec))
        u = np.zeros((k, h.n_vec))
        v_jac = np.zeros((k, h.n_vec) + feats.jac[0].shape[2:]) if with_jac else None
        for s in range(layout.n_slots):
            sl = layout.slot_slice(s)
            l = slots[s]
            v[sl] = (model.vec_in[i][s] @ feats.values[l]).T
            u[sl] = (model.vec_out[i][s] @ feats.values[l]).T
            if with_jac:
                v_jac[sl] = np.moveaxis(np.tensordot(model.vec_in[i][s], feats.jac[l], axes=(1, 0)), 0, 1)
        u_jac = None
        if with_jac:
            u_jac = np.zeros_like(v_jac)
            for s in range(layout.n_slots):
                sl = layout.slot_slice(s)
                u_jac[sl] = np.moveaxis(
                    np.tensordot(model.vec_out[i][s], feats.jac[slots[s]], axes=(1, 0)), 0, 1)

        w_run, w_jac = v, v_jac
        for j in range(b):
            a_mat, a_jac = _assemble_aug(layout, model.mats[i][j], feats.values, feats.jac)
            if h.shift_by_id:
                a_mat = a_mat + np.eye(layout.side)
            new = a_mat @ w_run
            if with_jac:
                new_jac = (np.einsum("ijpd,jv->ivpd", a_jac, w_run)
                           + np.einsum("ij,jvpd->ivpd", a_mat, w_jac))
                w_jac = new_jac
            w_run = new
            eff = w_run - v if h.shift_by_id else w_run
            eff_jac = (w_jac - v_jac) if (with_jac and h.shift_by_id) else w_jac
            for s in range(layout.n_slots):
                sl = layout.slot_slice(s)
                inv.extend((u[sl] * eff[sl]).sum(axis=0))
                if with_jac:
                    term = (np.einsum("cv,cvpd->vpd", u[sl], eff_jac[sl])
                            + np.einsum("cvpd,cv->vpd", u_jac[sl], eff[sl]))
                    inv_jac.extend(term)
    inv = np.array(inv)
    inv_jac = np.array(inv_jac) if with_jac else None
    return inv, inv_jac


def algorithm_forward(model: InvariantModel, config: ColoredConfig) -> float:
    """Rotation- and permutation-invariant scalar output of the model."""
    feats = fundamental_features(config, model.hyper.l_max, model.hyper.radial)
    if model.hyper.n_constant_channels:
        feats = append_constant_channels(feats, np.ones(model.hyper.n_constant_channels))
    inv, _ = _invariants_aug(model, feats)
    return float(model.out @ inv)


def algorithm_gradient(model: InvariantModel, config: ColoredConfig):
    """Value and per-point position gradients of the model output."""
    feats = fundamental_features(config, model.hyper.l_max, model.hyper.radial,
                                 with_jacobian=True)
    if model.hyper.n_constant_channels:
        feats = append_constant_channels(feats, np.ones(model.hyper.n_constant_channels))
    inv, inv_jac = _invariants_aug(model, feats)
    value = float(model.out @ inv)
    grads = np.tensordot(model.out, inv_jac, axes=(0, 0))
    return value, grads


def invariant_prefix_orders(hyper: ModelHyper):
    """Number of matrix factors feeding each harvested invariant.

    Matches the layout of the invariant vector: for every product, every
    prefix length j = 1..b_i contributes n_slots * n_vec invariants of
    body order j + 2.
    """
    orders = []
    per_prefix = hyper.layout.n_slots * hyper.n_vec
    for b in hyper.body_orders:
        for j in range(1, b + 1):
            orders.extend([j] * per_prefix)
    return np.array(orders)


def masked_radial_model(model: InvariantModel, active_radial) -> InvariantModel:
    """Copy of a model with radial channels >= active_radial zero-masked.

    Parameter shapes never change; masked channels simply contribute
    nothing, which is how training curricula grow the radial basis.
    """
    h = model.hyper
    mask = np.zeros(h.n_channels)
    for color in range(h.n_colors):
        for k in range(min(active_radial, h.radial.count)):
            mask[color * h.radial.count + k] = 1.0
    mask[h.n_colors * h.radial.count:] = 1.0  # constant channels stay active
    return InvariantModel(
        h,
        [v * mask for v in model.vec_in],
        [v * mask for v in model.vec_out],
        [m * mask for m in model.mats],
        model.out.copy(),
    )


def invariant_features(model: InvariantModel, config: ColoredConfig):
    """The harvested invariant vector before the final linear combination."""
    feats = fundamental_features(config, model.hyper.l_max, model.hyper.radial)
    if model.hyper.n_constant_channels:
        feats = append_constant_channels(feats, np.ones(model.hyper.n_constant_channels))
    inv, _ = _invariants_aug(model, feats)
    return inv


def invariant_features_with_jacobian(model: InvariantModel, config: ColoredConfig):
    """Invariant vector plus its per-point jacobian (n_inv, n_points, 3)."""
    feats = fundamental_features(config, model.hyper.l_max, model.hyper.radial,
                                 with_jacobian=True)
    if model.hyper.n_constant_channels:
        feats = append_constant_channels(feats, np.ones(model.hyper.n_constant_channels))
    return _invariants_aug(model, feats)
