"""Seeded SGD fitting of invariant models.

Two training entry points:

* :func:`fit_synthetic` learns the degree-10 synthetic target with either
  the block-matrix-product feature path or the iterated-coupling feature
  path, training all mixing weights by plain SGD (gradients via torch).
* :func:`fit_forces` fits energies and forces of an atom-centered model; the
  seeded multilinear feature extractor is held fixed and the final linear
  combination (plus per-element constants) is learned, which is a convex
  problem that supports exact teacher recovery.

All randomness flows from explicit seeds; runs are bit-reproducible on one
machine with a fixed thread count.
"""

from __future__ import annotations

import csv
import hashlib
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import torch

from . import so3
from .descriptors import (ModelHyper, RadialSpec, append_constant_channels,
                          fundamental_features, invariant_prefix_orders,
                          masked_radial_model, param_init)
from .errors import DivergenceDetected
from .harmonics import evaluate_harmonics_flat
from .moments import BlockLayout, ColoredConfig, _iota_basis
from .tensors import LabeledConfigs

torch.set_default_dtype(torch.float64)


@dataclass
class TrainConfig:
    batch_size: int = 32
    learning_rate: float = 1e-2
    epochs: int = 40
    seed: int = 0
    radial_start: Optional[int] = None
    radial_step: int = 0
    body_start: Optional[int] = None
    body_step: int = 0
    force_weight: float = 0.999
    stop_at_test_mse: Optional[float] = None

    def __post_init__(self):
        if self.batch_size <= 0 or self.learning_rate <= 0 or self.epochs <= 0:
            raise ValueError("batch size, learning rate, and epochs must be positive")
        if not 0.0 <= self.force_weight <= 1.0:
            raise ValueError("force_weight must lie in [0, 1]")


@dataclass
class EpochRow:
    epoch: int
    train_mse: float
    test_mse: float
    seconds: float


@dataclass
class TrainReport:
    rows: list
    params_digest: str
    meta: dict = field(default_factory=dict)

    @property
    def final_test_mse(self):
        return self.rows[-1].test_mse

    def epoch_seconds(self):
        return np.array([r.seconds for r in self.rows])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_mse", "test_mse", "seconds"])
            for r in self.rows:
                writer.writerow([r.epoch, "%.12e" % r.train_mse,
                                 "%.12e" % r.test_mse, "%.6f" % r.seconds])


def _digest(tensors):
    h = hashlib.sha256()
    for t in tensors:
        h.update(np.ascontiguousarray(t.detach().numpy()).tobytes())
    return h.hexdigest()


def write_parameter_dump(path, tensors):
    """Flat text dump: one block per tensor with a shape header line."""
    with open(path, "w") as fh:
        for name, t in tensors.items():
            arr = t.detach().numpy() if isinstance(t, torch.Tensor) else np.asarray(t)
            fh.write(f"# {name} shape={'x'.join(map(str, arr.shape))}\n")
            for v in arr.ravel():
                fh.write("%.17g\n" % v)


def _summed_harmonics(configs, l_max, n_colors):
    """Per-config per-color harmonic sums, flat layout (n, colors, (L+1)^2)."""
    out = np.zeros((len(configs), n_colors, (l_max + 1) ** 2))
    for i, cfg in enumerate(configs):
        flat = evaluate_harmonics_flat(cfg.positions, l_max)
        for c in range(n_colors):
            mask = cfg.colors == c
            if mask.any():
                out[i, c] = flat[mask].sum(axis=0)
    return out


# ---------------------------------------------------------------------------
# Synthetic task: matrix-product path
# ---------------------------------------------------------------------------

class _MatmulNet(torch.nn.Module):
    """Product of shifted block matrices with trace readout."""

    def __init__(self, degrees, mult, n_colors, n_factors, l_max, seed,
                 init_scale=None, dtype=torch.float32):
        super().__init__()
        layout = BlockLayout(degrees, mult)
        self.layout = layout
        self.n_factors = n_factors
        self.l_max = l_max
        slots = layout.slot_degrees
        gen = torch.Generator().manual_seed(seed)
        # per (row slot, col slot): stacked embedding tensor mapping the
        # concatenated degree components to the block, plus gather indices
        # from the flat (L+1)^2 layout and the degree of each stacked slot
        self.block_maps = []
        self.block_gather = []
        self.block_lidx = []
        for q in range(layout.n_slots):
            for p in range(layout.n_slots):
                lq, lp = slots[q], slots[p]
                ls = [l for l in range(abs(lp - lq), min(lp + lq, l_max) + 1)]
                stack = np.concatenate(
                    [_iota_basis(lp, lq, l).reshape(2 * l + 1, -1) for l in ls], axis=0)
                gather = np.concatenate(
                    [np.arange(l * l, (l + 1) ** 2) for l in ls])
                lidx = np.concatenate(
                    [np.full(2 * l + 1, l, dtype=np.int64) for l in ls])
                self.block_maps.append(torch.tensor(stack, dtype=dtype))
                self.block_gather.append(torch.tensor(gather))
                self.block_lidx.append(torch.tensor(lidx))
        n_slots = layout.n_slots
        scale = init_scale
        if scale is None:
            scale = 0.05 / np.sqrt(n_colors * (l_max + 1) * n_slots)
        self.weights = torch.nn.Parameter((scale * torch.randn(
            n_factors, n_slots, n_slots, l_max + 1, n_colors,
            generator=gen)).to(dtype))
        n_traces = sum(1 for i in slots for j in slots if i == j)
        self.readout = torch.nn.Parameter(
            (0.1 * torch.randn(n_factors * n_traces, generator=gen)).to(dtype))
        self.trace_pairs = [(i, j) for i, li in enumerate(slots)
                            for j, lj in enumerate(slots) if li == lj]
        # fixed per-trace scales, calibrated once on the first batch so the
        # readout sees O(1) features regardless of prefix length
        self.trace_scale = None

    def calibrate(self, sh):
        with torch.no_grad():
            traces = self._traces(sh)
            scale = traces.std(dim=0)
            scale[scale < 1e-12] = 1.0
            self.trace_scale = scale

    def _traces(self, sh):
        # sh: (batch, colors, (L+1)^2)
        layout = self.layout
        n, k = sh.shape[0], layout.side
        eye = torch.eye(k, dtype=sh.dtype).expand(n, k, k)
        prod = None
        traces = []
        for f in range(self.n_factors):
            blocks = torch.zeros((n, k, k), dtype=sh.dtype)
            idx = 0
            for q in range(layout.n_slots):
                for p in range(layout.n_slots):
                    # one fused combine: gather the needed flat components,
                    # weight per (stacked slot, color), map into the block
                    w = self.weights[f, q, p][self.block_lidx[idx]]
                    coef = torch.einsum("ngs,sg->ns",
                                        sh[:, :, self.block_gather[idx]], w)
                    block = coef @ self.block_maps[idx]
                    lq, lp = layout.slot_degrees[q], layout.slot_degrees[p]
                    blocks[:, layout.slot_slice(q), layout.slot_slice(p)] = \
                        block.reshape(n, 2 * lq + 1, 2 * lp + 1)
                    idx += 1
            factor = eye + blocks
            prod = factor if prod is None else torch.bmm(prod, factor)
            shifted = prod - eye
            traces.append(torch.stack(
                [shifted[:, layout.slot_slice(i), layout.slot_slice(j)]
                 .diagonal(dim1=1, dim2=2).sum(dim=1)
                 for i, j in self.trace_pairs], dim=1))
        return torch.cat(traces, dim=1)

    def forward(self, sh):
        traces = self._traces(sh)
        if self.trace_scale is not None:
            traces = traces / self.trace_scale
        return traces @ self.readout


# ---------------------------------------------------------------------------
# Synthetic task: iterated-coupling path
# ---------------------------------------------------------------------------

class _CouplingNet(torch.nn.Module):
    """Per-channel iterated coupling with a final scalar product."""

    def __init__(self, l_max, channels, n_colors, n_factors, seed,
                 dtype=torch.float32, mix_scale=0.1):
        super().__init__()
        self.l_max = l_max
        self.channels = channels
        self.n_factors = n_factors
        table = so3.build_cg_table(l_max)
        self.pair_tables = {}
        for l1 in range(l_max + 1):
            for l2 in range(l_max + 1):
                blocks = [table.block(l1, l2, l3).reshape(2 * l3 + 1, -1).T
                          for l3 in range(abs(l1 - l2), min(l1 + l2, l_max) + 1)]
                self.pair_tables[(l1, l2)] = torch.tensor(
                    np.concatenate(blocks, axis=1), dtype=dtype)
        gen = torch.Generator().manual_seed(seed)
        self.mix = torch.nn.Parameter(
            (mix_scale * torch.randn(n_factors, channels, n_colors, l_max + 1,
                                     generator=gen) / np.sqrt(n_colors)).to(dtype))
        self.readout = torch.nn.Parameter(
            (0.1 * torch.randn(channels * (l_max + 1), generator=gen)).to(dtype))

    def _combine(self, sh, f):
        offsets = [l * l for l in range(self.l_max + 2)]
        parts = []
        for l in range(self.l_max + 1):
            parts.append(torch.einsum("kg,ngm->nkm", self.mix[f, :, :, l],
                                      sh[:, :, offsets[l]:offsets[l + 1]]))
        return torch.cat(parts, dim=2)  # (n, channels, (L+1)^2)

    def _couple(self, u, z):
        n, ch, dim = u.shape
        offsets = [l * l for l in range(self.l_max + 2)]
        out = torch.zeros_like(u)
        for (l1, l2), tab in self.pair_tables.items():
            x = u[:, :, offsets[l1]:offsets[l1 + 1]]
            y = z[:, :, offsets[l2]:offsets[l2 + 1]]
            outer = (x[:, :, :, None] * y[:, :, None, :]).reshape(n * ch, -1)
            coupled = outer @ tab
            at = 0
            for l3 in range(abs(l1 - l2), min(l1 + l2, self.l_max) + 1):
                width = 2 * l3 + 1
                out[:, :, offsets[l3]:offsets[l3 + 1]] += \
                    coupled[:, at:at + width].reshape(n, ch, width)
                at += width
        return out

    def forward(self, sh):
        factors = [self._combine(sh, f) for f in range(self.n_factors)]
        u = factors[0]
        for z in factors[1:-1]:
            u = self._couple(u, z)
        offsets = [l * l for l in range(self.l_max + 2)]
        scalars = []
        for l in range(self.l_max + 1):
            sl = slice(offsets[l], offsets[l + 1])
            scalars.append((u[:, :, sl] * factors[-1][:, :, sl]).sum(dim=2))
        return torch.cat(scalars, dim=1) @ self.readout


SYNTHETIC_ARCH = {
    # degrees / multiplicity per the synthetic setup: 4 copies each of
    # degrees 4 and 5, so the paired degree reaches 10
    "matmul": dict(degrees=(4, 5), mult=4, n_factors=5, l_max=10),
    "cg": dict(l_max=10, channels=12, n_factors=5),
}

TUNED_LR = {"matmul": 0.05, "cg": 0.02}


def fit_synthetic(path, train: LabeledConfigs, test: LabeledConfigs,
                  tc: TrainConfig, arch=None) -> TrainReport:
    """Train one feature path on the synthetic labels with plain SGD.

    Labels are standardized internally; reported MSEs are on the original
    scale.  Raises DivergenceDetected when the running loss exceeds 1000x
    the initial loss.  Stops early once ``tc.stop_at_test_mse`` is reached.
    """
    if path not in ("matmul", "cg"):
        raise ValueError("path must be 'matmul' or 'cg'")
    arch = dict(SYNTHETIC_ARCH[path], **(arch or {}))
    n_colors = train.configs[0].n_colors
    l_max = arch["l_max"]
    torch.manual_seed(tc.seed)

    dtype = torch.float32
    sh_train = torch.tensor(_summed_harmonics(train.configs, l_max, n_colors),
                            dtype=dtype)
    sh_test = torch.tensor(_summed_harmonics(test.configs, l_max, n_colors),
                           dtype=dtype)
    y_mean, y_std = float(train.labels.mean()), float(train.labels.std())
    y_train = torch.tensor((train.labels - y_mean) / y_std, dtype=dtype)
    y_test = torch.tensor((test.labels - y_mean) / y_std, dtype=dtype)

    if path == "matmul":
        model = _MatmulNet(arch["degrees"], arch["mult"], n_colors,
                           arch["n_factors"], l_max, tc.seed,
                           init_scale=arch.get("init_scale"))
        if arch.get("calibrate", True):
            model.calibrate(sh_train[:min(256, sh_train.shape[0])])
    else:
        model = _CouplingNet(l_max, arch["channels"], n_colors,
                             arch["n_factors"], tc.seed,
                             mix_scale=arch.get("mix_scale", 0.1))
    opt = torch.optim.SGD(model.parameters(), lr=tc.learning_rate)
    gen = torch.Generator().manual_seed(tc.seed + 1)
    n = sh_train.shape[0]
    rows = []
    initial_loss = None
    for epoch in range(tc.epochs):
        t0 = time.perf_counter()
        perm = torch.randperm(n, generator=gen)
        total = 0.0
        for start in range(0, n, tc.batch_size):
            idx = perm[start:start + tc.batch_size]
            opt.zero_grad()
            pred = model(sh_train[idx])
            loss = torch.mean((pred - y_train[idx]) ** 2)
            loss.backward()
            opt.step()
            total += float(loss.detach()) * idx.shape[0]
            if initial_loss is None:
                initial_loss = float(loss.detach())
            if not np.isfinite(total) or total / n > 1e3 * initial_loss:
                raise DivergenceDetected(
                    f"loss {total / n:.3e} exceeded 1000x initial {initial_loss:.3e}")
        with torch.no_grad():
            test_mse = float(torch.mean((model(sh_test) - y_test) ** 2))
        seconds = time.perf_counter() - t0
        rows.append(EpochRow(epoch, total / n * y_std ** 2,
                             test_mse * y_std ** 2, seconds))
        if tc.stop_at_test_mse is not None and rows[-1].test_mse <= tc.stop_at_test_mse:
            break
    report = TrainReport(rows, _digest(model.parameters()),
                         meta={"path": path, "lr": tc.learning_rate,
                               "label_std": y_std, "arch": str(arch)})
    return report


# ---------------------------------------------------------------------------
# Atom-centered energy/force fitting
# ---------------------------------------------------------------------------

def default_force_hyper(n_elements, radial=None) -> ModelHyper:
    return ModelHyper(
        degrees=(1, 2), mult=1, n_vec=2, body_orders=(1, 2),
        radial=radial or RadialSpec("exp_chebyshev", 4, cutoff=6.0),
        n_colors=n_elements, shift_by_id=True,
        n_constant_channels=n_elements)


@dataclass
class ForceModel:
    """Atom-centered invariant model: fixed seeded features, linear readout.

    Per-element additive constants enter twice: as one-hot constant feature
    channels inside the (fixed) extractor, and as learnable per-element
    energy offsets next to the readout.
    """

    hyper: ModelHyper
    feature_seed: int
    readout: np.ndarray
    element_offsets: np.ndarray

    def __post_init__(self):
        self._extractor = param_init(self.hyper, self.feature_seed)

    def _env(self, config: ColoredConfig, i):
        rel = np.delete(config.positions, i, axis=0) - config.positions[i]
        colors = np.delete(config.colors, i)
        return ColoredConfig(colors, rel, config.n_colors), int(config.colors[i])

    def _env_features(self, config, i, with_jac, extractor=None):
        env, center = self._env(config, i)
        onehot = np.zeros(self.hyper.n_constant_channels)
        onehot[center] = 1.0
        feats = fundamental_features(env, self.hyper.l_max, self.hyper.radial,
                                     with_jacobian=with_jac)
        feats = append_constant_channels(feats, onehot)
        from .descriptors import _invariants_aug
        return _invariants_aug(extractor or self._extractor, feats), center

    def design(self, config: ColoredConfig, extractor=None):
        """Per-config energy features and their force design tensors.

        Returns:
            (phi, dphi, offsets_count): phi has shape (n_inv,), dphi has
            shape (n_inv, n_atoms, 3) holding d(sum_i phi_i)/d r_j, and the
            per-element atom counts for the offset columns.
        """
        n = len(config)
        phi = None
        dphi = None
        counts = np.zeros(self.hyper.n_colors)
        for i in range(n):
            (inv, inv_jac), center = self._env_features(config, i, True, extractor)
            counts[center] += 1
            if phi is None:
                phi = np.zeros(inv.shape[0])
                dphi = np.zeros((inv.shape[0], n, 3))
            phi += inv
            others = [j for j in range(n) if j != i]
            # env coordinates are r_j - r_i: gradient wrt r_j is direct,
            # gradient wrt the center is minus the sum
            dphi[:, others, :] += inv_jac
            dphi[:, i, :] -= inv_jac.sum(axis=1)
        return phi, dphi, counts

    def predict(self, config: ColoredConfig):
        phi, dphi, counts = self.design(config)
        energy = float(self.readout @ phi + self.element_offsets @ counts)
        forces = -np.tensordot(self.readout, dphi, axes=(0, 0))
        return energy, forces


def _fit_forces_whitened(student, configs, energies, forces, tc, hyper):
    """Convex readout fit on the whitened joint energy/force design."""
    phis, dphis, counts = [], [], []
    for c in configs:
        phi, dphi, cnt = student.design(c)
        phis.append(phi)
        dphis.append(dphi)
        counts.append(cnt)
    phis = np.array(phis)
    counts = np.array(counts)
    f_rows = np.concatenate([-d.reshape(d.shape[0], -1).T for d in dphis], axis=0)
    f_targets = np.concatenate([np.asarray(f).ravel() for f in forces])
    energies = np.asarray(energies, dtype=float)
    w = tc.force_weight
    n_e, n_f = energies.shape[0], f_targets.shape[0]
    # stack both loss terms into one least-squares design (parameters:
    # readout then per-element offsets)
    a_top = np.sqrt((1 - w) / max(n_e, 1)) * np.concatenate([phis, counts], axis=1)
    a_bot = np.sqrt(w / max(n_f, 1)) * np.concatenate(
        [f_rows, np.zeros((n_f, hyper.n_colors))], axis=1)
    design = np.concatenate([a_top, a_bot], axis=0)
    target = np.concatenate([np.sqrt((1 - w) / max(n_e, 1)) * energies,
                             np.sqrt(w / max(n_f, 1)) * f_targets])
    u, s, vt = np.linalg.svd(design, full_matrices=False)
    rank = int(np.sum(s > 1e-12 * s[0]))
    u, s, vt = u[:, :rank], s[:rank], vt[:rank]

    torch.manual_seed(tc.seed)
    beta = torch.zeros(rank, requires_grad=True)
    u_t = torch.tensor(u)
    tgt = torch.tensor(target)
    frows_t = torch.tensor(f_rows)
    ftg_t = torch.tensor(f_targets)
    back = torch.tensor((vt.T / s))
    opt = torch.optim.SGD([beta], lr=tc.learning_rate)
    rows = []
    initial = None
    for epoch in range(tc.epochs):
        t0 = time.perf_counter()
        opt.zero_grad()
        loss = torch.sum((u_t @ beta - tgt) ** 2)
        loss.backward()
        opt.step()
        val = float(loss.detach())
        if initial is None:
            initial = max(val, 1e-300)
        if not np.isfinite(val) or val > 1e3 * initial:
            raise DivergenceDetected(f"loss {val:.3e} diverged from {initial:.3e}")
        with torch.no_grad():
            params = back @ beta
            force_mse = float(torch.mean(
                (frows_t @ params[:hyper.n_invariants] - ftg_t) ** 2))
        rows.append(EpochRow(epoch, val, force_mse, time.perf_counter() - t0))
        if tc.stop_at_test_mse is not None and force_mse <= tc.stop_at_test_mse:
            break
    params = (back @ beta).detach().numpy()
    student.readout = params[:hyper.n_invariants]
    student.element_offsets = params[hyper.n_invariants:]
    report = TrainReport(rows, _digest([beta]),
                         meta={"force_weight": w, "lr": tc.learning_rate,
                               "whitened": True})
    return student, report


def make_force_teacher(hyper: ModelHyper, seed, calibration_configs=None) -> ForceModel:
    """Random readout over the seeded features; optionally rescaled so the
    forces on a calibration set have unit RMS."""
    rng = np.random.default_rng(seed)
    model = ForceModel(hyper, seed, rng.normal(size=hyper.n_invariants),
                       rng.normal(size=hyper.n_colors))
    if calibration_configs:
        sq, count = 0.0, 0
        for c in calibration_configs:
            _, f = model.predict(c)
            sq += np.sum(f ** 2)
            count += f.size
        rms = np.sqrt(sq / count)
        if rms > 0:
            model.readout = model.readout / rms
            model.element_offsets = model.element_offsets / rms
    return model


def force_dataset(model: ForceModel, configs):
    """Labels (energies, forces) generated by a model."""
    energies, forces = [], []
    for c in configs:
        e, f = model.predict(c)
        energies.append(e)
        forces.append(f)
    return np.array(energies), forces


def fit_forces(configs, energies, forces, tc: TrainConfig, hyper: ModelHyper,
               feature_seed=0):
    """Fit the linear readout (and element offsets) to energies and forces.

    The invariant features and their position jacobians are precomputed with
    the seeded extractor; plain SGD then minimizes
    (1 - w) MSE(E) + w MSE(F) over the readout.  Without a curriculum the
    joint design is whitened first (a fixed linear reparameterization), so
    constant-rate SGD is well conditioned and recovers an exactly
    representable target to high accuracy.  Returns (ForceModel, TrainReport).
    """
    student = ForceModel(hyper, feature_seed,
                         np.zeros(hyper.n_invariants), np.zeros(hyper.n_colors))
    curriculum = ((tc.body_start is not None and tc.body_step > 0)
                  or (tc.radial_start is not None and tc.radial_step > 0))
    if not curriculum:
        return _fit_forces_whitened(student, configs, energies, forces, tc, hyper)

    def stage_design(active_radial):
        extractor = (None if active_radial is None
                     else masked_radial_model(student._extractor, active_radial))
        phis, dphis, counts = [], [], []
        for c in configs:
            phi, dphi, cnt = student.design(c, extractor)
            phis.append(phi)
            dphis.append(dphi)
            counts.append(cnt)
        phis = np.array(phis)
        f_rows = np.concatenate([-d.reshape(d.shape[0], -1).T for d in dphis],
                                axis=0)
        return phis, f_rows, np.array(counts)

    def active_radial(epoch):
        if tc.radial_start is None or tc.radial_step <= 0:
            return None
        return min(hyper.radial.count, tc.radial_start + epoch // tc.radial_step)

    prefix_orders = invariant_prefix_orders(hyper)

    def body_mask(epoch):
        if tc.body_start is None or tc.body_step <= 0:
            return None
        active = tc.body_start + epoch // tc.body_step
        return torch.tensor((prefix_orders <= active).astype(float))

    f_targets = np.concatenate([np.asarray(f).ravel() for f in forces])
    stage_cache = {}

    def stage_tensors(active):
        if active not in stage_cache:
            phis, f_rows, counts = stage_design(active)
            scale = phis.std(axis=0)
            scale[scale < 1e-9] = 1.0
            stage_cache[active] = (
                torch.tensor(phis / scale), torch.tensor(f_rows / scale),
                torch.tensor(counts), scale)
        return stage_cache[active]

    torch.manual_seed(tc.seed)
    theta = torch.zeros(hyper.n_invariants, requires_grad=True)
    offsets = torch.zeros(hyper.n_colors, requires_grad=True)
    e_t = torch.tensor(np.asarray(energies, dtype=float))
    ftg_t = torch.tensor(f_targets)
    opt = torch.optim.SGD([theta, offsets], lr=tc.learning_rate)
    rows = []
    initial = None
    w = tc.force_weight
    scale = None
    for epoch in range(tc.epochs):
        t0 = time.perf_counter()
        phi_t, frows_t, cnt_t, scale = stage_tensors(active_radial(epoch))
        mask = body_mask(epoch)
        theta_eff = theta if mask is None else theta * mask
        opt.zero_grad()
        e_pred = phi_t @ theta_eff + cnt_t @ offsets
        f_pred = frows_t @ theta_eff
        loss = (1 - w) * torch.mean((e_pred - e_t) ** 2) \
            + w * torch.mean((f_pred - ftg_t) ** 2)
        loss.backward()
        opt.step()
        val = float(loss.detach())
        if initial is None:
            initial = val
        if not np.isfinite(val) or val > 1e3 * initial:
            raise DivergenceDetected(f"loss {val:.3e} diverged from {initial:.3e}")
        with torch.no_grad():
            theta_now = theta if mask is None else theta * mask
            force_mse = float(torch.mean((frows_t @ theta_now - ftg_t) ** 2))
        rows.append(EpochRow(epoch, val, force_mse, time.perf_counter() - t0))
        if tc.stop_at_test_mse is not None and force_mse <= tc.stop_at_test_mse:
            break
    final_mask = body_mask(tc.epochs - 1)
    theta_final = theta if final_mask is None else theta * final_mask
    student.readout = theta_final.detach().numpy() / scale
    student.element_offsets = offsets.detach().numpy()
    if active_radial(tc.epochs - 1) is not None:
        student._extractor = masked_radial_model(
            student._extractor, active_radial(tc.epochs - 1))
    report = TrainReport(rows, _digest([theta, offsets]),
                         meta={"force_weight": w, "lr": tc.learning_rate})
    return student, report
