"""Moment tensors and Levi-Civita contractions.

An independent route to rotation invariants: per-color sums of k-fold outer
products of the point coordinates, contracted against each other (and
optionally the alternating epsilon tensor) with every index label appearing
exactly twice.  Used as a cross-check oracle for the matrix-product
invariants and as the label generator for the synthetic learning task.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import MalformedSpec
from .moments import ColoredConfig

_EPSILON = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _EPSILON[_i, _j, _k] = 1.0
    _EPSILON[_i, _k, _j] = -1.0


def moment_tensor(config: ColoredConfig, color, order):
    """Symmetric order-k tensor: sum of r^(tensor k) over points of a color."""
    pts = config.of_color(color)
    if order == 0:
        return np.array(float(pts.shape[0]))
    out = np.ones((pts.shape[0],))
    for _ in range(order):
        out = np.einsum("n...,ni->n...i", out, pts)
    return out.sum(axis=0)


@dataclass(frozen=True)
class ContractionSpec:
    """Full contraction of moment tensors (and epsilon factors) to a scalar.

    Each factor is ``("moment", color, labels)`` or ``("eps", labels)``;
    every index label must occur exactly twice across the whole spec.
    """

    factors: tuple

    def __post_init__(self):
        counts = {}
        for f in self.factors:
            labels = f[-1]
            if f[0] == "eps" and len(labels) != 3:
                raise MalformedSpec("epsilon factors take exactly 3 labels")
            for lab in labels:
                counts[lab] = counts.get(lab, 0) + 1
        bad = {lab: c for lab, c in counts.items() if c != 2}
        if bad:
            raise MalformedSpec(f"labels must appear exactly twice, got {bad}")

    @property
    def epsilon_count(self):
        return sum(1 for f in self.factors if f[0] == "eps")

    @property
    def parity(self):
        """0 for even (mirror-invariant) scalars, 1 for pseudo-scalars."""
        return self.epsilon_count % 2

    @classmethod
    def parse(cls, text):
        """Parse ``"T[abc](0) eps[def] T[adbef...](1)"`` style strings."""
        factors = []
        for tok in text.split():
            m = re.fullmatch(r"T\[([a-z]+)\]\((\d+)\)", tok)
            if m:
                factors.append(("moment", int(m.group(2)), m.group(1)))
                continue
            m = re.fullmatch(r"eps\[([a-z]{3})\]", tok)
            if m:
                factors.append(("eps", m.group(1)))
                continue
            raise MalformedSpec(f"cannot parse factor {tok!r}")
        return cls(tuple(factors))


def _factor_arrays(spec: ContractionSpec, config: ColoredConfig):
    arrays = []
    for f in spec.factors:
        if f[0] == "eps":
            arrays.append((f[1], _EPSILON))
        else:
            _, color, labels = f
            arrays.append((labels, moment_tensor(config, color, len(labels))))
    return arrays


def contract(spec: ContractionSpec, config: ColoredConfig) -> float:
    """Evaluate the contraction, pairing factors greedily by smallest
    intermediate size."""
    work = []
    scalar = 1.0
    for labels, arr in _factor_arrays(spec, config):
        # resolve labels repeated inside one factor first
        uniq = "".join(dict.fromkeys(labels))
        if len(uniq) != len(labels):
            arr = np.einsum(f"{labels}->{''.join(l for l in uniq if labels.count(l) == 1)}", arr)
            labels = "".join(l for l in uniq if l in labels and labels.count(l) == 1)
        if labels == "":
            scalar *= float(arr)
        else:
            work.append((labels, arr))
    while len(work) > 1:
        best = None
        for i in range(len(work)):
            for j in range(i + 1, len(work)):
                li, lj = work[i][0], work[j][0]
                out = "".join(l for l in li + lj if (li + lj).count(l) == 1)
                size = 3 ** len(out)
                if best is None or size < best[0]:
                    best = (size, i, j, out)
        _, i, j, out = best
        (li, ai), (lj, aj) = work[i], work[j]
        merged = np.einsum(f"{li},{lj}->{out}", ai, aj)
        work = [w for k, w in enumerate(work) if k not in (i, j)]
        if out == "":
            scalar *= float(merged)
        else:
            work.append((out, merged))
    if work:
        labels, arr = work[0]
        raise MalformedSpec(f"labels {labels!r} left uncontracted")
    return scalar


def contract_naive(spec: ContractionSpec, config: ColoredConfig) -> float:
    """Brute-force reference: explicit sum over all index assignments.

    Exponential in the number of distinct labels; intended for small specs
    in tests only.
    """
    arrays = _factor_arrays(spec, config)
    labels = sorted({l for labs, _ in arrays for l in labs})
    total = 0.0
    for assignment in np.ndindex(*(3,) * len(labels)):
        env = dict(zip(labels, assignment))
        term = 1.0
        for labs, arr in arrays:
            term *= arr[tuple(env[l] for l in labs)] if labs else float(arr)
        total += term
    return total


# The degree-10 synthetic learning target: an order-6 (in body count)
# invariant coupling all five colors, with a rank-10 leading tensor.
DEGREE10_SPEC = ContractionSpec.parse(
    "T[abcdefghij](0) T[akn](1) T[bckl](2) T[deflm](3) T[ghijmn](4)"
)


def degree10_label(config: ColoredConfig) -> float:
    return contract(DEGREE10_SPEC, config)


@dataclass
class LabeledConfigs:
    configs: list
    labels: np.ndarray


def synthetic_dataset(seed, n_train, n_test, points_per_color=4, colors=5):
    """Seeded configurations of unit-sphere points with degree-10 labels.

    Points are uniform on the unit sphere, ``points_per_color`` of each
    color; labels come from the fixed degree-10 contraction.

    Returns:
        Pair of LabeledConfigs (train, test).
    """
    rng = np.random.default_rng(seed)
    n_points = points_per_color * colors
    color_ids = np.repeat(np.arange(colors), points_per_color)

    def draw(count):
        out = []
        for _ in range(count):
            p = rng.normal(size=(n_points, 3))
            p /= np.linalg.norm(p, axis=1, keepdims=True)
            out.append(ColoredConfig(color_ids.copy(), p, colors))
        return out

    train = draw(n_train)
    test = draw(n_test)
    return (
        LabeledConfigs(train, np.array([degree10_label(c) for c in train])),
        LabeledConfigs(test, np.array([degree10_label(c) for c in test])),
    )


def write_records(path, data: LabeledConfigs):
    """One record per line: point count, colors, flat coordinates, label."""
    with open(path, "w") as fh:
        for config, label in zip(data.configs, data.labels):
            fields = [str(len(config))]
            fields.extend(str(int(c)) for c in config.colors)
            fields.extend("%.17g" % v for v in config.positions.ravel())
            fields.append("%.17g" % label)
            fh.write(" ".join(fields) + "\n")


def read_records(path, n_colors=None) -> LabeledConfigs:
    configs, labels = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            n = int(parts[0])
            colors = np.array([int(c) for c in parts[1:1 + n]])
            coords = np.array([float(v) for v in parts[1 + n:1 + 4 * n]]).reshape(n, 3)
            labels.append(float(parts[1 + 4 * n]))
            configs.append(ColoredConfig(
                colors, coords, n_colors or int(colors.max()) + 1))
    return LabeledConfigs(configs, np.array(labels))
