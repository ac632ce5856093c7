"""Scaling benchmark: coupling-table kernel vs block matrix multiplication.

Both kernels implement the same bilinear covariant map on stacks of degree
components up to L (per channel): the coupling route contracts every
admissible degree triple against dense coefficient tables, the matrix route
multiplies the two (L+1) x (L+1) matrix encodings.  Only the bilinear
application is timed; table construction and harmonic evaluation are not
part of the measurement.

Tables for the coupling route are built per degree pair and discarded, since
holding all pairs at the largest benchmark degrees would take tens of
gigabytes; the per-pair timings are summed into whole-kernel times.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from ._wigner3j import real_pair_matrix


def _median_seconds(samples):
    return float(np.median(np.asarray(samples)))


_BENCH_DTYPE = np.float32  # matches the single precision of the accelerator
                           # frameworks these layers normally run in


def time_matmul_kernel(l_max, channels=8, reps=5, warmup=2, seed=0,
                       min_seconds=2e-3):
    """Median seconds for one batched (L+1)x(L+1) matrix product."""
    rng = np.random.default_rng(seed)
    k = l_max + 1
    a = rng.normal(size=(channels, k, k)).astype(_BENCH_DTYPE)
    b = rng.normal(size=(channels, k, k)).astype(_BENCH_DTYPE)
    # scale inner repetitions so one measurement is comfortably above timer
    # resolution
    inner = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(inner):
            np.matmul(a, b)
        dt = time.perf_counter() - t0
        if dt >= min_seconds or inner >= 1 << 20:
            break
        inner *= 2
    samples = []
    for _ in range(warmup + reps):
        t0 = time.perf_counter()
        for _ in range(inner):
            np.matmul(a, b)
        samples.append((time.perf_counter() - t0) / inner)
    return _median_seconds(samples[warmup:])


def time_cg_kernel(l_max, channels=8, reps=5, warmup=2, seed=0):
    """Median seconds for one full coupling product on degree stacks <= L.

    Streams over degree pairs: the dense pair table is built outside the
    timed region, then applied ``warmup + reps`` times; per-repetition times
    are summed across pairs.
    """
    rng = np.random.default_rng(seed)
    dim = (l_max + 1) ** 2
    x1 = rng.normal(size=(channels, dim)).astype(_BENCH_DTYPE)
    x2 = rng.normal(size=(channels, dim)).astype(_BENCH_DTYPE)
    offsets = np.array([l * l for l in range(l_max + 2)])
    totals = np.zeros(warmup + reps)
    out = np.zeros((channels, dim), dtype=_BENCH_DTYPE)
    for l1 in range(l_max + 1):
        sl1 = slice(offsets[l1], offsets[l1 + 1])
        for l2 in range(l_max + 1):
            if abs(l1 - l2) > l_max:
                continue
            # built directly in fortran order and single precision: keeps the
            # skinny-row product on the fast gemm path with no extra copy
            table = real_pair_matrix(l1, l2, l_max, dtype=_BENCH_DTYPE)
            sl2 = slice(offsets[l2], offsets[l2 + 1])
            l3s = [l3 for l3 in range(abs(l1 - l2), min(l1 + l2, l_max) + 1)]
            col_slices = []
            at = 0
            for l3 in l3s:
                col_slices.append((slice(offsets[l3], offsets[l3 + 1]),
                                   slice(at, at + 2 * l3 + 1)))
                at += 2 * l3 + 1
            for r in range(warmup + reps):
                t0 = time.perf_counter()
                outer = x1[:, sl1][:, :, None] * x2[:, sl2][:, None, :]
                coupled = outer.reshape(channels, -1) @ table
                for out_sl, col_sl in col_slices:
                    out[:, out_sl] += coupled[:, col_sl]
                totals[r] += time.perf_counter() - t0
    return _median_seconds(totals[warmup:])


@dataclass
class BenchRow:
    method: str
    l_max: int
    channels: int
    median_seconds: float
    slope_window_flag: int


@dataclass
class BenchResult:
    rows: list
    slopes: dict

    def rows_for(self, method):
        return [r for r in self.rows if r.method == method]


def loglog_slope(l_values, seconds):
    x = np.log(np.asarray(l_values, dtype=float))
    y = np.log(np.asarray(seconds, dtype=float))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def bench_bilinear(l_max_list, reps=5, channels=8, warmup=2, seed=0) -> BenchResult:
    """Time both kernels over a list of degrees and fit log-log slopes.

    The reported slope for each method is fit over the largest half of
    ``l_max_list``; rows carry a flag marking membership in that window.
    Runs single-threaded for stable timings.
    """
    if reps < 3:
        raise ValueError("reps must be >= 3")
    l_max_list = sorted(int(l) for l in l_max_list)
    window = l_max_list[len(l_max_list) // 2:] if len(l_max_list) > 1 else l_max_list
    rows = []
    with threadpool_limits(limits=1):
        for l_max in l_max_list:
            flag = int(l_max in window)
            t_mat = time_matmul_kernel(l_max, channels, reps, warmup, seed)
            rows.append(BenchRow("matmul", l_max, channels, t_mat, flag))
            t_cg = time_cg_kernel(l_max, channels, reps, warmup, seed)
            rows.append(BenchRow("cg", l_max, channels, t_cg, flag))
    slopes = {}
    for method in ("matmul", "cg"):
        pts = [(r.l_max, r.median_seconds) for r in rows
               if r.method == method and r.slope_window_flag]
        if len(pts) >= 2:
            slopes[method] = loglog_slope([p[0] for p in pts], [p[1] for p in pts])
    return BenchResult(rows, slopes)


def write_bench_csv(path, result: BenchResult):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "l_max", "channels", "median_seconds",
                         "slope_window_flag"])
        for r in result.rows:
            writer.writerow([r.method, r.l_max, r.channels,
                             "%.9e" % r.median_seconds, r.slope_window_flag])


def read_bench_csv(path) -> BenchResult:
    rows = []
    with open(path) as fh:
        for rec in csv.DictReader(fh):
            rows.append(BenchRow(rec["method"], int(rec["l_max"]),
                                 int(rec["channels"]),
                                 float(rec["median_seconds"]),
                                 int(rec["slope_window_flag"])))
    slopes = {}
    for method in ("matmul", "cg"):
        pts = [(r.l_max, r.median_seconds) for r in rows
               if r.method == method and r.slope_window_flag]
        if len(pts) >= 2:
            slopes[method] = loglog_slope([p[0] for p in pts], [p[1] for p in pts])
    return BenchResult(rows, slopes)
