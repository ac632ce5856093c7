"""Command-line interface for reproducible desk-scale runs.

Subcommands emit CSV data on stdout (or to --out files) and log to stderr.
Exit codes: 0 success, 1 internal error, 2 validation failure.  All
randomness flows from explicit --seed flags.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from .errors import MatMomentsError, ParseError


def _cmd_features(args):
    from .configio import read_config
    from .descriptors import RadialSpec, fundamental_features

    config = read_config(args.config)
    kind = "polynomial_r2k" if args.radial == "poly" else "exp_chebyshev"
    radial = RadialSpec(kind, args.count, cutoff=args.cutoff)
    feats = fundamental_features(config, args.lmax, radial)
    writer = csv.writer(sys.stdout)
    writer.writerow(["color", "radial_index", "l", "m", "value"])
    for color in range(config.n_colors):
        for k in range(radial.count):
            for l in range(args.lmax + 1):
                vec = feats.get(color, k, l)
                for m, v in enumerate(vec):
                    writer.writerow([color, k, l, m, "%.17g" % v])
    return 0


def distinguish_report(config_a, config_b, max_body, degree_cap=2,
                       battery_cap=200, seed=0, tol=1e-6):
    """Per-body-order maximum normalized invariant discrepancy.

    Body order n compares scalar chains of n - 1 moment-matrix factors
    (n-body information).  Returns (rows, separating_order) where rows are
    (body_order, max_discrepancy) and separating_order is the smallest body
    order whose battery separates the two configurations (None if none).
    """
    from .cgref import chain_value, enumerate_chains
    from .descriptors import fundamental_features

    n_colors = max(config_a.n_colors, config_b.n_colors)
    l_max = 2 * degree_cap
    fa = fundamental_features(config_a, l_max)
    fb = fundamental_features(config_b, l_max)
    fund_a = {l: fa.values[l] for l in range(l_max + 1)}
    fund_b = {l: fb.values[l] for l in range(l_max + 1)}
    rng = np.random.default_rng(seed)
    rows = []
    separating = None
    for body in range(2, max_body + 1):
        n_factors = body - 1
        worst = 0.0
        for shape in enumerate_chains(n_factors, degree_cap, end_degree=0):
            n_combo = n_colors ** n_factors
            if n_combo <= battery_cap:
                combos = [tuple((idx // n_colors ** i) % n_colors
                                for i in range(n_factors))
                          for idx in range(n_combo)]
            else:
                combos = [tuple(rng.integers(0, n_colors, n_factors))
                          for _ in range(battery_cap)]
            for combo in combos:
                va = chain_value(shape, fund_a, combo)[0]
                vb = chain_value(shape, fund_b, combo)[0]
                worst = max(worst, abs(va - vb) / max(1.0, abs(va), abs(vb)))
        rows.append((body, worst))
        if separating is None and worst > tol:
            separating = body
    return rows, separating


def _cmd_distinguish(args):
    from .configio import read_config

    a = read_config(args.a)
    b = read_config(args.b)
    rows, separating = distinguish_report(a, b, args.max_body, seed=args.seed)
    writer = csv.writer(sys.stdout)
    writer.writerow(["body_order", "max_discrepancy"])
    for body, disc in rows:
        writer.writerow([body, "%.6e" % disc])
    if separating is None:
        print(f"equivalent up to body order {args.max_body}", file=sys.stderr)
    else:
        print(f"separated at body order {separating}", file=sys.stderr)
    return 0


def _cmd_bench(args):
    from .bench import bench_bilinear, write_bench_csv

    l_list = [int(v) for v in args.lmax_list.split(",") if v]
    result = bench_bilinear(l_list, reps=args.reps, warmup=args.warmup,
                            channels=args.channels, seed=args.seed)
    write_bench_csv(args.out, result)
    for method, slope in sorted(result.slopes.items()):
        print(f"{method} slope (largest half): {slope:.2f}", file=sys.stderr)
    return 0


def _cmd_train_synthetic(args):
    from .tensors import synthetic_dataset
    from .training import TUNED_LR, TrainConfig, fit_synthetic

    train, test = synthetic_dataset(args.seed, args.n_train, args.n_test)
    lr = args.lr if args.lr is not None else TUNED_LR[args.path]
    tc = TrainConfig(learning_rate=lr, epochs=args.epochs, seed=args.seed,
                     batch_size=args.batch_size)
    report = fit_synthetic(args.path, train, test, tc)
    report.write_csv(args.out)
    print(f"final test mse {report.final_test_mse:.6e} "
          f"(label variance {test.labels.var():.6e})", file=sys.stderr)
    return 0


def _cmd_project(args):
    from .configio import read_config
    from .projections import (distance_ratio_report, project_features,
                              projection_report, random_pool,
                              standard_invariant_map, target_dimension,
                              write_projection_csv)

    seeds = [int(v) for v in args.seeds.split(",") if v]
    if args.pool:
        configs = [read_config(p) for p in args.pool]
        fmap = standard_invariant_map(args.n_features, seed=args.seed)
        rows = []
        for seed in seeds:
            reduced, _ = project_features(fmap, args.k, seed=seed)
            rep = distance_ratio_report(fmap, reduced, configs)
            rows.append({"seed": seed, "pool_size": len(configs),
                         "N": args.n_features,
                         "reduced_dim": target_dimension(args.k),
                         "min_ratio": rep["min_ratio"],
                         "collisions": rep["collisions"]})
    else:
        rows = projection_report(args.seed, seeds, n_features=args.n_features,
                                 k=args.k, pool_size=args.pool_size)
    if args.out:
        write_projection_csv(args.out, rows)
    writer = csv.DictWriter(sys.stdout, fieldnames=[
        "seed", "pool_size", "N", "reduced_dim", "min_ratio", "collisions"])
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="matmoments",
        description="Covariant descriptors of colored point configurations "
                    "via moment-matrix products.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="dump fundamental features as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--lmax", type=int, required=True)
    p.add_argument("--radial", choices=["poly", "chebyshev"], default="poly")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--cutoff", type=float, default=None)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("distinguish",
                       help="smallest body order separating two configs")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--max-body", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_distinguish)

    p = sub.add_parser("bench", help="bilinear kernel scaling benchmark")
    p.add_argument("--lmax-list", required=True,
                   help="comma-separated degrees, e.g. 16,24,32")
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--warmup", type=int, default=2)
    p.add_argument("--channels", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("train-synthetic",
                       help="fit the degree-10 synthetic target")
    p.add_argument("--path", choices=["matmul", "cg"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", type=int, default=2048)
    p.add_argument("--n-test", type=int, default=512)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train_synthetic)

    p = sub.add_parser("project",
                       help="random-projection reduction report")
    p.add_argument("--pool", nargs="*", default=None,
                   help="config files; omit to use a seeded random pool")
    p.add_argument("--pool-size", type=int, default=200)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n-features", type=int, default=40)
    p.add_argument("--seeds", required=True, help="comma-separated seeds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_project)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, MatMomentsError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - internal errors
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
