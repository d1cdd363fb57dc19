"""Command-line front end.

Subcommands:

* ``classify``  -- phase label and critical time from the rate family.
* ``simulate``  -- Monte Carlo block/dust summaries over many replicates.
* ``gwve``      -- branching-process means, extinction and degeneracy.
* ``dimension`` -- analytic vs empirical dust dimension over a time grid.
* ``flowcheck`` -- composition-identity checks on shared realizations.
* ``events``    -- dump one realization as CSV.

Output is deterministic for a fixed configuration and seed; the seed is
embedded in every artifact.  With ``--outdir`` the delimited report files
and matplotlib figures are written alongside the stdout payload.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import reports
from .events import EventStore, replicate_seed
from .flow import (
    survivor_counts_batch,
    survivor_trees_batch,
    verify_flow_property,
)
from .gwve import (
    DegeneracyUndecidableError,
    GwveSpec,
    degeneracy_test,
    extinct_prob_by,
    extinct_prob_limit,
    m as growth_m,
    mean_b,
    simulate_many,
)
from .phase import (
    NoSurvivorsError,
    classify,
    dust_dimension_analytic,
    dust_dimension_empirical,
)
from .rates import RateSpecError, analytics, cesaro_window_estimate, parse_rates, parse_tail
from .space import CANTOR, HALF_OPEN, Alphabet, SpaceConfig

DEFAULT_SEED = 1729
SEED_ENV_VAR = "SEGCOAL_SEED"

_GEOMETRIES = {"cantor": CANTOR, "interval": HALF_OPEN}


def _default_seed() -> int:
    env = os.environ.get(SEED_ENV_VAR)
    return int(env) if env else DEFAULT_SEED


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-S", "--alphabet-size", type=int, default=2)
    parser.add_argument("--rates", required=True, help="e.g. constant:1, geometric:1:0.125")
    parser.add_argument(
        "--declared-tail",
        default=None,
        help="tail metadata for table rates: WEIGHTED,SUM,CESARO (e.g. infinite,inf,2)",
    )
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--output", choices=("json", "csv"), default="json")
    parser.add_argument("--outdir", type=Path, default=None)


def _add_sim(parser: argparse.ArgumentParser, depth: int, replicates: int) -> None:
    parser.add_argument("--t", type=float, default=None)
    parser.add_argument("--depth", type=int, default=depth)
    parser.add_argument("--precision", type=int, default=None)
    parser.add_argument("--replicates", type=int, default=replicates)
    parser.add_argument("--geometry", choices=("cantor", "interval"), default="cantor")
    parser.add_argument("--tol", type=float, default=1e-6)


def _family(args: argparse.Namespace):
    tail = parse_tail(args.declared_tail) if args.declared_tail else None
    return parse_rates(args.rates, declared_tail=tail)


def _space(args: argparse.Namespace, geometry_name: str | None = None) -> SpaceConfig:
    precision = args.precision if args.precision is not None else args.depth + 10
    geometry = _GEOMETRIES[geometry_name or args.geometry]
    return SpaceConfig(Alphabet(args.alphabet_size), geometry, precision)


def _seed(args: argparse.Namespace) -> int:
    return args.seed if args.seed is not None else _default_seed()


def _base_payload(args: argparse.Namespace, command: str, seed: int) -> dict:
    return {
        "schema": reports.SCHEMA,
        "command": command,
        "alphabet_size": args.alphabet_size,
        "rates": args.rates,
        "seed": seed,
    }


def _emit(args: argparse.Namespace, payload: dict, csv_out: str | None = None) -> None:
    if args.output == "csv" and csv_out is not None:
        sys.stdout.write(csv_out)
    else:
        sys.stdout.write(reports.json_text(payload))


def _require_t(args: argparse.Namespace, parser: argparse.ArgumentParser) -> float:
    if args.t is None or args.t <= 0:
        parser.error("--t must be given and positive")
    return args.t


def cmd_classify(args, parser) -> int:
    family = _family(args)
    tail = analytics(family, args.alphabet_size)
    phase = classify(args.alphabet_size, tail)
    seed = _seed(args)
    payload = _base_payload(args, "classify", seed)
    payload.update(
        {
            "phase": phase.label.value,
            "t0": phase.critical_time,
            "tail": {
                "sum_weighted_finite": tail.sum_weighted_finite,
                "rate_sum": None if math.isinf(tail.rate_sum) else tail.rate_sum,
                "cesaro_limsup": None
                if math.isinf(tail.cesaro_limsup)
                else tail.cesaro_limsup,
            },
            # advisory diagnostic only; classification never uses it
            "cesaro_window_estimate": cesaro_window_estimate(family, 1, 64),
        }
    )
    csv_out = reports.csv_text(
        ["phase", "t0"], [[phase.label.value, "" if phase.critical_time is None else repr(phase.critical_time)]]
    )
    _emit(args, payload, csv_out)
    if args.outdir:
        reports.write_text(args.outdir / "classify.json", reports.json_text(payload))
    return 0


def cmd_simulate(args, parser) -> int:
    family = _family(args)
    t = _require_t(args, parser)
    space = _space(args)
    seed = _seed(args)
    n_rep = args.replicates
    if n_rep < 1:
        parser.error("--replicates must be >= 1")
    seeds = [replicate_seed(seed, i) for i in range(n_rep)]
    counts = survivor_counts_batch(space, family, t, args.depth, seeds)

    size = args.alphabet_size
    dust_cells = counts[:, -1]
    dust_measure = dust_cells / float(size**args.depth)
    dust_empty = dust_cells == 0
    blocks = (
        (1 - counts[:, 0])
        + size * counts[:, :-1].sum(axis=1)
        - counts[:, 1:].sum(axis=1)
    )

    def mean_se(values) -> dict:
        arr = np.asarray(values, dtype=float)
        se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else math.inf
        return {"mean": float(arr.mean()), "stderr": se}

    payload = _base_payload(args, "simulate", seed)
    payload.update(
        {
            "t": t,
            "depth": args.depth,
            "precision": space.precision,
            "geometry": args.geometry,
            "replicates": n_rep,
            "aggregate": {
                "dust_empty_freq": mean_se(dust_empty),
                "dust_measure": mean_se(dust_measure),
                "block_count": mean_se(blocks),
            },
        }
    )
    header = ["replicate", "dust_empty", "dust_measure", "block_count"]
    rows = [
        [i, int(dust_empty[i]), repr(float(dust_measure[i])), int(blocks[i])]
        for i in range(n_rep)
    ]
    payload["replicate_rows"] = [dict(zip(header, row)) for row in rows]
    _emit(args, payload, reports.csv_text(header, rows))
    if args.outdir:
        reports.write_text(args.outdir / "replicates.csv", reports.csv_text(header, rows))
        aggregate_only = {k: v for k, v in payload.items() if k != "replicate_rows"}
        reports.write_text(args.outdir / "aggregate.json", reports.json_text(aggregate_only))
        reports.simulate_figure(dust_measure, blocks, args.outdir / "simulate.png")
    return 0


def cmd_gwve(args, parser) -> int:
    family = _family(args)
    t = _require_t(args, parser)
    spec = GwveSpec(args.alphabet_size, family, t)
    seed = _seed(args)
    levels = list(range(args.n + 1))
    means = [mean_b(spec, n) for n in levels]
    payload = _base_payload(args, "gwve", seed)
    payload.update(
        {
            "t": t,
            "n": args.n,
            "means": [
                {"n": n, "m": growth_m(spec, n), "mean_b": means[n]} for n in levels
            ],
            "extinct_prob_by_n": extinct_prob_by(spec, args.n),
        }
    )
    sim_means = sim_se = None
    if args.sim_replicates:
        rng = np.random.default_rng(seed)
        trajectories = simulate_many(spec, args.n, args.sim_replicates, rng)
        sim_means = trajectories.mean(axis=0)
        sim_se = trajectories.std(axis=0, ddof=1) / math.sqrt(args.sim_replicates)
        payload["simulation"] = {
            "replicates": args.sim_replicates,
            "means": sim_means.tolist(),
            "stderr": sim_se.tolist(),
        }
    if args.limit:
        limit = extinct_prob_limit(spec, args.tol)
        payload["extinct_prob_limit"] = {
            "value": limit.value,
            "n_reached": limit.n_reached,
            "converged": limit.converged,
        }
    if args.degeneracy:
        try:
            payload["degeneracy"] = degeneracy_test(spec, tol=args.tol).to_json_dict()
        except DegeneracyUndecidableError as exc:
            parser.exit(2, f"error: {exc}\n")
    header = ["n", "m", "mean_b"]
    rows = [[n, repr(growth_m(spec, n)), repr(means[n])] for n in levels]
    _emit(args, payload, reports.csv_text(header, rows))
    if args.outdir:
        reports.write_text(args.outdir / "gwve.json", reports.json_text(payload))
        reports.write_text(args.outdir / "gwve.csv", reports.csv_text(header, rows))
        reports.gwve_figure(
            levels,
            means,
            None if sim_means is None else sim_means.tolist(),
            None if sim_se is None else sim_se.tolist(),
            args.outdir / "gwve.png",
        )
    return 0


def cmd_dimension(args, parser) -> int:
    family = _family(args)
    tail = analytics(family, args.alphabet_size)
    if math.isinf(tail.cesaro_limsup):
        parser.error("dimension is undefined for supercritical families (dust is empty)")
    if args.t_grid:
        grid = [float(tok) for tok in args.t_grid.split(",")]
    elif args.t0_grid:
        phase = classify(args.alphabet_size, tail)
        if phase.critical_time is None:
            parser.error("--t0-grid needs a Critical family")
        grid = [float(tok) * phase.critical_time for tok in args.t0_grid.split(",")]
    elif args.t is not None:
        grid = [args.t]
    else:
        parser.error("give --t, --t-grid or --t0-grid")
    if any(t <= 0 for t in grid):
        parser.error("grid times must be positive")

    space = _space(args)
    seed = _seed(args)
    rows = []
    reps = []
    regression_rows = []
    for index, t in enumerate(grid):
        base = replicate_seed(seed, 1_000_000 + index)
        seeds = [replicate_seed(base, r) for r in range(args.replicates)]
        trees = survivor_trees_batch(space, family, t, args.depth, seeds)
        analytic = dust_dimension_analytic(args.alphabet_size, tail.cesaro_limsup, t)
        try:
            report = dust_dimension_empirical(trees, space.geometry, analytic_dim=analytic)
        except NoSurvivorsError as exc:
            parser.exit(1, f"error: {exc}\n")
        stderr = report.half_width / 1.96
        rows.append(
            {
                "t": t,
                "analytic": analytic,
                "empirical": report.empirical_dim,
                "stderr": stderr,
            }
        )
        reps.append(report.to_json_dict())
        for r, tree in enumerate(trees):
            if tree.counts[args.depth] < 1:
                continue
            for n in range(args.depth // 2 + 1, args.depth + 1):
                regression_rows.append(
                    [repr(t), r, n, repr(math.log(tree.counts[n]))]
                )

    header = ["t", "analytic", "empirical", "stderr"]
    csv_rows = [[repr(r["t"]), repr(r["analytic"]), repr(r["empirical"]), repr(r["stderr"])] for r in rows]
    csv_out = reports.csv_text(header, csv_rows)
    payload = _base_payload(args, "dimension", seed)
    payload.update(
        {
            "depth": args.depth,
            "replicates": args.replicates,
            "grid": reps,
        }
    )
    if args.output == "csv":
        sys.stdout.write(csv_out)
    else:
        sys.stdout.write(reports.json_text(payload))
    if args.outdir:
        reports.write_text(args.outdir / "dimension.csv", csv_out)
        reports.write_text(args.outdir / "dimension.json", reports.json_text(payload))
        reports.write_text(
            args.outdir / "regression.csv",
            reports.csv_text(["t", "replicate", "n", "log_b"], regression_rows),
        )
        reports.dimension_figure(rows, args.outdir / "dimension.png")
    return 0


def cmd_flowcheck(args, parser) -> int:
    family = _family(args)
    seed = _seed(args)
    horizon = args.horizon
    geometries = ["cantor", "interval"] if args.geometry == "both" else [args.geometry]
    rng = np.random.default_rng(seed)
    results = []
    all_passed = True
    for name in geometries:
        space = _space(args, geometry_name=name)
        store = EventStore(space, family, (0.0, horizon), args.depth, seed)
        report = verify_flow_property(store, args.samples, rng)
        all_passed &= report.passed
        results.append(
            {
                "geometry": name,
                "samples": report.n_samples,
                "violations": report.violations,
                "first_counterexample": report.first_counterexample,
            }
        )
    payload = _base_payload(args, "flowcheck", seed)
    payload.update({"horizon": horizon, "depth": args.depth, "checks": results})
    sys.stdout.write(reports.json_text(payload))
    if args.outdir:
        reports.write_text(args.outdir / "flowcheck.json", reports.json_text(payload))
    return 0 if all_passed else 1


def cmd_events(args, parser) -> int:
    family = _family(args)
    t = _require_t(args, parser)
    space = _space(args)
    seed = _seed(args)
    store = EventStore(space, family, (0.0, t), args.depth, seed)
    try:
        text = store.dump_csv()
    except ValueError as exc:
        parser.exit(1, f"error: {exc}\n")
    sys.stdout.write(text)
    if args.outdir:
        reports.write_text(args.outdir / "events.csv", text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segcoal",
        description="Segregated spatial coalescent: simulation and exact analytics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="phase label and critical time")
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("simulate", help="Monte Carlo dust/block summaries")
    _add_common(p)
    _add_sim(p, depth=20, replicates=1000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gwve", help="branching-process analytics")
    _add_common(p)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--limit", action="store_true", help="iterate the extinction limit")
    p.add_argument("--degeneracy", action="store_true")
    p.add_argument("--sim-replicates", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_gwve)

    p = sub.add_parser("dimension", help="dust dimension: analytic vs empirical")
    _add_common(p)
    _add_sim(p, depth=25, replicates=400)
    p.add_argument("--t-grid", default=None, help="comma-separated absolute times")
    p.add_argument("--t0-grid", default=None, help="comma-separated fractions of t0")
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("flowcheck", help="flow composition checks")
    _add_common(p)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--precision", type=int, default=None)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--geometry", choices=("cantor", "interval", "both"), default="both")
    p.set_defaults(func=cmd_flowcheck)

    p = sub.add_parser("events", help="dump one realization as CSV")
    _add_common(p)
    _add_sim(p, depth=6, replicates=1)
    p.set_defaults(func=cmd_events)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except RateSpecError as exc:
        parser.exit(2, f"error: invalid rates spec: {exc}\n")
    except (ValueError, RuntimeError) as exc:
        parser.exit(1, f"error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
