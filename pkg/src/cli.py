"""
Command-line entry point.

    simulate   run one cell (or a grid file) and write episode and summary CSVs
    verify     Monte-Carlo good-event table from an episode CSV
    constants  print the analysis constants of a world
"""

import argparse
import csv
import logging
import math
import sys
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from pydantic import ValidationError

from core.config import get_settings
from core.errors import ArtifactIOError, EngineError
from core.logging_setup import configure_logging
from domains.diagnostics.service import montecarlo_deviation_check
from domains.environment.models import EnvironmentSpec
from domains.environment.service import compatibility_probe, estimate_assumption_constants, generate_parameters
from domains.harness.models import GridSpec, RegretLog, RunConfig, parse_cell_id
from domains.harness.repository import parse_grid_file, read_csv, write_csv
from domains.harness.service import simulate_grid, world_seed
from domains.scheduler.service import derive_constants

logger = logging.getLogger(__name__)

VERIFY_FIELDS = ["cell", "epoch", "violation_frequency", "bound", "replications"]
CONE_SAMPLES = 200


def _add_world_arguments(parser: argparse.ArgumentParser, sweep: bool = False) -> None:
    settings = get_settings()
    parser.add_argument("--d", type=int, required=not sweep, help="Covariate dimension")
    parser.add_argument("--k", type=int, required=not sweep, help="Number of arms")
    parser.add_argument("--s0", type=int, default=5, help="Nonzero coordinates per arm")
    parser.add_argument("--sigma", type=float, default=settings.DEFAULT_SIGMA, help="Noise standard deviation")
    parser.add_argument("--h", type=float, default=settings.DEFAULT_H, help="Dominance margin")
    parser.add_argument("--x-max", type=float, default=settings.DEFAULT_X_MAX, help="Covariate bound")
    parser.add_argument("--b", type=float, default=5.0, help="L1 bound of every arm vector")
    parser.add_argument(
        "--covariate-law", choices=["uniform_box", "truncated_gaussian"], default="uniform_box", help="Covariate law"
    )


def _spec(args: argparse.Namespace) -> EnvironmentSpec:
    return EnvironmentSpec(
        d=args.d,
        k=args.k,
        s0=args.s0,
        sigma=args.sigma,
        h=args.h,
        x_max=args.x_max,
        b=args.b,
        covariate_law=args.covariate_law,
    )


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="teamwork-bandit",
        description="Teamwork LASSO Bandit simulation engine",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser("simulate", help="Run replications and write CSV artifacts")
    _add_world_arguments(simulate, sweep=True)
    simulate.add_argument("--n", type=int, default=1, help="Batch size N")
    simulate.add_argument("--q", type=int, default=1, help="Teamwork epochs per arm per round")
    simulate.add_argument("--decisions", type=int, default=5000, help="Total user-level decisions")
    simulate.add_argument("--reps", type=int, default=1, help="Replications per cell")
    simulate.add_argument("--seed", type=int, default=settings.MASTER_SEED, help="Master seed")
    simulate.add_argument("--policy", choices=["teamwork", "oracle"], default="teamwork")
    simulate.add_argument("--lambda-rule", choices=["tuned", "theory"], default="tuned")
    simulate.add_argument("--lambda1", type=float, default=None, help="Teamwork LASSO penalty")
    simulate.add_argument("--lambda2-scale", type=float, default=None, help="Scale of the all-sample penalty schedule")
    simulate.add_argument("--workers", type=int, default=settings.MAX_WORKERS, help="Worker processes")
    simulate.add_argument("--grid", type=Path, default=None, help="Grid file; replaces the world and cell arguments")
    simulate.add_argument("--out", type=Path, required=True, help="Episode CSV path")

    verify = subparsers.add_parser("verify", help="Good-event violation table from an episode CSV")
    verify.add_argument("--in", dest="input", type=Path, required=True, help="Episode CSV written by simulate")
    verify.add_argument("--out", type=Path, required=True, help="Output CSV path")
    verify.add_argument(
        "--checkpoints", type=str, default=None, help="Comma-separated epochs (default: powers of two from (Kq)^2)"
    )

    constants = subparsers.add_parser("constants", help="Print the analysis constants of a world")
    _add_world_arguments(constants)
    constants.add_argument("--q", type=int, default=1)
    constants.add_argument("--n", type=int, default=1)
    constants.add_argument("--p-star", type=float, default=None, help="Dominance mass; probed when omitted")
    constants.add_argument("--phi0", type=float, default=None, help="Compatibility constant; probed when omitted")
    constants.add_argument("--margin-c0", type=float, default=1.0)
    constants.add_argument("--seed", type=int, default=settings.MASTER_SEED)
    constants.add_argument("--probe-draws", type=int, default=settings.PROBE_DRAWS)
    return parser


# ============================================================================
# Commands
# ============================================================================


def _grid_from_args(args: argparse.Namespace) -> GridSpec:
    if args.grid is not None:
        return parse_grid_file(args.grid)
    if args.d is None or args.k is None:
        raise EngineError("--d and --k are required without --grid")
    base = RunConfig(
        spec=_spec(args),
        n_users=args.n,
        q=args.q,
        total_decisions=args.decisions,
        replications=args.reps,
        seed=args.seed,
        lambda1=args.lambda1,
        lambda2_scale=args.lambda2_scale,
        policy=args.policy,
        lambda_rule=args.lambda_rule,
    )
    return GridSpec(base=base, d=[args.d], q=[args.q], n_users=[args.n])


def cmd_simulate(args: argparse.Namespace) -> int:
    grid = _grid_from_args(args)
    logs, summaries = simulate_grid(grid, workers=args.workers)
    write_csv(logs, args.out, summaries)
    for summary in summaries:
        print(
            f"{summary.cell}: regret mean={summary.mean_regret:.4f} "
            f"min={summary.min_regret:.4f} max={summary.max_regret:.4f} updates={summary.mean_updates:.1f}"
        )
    return 0


def _default_checkpoints(k: int, q: int, last_epoch: int) -> List[int]:
    start = max((k * q) ** 2, 1)
    checkpoints = []
    t = 1 << max(0, math.ceil(math.log2(start)))
    while t <= last_epoch:
        checkpoints.append(t)
        t *= 2
    if last_epoch >= start and (not checkpoints or checkpoints[-1] != last_epoch):
        checkpoints.append(last_epoch)
    return checkpoints


def cmd_verify(args: argparse.Namespace) -> int:
    logs = read_csv(args.input)
    by_cell: Dict[str, List[RegretLog]] = defaultdict(list)
    for log in logs:
        by_cell[log.cell].append(log)

    rows = []
    for cell, cell_logs in by_cell.items():
        if len(cell_logs) < 2:
            logger.warning("Skipping cell %s: a violation table needs at least two replications", cell)
            continue
        _, k, q, _ = parse_cell_id(cell)
        last_epoch = min(len(log.records) for log in cell_logs)
        if args.checkpoints:
            checkpoints = [int(part) for part in args.checkpoints.split(",") if part.strip()]
        else:
            checkpoints = _default_checkpoints(k, q, last_epoch)
        table = montecarlo_deviation_check([log.good_event_trace() for log in cell_logs], checkpoints, k)
        rows.extend({"cell": cell, **row.model_dump()} for row in table)

    try:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with args.out.open("w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=VERIFY_FIELDS, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                row.update(violation_frequency=repr(row["violation_frequency"]), bound=repr(row["bound"]))
                writer.writerow(row)
    except OSError as e:
        raise ArtifactIOError(args.out, str(e)) from e
    logger.info("Wrote %d verification rows to %s", len(rows), args.out)
    return 0


def cmd_constants(args: argparse.Namespace) -> int:
    spec = _spec(args)
    p_star, phi0 = args.p_star, args.phi0
    if p_star is None or phi0 is None:
        seed = world_seed(args.seed, spec)
        params = generate_parameters(spec, seed)
        if p_star is None:
            p_star = estimate_assumption_constants(params, spec, args.probe_draws, seed).p_star_hat
        if phi0 is None:
            phi0 = compatibility_probe(params, spec, args.probe_draws, CONE_SAMPLES, seed)
    constants = derive_constants(spec, p_star=p_star, phi0=phi0, q=args.q, n_users=args.n, margin_c0=args.margin_c0)
    for key, value in constants.model_dump().items():
        print(f"{key} = {value}")
    return 0


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "constants": cmd_constants}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(get_settings())
    try:
        return COMMANDS[args.command](args)
    except (EngineError, ValidationError, ArtifactIOError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
