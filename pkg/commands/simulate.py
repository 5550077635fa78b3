import logging

from cli.app import CommandResult, CommandRouter, arg
from assaybounds.bounds import as_prevalence
from assaybounds.confusion import confusion_matrix
from assaybounds.errors import ConfigError
from assaybounds.partitions import RatioThreshold
from assaybounds.prevalence import prevalence_grid_check
from assaybounds.waterlevel import solve_water_level
from commands.config import ExperimentConfig, config_confusion, dump, parse_floats, parse_range

logger = logging.getLogger(__name__)

# --- CommandRouter Instance ---
router = CommandRouter()


# --- Helper Functions ---
def _partitions(config: ExperimentConfig, t_grid: list[float] | None):
    """(threshold, partition, confusion matrix) for every partition to simulate."""
    model = config.model
    if t_grid is not None:
        if model.c != 2:
            raise ConfigError(f"t_grid: thresholds need exactly 2 classes, got {model.c}")
        partitions = [RatioThreshold(t=t) for t in t_grid]
        return [(p.t, p, confusion_matrix(model, p, config.integration)) for p in partitions]
    if config.partition is not None:
        partition = config.partition
        return [(getattr(partition, "t", None), partition, config_confusion(config))]
    if model.c != 2:
        raise ConfigError("partition: required for simulate with more than 2 classes")
    logger.info("no partition configured; using the water-level partition")
    partition = solve_water_level(model, settings=config.integration).partition
    return [(partition.t, partition, confusion_matrix(model, partition, config.integration))]


def _describe(verdict, q, t, replicates) -> list[str]:
    where = f"q={q.q}" if t is None else f"t={t:.6g} q={q.q}"
    lines = [f"{'PASS' if verdict.passed else 'FAIL'} {where}: sigma2 = {verdict.empirical_sigma2:.6g}"
             f" +/- {verdict.standard_error:.2g} (exact {verdict.exact_sigma2:.6g})"
             f" <= eps_sigma = {verdict.eps_sigma:.6g}"]
    if verdict.tight_certified:
        lines.append(f"     symmetric bound {verdict.eps_sigma_tight:.6g}"
                     f" {'holds' if verdict.passed_tight else 'FAILS'}")
    if verdict.passed_weighted is not None:
        lines.append(f"     weighted bound {verdict.weighted_bound:.6g}"
                     f" {'holds' if verdict.passed_weighted else 'FAILS'}")
    if verdict.low_power:
        lines.append(f"     low power: only {replicates} replicates")
    return lines


# --- Commands ---
@router.command(
    "simulate",
    help="Monte Carlo check of the variance bounds on simulated data sets.",
    arguments=[
        arg("--q", type=parse_floats, help="single prevalence, comma separated (overrides simulate.q)"),
        arg("--s", type=int, help="samples per data set (overrides simulate.s)"),
        arg("--replicates", type=int, help="number of data sets (overrides simulate.replicates)"),
        arg("--t-grid", type=parse_range, metavar="LO:HI:N",
            help="two classes only: simulate the ratio-threshold partition at N thresholds from LO to HI"),
    ],
)
def simulate(config: ExperimentConfig, args) -> CommandResult:
    block = config.simulate
    if args.q is not None:
        grid = [args.q]
    elif block.q_grid is not None:
        grid = block.q_grid
    elif block.q is not None:
        grid = [block.q]
    else:
        raise ConfigError("simulate.q: required (or simulate.q_grid, or pass --q)")
    prevalences = [as_prevalence(q, config.model.c) for q in grid]
    s = args.s if args.s is not None else block.s
    replicates = args.replicates if args.replicates is not None else block.replicates
    t_grid = args.t_grid if args.t_grid is not None else block.t_grid

    rows, lines, runs = [], [], []
    for t, partition, matrix in _partitions(config, t_grid):
        cells = prevalence_grid_check(config.model, partition, matrix, prevalences, s, replicates, block.seed,
                                      A=block.weight_matrix, settings=config.integration, project=block.project)
        for q, (sim, verdict) in zip(prevalences, cells):
            runs.append({"t": t, "q": q.q, "confusion_matrix": dump(matrix), "simulation": dump(sim),
                         "verdict": dump(verdict)})
            rows.append({
                "t": t, "q": q.q, "s": s, "replicates": replicates,
                "empirical_sigma2": verdict.empirical_sigma2, "standard_error": verdict.standard_error,
                "exact_sigma2": verdict.exact_sigma2, "eps_sigma": verdict.eps_sigma,
                "eps_sigma_tight": verdict.eps_sigma_tight, "margin": verdict.margin,
                "margin_tight": verdict.margin_tight,
                "excess_uncertainty_ratio": verdict.excess_uncertainty_ratio, "passed": verdict.passed,
            })
            lines += _describe(verdict, q, t if t_grid is not None else None, replicates)

    failed = any(not row["passed"] for row in rows)
    return CommandResult("\n".join(lines), rows, {"runs": runs}, exit_code=2 if failed else 0)
