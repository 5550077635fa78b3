from cli.app import CommandResult, CommandRouter, arg
from assaybounds.errors import ConfigError
from assaybounds.noise import exploratory_multiclass_sweep, rho_star_vs_noise
from commands.config import ExperimentConfig, NoiseBlock, dump, parse_range

# --- CommandRouter Instance ---
router = CommandRouter()


# --- Helper Functions ---
def _grid(block: NoiseBlock, args) -> list[float]:
    if args.grid is not None:
        return args.grid
    if block.grid is not None:
        return block.grid
    if block.varsigma2 is not None:
        return [block.varsigma2]
    raise ConfigError("noise.grid: required (or noise.varsigma2, or pass --grid)")


def _format(value: float | None) -> str:
    return "-" if value is None else f"{value:.8g}"


# --- Commands ---
@router.command(
    "noise-sweep",
    help="Optimal rho_max as a function of the Gaussian noise variance.",
    arguments=[arg("--grid", type=parse_range, metavar="LO:HI:N", help="N noise variances from LO to HI")],
)
def noise_sweep(config: ExperimentConfig, args) -> CommandResult:
    block = config.noise or NoiseBlock()
    grid = _grid(block, args)
    model = config.model

    if model.c > 2:
        points = exploratory_multiclass_sweep(model, block.spec, grid, config.integration)
        rows = [{"varsigma2": p.varsigma2, "rho_star": p.rho_star, "rho_fixed": None} for p in points]
        lines = [f"varsigma2 = {p.varsigma2:<12.6g} rho* = {p.rho_star:.8g}" for p in points]
        lines.append("exploratory: monotonicity is not asserted for more than 2 classes")
        return CommandResult("\n".join(lines), rows, {"points": [dump(p) for p in points]})

    sweep = rho_star_vs_noise(model, block.spec, grid, fixed_partition=config.partition,
                              warm_start=block.warm_start, settings=config.integration)
    rows = [{"varsigma2": p.varsigma2, "rho_star": p.rho_star, "rho_fixed": p.rho_fixed} for p in sweep.points]
    lines = [f"varsigma2 = {p.varsigma2:<12.6g} rho* = {p.rho_star:.8g}  fixed = {_format(p.rho_fixed)}"
             for p in sweep.points]
    if sweep.monotone:
        lines.append("rho* is non-decreasing in the noise variance")
    else:
        lines.append(f"rho* decreases at varsigma2 = {grid[sweep.violation_index]:.6g}")
    return CommandResult("\n".join(lines), rows, dump(sweep), exit_code=0 if sweep.monotone else 2)
