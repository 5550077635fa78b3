from cli.app import CommandResult, CommandRouter, arg
from assaybounds.waterlevel import solve_water_level, sweep_levels
from commands.config import ExperimentConfig, dump, parse_range

# --- CommandRouter Instance ---
router = CommandRouter()


# --- Commands ---
@router.command(
    "waterlevel",
    help="Optimal two-class threshold t* minimizing rho_max.",
    arguments=[
        arg("--sweep", type=parse_range, metavar="LO:HI:N",
            help="also tabulate mu1, mu2 and Delta on N thresholds from LO to HI"),
        arg("--tol", type=float, default=1e-8, help="tolerance on |mu1 - mu2| (default 1e-8)"),
    ],
)
def waterlevel(config: ExperimentConfig, args) -> CommandResult:
    model = config.model
    result = solve_water_level(model, tol_delta=args.tol, settings=config.integration)
    labels = model.labels
    lines = [
        f"t*   = {result.t_star:.10g}",
        f"rho* = {result.rho_star:.10g}",
        f"mu1  = {result.mu1_total:.10g} ({labels[0]} correct)",
        f"mu2  = {result.mu2_total:.10g} ({labels[1]} correct)",
        f"method: {result.method}",
    ]
    if result.atom_case:
        lines.append(f"boundary mass split: {result.boundary_mass[0]:.6g} / {result.boundary_mass[1]:.6g}")
    if result.boundary_points:
        lines.append("boundary at " + ", ".join(f"{x:.10g}" for x in result.boundary_points))
    if result.rho_star >= 0.5:
        lines.append("rho* >= 0.5: the bounds do not apply")

    grid = args.sweep if args.sweep is not None else config.sweep.t_grid
    rows = [{"t": result.t_star, "mu1": result.mu1_total, "mu2": result.mu2_total,
             "delta": result.mu1_total - result.mu2_total, "rho_max": result.rho_star}]
    payload = {"result": dump(result)}
    if grid:
        points = sweep_levels(model, grid, config.integration)
        rows = [{"t": p.t, "mu1": p.mu1, "mu2": p.mu2, "delta": p.delta, "rho_max": p.rho_max_at_t} for p in points]
        payload["sweep"] = rows
    return CommandResult("\n".join(lines), rows, payload, exit_code=2 if result.rho_star >= 0.5 else 0)
