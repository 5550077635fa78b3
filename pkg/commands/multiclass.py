from cli.app import CommandResult, CommandRouter, arg, format_matrix
from assaybounds.multiclass import (
    balance_prevalence,
    equalize_diagonal_1d,
    optimize_cutpoints_1d,
    verify_balance_optimality,
)
from commands.config import ExperimentConfig, dump, parse_floats

# --- CommandRouter Instance ---
router = CommandRouter()


# --- Commands ---
@router.command(
    "balance",
    help="Prevalence whose Bayes partition has equal diagonal entries.",
    arguments=[arg("--trials", type=int, help="random prevalences checked against the optimum (overrides balance.trials)")],
)
def balance(config: ExperimentConfig, args) -> CommandResult:
    block = config.balance
    model = config.model
    result = balance_prevalence(model, q_init=block.q_init, max_iters=block.max_iters, tol=block.tol,
                                settings=config.integration)
    labels = model.labels
    lines = [
        "q* = " + ", ".join(f"{label}={value:.8f}" for label, value in zip(labels, result.q_star.q)),
        format_matrix(result.P_star.P, labels),
        f"rho* = {result.rho_star:.10g}; diagonal spread {result.residual:.3g} after {result.iterations} iterations",
    ]
    rows = [{"class": label, "q_star": q, "diagonal": float(result.P_star.P[k, k])}
            for k, (label, q) in enumerate(zip(labels, result.q_star.q))]
    payload = {"result": dump(result)}
    if not result.converged:
        lines.append(f"did not converge: spread {result.residual:.3g} > {block.tol:.3g}")
        return CommandResult("\n".join(lines), rows, payload, exit_code=3)

    trials = args.trials if args.trials is not None else block.trials
    exit_code = 0
    if trials > 0:
        verdict = verify_balance_optimality(result, model, trials=trials, seed=block.seed, tol=block.verify_tol,
                                            settings=config.integration)
        payload["verification"] = dump(verdict)
        if verdict.passed:
            lines.append(f"no random Bayes partition beats rho* ({trials} trials,"
                         f" worst margin {verdict.worst_margin:.3g})")
        else:
            lines.append(f"FAIL: {len(verdict.failures)} of {trials} random Bayes partitions beat rho*")
            exit_code = 2
        if not verdict.chain_holds:
            lines.append("note: some random partition scored higher accuracy at q*")
    return CommandResult("\n".join(lines), rows, payload, exit_code=exit_code)


@router.command(
    "cuts1d",
    help="Cut points minimizing rho_max for one-dimensional classes.",
    arguments=[arg("--init", type=parse_floats, help="starting cut points (overrides cuts.init_cuts)")],
)
def cuts1d(config: ExperimentConfig, args) -> CommandResult:
    model = config.model
    init = args.init if args.init is not None else config.cuts.init_cuts
    best = optimize_cutpoints_1d(model, init_cuts=init, tol=config.cuts.tol, settings=config.integration)
    even = equalize_diagonal_1d(model, best.cuts, settings=config.integration)
    labels = model.labels
    lines = [
        "cuts = " + ", ".join(f"{x:.6g}" for x in best.cuts),
        format_matrix(best.P.P, labels),
        f"rho_max = {best.rho_max:.10g}; trace {best.trace:.10g}",
        "equal-diagonal cuts = " + ", ".join(f"{x:.6g}" for x in even.cuts)
        + f" (rho_max {even.rho_max:.10g}, spread {even.diagonal_spread:.3g}, trace {even.trace:.10g})",
    ]
    rows = [
        {"search": "rho_max", "cuts": best.cuts, "rho_max": best.rho_max, "trace": best.trace,
         "diagonal_spread": best.diagonal_spread},
        {"search": "equal_diagonal", "cuts": even.cuts, "rho_max": even.rho_max, "trace": even.trace,
         "diagonal_spread": even.diagonal_spread},
    ]
    return CommandResult("\n".join(lines), rows, {"optimum": dump(best), "equal_diagonal": dump(even)})
