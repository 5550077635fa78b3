from cli.app import CommandResult, CommandRouter, arg
from assaybounds.bounds import as_prevalence, classification_error, variance_bounds
from assaybounds.errors import ConfigError
from commands.config import ExperimentConfig, config_confusion, dump, parse_floats

# --- CommandRouter Instance ---
router = CommandRouter()


# --- Commands ---
@router.command(
    "bounds",
    help="Classification error and variance bounds for a prevalence.",
    arguments=[
        arg("--q", type=parse_floats, help="prevalence, comma separated (overrides bounds.q)"),
        arg("--s", type=int, help="samples per data set (overrides bounds.s)"),
    ],
)
def bounds(config: ExperimentConfig, args) -> CommandResult:
    q = args.q if args.q is not None else config.bounds.q
    if q is None:
        raise ConfigError("bounds.q: required (or pass --q)")
    prevalence = as_prevalence(q, config.model.c)
    s = args.s if args.s is not None else config.bounds.s

    matrix = config_confusion(config)
    assume = config.bounds.assume_symmetric
    report = variance_bounds(matrix, prevalence, s, assume_symmetric=matrix.is_symmetric() if assume is None else assume)
    error = classification_error(matrix, prevalence)

    lines = [
        f"classification error = {error:.10g} <= rho_max = {report.rho_max:.10g}",
        f"eps_rho       = {report.eps_rho:.10g}",
        f"eps_sigma     = {report.eps_sigma:.10g}",
        f"eps_sigma (symmetric P) = {report.eps_sigma_tight:.10g}"
        + ("" if report.tight_certified else "  [not certified: P is not symmetric]"),
        f"multinomial   = {report.multinomial_term:.10g}",
    ]
    if report.integration_tolerance > 1e-6:
        lines.append(f"caveat: P known to {report.integration_tolerance:.3g} ({matrix.method})")
    payload = dump(report) | {"classification_error": error}
    return CommandResult("\n".join(lines), [payload], payload)
