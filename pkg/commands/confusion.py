from cli.app import CommandResult, CommandRouter, format_matrix
from assaybounds.confusion import check_properties, gershgorin
from commands.config import ExperimentConfig, config_confusion, dump

# --- CommandRouter Instance ---
router = CommandRouter()


# --- Commands ---
@router.command("confusion", help="Confusion matrix induced by the configured partition.")
def confusion(config: ExperimentConfig, args) -> CommandResult:
    matrix = config_confusion(config)
    report = gershgorin(matrix)
    labels = config.model.labels
    lines = [
        format_matrix(matrix.P, labels),
        f"method: {matrix.method} (column tolerance {matrix.column_tolerance:.3g})",
        f"rho_max = {report.rho_max:.10g} (column {labels[report.argmax_column]})",
        f"diagonally dominant: {report.diagonally_dominant}",
    ]
    rows = [{"row": labels[j], "column": labels[k], "value": float(matrix.P[j, k])}
            for j in range(matrix.c) for k in range(matrix.c)]
    return CommandResult("\n".join(lines), rows, {"confusion_matrix": dump(matrix), "gershgorin": dump(report)})


@router.command("validate", help="Check the structural properties of the confusion matrix.")
def validate(config: ExperimentConfig, args) -> CommandResult:
    matrix = config_confusion(config)
    report = check_properties(matrix)
    checks = {
        "left stochastic": report.left_stochastic,
        "diagonally dominant": report.diagonally_dominant,
        "Gershgorin disks exclude zero": report.disks_exclude_zero,
        "invertible": report.invertible,
        "eigenvalues inside the rho_max disk": report.eigenvalues_in_disk,
        "||P^-1||_2^2 within its bound": report.inverse_norm_bounded,
    }
    lines = [format_matrix(matrix.P, config.model.labels)]
    lines += [f"{'ok  ' if held else 'FAIL'} {name}" for name, held in checks.items()]
    lines.append(f"rho_max = {report.rho_max:.10g}; ||P^-1||_2^2 = {report.inv_two_norm_sq:.6g}"
                 f" <= {report.inverse_norm_bound:.6g}")
    rows = [{"property": name, "holds": held} for name, held in checks.items()]
    return CommandResult("\n".join(lines), rows, dump(report), exit_code=0 if report.all_hold else 2)
