"""Python bindings for the likstab C++ core."""

import json

from ._core import (
    REPORT_VERSION,
    Model,
    NumericalError,
    ValidationError,
    equivalence_check,
    fit,
    model,
    pivots,
    run_cli,
    simulate,
    stability_check,
)

__all__ = [
    "REPORT_VERSION",
    "Model",
    "NumericalError",
    "ValidationError",
    "equivalence_check",
    "fit",
    "model",
    "pivots",
    "report",
    "run_cli",
    "simulate",
    "stability_check",
]


def report(*args):
    """Run a CLI subcommand and return the parsed JSON report.

    Raises ValidationError or NumericalError with the CLI's message when the
    command exits with status 2 or 3.
    """
    code, out, err = run_cli([str(a) for a in args])
    if code == 2:
        raise ValidationError(err.strip())
    if code == 3:
        raise NumericalError(err.strip())
    if code != 0:
        raise RuntimeError(err.strip())
    return json.loads(out)
