"""Quasi-hemivariational system solvers and verifiers."""

import json as _json

from ._qhs import (
    ClarkeParams,
    Expr,
    ParseError,
    QhsSystem,
    ResidualReport,
    SolveOptions,
    best_response_solve,
    brute_force_solve,
    builtin,
    builtin_names,
    bounded_builtin_names,
    clarke_dd,
    command_names,
    kkm_audit_suite,
    one_sided_dd,
    regularity_gap,
    verify,
)
from ._qhs import run_file as _run_file


def run(command, config_path, **overrides):
    """Run a CLI command in-process. Returns (exit_code, report dict)."""
    code, text = _run_file(command, str(config_path), {k: str(v) for k, v in overrides.items()})
    return code, _json.loads(text)


__all__ = [
    "ClarkeParams",
    "Expr",
    "ParseError",
    "QhsSystem",
    "ResidualReport",
    "SolveOptions",
    "best_response_solve",
    "brute_force_solve",
    "builtin",
    "builtin_names",
    "bounded_builtin_names",
    "clarke_dd",
    "command_names",
    "kkm_audit_suite",
    "one_sided_dd",
    "regularity_gap",
    "run",
    "verify",
]
