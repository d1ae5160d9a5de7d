"""Glue between model assembly, the solvers and the certificate."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import GroomingError
from .milp import GroomingConfig, GroomingModel, assemble_model
from .net_model import ChannelCatalog, Demand
from .solver.bnb import DEFAULT_COLUMN_CAP, Limits, solve_builtin
from .solver.certify import CertificateReport, certify
from .solver.external import solve_mps_with_highs
from .solver.mps import export_mps, import_solution
from .solver.solution import GroomingSolution, canonicalize

SOLVERS = ("builtin", "highs", "auto")


@dataclass
class Solved:
    model: GroomingModel
    solution: GroomingSolution
    certificate: CertificateReport | None


def solve(model: GroomingModel, solver: str = "auto", limits: Limits | None = None) -> GroomingSolution:
    """Solve with the built-in branch and bound, or through an MPS hand-off to HiGHS.

    ``auto`` picks the built-in solver when the model fits under its column cap.
    """
    if solver not in SOLVERS:
        raise GroomingError(f"unknown solver {solver!r}; choose from {', '.join(SOLVERS)}")
    if solver == "auto":
        solver = "builtin" if model.n_cols <= DEFAULT_COLUMN_CAP else "highs"
    if solver == "builtin":
        sol = solve_builtin(model, limits)
    else:
        exported = export_mps(model)
        time_limit = limits.time_s if limits else 600.0
        document = solve_mps_with_highs(exported.text, time_limit=time_limit)
        sol = import_solution(document, exported.column_map, model.index, model.objective, provenance="highs-mps")
    return canonicalize(model, sol) if sol.values is not None else sol


def build_and_solve(
    catalog: ChannelCatalog,
    demands: list[Demand],
    config: GroomingConfig,
    solver: str = "auto",
    limits: Limits | None = None,
) -> Solved:
    model = assemble_model(catalog, demands, config)
    sol = solve(model, solver, limits)
    report = certify(model, sol) if sol.values is not None else None
    return Solved(model, sol, report)
