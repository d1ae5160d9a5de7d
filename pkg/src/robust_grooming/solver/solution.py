from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..milp import GroomingModel, VariableIndex

STATUSES = ("optimal", "feasible", "infeasible", "unbounded", "limit-reached")


@dataclass
class GroomingSolution:
    """Column values of a solved model plus solver bookkeeping."""

    values: np.ndarray | None
    objective: float
    status: str
    provenance: str
    wall_time: float = 0.0
    nodes: int = 0

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"unknown solution status {self.status!r}")

    @property
    def has_values(self) -> bool:
        return self.values is not None

    def value(self, index: VariableIndex, key: tuple) -> float:
        j = index.get(key)
        return 0.0 if j is None or self.values is None else float(self.values[j])

    def as_dict(self, index: VariableIndex) -> dict[str, float]:
        if self.values is None:
            return {}
        return {name: float(v) for name, v in zip(index.names, self.values)}


def snap(model: GroomingModel, solution: GroomingSolution, tolerance: float | None = None) -> GroomingSolution:
    """Clean solver round-off: near-0/near-1 values and near-integral integer columns."""
    if solution.values is None:
        return solution
    tol = model.config.snap_tolerance if tolerance is None else tolerance
    v = solution.values.copy()
    v[np.abs(v) < tol] = 0.0
    v[np.abs(v - 1.0) < tol] = 1.0
    ints = model.integer
    rounded = np.rint(v[ints])
    close = np.abs(v[ints] - rounded) < max(tol, 1e-5)
    v[np.flatnonzero(ints)[close]] = rounded[close]
    return replace(solution, values=v)


def minimize_switches(model: GroomingModel, solution: GroomingSolution) -> GroomingSolution:
    """Lower every switch indicator to the smallest value its rows allow.

    With a zero switch weight the solver may leave switches on at nodes no path
    transits; this lowers them without affecting feasibility or cost.
    """
    if solution.values is None:
        return solution
    v = solution.values.copy()
    y_cols = model.index.kind_columns("y")
    needed = {j: 0.0 for j in y_cols}
    for row in model.rows:
        if not (row.label.startswith("Eq7[") or row.label.startswith("Eq8[")):
            continue
        y_col = next(j for j, c in row.coeffs if j in needed)
        rest = sum(c * v[j] for j, c in row.coeffs if j != y_col)
        needed[y_col] = max(needed[y_col], row.rhs - rest)
    for j, req in needed.items():
        v[j] = 1.0 if req > 1e-9 else 0.0
    objective = float(model.objective @ v)
    return replace(solution, values=v, objective=objective)


def canonicalize(model: GroomingModel, solution: GroomingSolution) -> GroomingSolution:
    return minimize_switches(model, snap(model, solution))
