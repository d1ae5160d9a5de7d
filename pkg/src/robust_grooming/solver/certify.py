"""Independent feasibility check of a solution against every model row, bound and domain."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..milp import GroomingModel
from .solution import GroomingSolution

_BOUND_FAMILY = {"x": "Eq2", "xi": "Eq3"}


@dataclass(frozen=True)
class Violation:
    label: str
    lhs: float
    rhs: float
    slack: float  # signed; negative means violated

    def __str__(self) -> str:
        return f"{self.label}: lhs={self.lhs:.9g} rhs={self.rhs:.9g} slack={self.slack:.3g}"


@dataclass
class CertificateReport:
    passed: bool
    violations: list[Violation] = field(default_factory=list)
    worst: float = 0.0
    rows_checked: int = 0

    def summary(self) -> str:
        if self.passed:
            return f"certificate PASS ({self.rows_checked} rows)"
        lines = [f"certificate FAIL: {len(self.violations)} violations, worst {self.worst:.3g}"]
        lines += [f"  {v}" for v in self.violations[:50]]
        return "\n".join(lines)

    def violated_labels(self) -> list[str]:
        return [v.label for v in self.violations]


def certify(
    model: GroomingModel, solution: GroomingSolution, tolerance: float = 1e-6, int_tolerance: float = 1e-5
) -> CertificateReport:
    if solution.values is None:
        return CertificateReport(False, [Violation("NoValues", 0.0, 0.0, -np.inf)], np.inf)
    v = np.asarray(solution.values, dtype=float)
    if v.shape != (model.n_cols,):
        raise ValueError(f"solution has {v.size} values, model has {model.n_cols} columns")
    violations: list[Violation] = []
    for row in model.rows:
        lhs = sum(c * v[j] for j, c in row.coeffs)
        if row.sense == "<=":
            slack = row.rhs - lhs
        elif row.sense == ">=":
            slack = lhs - row.rhs
        else:
            slack = -abs(lhs - row.rhs)
        if slack < -tolerance:
            violations.append(Violation(row.label, lhs, row.rhs, slack))
    names = model.index.names
    for j, key in enumerate(model.index.keys):
        family = _BOUND_FAMILY.get(key[0], "Bounds")
        if v[j] < model.lower[j] - tolerance:
            violations.append(Violation(f"{family}[{names[j]}]", v[j], model.lower[j], v[j] - model.lower[j]))
        if v[j] > model.upper[j] + tolerance:
            violations.append(Violation(f"{family}[{names[j]}]", v[j], model.upper[j], model.upper[j] - v[j]))
        if model.integer[j]:
            gap = abs(v[j] - round(v[j]))
            if gap > int_tolerance:
                violations.append(Violation(f"Integrality[{names[j]}]", v[j], round(v[j]), -gap))
    worst = max((-x.slack for x in violations), default=0.0)
    return CertificateReport(not violations, violations, worst, len(model.rows))
