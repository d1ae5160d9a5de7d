"""Hand an exported MPS file to HiGHS and write its answer in the solution format."""

from __future__ import annotations

import os
import tempfile

from ..errors import GroomingError


def highs_available() -> bool:
    try:
        import highspy  # noqa: F401
    except ImportError:
        return False
    return True


def solve_mps_with_highs(mps_text: str, time_limit: float = 600.0, mip_gap: float = 0.0, threads: int | None = None) -> str:
    """Solve an MPS document with HiGHS; returns a solution document keyed by MPS names."""
    try:
        import highspy
    except ImportError as exc:
        raise GroomingError("highspy is not installed; install the 'highs' extra") from exc

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", float(time_limit))
    h.setOptionValue("mip_rel_gap", float(mip_gap))
    if threads:
        h.setOptionValue("threads", int(threads))
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "model.mps")
        with open(path, "w") as fh:
            fh.write(mps_text)
        if h.readModel(path) == highspy.HighsStatus.kError:
            raise GroomingError("HiGHS could not read the MPS document")
    h.run()
    status = h.getModelStatus()
    ms = highspy.HighsModelStatus
    info = h.getInfo()
    has_point = info.primal_solution_status == 2  # feasible point available
    if status == ms.kOptimal:
        word = "optimal"
    elif status in (ms.kInfeasible, ms.kUnboundedOrInfeasible):
        word = "infeasible"
    elif status == ms.kUnbounded:
        word = "unbounded"
    else:
        word = "limit-reached"
    lines = [f"status {word}", "# solved by HiGHS"]
    if has_point and word in ("optimal", "limit-reached"):
        lines.append(f"# objective {info.objective_function_value:.12g}")
        names = h.getLp().col_names_
        for name, v in zip(names, h.getSolution().col_value):
            if v != 0:
                lines.append(f"{name} {v:.17g}")
    return "\n".join(lines) + "\n"
