"""Fixed-format MPS export, name maps, and the plain-text solution format.

Row and column names in the MPS file are 8-character hashes of the model's
long provenance names; the sidecar maps (``short long`` per line) take them
back. A solution file starts with ``status <word>`` followed by ``name value``
lines, where names may be short or long; ``#`` starts a comment.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from ..milp import GroomingModel, VariableIndex
from .solution import STATUSES, GroomingSolution

_ALPHABET = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"
_SENSE_CODE = {"<=": "L", "=": "E", ">=": "G"}


@dataclass(frozen=True)
class MpsExport:
    text: str
    column_map: dict[str, str]  # short -> long
    row_map: dict[str, str]

    def column_map_text(self) -> str:
        return name_map_text(self.column_map)

    def row_map_text(self) -> str:
        return name_map_text(self.row_map)


def short_name(long_name: str, prefix: str, salt: int = 0) -> str:
    """Stable 8-character name: one prefix letter plus 7 base-36 digits of a SHA-1."""
    digest = hashlib.sha1(f"{long_name}#{salt}".encode()).digest()
    value = int.from_bytes(digest[:8], "big")
    chars = []
    for _ in range(7):
        value, k = divmod(value, 36)
        chars.append(_ALPHABET[k])
    return prefix + "".join(chars)


def _assign_names(long_names: list[str], prefix: str, taken: set[str]) -> list[str]:
    out = []
    for name in long_names:
        salt = 0
        short = short_name(name, prefix)
        while short in taken:
            salt += 1
            short = short_name(name, prefix, salt)
        taken.add(short)
        out.append(short)
    return out


def format_number(value: float) -> str:
    """Shortest ``%g`` rendering that fits the 12-character MPS number field."""
    if value == 0:
        return "0"
    if not math.isfinite(value):
        raise ValueError(f"cannot write {value} to MPS")
    for digits in range(12, 0, -1):
        text = f"{value:.{digits}g}"
        if len(text) <= 12:
            return text
    raise ValueError(f"cannot fit {value} into 12 characters")


def _line(f1: str = "", f2: str = "", f3: str = "", f4: str = "", f5: str = "", f6: str = "") -> str:
    # columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61
    text = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        text += f"   {f5:<8}  {f6:>12}"
    return text.rstrip()


def export_mps(model: GroomingModel, name: str = "GROOMING") -> MpsExport:
    taken = {"OBJ", "MARKER", "RHS", "BND"}
    col_short = _assign_names(model.index.names, "C", taken)
    row_short = _assign_names([r.label for r in model.rows], "R", taken)

    lines = [f"NAME          {name[:8]}", "ROWS", _line("N", "OBJ")]
    for short, row in zip(row_short, model.rows):
        lines.append(_line(_SENSE_CODE[row.sense], short))

    entries: list[list[tuple[str, float]]] = [[] for _ in range(model.n_cols)]
    for j in np.flatnonzero(model.objective):
        entries[j].append(("OBJ", float(model.objective[j])))
    for short, row in zip(row_short, model.rows):
        for j, coef in row.coeffs:
            entries[j].append((short, coef))

    lines.append("COLUMNS")
    in_marker = False
    marker = 0
    for j, cname in enumerate(col_short):
        integer = bool(model.integer[j])
        if integer != in_marker:
            tag = "'INTORG'" if integer else "'INTEND'"
            lines.append(_line("", f"M{marker:07d}", "'MARKER'", "", tag))
            marker += int(not integer)
            in_marker = integer
        col_entries = entries[j] or [("OBJ", 0.0)]
        for k in range(0, len(col_entries), 2):
            pair = col_entries[k : k + 2]
            f5, f6 = (pair[1][0], format_number(pair[1][1])) if len(pair) == 2 else ("", "")
            lines.append(_line("", cname, pair[0][0], format_number(pair[0][1]), f5, f6))
    if in_marker:
        lines.append(_line("", f"M{marker:07d}", "'MARKER'", "", "'INTEND'"))

    lines.append("RHS")
    for short, row in zip(row_short, model.rows):
        if row.rhs != 0:
            lines.append(_line("", "RHS", short, format_number(row.rhs)))

    lines.append("BOUNDS")
    for j, cname in enumerate(col_short):
        lo, up = float(model.lower[j]), float(model.upper[j])
        if model.integer[j] and lo == 0 and up == 1:
            lines.append(_line("BV", "BND", cname))
            continue
        if lo != 0:
            lines.append(_line("LO", "BND", cname, format_number(lo)))
        if math.isinf(up):
            lines.append(_line("PL", "BND", cname))
        else:
            lines.append(_line("UP", "BND", cname, format_number(up)))
    lines.append("ENDATA")
    text = "\n".join(lines) + "\n"
    return MpsExport(
        text,
        dict(zip(col_short, model.index.names)),
        dict(zip(row_short, (r.label for r in model.rows))),
    )


def name_map_text(mapping: dict[str, str]) -> str:
    return "".join(f"{short} {long}\n" for short, long in mapping.items())


def parse_name_map(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise InputError(f"name map line {lineno}: expected 'short long', got {raw!r}")
        out[parts[0]] = parts[1]
    return out


def write_solution(solution: GroomingSolution, index: VariableIndex, short_names: dict[str, str] | None = None) -> str:
    """Solution document listing nonzero columns; ``short_names`` maps long -> short."""
    lines = [f"status {solution.status}"]
    if math.isfinite(solution.objective):
        lines.append(f"# objective {solution.objective:.12g}")
    if solution.values is not None:
        for name, v in zip(index.names, solution.values):
            if v != 0:
                shown = short_names.get(name, name) if short_names else name
                lines.append(f"{shown} {float(v):.17g}")
    return "\n".join(lines) + "\n"


def import_solution(
    document: str,
    name_map: dict[str, str] | None,
    index: VariableIndex,
    objective: np.ndarray | None = None,
    provenance: str = "imported",
) -> GroomingSolution:
    """Parse a solution document; absent columns are zero, unknown names are rejected."""
    name_map = name_map or {}
    status = None
    values = np.zeros(len(index))
    by_name = index.by_name
    for lineno, raw in enumerate(document.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if status is None:
            if len(parts) != 2 or parts[0] != "status":
                raise InputError(f"solution line {lineno}: expected header 'status <word>', got {raw.strip()!r}")
            if parts[1] not in STATUSES:
                raise InputError(f"solution line {lineno}: unknown status {parts[1]!r}")
            status = parts[1]
            continue
        if len(parts) != 2:
            raise InputError(f"solution line {lineno}: expected 'name value', got {raw.strip()!r}")
        name, text = parts
        long_name = name_map.get(name, name)
        j = by_name.get(long_name)
        if j is None:
            raise InputError(f"solution line {lineno}: unknown variable {name!r}")
        try:
            values[j] = float(text)
        except ValueError:
            raise InputError(f"solution line {lineno}: non-numeric value {text!r} for {name}") from None
    if status is None:
        raise InputError("solution document has no 'status' header")
    obj = float(objective @ values) if objective is not None else math.nan
    has_values = status in ("optimal", "feasible", "limit-reached")
    return GroomingSolution(values if has_values else None, obj, status, provenance)
