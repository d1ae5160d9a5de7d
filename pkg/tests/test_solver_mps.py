import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from robust_grooming.errors import InputError
from robust_grooming.milp import GroomingConfig, assemble_model
from robust_grooming.net_model import Demand, build_catalog
from robust_grooming.solver.bnb import solve_builtin
from robust_grooming.solver.certify import certify
from robust_grooming.solver.external import highs_available, solve_mps_with_highs
from robust_grooming.solver.mps import (
    export_mps,
    format_number,
    import_solution,
    parse_name_map,
    short_name,
    write_solution,
)

from conftest import ring4, triangle

TWO = [Demand("d1", "A", "C", 40, 4), Demand("d2", "B", "D", 20, 2)]


@pytest.fixture(scope="module")
def ring_model():
    return assemble_model(build_catalog(ring4()), TWO, GroomingConfig())


def sections(text):
    out, current = {}, None
    for line in text.splitlines():
        if not line.startswith(" "):
            current = line.split()[0]
            out[current] = []
        else:
            out[current].append(line)
    return out


def test_column_count_and_map(ring_model):
    exported = export_mps(ring_model)
    assert ring_model.n_cols == 148
    assert len(exported.column_map) == 148
    assert len(parse_name_map(exported.column_map_text())) == 148
    cols = {line.split()[0] for line in sections(exported.text)["COLUMNS"] if "'MARKER'" not in line}
    assert cols == set(exported.column_map)


def test_sections_and_row_senses(ring_model):
    exported = export_mps(ring_model)
    sec = sections(exported.text)
    assert list(sec) == ["NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"]
    rows = {line.split()[1]: line.split()[0] for line in sec["ROWS"]}
    by_label = {v: k for k, v in exported.row_map.items()}
    assert rows[by_label["Eq10[d1]"]] == "E"
    assert rows[by_label["Eq4[(A,B)]"]] == "L"
    assert rows[by_label["Eq17[(A,B),d1]"]] == "G"
    assert rows["OBJ"] == "N"


def test_fixed_columns(ring_model):
    for line in export_mps(ring_model).text.splitlines():
        assert len(line) <= 61
        if line.startswith(" ") and len(line) > 14:
            assert line[3] == " " and line[12:14] == "  "


def test_export_byte_identical(ring_model):
    again = assemble_model(build_catalog(ring4()), list(TWO), GroomingConfig())
    assert export_mps(ring_model).text == export_mps(again).text


def test_names_are_short_and_unique(ring_model):
    exported = export_mps(ring_model)
    names = list(exported.column_map) + list(exported.row_map)
    assert len(set(names)) == len(names)
    assert all(len(n) == 8 for n in names)
    assert short_name("theta[(A,B)]", "C") == short_name("theta[(A,B)]", "C")
    assert short_name("theta[(A,B)]", "C") != short_name("theta[(A,B)]", "C", salt=1)


def test_integer_markers_and_bounds(ring_model):
    exported = export_mps(ring_model)
    col = {v: k for k, v in exported.column_map.items()}
    bounds = sections(exported.text)["BOUNDS"]
    assert f" BV BND       {col['X[(A,B),d1]']}" in bounds
    assert f" PL BND       {col['theta[(A,B)]']}" in bounds
    assert any(col["x[(A,B),d1]"] in line and line.startswith(" UP") for line in bounds)
    body = sections(exported.text)["COLUMNS"]
    start = next(k for k, line in enumerate(body) if "'INTORG'" in line)
    assert col["theta[(A,B)]"] in body[start + 1]


@given(st.floats(allow_nan=False, allow_infinity=False, min_value=-1e30, max_value=1e30))
def test_number_field_width(value):
    # three-digit exponents leave fewer digits; model coefficients never get there
    assume(value == 0 or abs(value) >= 1e-99)
    text = format_number(value)
    assert len(text) <= 12
    assert math.isclose(float(text), value, rel_tol=1e-5, abs_tol=0.0) or value == 0


def test_format_number_rejects_inf():
    with pytest.raises(ValueError):
        format_number(math.inf)


def test_import_single_nonzero(ring_model):
    sol = import_solution("status feasible\ntheta[(A,B)] 1\n", None, ring_model.index)
    assert sol.status == "feasible"
    assert np.count_nonzero(sol.values) == 1
    assert sol.values[ring_model.index[("theta", ("A", "B"))]] == 1


def test_import_short_names_and_comments(ring_model):
    exported = export_mps(ring_model)
    short = {v: k for k, v in exported.column_map.items()}["theta[(B,C)]"]
    doc = f"# produced elsewhere\nstatus optimal\n{short} 2  # two channels\n"
    sol = import_solution(doc, exported.column_map, ring_model.index, ring_model.objective)
    assert sol.status == "optimal" and sol.objective == 2


@pytest.mark.parametrize(
    "doc, message",
    [
        ("status optimal\nbogus 1\n", "bogus"),
        ("status optimal\ntheta[(A,B)] one\n", "non-numeric"),
        ("theta[(A,B)] 1\n", "header"),
        ("", "header"),
        ("status great\n", "unknown status"),
        ("status optimal\ntheta[(A,B)] 1 2\n", "name value"),
    ],
)
def test_import_errors(ring_model, doc, message):
    with pytest.raises(InputError, match=message):
        import_solution(doc, None, ring_model.index)


def test_import_infeasible_has_no_values(ring_model):
    sol = import_solution("status infeasible\n", None, ring_model.index)
    assert sol.values is None and sol.status == "infeasible"


def test_round_trip_preserves_verdict(ring_model):
    sol = solve_builtin(ring_model)
    exported = export_mps(ring_model)
    long_to_short = {v: k for k, v in exported.column_map.items()}
    for names in (None, long_to_short):
        doc = write_solution(sol, ring_model.index, names)
        back = import_solution(doc, exported.column_map, ring_model.index, ring_model.objective)
        assert np.array_equal(back.values, sol.values)
        assert certify(ring_model, back).passed == certify(ring_model, sol).passed is True

    broken = sol.values.copy()
    broken[ring_model.index[("x", ("A", "B"), 0)]] = 0.3
    bad = type(sol)(broken, 0.0, "feasible", "test")
    back = import_solution(write_solution(bad, ring_model.index, long_to_short), exported.column_map, ring_model.index)
    assert certify(ring_model, back).violated_labels() == certify(ring_model, bad).violated_labels()


@pytest.mark.skipif(not highs_available(), reason="highspy not installed")
def test_highs_agrees_with_builtin(ring_model):
    exported = export_mps(ring_model)
    doc = solve_mps_with_highs(exported.text, time_limit=60)
    sol = import_solution(doc, exported.column_map, ring_model.index, ring_model.objective)
    assert sol.status == "optimal"
    assert certify(ring_model, sol).passed
    assert sol.objective == pytest.approx(solve_builtin(ring_model).objective)


@pytest.mark.skipif(not highs_available(), reason="highspy not installed")
def test_highs_reports_infeasible():
    model = assemble_model(build_catalog(triangle(wavelengths=0)), [Demand("d1", "A", "B", 4)], GroomingConfig())
    doc = solve_mps_with_highs(export_mps(model).text, time_limit=30)
    assert doc.startswith("status infeasible")
