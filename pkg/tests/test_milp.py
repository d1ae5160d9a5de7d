import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_grooming.errors import InputError
from robust_grooming.milp import (
    GroomingConfig,
    assemble_model,
    build_objective,
    expected_column_count,
    expected_counts,
    index_variables,
)
from robust_grooming.net_model import Demand, build_catalog
from robust_grooming.solver.bnb import solve_builtin

from conftest import random_instance, ring4, triangle

TWO = [Demand("d1", "A", "C", 40, 4), Demand("d2", "B", "D", 20, 2)]


def row(model, label):
    return next(r for r in model.rows if r.label == label)


def terms(model, r):
    names = model.index.names
    return {names[j]: c for j, c in r.coeffs}


def test_column_count_robust(ring_catalog):
    idx = index_variables(ring_catalog, TWO, GroomingConfig())
    assert len(idx) == 148 == expected_column_count(12, 4, 2, 1, True)


def test_column_count_deterministic(ring_catalog):
    assert len(index_variables(ring_catalog, TWO, GroomingConfig(robust=False))) == 112


def test_no_backup_columns(ring_catalog):
    idx = index_variables(ring_catalog, TWO, GroomingConfig(mu=()))
    assert not idx.kind_columns("xi") and not idx.kind_columns("Xi")


def test_index_order_and_bijection(ring_catalog):
    idx = index_variables(ring_catalog, TWO, GroomingConfig())
    kinds = [k[0] for k in idx.keys]
    order = ["theta", "y", "x", "xi", "X", "Xi", "p", "z"]
    assert kinds == sorted(kinds, key=order.index)
    assert len(set(idx.names)) == len(idx)
    assert all(idx[k] == n for n, k in enumerate(idx.keys))


@pytest.mark.parametrize("alpha, beta", [(1, 0), (0, 1), (0, 0)])
def test_objective_weights(ring_catalog, alpha, beta):
    idx = index_variables(ring_catalog, TWO, GroomingConfig(alpha=alpha, beta=beta))
    obj = build_objective(idx, GroomingConfig(alpha=alpha, beta=beta))
    for n, key in enumerate(idx.keys):
        expected = alpha if key[0] == "theta" else beta if key[0] == "y" else 0
        assert obj[n] == expected


def test_capacity_robust_row():
    cat = build_catalog(triangle())
    model = assemble_model(cat, [Demand("d1", "A", "B", 40, 4)], GroomingConfig(gamma=1.0))
    t = terms(model, row(model, "Eq4[(A,B)]"))
    assert t["theta[(A,B)]"] == -200.0
    assert t["z[(A,B)]"] == 1.0 and t["p[(A,B),d1]"] == 1.0
    assert t["x[(A,B),d1]"] == 40 and t["xi[(A,B),d1,r1]"] == 40
    r17 = row(model, "Eq17[(A,B),d1]")
    assert r17.sense == ">=" and r17.rhs == 0
    assert terms(model, r17) == {"p[(A,B),d1]": 1, "z[(A,B)]": 1, "x[(A,B),d1]": -4, "xi[(A,B),d1,r1]": -4}


def test_capacity_deterministic_row():
    cat = build_catalog(triangle())
    model = assemble_model(cat, [Demand("d1", "A", "B", 40, 4)], GroomingConfig(robust=False))
    t = terms(model, row(model, "Eq4[(A,B)]"))
    assert set(t) == {"theta[(A,B)]", "x[(A,B),d1]", "xi[(A,B),d1,r1]"}
    assert not any(r.label.startswith("Eq17") for r in model.rows)


def test_minimal_robust_load_fits_one_channel():
    cat = build_catalog(triangle())
    model = assemble_model(cat, [Demand("d1", "A", "B", 40, 4)], GroomingConfig(gamma=1.0, mu=()))
    sol = solve_builtin(model)
    v = dict(zip(model.index.names, sol.values))
    assert sol.objective == 1 and v["theta[(A,B)]"] == 1
    # minimal protection Γz + p equals the single deviation
    assert v["z[(A,B)]"] + v["p[(A,B),d1]"] == pytest.approx(4.0)


def test_zero_deviation_makes_modes_agree():
    topo = ring4()
    cat = build_catalog(topo)
    demands = [Demand("d1", "A", "C", 40, 0), Demand("d2", "B", "D", 30, 0)]
    robust = solve_builtin(assemble_model(cat, demands, GroomingConfig()))
    plain = solve_builtin(assemble_model(cat, demands, GroomingConfig(robust=False)))
    assert robust.objective == plain.objective


def _flow_residual(model, r, flows):
    return sum(c * flows.get(model.index.names[j], 0.0) for j, c in r.coeffs) - r.rhs


def test_flow_rows_on_paths(ring_catalog):
    model = assemble_model(ring_catalog, TWO[:1], GroomingConfig(robust=False))
    flows = {"x[(A,B),d1]": 1, "x[(B,C),d1]": 1, "xi[(A,D),d1,r1]": 1, "xi[(D,C),d1,r1]": 1}
    lhs = {
        i: sum(c * flows.get(model.index.names[j], 0) for j, c in row(model, f"Eq5[d1,{i}]").coeffs) for i in "ABC"
    }
    assert lhs == {"A": -1, "B": 0, "C": 1}
    for i in "ABCD":
        assert _flow_residual(model, row(model, f"Eq5[d1,{i}]"), flows) == 0
        assert _flow_residual(model, row(model, f"Eq6[d1,r1,{i}]"), flows) == 0
    assert _flow_residual(model, row(model, "Eq5[d1,A]"), {}) == 1  # zero flow: 0 != -1


def test_switch_rows(ring_catalog):
    model = assemble_model(ring_catalog, TWO[:1], GroomingConfig(robust=False))
    flows = {"x[(A,B),d1]": 1, "x[(B,C),d1]": 1}

    def required(node):
        r = row(model, f"Eq7[d1,{node}]")
        y = model.index.names.index(f"y[{node}]")
        return r.rhs - sum(c * flows.get(model.index.names[j], 0) for j, c in r.coeffs if j != y)

    assert required("B") == pytest.approx(0.02)
    assert required("A") == pytest.approx(-0.99)
    assert required("D") == 0


def test_dwdm_row(ring_catalog):
    model = assemble_model(ring_catalog, TWO, GroomingConfig())
    r = row(model, "Eq9[A-B]")
    assert r.sense == "<=" and r.rhs == 80
    assert {"theta[(A,B)]", "theta[(B,A)]", "theta[(A,C)]", "theta[(C,A)]"} <= set(terms(model, r))


def test_unused_edge_has_no_row():
    from robust_grooming.net_model import NetworkTopology

    # the long edge is never a shortest route
    topo = NetworkTopology.create("ABC", [("A", "B", 100, 80), ("B", "C", 100, 80), ("A", "C", 900, 80)])
    model = assemble_model(build_catalog(topo), [Demand("d1", "A", "C", 10, 1)], GroomingConfig())
    assert not any(r.label == "Eq9[A-C]" for r in model.rows)


def test_zero_wavelengths_pins_theta():
    model = assemble_model(build_catalog(ring4(wavelengths=0)), TWO[:1], GroomingConfig())
    assert solve_builtin(model).status == "infeasible"


def test_exclusivity_source_row(ring_catalog):
    model = assemble_model(ring_catalog, TWO[:1], GroomingConfig())
    r = row(model, "Eq10[d1]")
    assert r.sense == "=" and r.rhs == 2
    ind = {"X[(A,B),d1]": 1, "Xi[(A,D),d1,r1]": 1}
    assert sum(c * ind.get(model.index.names[j], 0) for j, c in r.coeffs) == 2


def test_strict_source_row_rejects_shared_channel(ring_catalog):
    model = assemble_model(ring_catalog, TWO[:1], GroomingConfig())
    r = row(model, "StrictSrc[d1,(A,B)]")
    ind = {"X[(A,B),d1]": 1, "Xi[(A,B),d1,r1]": 1}
    assert sum(c * ind.get(model.index.names[j], 0) for j, c in r.coeffs) == 2 > r.rhs


def test_literal_intermediate_row_ignores_endpoint_channels(ring_catalog):
    model = assemble_model(ring_catalog, TWO[:1], GroomingConfig(strict=False))
    r = row(model, "Eq12[d1,B]")
    ind = {"X[(A,B),d1]": 1, "X[(B,C),d1]": 1}
    assert sum(c * ind.get(model.index.names[j], 0) for j, c in r.coeffs) == 0
    assert not any(r.label.startswith("Strict") for r in model.rows)


def test_linking_rows(ring_catalog):
    model = assemble_model(ring_catalog, TWO[:1], GroomingConfig())
    lo, hi = row(model, "Eq13[(A,B),d1]"), row(model, "Eq15[(A,B),d1]")

    def ok(x, X):
        vals = {"x[(A,B),d1]": x, "X[(A,B),d1]": X}
        act = [sum(c * vals[model.index.names[j]] for j, c in r.coeffs) for r in (lo, hi)]
        return act[0] >= 0 and act[1] <= 0

    assert ok(1, 1) and not ok(1, 0)  # x = 1 forces X = 1
    assert ok(0, 0) and not ok(0, 1)  # x = 0 forces X = 0
    assert ok(0.5, 1)
    assert row(model, "Eq14[(A,B),d1,r1]") and row(model, "Eq16[(A,B),d1,r1]")


def test_triangle_single_source_row():
    cat = build_catalog(triangle())
    model = assemble_model(cat, [Demand("d1", "A", "B", 40, 4)], GroomingConfig(robust=False, mu=()))
    src = [r for r in model.rows if r.label.startswith("Eq10[")]
    assert len(src) == 1 and src[0].rhs == 1


def test_eq17_count(ring_catalog):
    model = assemble_model(ring_catalog, TWO, GroomingConfig())
    assert model.label_counts()["Eq17"] == 24


def test_dump_deterministic(ring_catalog):
    a = assemble_model(ring_catalog, TWO, GroomingConfig()).dump()
    b = assemble_model(build_catalog(ring4()), list(TWO), GroomingConfig()).dump()
    assert a == b
    assert "Eq4[(A,B)]:" in a


def test_config_validation(ring_catalog):
    for bad in (dict(gamma=3.0), dict(epsilon=0.0), dict(big_m=0.5), dict(mu=(-1.0,)), dict(granularity=0.0)):
        with pytest.raises(InputError):
            assemble_model(ring_catalog, TWO, GroomingConfig(**bad))


def test_default_gamma_is_one_fifth():
    assert GroomingConfig().resolved_gamma(50) == 10
    assert GroomingConfig(robust=False).resolved_gamma(50) == 0


def test_deterministic_is_robust_minus_robust_parts(ring_catalog):
    robust = assemble_model(ring_catalog, TWO, GroomingConfig())
    plain = assemble_model(ring_catalog, TWO, GroomingConfig(robust=False))
    keep = [n for n in robust.index.names if not n.startswith(("p[", "z["))]
    assert keep == plain.index.names
    rows_r = [r.label for r in robust.rows if not r.label.startswith("Eq17")]
    assert rows_r == [r.label for r in plain.rows]
    for a, b in zip((r for r in robust.rows if not r.label.startswith("Eq17")), plain.rows):
        ta = {k: v for k, v in terms(robust, a).items() if not k.startswith(("p[", "z["))}
        assert ta == terms(plain, b) and a.sense == b.sense and a.rhs == b.rhs


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.booleans(), st.booleans(), st.integers(0, 2))
def test_row_counts_match_formulas(seed, robust, strict, backups):
    topo, demands = random_instance(seed, max_nodes=6, max_demands=4)
    model = assemble_model(build_catalog(topo), demands, GroomingConfig(robust=robust, strict=strict, mu=(1.0,) * backups))
    assert model.label_counts() == expected_counts(model)
    n_o = len(model.catalog.channels)
    assert model.n_cols == expected_column_count(n_o, len(topo.nodes), len(demands), backups, robust)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.5, 1.0, 1.5, 2.0]))
def test_protection_dominates_every_subset(seed, gamma):
    topo, demands = random_instance(seed, max_nodes=4, max_demands=3)
    gamma = min(gamma, len(demands))
    model = assemble_model(build_catalog(topo), demands, GroomingConfig(gamma=gamma, mu=()))
    sol = solve_builtin(model)
    assert sol.status == "optimal"
    v, idx = sol.values, model.index
    for ch in model.catalog.channels:
        c = ch.key
        prot = gamma * v[idx[("z", c)]] + sum(v[idx[("p", c, d)]] for d in range(len(demands)))
        dev = [d.deviation_gbps * v[idx.flow(c, k, 0)] for k, d in enumerate(demands)]
        for size in range(int(gamma) + 1):
            for s in itertools.combinations(range(len(demands)), size):
                assert prot >= sum(dev[k] for k in s) - 1e-6


def test_zero_mu_equals_dropping_backup_terms():
    from robust_grooming.solver.oracle import brute_force_oracle

    topo = ring4()
    cat = build_catalog(topo)
    demands = [Demand("d1", "A", "C", 40, 4)]
    free = solve_builtin(assemble_model(cat, demands, GroomingConfig(mu=(0.0,))))
    assert free.objective == brute_force_oracle(cat, demands, GroomingConfig(mu=(0.0,))).objective
    model = assemble_model(cat, demands, GroomingConfig(mu=(0.0,)))
    for r in model.rows:
        if r.label.startswith("Eq4["):
            assert all(c == 0 for name, c in terms(model, r).items() if name.startswith("xi["))
