from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from robust_grooming.milp import GroomingConfig, assemble_model
from robust_grooming.net_model import (
    Demand,
    ModulationTable,
    NetworkTopology,
    build_catalog,
    load_demands,
    load_topology,
)

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


def ring4(length: float = 100.0, wavelengths: int = 80) -> NetworkTopology:
    nodes = ["A", "B", "C", "D"]
    edges = [(a, b, length, wavelengths) for a, b in (("A", "B"), ("B", "C"), ("C", "D"), ("D", "A"))]
    return NetworkTopology.create(nodes, edges)


def triangle(length: float = 100.0, wavelengths: int = 80) -> NetworkTopology:
    return NetworkTopology.create(
        ["A", "B", "C"], [("A", "B", length, wavelengths), ("B", "C", length, wavelengths), ("A", "C", length, wavelengths)]
    )


def single_channel_table(gbps: float, granularity: float = 1.25) -> ModulationTable:
    """A one-tier table whose channels carry ``gbps`` at the given granularity."""
    slots = gbps / granularity
    assert abs(slots - round(slots)) < 1e-12
    return ModulationTable(((10_000.0, int(round(slots))),))


def random_instance(seed: int, max_nodes: int = 5, max_demands: int = 3):
    """Small connected topology plus demands, drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, max_nodes + 1))
    nodes = [chr(ord("A") + k) for k in range(n)]
    order = list(rng.permutation(n))
    pairs = {tuple(sorted((nodes[order[k]], nodes[order[k + 1]]))) for k in range(n - 1)}
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < 0.35:
                pairs.add((nodes[a], nodes[b]))
    edges = [(a, b, float(rng.choice([300, 500, 700, 1300])), 80) for a, b in sorted(pairs)]
    topo = NetworkTopology.create(nodes, edges)
    demands = []
    for k in range(int(rng.integers(1, max_demands + 1))):
        s, t = rng.choice(n, size=2, replace=False)
        nominal = float(rng.uniform(10, 50))
        demands.append(Demand(f"d{k + 1}", nodes[s], nodes[t], nominal, 0.1 * nominal))
    return topo, demands


@pytest.fixture
def triangle_model():
    topo = load_topology(fixture_text("triangle.json"))
    demands = load_demands(fixture_text("triangle_demands.json"), topo)
    return assemble_model(build_catalog(topo), demands, GroomingConfig(robust=False, mu=()))


@pytest.fixture
def ring_catalog():
    return build_catalog(ring4())
