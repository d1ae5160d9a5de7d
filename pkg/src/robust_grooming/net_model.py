"""Physical DWDM layer, modulation reach table, candidate optical channels and demands."""

from __future__ import annotations

import heapq
import json
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ChannelInfeasibleError, InputError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

EdgeKey = tuple[str, str]
Channel = tuple[str, str]


def edge_key(a: str, b: str) -> EdgeKey:
    """Canonical (sorted) identifier of an undirected fiber edge."""
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    length_km: float
    wavelengths: int

    @property
    def key(self) -> EdgeKey:
        return edge_key(self.a, self.b)


@dataclass(frozen=True)
class NetworkTopology:
    """Validated physical topology. Construct through :meth:`create` or :func:`load_topology`."""

    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]

    @classmethod
    def create(cls, nodes: Iterable[str], edges: Iterable[Edge | Sequence[Any]]) -> NetworkTopology:
        node_list = [str(n) for n in nodes]
        edge_list = [e if isinstance(e, Edge) else Edge(str(e[0]), str(e[1]), float(e[2]), int(e[3])) for e in edges]
        topo = cls(tuple(node_list), tuple(edge_list))
        topo.validate()
        return topo

    def validate(self) -> None:
        seen: set[str] = set()
        for n in self.nodes:
            if n in seen:
                raise InputError(f"duplicate node identifier {n!r}")
            seen.add(n)
        if not self.nodes:
            raise InputError("topology has no nodes")
        pairs: set[EdgeKey] = set()
        for idx, e in enumerate(self.edges):
            where = f"edge #{idx} ({e.a}-{e.b})"
            if e.a not in seen or e.b not in seen:
                raise InputError(f"{where}: endpoint not in node list")
            if e.a == e.b:
                raise InputError(f"{where}: self-loop edges are not allowed")
            if e.key in pairs:
                raise InputError(f"{where}: duplicate edge between {e.key[0]} and {e.key[1]}")
            if not e.length_km > 0:
                raise InputError(f"{where}: length_km must be positive, got {e.length_km}")
            if e.wavelengths < 0:
                raise InputError(f"{where}: wavelengths must be non-negative, got {e.wavelengths}")
            pairs.add(e.key)
        # connectivity
        reached = {self.nodes[0]}
        stack = [self.nodes[0]]
        while stack:
            u = stack.pop()
            for v, _ in self.adjacency[u]:
                if v not in reached:
                    reached.add(v)
                    stack.append(v)
        if len(reached) != len(self.nodes):
            missing = sorted(seen - reached)
            raise InputError(f"topology is disconnected; unreachable from {self.nodes[0]!r}: {missing}")

    @cached_property
    def adjacency(self) -> dict[str, list[tuple[str, Edge]]]:
        adj: dict[str, list[tuple[str, Edge]]] = {n: [] for n in self.nodes}
        for e in self.edges:
            adj[e.a].append((e.b, e))
            adj[e.b].append((e.a, e))
        for n in adj:
            adj[n].sort(key=lambda item: item[0])
        return adj

    @cached_property
    def edge_by_key(self) -> dict[EdgeKey, Edge]:
        return {e.key: e for e in self.edges}

    def to_document(self) -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "nodes": list(self.nodes),
            "edges": [
                {"a": e.a, "b": e.b, "length_km": e.length_km, "wavelengths": e.wavelengths} for e in self.edges
            ],
        }


@dataclass(frozen=True)
class ModulationTable:
    """Reach tiers ``(max_reach_km, capacity_slots)`` in ascending reach order."""

    tiers: tuple[tuple[float, int], ...]

    def __post_init__(self) -> None:
        if not self.tiers:
            raise InputError("modulation table needs at least one tier")
        for k, (reach, slots) in enumerate(self.tiers):
            if not reach > 0 or slots <= 0:
                raise InputError(f"tier #{k}: reach and capacity must be positive")
            if k:
                prev_reach, prev_slots = self.tiers[k - 1]
                if reach <= prev_reach:
                    raise InputError(f"tier #{k}: reaches must be strictly increasing")
                if slots > prev_slots:
                    raise InputError(f"tier #{k}: capacity must not increase with reach")

    @property
    def max_reach(self) -> float:
        return self.tiers[-1][0]

    def to_document(self) -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "tiers": [{"max_reach_km": r, "capacity_slots": c} for r, c in self.tiers],
        }


# 200/150/100/50 Gb/s at 1.25 Gb/s per slot.
DEFAULT_MODULATION = ModulationTable(((600.0, 160), (1200.0, 120), (3000.0, 80), (5000.0, 40)))


@dataclass(frozen=True)
class CandidateChannel:
    src: str
    dst: str
    nodes: tuple[str, ...]
    distance_km: float
    capacity_slots: int

    @property
    def key(self) -> Channel:
        return (self.src, self.dst)

    @property
    def route(self) -> tuple[EdgeKey, ...]:
        return tuple(edge_key(u, v) for u, v in zip(self.nodes, self.nodes[1:]))


@dataclass(frozen=True)
class ChannelCatalog:
    """The candidate channel set together with the topology it was routed on."""

    topology: NetworkTopology
    table: ModulationTable
    channels: tuple[CandidateChannel, ...]

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.topology.nodes

    @cached_property
    def by_key(self) -> dict[Channel, CandidateChannel]:
        return {c.key: c for c in self.channels}

    @cached_property
    def position(self) -> dict[Channel, int]:
        return {c.key: k for k, c in enumerate(self.channels)}

    @cached_property
    def outgoing(self) -> dict[str, list[Channel]]:
        out: dict[str, list[Channel]] = {n: [] for n in self.nodes}
        for c in self.channels:
            out[c.src].append(c.key)
        return out

    @cached_property
    def incoming(self) -> dict[str, list[Channel]]:
        inc: dict[str, list[Channel]] = {n: [] for n in self.nodes}
        for c in self.channels:
            inc[c.dst].append(c.key)
        return inc

    @cached_property
    def edge_channels(self) -> dict[EdgeKey, list[Channel]]:
        """Channels whose route traverses each physical edge (edges listed in topology order)."""
        users: dict[EdgeKey, list[Channel]] = {e.key: [] for e in self.topology.edges}
        for c in self.channels:
            for ek in c.route:
                users[ek].append(c.key)
        return users


@dataclass(frozen=True)
class Demand:
    id: str
    src: str
    dst: str
    nominal_gbps: float
    deviation_gbps: float = 0.0

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise InputError(f"demand {self.id}: source equals destination")
        if not self.nominal_gbps > 0:
            raise InputError(f"demand {self.id}: nominal bandwidth must be positive")
        if self.deviation_gbps < 0 or self.deviation_gbps > self.nominal_gbps:
            raise InputError(f"demand {self.id}: deviation must lie in [0, nominal]")


# --------------------------------------------------------------------------- documents


def _parse_json(document: str | bytes, what: str) -> Any:
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if isinstance(data, dict):
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise InputError(f"{what}: unsupported format_version {version!r} (expected {FORMAT_VERSION})")
    else:
        raise InputError(f"{what}: top-level value must be an object")
    return data


def _field(record: Any, name: str, kind: type, where: str) -> Any:
    if not isinstance(record, dict) or name not in record:
        raise InputError(f"{where}: missing field {name!r}")
    value = record[name]
    try:
        if kind is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        if isinstance(value, bool):
            raise TypeError
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: field {name!r} has invalid value {value!r}") from exc


def load_topology(document: str | bytes) -> NetworkTopology:
    data = _parse_json(document, "topology")
    nodes = data.get("nodes")
    if not isinstance(nodes, list) or not all(isinstance(n, str) for n in nodes):
        raise InputError("topology: field 'nodes' must be a list of strings")
    raw_edges = data.get("edges")
    if not isinstance(raw_edges, list):
        raise InputError("topology: field 'edges' must be a list")
    edges = []
    for k, rec in enumerate(raw_edges):
        where = f"topology: edges[{k}]"
        edges.append(
            Edge(
                _field(rec, "a", str, where),
                _field(rec, "b", str, where),
                _field(rec, "length_km", float, where),
                _field(rec, "wavelengths", int, where),
            )
        )
    return NetworkTopology.create(nodes, edges)


def load_modulation_table(document: str | bytes) -> ModulationTable:
    data = _parse_json(document, "modulation table")
    tiers = data.get("tiers")
    if not isinstance(tiers, list):
        raise InputError("modulation table: field 'tiers' must be a list")
    parsed = []
    for k, rec in enumerate(tiers):
        where = f"modulation table: tiers[{k}]"
        parsed.append((_field(rec, "max_reach_km", float, where), _field(rec, "capacity_slots", int, where)))
    return ModulationTable(tuple(parsed))


def load_demands(document: str | bytes, topology: NetworkTopology | None = None) -> list[Demand]:
    data = _parse_json(document, "demands")
    records = data.get("demands")
    if not isinstance(records, list):
        raise InputError("demands: field 'demands' must be a list")
    out: list[Demand] = []
    seen: set[str] = set()
    known = set(topology.nodes) if topology is not None else None
    for k, rec in enumerate(records):
        where = f"demands: demands[{k}]"
        d = Demand(
            str(_field(rec, "id", str, where)),
            _field(rec, "src", str, where),
            _field(rec, "dst", str, where),
            _field(rec, "nominal_gbps", float, where),
            _field(rec, "deviation_gbps", float, where),
        )
        if d.id in seen:
            raise InputError(f"{where}: duplicate demand id {d.id!r}")
        if known is not None and (d.src not in known or d.dst not in known):
            raise InputError(f"{where}: endpoint {d.src if d.src not in known else d.dst!r} not in topology")
        seen.add(d.id)
        out.append(d)
    return out


def demands_to_document(demands: Sequence[Demand]) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "demands": [
            {"id": d.id, "src": d.src, "dst": d.dst, "nominal_gbps": d.nominal_gbps, "deviation_gbps": d.deviation_gbps}
            for d in demands
        ],
    }


# --------------------------------------------------------------------------- routing and catalog


def route_channel(topology: NetworkTopology, i: str, j: str) -> tuple[tuple[str, ...], float]:
    """Shortest physical path from ``i`` to ``j`` by total length.

    Equal-length paths are ranked by their node-identifier sequence, so the
    result never depends on the order edges were listed in.

    Returns:
        The node sequence of the route and its length in km.
    """
    if i == j:
        raise ValueError("route_channel needs distinct endpoints")
    if i not in topology.adjacency or j not in topology.adjacency:
        raise KeyError(f"unknown node in pair ({i}, {j})")
    best: dict[str, tuple[float, tuple[str, ...]]] = {i: (0.0, (i,))}
    heap: list[tuple[float, tuple[str, ...]]] = [(0.0, (i,))]
    done: set[str] = set()
    while heap:
        dist, path = heapq.heappop(heap)
        u = path[-1]
        if u in done:
            continue
        done.add(u)
        if u == j:
            return path, dist
        for v, e in topology.adjacency[u]:
            if v in done:
                continue
            cand = (dist + e.length_km, path + (v,))
            if v not in best or cand < best[v]:
                best[v] = cand
                heapq.heappush(heap, cand)
    raise InputError(f"no physical route from {i} to {j}")


def channel_capacity(distance_km: float, table: ModulationTable = DEFAULT_MODULATION) -> int:
    if not distance_km > 0:
        raise ValueError("distance must be positive")
    for reach, slots in table.tiers:
        if reach >= distance_km:
            return slots
    raise ChannelInfeasibleError(f"{distance_km} km exceeds the maximum reach {table.max_reach} km")


def build_catalog(topology: NetworkTopology, table: ModulationTable = DEFAULT_MODULATION) -> ChannelCatalog:
    channels = []
    for i in sorted(topology.nodes):
        for j in sorted(topology.nodes):
            if i == j:
                continue
            nodes, dist = route_channel(topology, i, j)
            try:
                slots = channel_capacity(dist, table)
            except ChannelInfeasibleError:
                logger.warning("channel (%s,%s) excluded: %.1f km is beyond modulation reach", i, j, dist)
                continue
            channels.append(CandidateChannel(i, j, nodes, dist, slots))
    return ChannelCatalog(topology, table, tuple(channels))


# --------------------------------------------------------------------------- demand generation


def generate_demands(
    topology: NetworkTopology,
    count: int,
    min_gbps: float = 10.0,
    max_gbps: float = 50.0,
    deviation_fraction: float = 0.1,
    seed: int = 0,
    round_gbps: bool = False,
) -> list[Demand]:
    """Random demand matrix with uniform bandwidths over uniformly drawn ordered node pairs."""
    if count < 1:
        raise ValueError("count must be at least 1")
    if not 0 < min_gbps <= max_gbps:
        raise ValueError("need 0 < min_gbps <= max_gbps")
    if not 0 <= deviation_fraction <= 1:
        raise ValueError("deviation_fraction must lie in [0, 1]")
    nodes = sorted(topology.nodes)
    if len(nodes) < 2:
        raise InputError("demand generation needs at least two nodes")
    pairs = [(a, b) for a in nodes for b in nodes if a != b]
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(pairs), size=count)
    volumes = rng.uniform(min_gbps, max_gbps, size=count)
    if round_gbps:
        volumes = np.clip(np.rint(volumes), min_gbps, max_gbps)
    out = []
    for k in range(count):
        src, dst = pairs[int(picks[k])]
        nominal = float(volumes[k])
        out.append(Demand(f"d{k + 1}", src, dst, nominal, deviation_fraction * nominal))
    return out

