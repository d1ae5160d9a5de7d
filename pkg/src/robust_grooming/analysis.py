"""Post-solve resilience analysis: service paths, node criticality, single-node
faults, post-fault channel loading and Monte Carlo demand deviation.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EnumerationLimitError, PathExtractionError
from .milp import GroomingModel, VariableIndex
from .net_model import Channel, Demand
from .solver.solution import GroomingSolution

NO_FAULT = "no-fault"
CSV_COLUMNS = (
    "scenario",
    "channel_src",
    "channel_dst",
    "load_gbps",
    "capacity_gbps",
    "mean_load",
    "max_load",
    "violations",
    "trials",
)
MAX_SUBSETS = 1_000_000


@dataclass(frozen=True)
class ServicePath:
    demand: str
    role: int  # 0 primary, r >= 1 backup r
    channels: tuple[Channel, ...]

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.channels[0][0],) + tuple(b for _, b in self.channels)

    @property
    def intermediates(self) -> tuple[str, ...]:
        return self.nodes[1:-1]


@dataclass
class ServicePathSet:
    demands: list[Demand]
    nodes: tuple[str, ...]
    paths: dict[str, list[ServicePath]]  # demand id -> [primary, backup 1, ...]

    def roles(self, demand_id: str) -> list[ServicePath]:
        return self.paths[demand_id]

    def all_paths(self) -> Iterable[ServicePath]:
        for d in self.demands:
            yield from self.paths[d.id]


def _selected(solution: GroomingSolution, index: VariableIndex, d: int, role: int) -> list[Channel]:
    out = []
    for key, j in index.position.items():
        if role == 0:
            hit = key[0] == "X" and key[2] == d
        else:
            hit = key[0] == "Xi" and key[2] == d and key[3] == role
        if hit and solution.values[j] > 0.5:
            out.append(key[1])
    return sorted(out)


def extract_paths(solution: GroomingSolution, index: VariableIndex, demands: Sequence[Demand]) -> ServicePathSet:
    """Follow the selected channels of every demand and role from source to destination."""
    if solution.values is None:
        raise PathExtractionError("solution carries no values")
    demands = list(demands)
    backups = max((k[3] for k in index.keys if k[0] == "Xi"), default=0)
    nodes = tuple(sorted({k[1] for k in index.keys if k[0] == "y"}))
    paths: dict[str, list[ServicePath]] = {}
    for d, dem in enumerate(demands):
        per_role = []
        for role in range(backups + 1):
            tag = "primary" if role == 0 else f"backup {role}"
            chosen = _selected(solution, index, d, role)
            out: dict[str, list[Channel]] = {}
            for ch in chosen:
                out.setdefault(ch[0], []).append(ch)
            walk: list[Channel] = []
            here, seen = dem.src, {dem.src}
            while here != dem.dst:
                nxt = out.get(here, [])
                if len(nxt) > 1:
                    raise PathExtractionError(f"demand {dem.id} {tag}: branching at {here} onto {nxt}")
                if not nxt:
                    raise PathExtractionError(f"demand {dem.id} {tag}: path stops at {here}")
                ch = nxt[0]
                if ch[1] in seen:
                    raise PathExtractionError(f"demand {dem.id} {tag}: cycle through {ch[1]}")
                walk.append(ch)
                seen.add(ch[1])
                here = ch[1]
            if len(walk) != len(chosen):
                stray = sorted(set(chosen) - set(walk))
                raise PathExtractionError(f"demand {dem.id} {tag}: selected channels off the path {stray} form a cycle")
            per_role.append(ServicePath(dem.id, role, tuple(walk)))
        paths[dem.id] = per_role
    return ServicePathSet(demands, nodes, paths)


def critical_node_analysis(paths: ServicePathSet, count_mode: str = "demands") -> list[tuple[str, int]]:
    """Nodes ranked by how many demands (or paths, with ``count_mode="paths"``) visit them."""
    if count_mode not in ("demands", "paths"):
        raise ValueError(f"count_mode must be 'demands' or 'paths', not {count_mode!r}")
    counts = {n: 0 for n in paths.nodes}
    for dem in paths.demands:
        if count_mode == "demands":
            touched = set().union(*(p.nodes for p in paths.paths[dem.id])) if paths.paths[dem.id] else set()
            for n in touched:
                counts[n] = counts.get(n, 0) + 1
        else:
            for p in paths.paths[dem.id]:
                for n in set(p.nodes):
                    counts[n] = counts.get(n, 0) + 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


@dataclass(frozen=True)
class FaultClass:
    kind: str  # unserved-endpoint | served-via-primary | served-via-backup | unserved-no-path
    backup: int = 0

    def __str__(self) -> str:
        return f"served-via-backup({self.backup})" if self.kind == "served-via-backup" else self.kind

    @property
    def active_role(self) -> int | None:
        if self.kind == "served-via-primary":
            return 0
        if self.kind == "served-via-backup":
            return self.backup
        return None


def classify_fault(paths: ServicePathSet, demand: Demand, fault: str | None) -> FaultClass:
    if fault is None:
        return FaultClass("served-via-primary")
    if fault in (demand.src, demand.dst):
        return FaultClass("unserved-endpoint")
    roles = paths.paths[demand.id]
    if fault not in roles[0].nodes:
        return FaultClass("served-via-primary")
    for p in roles[1:]:
        if fault not in p.nodes:
            return FaultClass("served-via-backup", p.role)
    return FaultClass("unserved-no-path")


def fault_report(paths: ServicePathSet, faults: Sequence[str]) -> dict[str, dict[str, FaultClass]]:
    return {v: {d.id: classify_fault(paths, d, v) for d in paths.demands} for v in faults}


@dataclass(frozen=True)
class LoadEntry:
    channel: Channel
    load: float
    capacity: float
    dark: bool  # incident to the faulted node

    @property
    def utilization(self) -> float:
        return self.load / self.capacity if self.capacity > 0 else (0.0 if self.load == 0 else math.inf)


def channel_capacities(model: GroomingModel, solution: GroomingSolution) -> dict[Channel, float]:
    g = model.config.granularity
    out = {}
    for ch in model.catalog.channels:
        theta = solution.values[model.index[("theta", ch.key)]]
        out[ch.key] = ch.capacity_slots * g * round(float(theta))
    return out


def _usage(paths: ServicePathSet, channels: list[Channel], fault: str | None) -> np.ndarray:
    """Channel-by-demand 0/1 matrix of the path each demand rides under ``fault``."""
    pos = {c: k for k, c in enumerate(channels)}
    U = np.zeros((len(channels), len(paths.demands)))
    for d, dem in enumerate(paths.demands):
        role = classify_fault(paths, dem, fault).active_role
        if role is None:
            continue
        for ch in paths.paths[dem.id][role].channels:
            U[pos[ch], d] = 1.0
    return U


def post_fault_loading(
    paths: ServicePathSet,
    demands: Sequence[Demand],
    fault: str | None,
    solution: GroomingSolution,
    model: GroomingModel,
    volumes: Sequence[float] | None = None,
) -> list[LoadEntry]:
    """Per-channel load carried by active paths; ``fault=None`` is the no-fault baseline."""
    channels = [c.key for c in model.catalog.channels]
    caps = channel_capacities(model, solution)
    vol = np.array([d.nominal_gbps for d in demands] if volumes is None else volumes, dtype=float)
    load = _usage(paths, channels, fault) @ vol
    return [
        LoadEntry(ch, float(load[k]), caps[ch], fault is not None and fault in ch) for k, ch in enumerate(channels)
    ]


def _demand_key(demand_id: str) -> int:
    return int.from_bytes(hashlib.sha256(demand_id.encode()).digest()[:4], "big")


def draw_volumes(demands: Sequence[Demand], trial: int, seed: int) -> np.ndarray:
    """Uniform draws on [nominal - deviation, nominal + deviation]; one stream per (seed, trial, demand)."""
    out = np.empty(len(demands))
    for k, d in enumerate(demands):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(trial, _demand_key(d.id)))
        out[k] = np.random.default_rng(ss).uniform(d.nominal_gbps - d.deviation_gbps, d.nominal_gbps + d.deviation_gbps)
    return out


@dataclass
class DeviationEntry:
    scenario: str
    channel: Channel
    nominal_load: float
    capacity: float
    mean_load: float
    max_load: float
    violations: int
    trials: int


@dataclass
class DeviationReport:
    seed: int
    trials: int
    entries: list[DeviationEntry] = field(default_factory=list)

    def violations_by_scenario(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for e in self.entries:
            out[e.scenario] = out.get(e.scenario, 0) + e.violations
        return out


def scenario_name(fault: str | None) -> str:
    return NO_FAULT if fault is None else f"fault-{fault}"


def deviation_monte_carlo(
    paths: ServicePathSet,
    demands: Sequence[Demand],
    faults: Sequence[str | None],
    trials: int,
    seed: int,
    solution: GroomingSolution,
    model: GroomingModel,
    workers: int = 1,
) -> DeviationReport:
    """Deviate every demand at once, ``trials`` times, and tally loads per scenario and channel.

    A violation is a trial whose load on the channel exceeds its installed
    capacity. Results do not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    demands = list(demands)
    channels = [c.key for c in model.catalog.channels]
    caps = channel_capacities(model, solution)
    cap = np.array([caps[c] for c in channels])
    nominal = np.array([d.nominal_gbps for d in demands])

    def draw(chunk: range) -> np.ndarray:
        return np.stack([draw_volumes(demands, t, seed) for t in chunk])

    bounds = np.linspace(0, trials, max(1, min(workers, trials)) + 1).astype(int)
    chunks = [range(a, b) for a, b in zip(bounds, bounds[1:])]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(draw, chunks))
    else:
        parts = [draw(c) for c in chunks]
    volumes = np.concatenate(parts)  # trials x demands, in trial order

    report = DeviationReport(seed, trials)
    for fault in faults:
        U = _usage(paths, channels, fault)
        loads = volumes @ U.T  # trials x channels
        base = U @ nominal
        over = loads > cap + 1e-9
        for k, ch in enumerate(channels):
            report.entries.append(
                DeviationEntry(
                    scenario_name(fault),
                    ch,
                    float(base[k]),
                    float(cap[k]),
                    float(loads[:, k].mean()),
                    float(loads[:, k].max()),
                    int(over[:, k].sum()),
                    trials,
                )
            )
    return report


@dataclass(frozen=True)
class GuaranteeResult:
    passed: bool
    witness: tuple[Channel, tuple[str, ...]] | None
    subsets_checked: int
    worst_excess: float = 0.0


def _coefficients(model: GroomingModel, solution: GroomingSolution) -> dict[Channel, np.ndarray]:
    """Per-channel capacity multiplier of each demand: primary flow plus weighted backups."""
    idx, cfg = model.index, model.config
    v = solution.values
    out = {}
    for ch in model.catalog.channels:
        coeff = np.zeros(len(model.demands))
        for d in range(len(model.demands)):
            coeff[d] = v[idx.flow(ch.key, d, 0)]
            for r, mu in enumerate(cfg.mu, 1):
                coeff[d] += mu * v[idx.flow(ch.key, d, r)]
        out[ch.key] = coeff
    return out


def robust_guarantee_check(
    solution: GroomingSolution, model: GroomingModel, gamma: float | None = None, tolerance: float = 1e-6
) -> GuaranteeResult:
    """Check every channel against every set of at most ``floor(gamma)`` deviating demands."""
    demands = model.demands
    gamma = model.gamma if gamma is None else gamma
    size = min(int(math.floor(gamma + 1e-9)), len(demands))
    total = sum(math.comb(len(demands), k) for k in range(size + 1))
    if total > MAX_SUBSETS:
        raise EnumerationLimitError(f"{total} subsets exceed the bound of {MAX_SUBSETS}")
    caps = channel_capacities(model, solution)
    nominal = np.array([d.nominal_gbps for d in demands])
    dev = np.array([d.deviation_gbps for d in demands])
    checked = 0
    for ch, coeff in _coefficients(model, solution).items():
        base = float(nominal @ coeff)
        extra = dev * coeff
        for k in range(size + 1):
            for subset in itertools.combinations(range(len(demands)), k):
                checked += 1
                load = base + float(extra[list(subset)].sum())
                if load > caps[ch] + tolerance:
                    witness = (ch, tuple(demands[d].id for d in subset))
                    return GuaranteeResult(False, witness, checked, load - caps[ch])
    return GuaranteeResult(True, None, checked)


def _fmt(v: float) -> str:
    return f"{v:.6f}".rstrip("0").rstrip(".") if math.isfinite(v) else str(v)


def loading_csv(scenarios: dict[str, list[LoadEntry]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for name, entries in scenarios.items():
        for e in entries:
            w.writerow([name, e.channel[0], e.channel[1], _fmt(e.load), _fmt(e.capacity), "", "", "", ""])
    return buf.getvalue()


def deviation_csv(report: DeviationReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS + ("seed",))
    for e in report.entries:
        w.writerow(
            [
                e.scenario,
                e.channel[0],
                e.channel[1],
                _fmt(e.nominal_load),
                _fmt(e.capacity),
                _fmt(e.mean_load),
                _fmt(e.max_load),
                e.violations,
                e.trials,
                report.seed,
            ]
        )
    return buf.getvalue()


def criticality_csv(ranking: list[tuple[str, int]]) -> str:
    return "node,count\n" + "".join(f"{n},{c}\n" for n, c in ranking)


def fault_csv(report: dict[str, dict[str, FaultClass]]) -> str:
    lines = ["scenario,demand,classification"]
    for v, per in report.items():
        lines += [f"{scenario_name(v)},{d},{cls}" for d, cls in per.items()]
    return "\n".join(lines) + "\n"


def summary_document(
    paths: ServicePathSet,
    ranking: list[tuple[str, int]],
    faults: dict[str, dict[str, FaultClass]],
    loading: dict[str, list[LoadEntry]],
) -> str:
    doc = {
        "format_version": 1,
        "paths": {
            d.id: [{"role": p.role, "nodes": list(p.nodes)} for p in paths.paths[d.id]] for d in paths.demands
        },
        "criticality": [{"node": n, "count": c} for n, c in ranking],
        "faults": {
            scenario_name(v): _class_counts(per.values()) for v, per in faults.items()
        },
        "max_utilization": {
            name: max((e.utilization for e in entries if e.capacity > 0), default=0.0) for name, entries in loading.items()
        },
        "overloaded_channels": {
            name: sum(1 for e in entries if e.load > e.capacity + 1e-9) for name, entries in loading.items()
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _class_counts(classes: Iterable[FaultClass]) -> dict[str, int]:
    out: dict[str, int] = {}
    for c in classes:
        out[str(c)] = out.get(str(c), 0) + 1
    return dict(sorted(out.items()))
