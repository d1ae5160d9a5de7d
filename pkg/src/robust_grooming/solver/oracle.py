"""Combinatorial ground truth: enumerate path tuples instead of solving the MILP.

For each demand every tuple (primary, backup 1, ...) of simple channel paths
admitted by the exclusivity rules is listed; a depth-first search over demands
then sizes each channel to its worst-case load and keeps the cheapest plan.
Partial plans are pruned once their cost reaches the best complete plan (cost
never decreases when demands are added) or once a fiber runs out of
wavelengths.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from ..errors import EnumerationLimitError
from ..milp import GroomingConfig
from ..net_model import Channel, ChannelCatalog, Demand

MAX_NODES, MAX_DEMANDS, MAX_BACKUPS = 6, 4, 2

Path = tuple[str, ...]


@dataclass
class OracleResult:
    objective: float
    assignment: list[tuple[Path, ...]] | None  # per demand: (primary, backup 1, ...) node sequences
    theta: dict[Channel, int]
    switches: set[str]


def simple_paths(catalog: ChannelCatalog, src: str, dst: str) -> list[Path]:
    out: list[Path] = []
    succ = {n: sorted(j for _, j in catalog.outgoing[n]) for n in catalog.nodes}

    def walk(path: list[str]) -> None:
        u = path[-1]
        if u == dst:
            out.append(tuple(path))
            return
        for v in succ[u]:
            if v not in path:
                path.append(v)
                walk(path)
                path.pop()

    walk([src])
    return out


def _hops(path: Path) -> list[Channel]:
    return list(zip(path, path[1:]))


def admissible(paths: Sequence[Path], src: str, dst: str, strict: bool) -> bool:
    """Whether a (primary, backups...) tuple satisfies the exclusivity rules."""
    ends = {src, dst}
    inner_touch: dict[str, int] = {}
    for p in paths:
        for a, b in _hops(p):
            if a not in ends and b not in ends:
                inner_touch[a] = inner_touch.get(a, 0) + 1
                inner_touch[b] = inner_touch.get(b, 0) + 1
    if any(count > 1 for count in inner_touch.values()):
        return False
    if not strict:
        return True
    firsts = [p[:2] for p in paths]
    lasts = [p[-2:] for p in paths]
    if len(set(firsts)) < len(firsts) or len(set(lasts)) < len(lasts):
        return False
    seen: set[str] = set()
    for p in paths:
        inner = set(p[1:-1])
        if inner & seen:
            return False
        seen |= inner
    return True


def protection(deviations: list[float], gamma: float) -> float:
    """Worst total deviation when at most ``gamma`` terms (fractionally) deviate."""
    if gamma <= 0 or not deviations:
        return 0.0
    ranked = sorted(deviations, reverse=True)
    whole = int(math.floor(gamma))
    total = sum(ranked[:whole])
    if whole < len(ranked):
        total += (gamma - whole) * ranked[whole]
    return total


def brute_force_oracle(catalog: ChannelCatalog, demands: Sequence[Demand], config: GroomingConfig) -> OracleResult:
    n_paths = config.backup_count + 1
    if len(catalog.nodes) > MAX_NODES or len(demands) > MAX_DEMANDS or config.backup_count > MAX_BACKUPS:
        raise EnumerationLimitError(
            f"oracle handles at most {MAX_NODES} nodes, {MAX_DEMANDS} demands and {MAX_BACKUPS} backups"
        )
    gamma = config.resolved_gamma(len(demands))
    g = config.granularity
    capacity = {ch.key: ch.capacity_slots * g for ch in catalog.channels}
    wavelengths = {e.key: e.wavelengths for e in catalog.topology.edges}
    fibers = {ch.key: ch.route for ch in catalog.channels}

    options: list[list[tuple[tuple[Path, ...], dict[Channel, float]]]] = []
    for dem in demands:
        paths = simple_paths(catalog, dem.src, dem.dst)
        opts = []
        for combo in itertools.product(paths, repeat=n_paths):
            if not admissible(combo, dem.src, dem.dst, config.strict):
                continue
            coeff: dict[Channel, float] = {}
            for role, p in enumerate(combo):
                weight = 1.0 if role == 0 else config.mu[role - 1]
                for hop in _hops(p):
                    coeff[hop] = coeff.get(hop, 0.0) + weight
            opts.append((combo, coeff))
        options.append(opts)

    best = [math.inf, None, {}, set()]

    def plan_cost(nominal, devs, switches):
        theta = {}
        for ch, load in nominal.items():
            total = load + protection(devs[ch], gamma)
            theta[ch] = max(0, math.ceil(total / capacity[ch] - 1e-9))
        used: dict = {}
        for ch, t in theta.items():
            for fk in fibers[ch]:
                used[fk] = used.get(fk, 0) + t
        if any(used[fk] > wavelengths[fk] for fk in used):
            return math.inf, theta
        return config.alpha * sum(theta.values()) + config.beta * len(switches), theta

    def search(k, nominal, devs, switches, chosen):
        cost, theta = plan_cost(nominal, devs, switches)
        if cost >= best[0] - 1e-9:
            return
        if k == len(demands):
            best[:] = [cost, list(chosen), theta, set(switches)]
            return
        dem = demands[k]
        for combo, coeff in options[k]:
            nom = dict(nominal)
            dv = {ch: list(v) for ch, v in devs.items()}
            for ch, w in coeff.items():
                nom[ch] = nom.get(ch, 0.0) + dem.nominal_gbps * w
                dv.setdefault(ch, []).append(dem.deviation_gbps * w)
            sw = set(switches)
            for p in combo:
                sw.update(p[1:-1])
            chosen.append(combo)
            search(k + 1, nom, dv, sw, chosen)
            chosen.pop()

    search(0, {}, {}, set(), [])
    objective, assignment, theta, switches = best
    return OracleResult(objective, assignment, theta, switches)
