"""Assembly of the robust fault-tolerant grooming MILP.

Every constraint row carries a provenance label naming the equation family it
belongs to and its subscripts, e.g. ``Eq4[(A,B)]`` or ``Eq16[(A,B),d1,r1]``.
Families ``Strict*`` are the optional disjointness rows that tighten the
printed exclusivity constraints.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import InputError
from .net_model import Channel, ChannelCatalog, Demand

logger = logging.getLogger(__name__)

KIND_ORDER = ("theta", "y", "x", "xi", "X", "Xi", "p", "z")
INTEGER_KINDS = {"theta", "y", "X", "Xi"}
BINARY_KINDS = {"y", "X", "Xi"}

LE, EQ, GE = "<=", "=", ">="


@dataclass(frozen=True)
class GroomingConfig:
    alpha: float = 1.0
    beta: float = 0.0
    granularity: float = 1.25
    gamma: float | None = None  # None: 20% of the demand count
    mu: tuple[float, ...] = (1.0,)
    epsilon: float = 0.01
    big_m: float = 1e4
    robust: bool = True
    strict: bool = True
    snap_tolerance: float = 1e-6

    @property
    def backup_count(self) -> int:
        return len(self.mu)

    def resolved_gamma(self, n_demands: int) -> float:
        if not self.robust:
            return 0.0
        return 0.2 * n_demands if self.gamma is None else float(self.gamma)

    def with_(self, **changes) -> GroomingConfig:
        return replace(self, **changes)

    def validate(self, n_demands: int) -> None:
        if not self.granularity > 0:
            raise InputError("granularity must be positive")
        gamma = self.resolved_gamma(n_demands)
        if gamma < 0 or gamma > n_demands:
            raise InputError(f"gamma must lie in [0, {n_demands}], got {gamma}")
        if not 0 < self.epsilon <= 0.5:
            raise InputError("epsilon must lie in (0, 0.5]")
        if self.big_m < 1:
            raise InputError("big_m must be at least 1")
        if any(m < 0 for m in self.mu):
            raise InputError("resilience coefficients must be non-negative")


def _fmt_channel(ch: Channel) -> str:
    return f"({ch[0]},{ch[1]})"


def column_name(key: tuple, demands: Sequence[Demand]) -> str:
    kind, *sub = key
    parts = []
    for pos, s in enumerate(sub):
        if isinstance(s, tuple):
            parts.append(_fmt_channel(s))
        elif kind == "y":
            parts.append(str(s))
        elif pos == 1:
            parts.append(demands[s].id)
        else:
            parts.append(f"r{s}")
    return f"{kind}[{','.join(parts)}]"


class VariableIndex:
    """Dense numbering of the decision variables.

    Keys are tuples ``(kind, channel)``, ``("y", node)``, ``(kind, channel, d)`` and
    ``(kind, channel, d, r)`` where ``d`` is the demand position and ``r`` the
    1-based backup number.
    """

    def __init__(self, keys: list[tuple], demands: Sequence[Demand]):
        self.keys = keys
        self.position = {k: n for n, k in enumerate(keys)}
        self.demands = list(demands)

    def __len__(self) -> int:
        return len(self.keys)

    def __getitem__(self, key: tuple) -> int:
        return self.position[key]

    def get(self, key: tuple) -> int | None:
        return self.position.get(key)

    @cached_property
    def names(self) -> list[str]:
        return [column_name(k, self.demands) for k in self.keys]

    @cached_property
    def by_name(self) -> dict[str, int]:
        return {n: k for k, n in enumerate(self.names)}

    def kind_columns(self, kind: str) -> list[int]:
        return [n for n, k in enumerate(self.keys) if k[0] == kind]

    def flow(self, channel: Channel, d: int, role: int) -> int | None:
        """Fractional flow column; role 0 is the primary path, role r >= 1 backup r."""
        return self.position.get(("x", channel, d) if role == 0 else ("xi", channel, d, role))

    def indicator(self, channel: Channel, d: int, role: int) -> int | None:
        return self.position.get(("X", channel, d) if role == 0 else ("Xi", channel, d, role))


def index_variables(catalog: ChannelCatalog, demands: Sequence[Demand], config: GroomingConfig) -> VariableIndex:
    if not catalog.channels or not demands:
        raise InputError("model needs a non-empty catalog and demand list")
    chans = [c.key for c in catalog.channels]
    nd = range(len(demands))
    backups = range(1, config.backup_count + 1)
    keys: list[tuple] = []
    keys += [("theta", c) for c in chans]
    keys += [("y", n) for n in sorted(catalog.nodes)]
    keys += [("x", c, d) for c in chans for d in nd]
    keys += [("xi", c, d, r) for c in chans for d in nd for r in backups]
    keys += [("X", c, d) for c in chans for d in nd]
    keys += [("Xi", c, d, r) for c in chans for d in nd for r in backups]
    if config.robust:
        keys += [("p", c, d) for c in chans for d in nd]
        keys += [("z", c) for c in chans]
    return VariableIndex(keys, demands)


@dataclass(frozen=True)
class Row:
    coeffs: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    label: str

    def activity(self, values: np.ndarray) -> float:
        return float(sum(c * values[j] for j, c in self.coeffs))


class RowSet(list):
    """A list of rows with the warnings raised when building them."""

    def __init__(self, rows: Iterable[Row] = (), warnings: Iterable[str] = ()):
        super().__init__(rows)
        self.warnings = list(warnings)


def _row(terms: Iterable[tuple[int | None, float]], sense: str, rhs: float, label: str) -> Row:
    acc: dict[int, float] = defaultdict(float)
    for col, coef in terms:
        if col is not None:
            acc[col] += coef
    coeffs = tuple((j, c) for j, c in sorted(acc.items()) if c != 0.0)
    return Row(coeffs, sense, float(rhs), label)


def _roles(config: GroomingConfig) -> range:
    return range(config.backup_count + 1)


def _role_tag(role: int) -> str:
    return "" if role == 0 else f",r{role}"


def build_objective(index: VariableIndex, config: GroomingConfig) -> np.ndarray:
    obj = np.zeros(len(index))
    for n, key in enumerate(index.keys):
        if key[0] == "theta":
            obj[n] = config.alpha
        elif key[0] == "y":
            obj[n] = config.beta
    return obj


def build_capacity_and_robust_rows(
    index: VariableIndex, catalog: ChannelCatalog, demands: Sequence[Demand], config: GroomingConfig
) -> RowSet:
    """Channel capacity rows and, in robust mode, the rows defining the protection variables."""
    gamma = config.resolved_gamma(len(demands))
    g = config.granularity
    cap_rows, robust_rows = [], []
    for ch in catalog.channels:
        c = ch.key
        terms: list[tuple[int | None, float]] = [(index[("theta", c)], -ch.capacity_slots * g)]
        if config.robust:
            terms.append((index[("z", c)], gamma))
        for d, dem in enumerate(demands):
            terms.append((index.flow(c, d, 0), dem.nominal_gbps))
            for r, mu in enumerate(config.mu, start=1):
                terms.append((index.flow(c, d, r), dem.nominal_gbps * mu))
            if config.robust:
                terms.append((index[("p", c, d)], 1.0))
        cap_rows.append(_row(terms, LE, 0.0, f"Eq4[{_fmt_channel(c)}]"))
        if config.robust:
            for d, dem in enumerate(demands):
                rterms: list[tuple[int | None, float]] = [(index[("p", c, d)], 1.0), (index[("z", c)], 1.0)]
                rterms.append((index.flow(c, d, 0), -dem.deviation_gbps))
                for r, mu in enumerate(config.mu, start=1):
                    rterms.append((index.flow(c, d, r), -dem.deviation_gbps * mu))
                robust_rows.append(_row(rterms, GE, 0.0, f"Eq17[{_fmt_channel(c)},{dem.id}]"))
    return RowSet(cap_rows + robust_rows)


def _endpoint_warnings(demands: Sequence[Demand], catalog: ChannelCatalog) -> list[str]:
    warnings = []
    for dem in demands:
        if not catalog.outgoing.get(dem.src):
            warnings.append(f"demand {dem.id}: source {dem.src} has no outgoing candidate channel; model infeasible")
        if not catalog.incoming.get(dem.dst):
            warnings.append(f"demand {dem.id}: destination {dem.dst} has no incoming candidate channel; model infeasible")
    for w in warnings:
        logger.warning(w)
    return warnings


def build_flow_rows(
    index: VariableIndex, demands: Sequence[Demand], catalog: ChannelCatalog, config: GroomingConfig
) -> RowSet:
    families: dict[int, list[Row]] = {0: [], 1: []}
    nodes = sorted(catalog.nodes)
    for d, dem in enumerate(demands):
        for role in _roles(config):
            for i in nodes:
                rhs = -1.0 if i == dem.src else 1.0 if i == dem.dst else 0.0
                terms = [(index.flow(c, d, role), 1.0) for c in catalog.incoming[i]]
                terms += [(index.flow(c, d, role), -1.0) for c in catalog.outgoing[i]]
                eq = "Eq5" if role == 0 else "Eq6"
                families[min(role, 1)].append(_row(terms, EQ, rhs, f"{eq}[{dem.id}{_role_tag(role)},{i}]"))
    return RowSet(families[0] + families[1], _endpoint_warnings(demands, catalog))


def build_switch_rows(
    index: VariableIndex, demands: Sequence[Demand], catalog: ChannelCatalog, config: GroomingConfig
) -> RowSet:
    """OTN switch requirement rows.

    The absolute value of the net flow at node ``i`` is pinned to 1 at the
    demand's endpoints and 0 elsewhere by flow conservation, so it enters as a
    constant and the row stays linear.
    """
    eps = config.epsilon
    families: dict[int, list[Row]] = {0: [], 1: []}
    nodes = sorted(catalog.nodes)
    for d, dem in enumerate(demands):
        for role in _roles(config):
            for i in nodes:
                k = 1.0 if i in (dem.src, dem.dst) else 0.0
                terms: list[tuple[int | None, float]] = [(index[("y", i)], 1.0)]
                terms += [(index.flow(c, d, role), -eps) for c in catalog.incoming[i]]
                terms += [(index.flow(c, d, role), -eps) for c in catalog.outgoing[i]]
                eq = "Eq7" if role == 0 else "Eq8"
                families[min(role, 1)].append(_row(terms, GE, -k, f"{eq}[{dem.id}{_role_tag(role)},{i}]"))
    return RowSet(families[0] + families[1])


def build_dwdm_rows(index: VariableIndex, catalog: ChannelCatalog) -> RowSet:
    rows = []
    for e in catalog.topology.edges:
        users = catalog.edge_channels[e.key]
        if not users:
            continue
        terms = [(index[("theta", c)], 1.0) for c in users]
        rows.append(_row(terms, LE, float(e.wavelengths), f"Eq9[{e.key[0]}-{e.key[1]}]"))
    return RowSet(rows)


def build_exclusivity_rows(
    index: VariableIndex, demands: Sequence[Demand], catalog: ChannelCatalog, config: GroomingConfig
) -> RowSet:
    roles = _roles(config)
    n_paths = config.backup_count + 1
    src_rows, dst_rows, inter_rows = [], [], []
    strict_src, strict_dst, strict_node = [], [], []
    nodes = sorted(catalog.nodes)
    for d, dem in enumerate(demands):
        ends = {dem.src, dem.dst}
        src_terms = [(index.indicator(c, d, role), 1.0) for c in catalog.outgoing[dem.src] for role in roles]
        src_rows.append(_row(src_terms, EQ, n_paths, f"Eq10[{dem.id}]"))
        dst_terms = [(index.indicator(c, d, role), 1.0) for c in catalog.incoming[dem.dst] for role in roles]
        dst_rows.append(_row(dst_terms, EQ, n_paths, f"Eq11[{dem.id}]"))
        for i in nodes:
            if i in ends:
                continue
            terms = []
            for j in nodes:
                if j in ends or j == i:
                    continue
                for c in ((i, j), (j, i)):
                    if c in catalog.by_key:
                        terms += [(index.indicator(c, d, role), 1.0) for role in roles]
            inter_rows.append(_row(terms, LE, 1.0, f"Eq12[{dem.id},{i}]"))
        if not config.strict:
            continue
        for c in catalog.outgoing[dem.src]:
            terms = [(index.indicator(c, d, role), 1.0) for role in roles]
            strict_src.append(_row(terms, LE, 1.0, f"StrictSrc[{dem.id},{_fmt_channel(c)}]"))
        for c in catalog.incoming[dem.dst]:
            terms = [(index.indicator(c, d, role), 1.0) for role in roles]
            strict_dst.append(_row(terms, LE, 1.0, f"StrictDst[{dem.id},{_fmt_channel(c)}]"))
        for i in nodes:
            if i in ends:
                continue
            incident = catalog.outgoing[i] + catalog.incoming[i]
            terms = [(index.indicator(c, d, role), 1.0) for c in incident for role in roles]
            # a simple path through i uses exactly two of its channels
            strict_node.append(_row(terms, LE, 2.0, f"StrictNode[{dem.id},{i}]"))
    return RowSet(src_rows + dst_rows + inter_rows + strict_src + strict_dst + strict_node)


def build_linking_rows(index: VariableIndex, demands: Sequence[Demand], catalog: ChannelCatalog, config: GroomingConfig) -> RowSet:
    big_m = config.big_m
    fam: dict[str, list[Row]] = {"Eq13": [], "Eq14": [], "Eq15": [], "Eq16": []}
    for ch in catalog.channels:
        c = ch.key
        for d, dem in enumerate(demands):
            for role in _roles(config):
                f, ind = index.flow(c, d, role), index.indicator(c, d, role)
                sub = f"{_fmt_channel(c)},{dem.id}{_role_tag(role)}"
                lo, hi = ("Eq13", "Eq15") if role == 0 else ("Eq14", "Eq16")
                fam[lo].append(_row([(f, big_m), (ind, -1.0)], GE, 0.0, f"{lo}[{sub}]"))
                fam[hi].append(_row([(f, 1.0), (ind, -1.0)], LE, 0.0, f"{hi}[{sub}]"))
    return RowSet(fam["Eq13"] + fam["Eq14"] + fam["Eq15"] + fam["Eq16"])


@dataclass
class GroomingModel:
    """Assembled MILP: minimize ``objective @ v`` subject to ``rows`` and column bounds."""

    index: VariableIndex
    objective: np.ndarray
    rows: list[Row]
    lower: np.ndarray
    upper: np.ndarray
    integer: np.ndarray
    catalog: ChannelCatalog
    demands: list[Demand]
    config: GroomingConfig
    warnings: list[str] = field(default_factory=list)

    @property
    def n_cols(self) -> int:
        return len(self.index)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def gamma(self) -> float:
        return self.config.resolved_gamma(len(self.demands))

    def label_counts(self) -> dict[str, int]:
        counts: dict[str, int] = defaultdict(int)
        for r in self.rows:
            counts[r.label.split("[", 1)[0]] += 1
        return dict(counts)

    def matrix(self) -> sp.csr_matrix:
        data, ri, ci = [], [], []
        for k, r in enumerate(self.rows):
            for j, c in r.coeffs:
                ri.append(k)
                ci.append(j)
                data.append(c)
        return sp.csr_matrix((data, (ri, ci)), shape=(self.n_rows, self.n_cols))

    def dump(self) -> str:
        """Stable text listing of columns, objective and rows."""
        names = self.index.names
        cfg = self.config
        out = [
            f"# grooming model robust={int(cfg.robust)} strict={int(cfg.strict)} "
            f"columns={self.n_cols} rows={self.n_rows}",
            "COLUMNS",
        ]
        for j, name in enumerate(names):
            kind = "binary" if self.index.keys[j][0] in BINARY_KINDS else "integer" if self.integer[j] else "continuous"
            out.append(f"  {name} {kind} [{_num(self.lower[j])}, {_num(self.upper[j])}]")
        out.append("OBJECTIVE minimize")
        for j in np.flatnonzero(self.objective):
            out.append(f"  {_num(self.objective[j])} {names[j]}")
        out.append("ROWS")
        for r in self.rows:
            lhs = " ".join(f"{'+' if c >= 0 else '-'}{_num(abs(c))} {names[j]}" for j, c in r.coeffs)
            out.append(f"  {r.label}: {lhs or '0'} {r.sense} {_num(r.rhs)}")
        return "\n".join(out) + "\n"


def _num(v: float) -> str:
    if np.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(float(v), ".9g")


def assemble_model(catalog: ChannelCatalog, demands: Sequence[Demand], config: GroomingConfig) -> GroomingModel:
    demands = list(demands)
    config.validate(len(demands))
    known = set(catalog.nodes)
    for dem in demands:
        if dem.src not in known or dem.dst not in known:
            raise InputError(f"demand {dem.id}: endpoint not in the catalog's node set")
    index = index_variables(catalog, demands, config)
    families = [
        build_capacity_and_robust_rows(index, catalog, demands, config),
        build_flow_rows(index, demands, catalog, config),
        build_switch_rows(index, demands, catalog, config),
        build_dwdm_rows(index, catalog),
        build_exclusivity_rows(index, demands, catalog, config),
        build_linking_rows(index, demands, catalog, config),
    ]
    rows: list[Row] = []
    warnings: list[str] = []
    eq17: list[Row] = []
    for fam in families:
        for r in fam:
            (eq17 if r.label.startswith("Eq17[") else rows).append(r)
        warnings.extend(fam.warnings)
    rows.extend(eq17)

    n = len(index)
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    integer = np.zeros(n, dtype=bool)
    for j, key in enumerate(index.keys):
        kind = key[0]
        if kind in ("y", "X", "Xi", "x", "xi"):
            upper[j] = 1.0
        integer[j] = kind in INTEGER_KINDS
    return GroomingModel(index, build_objective(index, config), rows, lower, upper, integer, catalog, demands, config, warnings)


def expected_counts(model: GroomingModel) -> dict[str, int]:
    """Closed-form row counts per family, for consistency checks."""
    cat, cfg = model.catalog, model.config
    n_o, n_n, n_d, n_r = len(cat.channels), len(cat.nodes), len(model.demands), cfg.backup_count
    counts = {
        "Eq4": n_o,
        "Eq5": n_d * n_n,
        "Eq6": n_d * n_r * n_n,
        "Eq7": n_d * n_n,
        "Eq8": n_d * n_r * n_n,
        "Eq9": sum(1 for users in cat.edge_channels.values() if users),
        "Eq10": n_d,
        "Eq11": n_d,
        "Eq12": n_d * (n_n - 2),
        "Eq13": n_d * n_o,
        "Eq14": n_d * n_o * n_r,
        "Eq15": n_d * n_o,
        "Eq16": n_d * n_o * n_r,
    }
    if cfg.strict:
        counts["StrictSrc"] = sum(len(cat.outgoing[d.src]) for d in model.demands)
        counts["StrictDst"] = sum(len(cat.incoming[d.dst]) for d in model.demands)
        counts["StrictNode"] = n_d * (n_n - 2)
    if cfg.robust:
        counts["Eq17"] = n_d * n_o
    return {k: v for k, v in counts.items() if v}


def expected_column_count(n_channels: int, n_nodes: int, n_demands: int, n_backups: int, robust: bool) -> int:
    cols = n_channels + n_nodes + n_demands * n_channels * (1 + n_backups) * 2
    if robust:
        cols += n_demands * n_channels + n_channels
    return cols
