"""Exact LP-based branch-and-bound for desk-scale models.

Node order is best-first on the LP bound (deeper node first on ties; with an
integral objective the bound is rounded up first, so equal levels tie), the
branching column is the most fractional integer column (lowest index on ties),
and each child LP restarts the dual simplex from its parent's optimal basis.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import ModelSizeError
from ..milp import GroomingModel
from .simplex import prepare, solve_lp
from .solution import GroomingSolution

logger = logging.getLogger(__name__)

INT_TOL = 1e-5
DEFAULT_COLUMN_CAP = 5000


@dataclass
class Limits:
    time_s: float = 60.0
    nodes: int = 200_000


@dataclass(order=True)
class _Node:
    bound: float
    neg_depth: int
    seq: int
    changes: tuple = ()  # ((col, new_lower, new_upper), ...) from the root
    branch_col: int = -1
    branch_value: float = 0.0
    warm: object = field(default=None, compare=False)


def _objective_is_integral(model: GroomingModel) -> bool:
    c = model.objective
    nz = np.flatnonzero(c)
    return bool(np.all(model.integer[nz]) and np.allclose(c[nz], np.rint(c[nz])))


def _most_fractional(x: np.ndarray, int_cols: np.ndarray) -> int | None:
    vals = x[int_cols]
    frac = vals - np.floor(vals)
    score = np.minimum(frac, 1.0 - frac)
    k = int(np.argmax(score))
    if score[k] <= INT_TOL:
        return None
    return int(int_cols[k])


def implied_rows(model: GroomingModel) -> tuple[sp.csr_matrix, list[str], np.ndarray]:
    """Rows ``theta_c - X_{c,d,r} >= 0`` valid for every integer solution.

    A selected indicator forces a positive flow (linking rows), a positive flow
    puts positive load on the channel (all nominals are positive), and an integer
    channel count covering positive load is at least one. The LP relaxation of
    the bare model lets ``theta`` shrink to a sliver of a channel, so these rows
    tighten bounds a great deal without cutting off any integer point.
    """
    index, cfg = model.index, model.config
    weights = (1.0,) + tuple(cfg.mu)
    rows, cols, vals = [], [], []
    k = 0
    for ch in model.catalog.channels:
        theta = index.get(("theta", ch.key))
        for d in range(len(model.demands)):
            for role in range(cfg.backup_count + 1):
                ind = index.indicator(ch.key, d, role)
                if ind is None or weights[role] <= 0:
                    continue
                rows += [k, k]
                cols += [theta, ind]
                vals += [1.0, -1.0]
                k += 1
    A = sp.csr_matrix((vals, (rows, cols)), shape=(k, model.n_cols))
    return A, [">="] * k, np.zeros(k)


def solve_builtin(
    model: GroomingModel,
    limits: Limits | None = None,
    column_cap: int = DEFAULT_COLUMN_CAP,
    rule: str = "dantzig",
    implied: bool = True,
) -> GroomingSolution:
    limits = limits or Limits()
    if model.n_cols > column_cap:
        raise ModelSizeError(
            f"model has {model.n_cols} columns, above the built-in cap of {column_cap}; export to MPS instead"
        )
    start = time.perf_counter()
    A = model.matrix()
    senses = [r.sense for r in model.rows]
    b = np.array([r.rhs for r in model.rows])
    if implied:
        extra, extra_senses, extra_b = implied_rows(model)
        A = sp.vstack([A, extra], format="csr")
        senses = senses + extra_senses
        b = np.concatenate([b, extra_b])
    c = model.objective
    int_cols = np.flatnonzero(model.integer)
    integral_obj = _objective_is_integral(model)
    prepared = prepare(A, senses)

    def effective(bound: float) -> float:
        return math.ceil(bound - 1e-6) if integral_obj else bound

    def relax(changes, warm):
        lo, up = model.lower.copy(), model.upper.copy()
        for col, nlo, nup in changes:
            lo[col], up[col] = nlo, nup
        return solve_lp(c, A, senses, b, lo, up, rule=rule, prepared=prepared, warm=warm)

    best_x: np.ndarray | None = None
    best_obj = math.inf
    counter = itertools.count()
    n_nodes = 0
    hit_limit = False

    def consider(changes, depth, warm=None) -> str:
        nonlocal best_x, best_obj, n_nodes
        n_nodes += 1
        res = relax(changes, warm)
        if res.status != "optimal":
            return res.status
        x, obj = res.x, res.objective
        if effective(obj) >= best_obj - 1e-9:
            return "pruned"
        col = _most_fractional(x, int_cols)
        if col is None:
            best_x, best_obj = x, obj
            logger.debug("incumbent %.6g at node %d", obj, n_nodes)
            return "integral"
        heapq.heappush(heap, _Node(effective(obj), -depth, next(counter), changes, col, float(x[col]), res.warm))
        return "branched"

    heap: list[_Node] = []
    root = consider((), 0)
    if root in ("infeasible", "unbounded"):
        return GroomingSolution(None, math.nan, root, "builtin-bnb", time.perf_counter() - start, n_nodes)
    if root == "iteration-limit":
        hit_limit = True

    while heap:
        if time.perf_counter() - start > limits.time_s or n_nodes >= limits.nodes:
            hit_limit = True
            break
        node = heapq.heappop(heap)
        if effective(node.bound) >= best_obj - 1e-9:
            continue
        col, v = node.branch_col, node.branch_value
        lo, up = model.lower[col], model.upper[col]
        for ccol, nlo, nup in node.changes:
            if ccol == col:
                lo, up = nlo, nup
        depth = -node.neg_depth + 1
        down = node.changes + ((col, lo, math.floor(v)),)
        upc = node.changes + ((col, math.ceil(v), up),)
        for child in (down, upc):
            if consider(child, depth, node.warm) == "iteration-limit":
                hit_limit = True

    elapsed = time.perf_counter() - start
    if best_x is None:
        status = "limit-reached" if hit_limit else "infeasible"
        return GroomingSolution(None, math.nan, status, "builtin-bnb", elapsed, n_nodes)
    values = best_x.copy()
    values[int_cols] = np.rint(values[int_cols])
    status = "limit-reached" if hit_limit else "optimal"
    return GroomingSolution(values, float(c @ values), status, "builtin-bnb", elapsed, n_nodes)
