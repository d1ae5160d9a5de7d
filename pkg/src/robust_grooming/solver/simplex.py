"""Bounded-variable primal simplex (revised form with an explicit basis inverse).

Solves ``min c @ x`` subject to ``A x (<=|=|>=) b`` and ``lower <= x <= upper``
with finite lower bounds. Entering columns are priced by Dantzig's rule; after a
run of degenerate pivots the method switches to Bland's smallest-index rule for
both entering and leaving choices, which rules out cycling, and returns to
Dantzig pricing once a pivot makes progress.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

logger = logging.getLogger(__name__)

PRIMAL_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-7
ACCEPT_PIVOT = 1e-5
RELATIVE_PIVOT = 1e-9
HARRIS_TOL = 1e-7
CANDIDATE_TRIES = 16
COST_PERTURBATION = 1e-6
DUAL_ITER_CAP = 2000
REFACTOR_EVERY = 80
DEGENERATE_STREAK = 50


@dataclass
class LPResult:
    status: str  # optimal | infeasible | unbounded | iteration-limit
    x: np.ndarray | None
    objective: float
    iterations: int
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    basis: np.ndarray | None = None
    at_upper: np.ndarray | None = None
    warm: "WarmStart | None" = None


@dataclass
class WarmStart:
    """Final basis of a solve, in the internal (scaled, standard-form) column space."""

    basis: np.ndarray
    at_upper: np.ndarray
    art_sign: np.ndarray  # sign of the unit artificial column of each row
    frozen: np.ndarray


class _Tableau:
    def __init__(self, A: sp.csc_matrix, b: np.ndarray, lower: np.ndarray, upper: np.ndarray):
        self.A = A
        self.AT = A.T.tocsr()
        self.b = b
        self.lower = lower
        self.upper = upper
        self.m, self.n = A.shape
        counts = np.diff(A.indptr)
        single = counts == 1
        self.unit_row = np.full(self.n, -1)
        self.unit_val = np.zeros(self.n)
        self.unit_row[single] = A.indices[A.indptr[:-1][single]]
        self.unit_val[single] = A.data[A.indptr[:-1][single]]

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        start, end = self.A.indptr[j], self.A.indptr[j + 1]
        return self.A.indices[start:end], self.A.data[start:end]


def _standard_form(A: sp.spmatrix, senses, b, lower, upper):
    """Append one slack column per inequality row."""
    m, n = A.shape
    slack_rows, slack_sign = [], []
    for k, s in enumerate(senses):
        if s == "<=":
            slack_rows.append(k)
            slack_sign.append(1.0)
        elif s == ">=":
            slack_rows.append(k)
            slack_sign.append(-1.0)
        elif s != "=":
            raise ValueError(f"unknown row sense {s!r}")
    ns = len(slack_rows)
    S = sp.csc_matrix((slack_sign, (slack_rows, np.arange(ns))), shape=(m, ns))
    A_ext = sp.hstack([sp.csc_matrix(A), S], format="csc")
    lo = np.concatenate([lower, np.zeros(ns)])
    up = np.concatenate([upper, np.full(ns, np.inf)])
    return A_ext, lo, up, np.array(slack_rows, dtype=int), np.array(slack_sign)


def equilibrate(A: sp.spmatrix, passes: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Power-of-two row and column factors bringing the nonzeros of ``R A S`` near 1."""
    M = abs(sp.csr_matrix(A, dtype=float))
    M.eliminate_zeros()
    row = np.ones(M.shape[0])
    col = np.ones(M.shape[1])
    for _ in range(passes):
        row /= np.sqrt(_extremes(sp.diags(row) @ M @ sp.diags(col), axis=1))
        col /= np.sqrt(_extremes(sp.diags(row) @ M @ sp.diags(col), axis=0))
    return 2.0 ** np.round(np.log2(row)), 2.0 ** np.round(np.log2(col))


def _extremes(S: sp.spmatrix, axis: int) -> np.ndarray:
    """Product of the largest and smallest nonzero magnitude per row/column (1 if empty)."""
    S = sp.csr_matrix(S)
    inv = S.copy()
    inv.data = 1.0 / inv.data
    big = S.max(axis=axis).toarray().ravel()
    small_inv = inv.max(axis=axis).toarray().ravel()
    out = np.ones_like(big)
    nz = big > 0
    out[nz] = big[nz] / small_inv[nz]
    return out


@dataclass
class Prepared:
    """Per-matrix work reused across solves that only change bounds."""

    row_scale: np.ndarray
    col_scale: np.ndarray
    keep_rows: np.ndarray  # rows passed to the simplex; the rest are dependent equalities
    scaled: sp.csc_matrix | None = None


def dependent_equalities(A: sp.spmatrix, senses) -> np.ndarray:
    """Indices of equality rows that are linear combinations of other equality rows."""
    eq = np.flatnonzero(np.asarray(senses) == "=")
    if eq.size == 0:
        return eq
    M = sp.csr_matrix(A)[eq].toarray()
    _, R, piv = scipy.linalg.qr(M.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(M.shape) * np.finfo(float).eps * (diag[0] if diag.size else 1.0) * 1e3
    rank = int(np.sum(diag > tol))
    return np.sort(eq[piv[rank:]])


def prepare(A: sp.spmatrix, senses) -> Prepared:
    row, col = equilibrate(A)
    dropped = dependent_equalities(A, senses)
    keep = np.setdiff1d(np.arange(A.shape[0]), dropped)
    scaled = sp.csc_matrix(sp.diags(row[keep]) @ sp.csr_matrix(A)[keep] @ sp.diags(col))
    return Prepared(row, col, keep, scaled)


def solve_lp(
    c: np.ndarray,
    A: sp.spmatrix,
    senses,
    b: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    max_iter: int = 50_000,
    rule: str = "dantzig",
    prepared: Prepared | None = None,
    warm: WarmStart | None = None,
) -> LPResult:
    """Solve a linear program with the two-phase bounded simplex method.

    Rows and columns are equilibrated and dependent equality rows set aside
    before solving; results are reported in the original units and the set-aside
    rows are re-checked on the returned point.

    Args:
        rule: ``"dantzig"`` (with the degenerate-run fallback to Bland) or
            ``"bland"`` to use the smallest-index rule throughout.
        prepared: output of :func:`prepare` for ``A``, to reuse across calls.
        warm: ``result.warm`` of an earlier solve with the same ``prepared``
            and only the column bounds changed; the dual simplex restarts from
            that basis, with a cold solve as the fallback.
    """
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    senses = np.asarray(senses)
    if np.any(~np.isfinite(lower)):
        raise ValueError("all lower bounds must be finite")
    if np.any(upper < lower - PRIMAL_TOL):
        return LPResult("infeasible", None, np.nan, 0)
    prep = prepared or prepare(A, senses)
    A = sp.csr_matrix(A)
    keep = prep.keep_rows
    row, col = prep.row_scale, prep.col_scale
    if prep.scaled is not None:
        As = prep.scaled
    else:
        As = sp.csc_matrix(sp.diags(row[keep]) @ A[keep] @ sp.diags(col))
    args = (c * col, As, senses[keep], b[keep] * row[keep], lower / col, upper / col, max_iter)
    start = warm if warm is not None else _slack_start(args[0], As.shape, senses[keep], args[5])
    res = None
    if start is not None:
        try:
            res = _solve_warm(*args, rule, start)
        except np.linalg.LinAlgError:
            res = None
    if res is None:
        res = _solve_cold(args, rule)
    if res.x is None:
        return res
    res.x = np.clip(res.x * col, lower, upper)
    res.objective = float(c @ res.x)
    dropped = np.setdiff1d(np.arange(A.shape[0]), keep)
    if dropped.size:
        resid = A[dropped] @ res.x - b[dropped]
        if np.max(np.abs(resid)) > 1e-6 * max(1.0, np.abs(b).max()):
            return LPResult("infeasible", None, np.nan, res.iterations)
    duals = np.zeros(A.shape[0])
    duals[keep] = res.duals * row[keep]
    res.duals = duals
    res.reduced_costs = res.reduced_costs / col
    return res


def _solve_cold(args, rule: str) -> LPResult:
    """Two-phase primal simplex, retried under the other pricing rule on numerical failure."""
    for attempt in (rule, "bland" if rule == "dantzig" else "dantzig"):
        try:
            return _solve(*args, attempt)
        except np.linalg.LinAlgError:
            logger.debug("numerical failure under %s pricing", attempt)
    return LPResult("numerical-failure", None, np.nan, 0)


def _slack_start(c: np.ndarray, shape: tuple[int, int], senses, upper: np.ndarray) -> WarmStart | None:
    """Slack/artificial basis with every column at the bound its cost prefers.

    It is dual feasible whenever no column with negative cost is unbounded
    above, which holds for the grooming models (nonnegative costs).
    """
    m, n = shape
    neg = c < 0
    if np.any(neg & ~np.isfinite(upper)):
        return None
    ineq = np.flatnonzero(np.asarray(senses) != "=")
    n_ext = n + ineq.size
    basis = n_ext + np.arange(m)
    basis[ineq] = n + np.arange(ineq.size)
    at_upper = np.zeros(n_ext + m, dtype=bool)
    at_upper[:n] = neg
    return WarmStart(basis, at_upper, np.ones(m), np.zeros(m, dtype=bool))


def _solve(c, A, senses, b, lower, upper, max_iter, rule) -> LPResult:
    m, n = A.shape
    A_ext, lo, up, slack_rows, slack_sign = _standard_form(A, senses, b, lower, upper)
    n_ext = A_ext.shape[1]

    # start with every column at its lower bound
    x = lo.copy()
    resid = b - A_ext @ x
    basis = np.full(m, -1, dtype=int)
    slack_of_row = {int(r): n + k for k, r in enumerate(slack_rows)}
    art_rows, art_sign = [], []
    for r in range(m):
        j = slack_of_row.get(r)
        if j is not None:
            sign = slack_sign[j - n]
            if resid[r] * sign >= 0:
                basis[r] = j
                x[j] = resid[r] * sign
                continue
        art_rows.append(r)
        art_sign.append(1.0 if resid[r] >= 0 else -1.0)
    art_sign_used = np.array(art_sign)
    na = len(art_rows)
    if na:
        Art = sp.csc_matrix((art_sign, (art_rows, np.arange(na))), shape=(m, na))
        A_full = sp.hstack([A_ext, Art], format="csc")
    else:
        A_full = A_ext
    lo_full = np.concatenate([lo, np.zeros(na)])
    up_full = np.concatenate([up, np.full(na, np.inf)])
    x_full = np.concatenate([x, np.abs(resid[art_rows]) if na else np.zeros(0)])
    for k, r in enumerate(art_rows):
        basis[r] = n_ext + k
    at_upper = np.zeros(n_ext + na, dtype=bool)

    tab = _Tableau(A_full, b, lo_full, up_full)
    state = _State(tab, basis, x_full, at_upper)
    state.art_rows = np.array(art_rows, dtype=int)
    iterations = 0
    if na:
        c1 = np.zeros(n_ext + na)
        c1[n_ext:] = 1.0
        status, it = state.run(c1, max_iter, rule)
        iterations += it
        if status == "iteration-limit":
            return LPResult(status, None, np.nan, iterations)
        state.refactor()
        if np.sum(state.x[n_ext:]) > 1e-7 * max(1.0, np.abs(b).max(initial=0.0)):
            return LPResult("infeasible", None, np.nan, iterations)
        # artificials may stay basic, but only at zero
        tab.upper[n_ext:] = 0.0
        state.x[n_ext:] = 0.0
        state.at_upper[n_ext:] = False
        state.drive_out_artificials(n_ext)
    c2 = np.concatenate([c, np.zeros(n_ext + na - n)])
    status, it = state.run(c2, max_iter - iterations, rule)
    iterations += it
    if status != "optimal":
        return LPResult(status, None, np.nan, iterations)
    art_sign = np.ones(m)
    art_sign[art_rows] = art_sign_used
    return _finish(state, c, c2, n, n_ext, iterations, lower, upper, art_sign)


def _finish(state, c, c2, n, n_ext, iterations, lower, upper, art_sign) -> LPResult:
    tab = state.tab
    state.refactor()
    if state.primal_violation() > HARRIS_TOL:
        # drift over a long run; the final basis is dual feasible, so the
        # dual simplex restores primal feasibility from it
        status, it = state.dual_run(c2, DUAL_ITER_CAP + 20 * tab.m)
        iterations += it
        if status == "feasible":
            status, it = state.run(c2, DUAL_ITER_CAP + 20 * tab.m, "dantzig")
            iterations += it
            state.refactor()
        if status != "optimal" or state.primal_violation() > HARRIS_TOL:
            raise np.linalg.LinAlgError("basic solution drifted out of bounds")
    xs = state.x[:n].copy()
    xs = np.clip(xs, lower, upper)
    y = c2[state.basis] @ state.Binv
    d = c2 - tab.AT @ y
    # canonical token: one artificial column per row
    basis = state.basis.copy()
    m = tab.m
    art_map = np.full(tab.n, -1)
    art_map[:n_ext] = np.arange(n_ext)
    art_map[n_ext:] = n_ext + state.art_rows
    basis = art_map[basis]
    at_upper = np.zeros(n_ext + m, dtype=bool)
    at_upper[:n_ext] = state.at_upper[:n_ext]
    warm = WarmStart(basis, at_upper, art_sign, state.frozen.copy())
    return LPResult(
        "optimal",
        xs,
        float(c @ xs),
        iterations,
        duals=y,
        reduced_costs=d[:n],
        basis=state.basis.copy(),
        at_upper=state.at_upper[:n].copy(),
        warm=warm,
    )


def _solve_warm(c, A, senses, b, lower, upper, max_iter, rule, warm: WarmStart) -> LPResult | None:
    """Dual simplex from a basis that is dual feasible for the new bounds."""
    m, n = A.shape
    A_ext, lo, up, _, _ = _standard_form(A, senses, b, lower, upper)
    n_ext = A_ext.shape[1]
    if warm.basis.shape != (m,) or warm.at_upper.shape != (n_ext + m,):
        return None
    Art = sp.csc_matrix((warm.art_sign, (np.arange(m), np.arange(m))), shape=(m, m))
    A_full = sp.hstack([A_ext, Art], format="csc")
    lo_full = np.concatenate([lo, np.zeros(m)])
    up_full = np.concatenate([up, np.zeros(m)])
    at_upper = warm.at_upper & np.isfinite(up_full)
    x = np.where(at_upper, up_full, lo_full)
    tab = _Tableau(A_full, b, lo_full, up_full)
    state = _State(tab, warm.basis.copy(), x, at_upper)
    state.frozen = warm.frozen.copy()
    state.art_rows = np.arange(m)
    c2 = np.concatenate([c, np.zeros(n_ext + m - n)])
    # most costs are zero, so dual steps stall; a small deterministic
    # perturbation of the nonbasic costs makes every dual step strictly positive
    rng = np.random.default_rng(len(c2))
    eps = COST_PERTURBATION * (1.0 + np.abs(c2)) * rng.uniform(0.5, 1.0, c2.size)
    cp = c2 + np.where(state.at_upper, -eps, eps) * ~state.is_basic
    status, it = state.dual_run(cp, min(max_iter, DUAL_ITER_CAP + 20 * m))
    if status != "feasible":
        return LPResult(status, None, np.nan, it) if status == "infeasible" else None
    status, it2 = state.run(c2, max_iter - it, rule)
    if status != "optimal":
        return None
    return _finish(state, c, c2, n, n_ext, it + it2, lower, upper, warm.art_sign)


def _basis_inverse(tab: _Tableau, basis: np.ndarray) -> np.ndarray:
    """Explicit inverse of the basis matrix, rows ordered by basis position.

    Singleton columns (slacks, artificials) make the basis block triangular,
    so only the square block of the remaining columns on the rows those
    singletons leave uncovered is inverted densely.
    """
    m = tab.m
    ur = tab.unit_row[basis]
    pos_u = np.flatnonzero(ur >= 0)
    rows_u = ur[pos_u]
    pos_s = np.flatnonzero(ur < 0)
    covered = np.zeros(m, dtype=bool)
    covered[rows_u] = True
    rows_s = np.flatnonzero(~covered)
    if np.unique(rows_u).size != rows_u.size or rows_s.size != pos_s.size:
        # two singletons on one row: the basis is singular; let inv report it
        return np.linalg.inv(tab.A[:, basis].toarray())
    Bs = tab.A[:, basis[pos_s]]
    Ns_inv = np.linalg.inv(Bs[rows_s].toarray()) if pos_s.size else np.zeros((0, 0))
    inv_s = 1.0 / tab.unit_val[basis[pos_u]]
    Binv = np.zeros((m, m))
    Binv[np.ix_(pos_s, rows_s)] = Ns_inv
    Binv[pos_u, rows_u] = inv_s
    if pos_s.size:
        Binv[np.ix_(pos_u, rows_s)] = -(inv_s[:, None] * (Bs[rows_u] @ Ns_inv))
    return Binv


def _rank_one_update(Binv: np.ndarray, alpha: np.ndarray, r: int) -> None:
    """Replace basis position ``r`` in place: the product-form (eta) update."""
    row_r = Binv[r] / alpha[r]
    # Binv -= outer(alpha, row_r), done by BLAS on the Fortran view
    scipy.linalg.blas.dger(-1.0, row_r, alpha, a=Binv.T, overwrite_a=True)
    Binv[r] = row_r


class _State:
    """Basis, basic-variable values and nonbasic bound positions."""

    def __init__(self, tab: _Tableau, basis: np.ndarray, x: np.ndarray, at_upper: np.ndarray):
        self.tab = tab
        self.basis = basis
        self.x = x
        self.at_upper = at_upper
        self.is_basic = np.zeros(tab.n, dtype=bool)
        self.is_basic[basis] = True
        self.frozen = np.zeros(tab.m, dtype=bool)
        self.refactor()

    def drive_out_artificials(self, first_art: int) -> None:
        """Pivot zero-level artificials out of the basis where a usable pivot exists.

        Rows where none exists are linear combinations of other rows; their
        artificial stays basic and the row is excluded from later ratio tests.
        """
        tab = self.tab
        for r in range(tab.m):
            if self.basis[r] < first_art:
                continue
            row = tab.AT[:first_art] @ self.Binv[r]
            row[self.is_basic[:first_art]] = 0.0
            j = int(np.argmax(np.abs(row))) if row.size else 0
            if row.size == 0 or abs(row[j]) < 1e-6:
                self.frozen[r] = True
                continue
            rows, vals = tab.column(j)
            alpha = self.Binv[:, rows] @ vals
            leaving = self.basis[r]
            self.is_basic[leaving] = False
            self.is_basic[j] = True
            self.basis[r] = j
            self.at_upper[j] = False
            _rank_one_update(self.Binv, alpha, r)
        self.refactor()

    def refactor(self) -> None:
        tab = self.tab
        self.Binv = _basis_inverse(tab, self.basis)
        nonbasic = ~self.is_basic
        xn = np.where(nonbasic, self.x, 0.0)
        self.x[self.basis] = self.Binv @ (tab.b - tab.A @ xn)
        self.since_refactor = 0

    def _ratio_test(self, q: int, increasing: bool, bland: bool):
        tab = self.tab
        lo, up = tab.lower, tab.upper
        direction = 1.0 if increasing else -1.0
        rows, vals = tab.column(q)
        alpha = self.Binv[:, rows] @ vals
        delta = direction * alpha
        xb = self.x[self.basis]
        lb_b, ub_b = lo[self.basis], up[self.basis]
        ratios = np.full(tab.m, np.inf)
        relaxed = np.full(tab.m, np.inf)
        tiny = max(PIVOT_TOL, RELATIVE_PIVOT * np.abs(alpha).max(initial=0.0))
        dec = (delta > tiny) & ~self.frozen
        inc = (delta < -tiny) & ~self.frozen
        ratios[dec] = (xb[dec] - lb_b[dec]) / delta[dec]
        relaxed[dec] = (xb[dec] - lb_b[dec] + HARRIS_TOL) / delta[dec]
        with np.errstate(invalid="ignore"):
            ratios[inc] = (ub_b[inc] - xb[inc]) / (-delta[inc])
            relaxed[inc] = (ub_b[inc] - xb[inc] + HARRIS_TOL) / (-delta[inc])
        ratios = np.maximum(ratios, 0.0)
        relaxed = np.maximum(relaxed, 0.0)
        t_flip = up[q] - lo[q]
        t_min = ratios.min() if tab.m else np.inf
        if t_flip <= t_min:
            kind = "flip" if np.isfinite(t_flip) else "unbounded"
            return kind, -1, t_flip, alpha, delta, direction
        # Harris pass: rows blocking within the relaxed step
        ties = np.flatnonzero(ratios <= relaxed.min())
        size = np.abs(alpha[ties])
        if bland:
            ok = ties[size >= 1e-2 * size.max()]
            r = int(ok[np.argmin(self.basis[ok])])
        else:
            r = int(ties[np.argmax(size)])
        return "pivot", r, float(ratios[r]), alpha, delta, direction

    def primal_violation(self) -> float:
        xb = self.x[self.basis]
        lo, up = self.tab.lower[self.basis], self.tab.upper[self.basis]
        viol = np.maximum(lo - xb, xb - up)
        viol[self.frozen] = 0.0
        return float(viol.max(initial=0.0))

    def dual_run(self, cost: np.ndarray, max_iter: int) -> tuple[str, int]:
        """Bounded dual simplex: restore primal feasibility while keeping dual feasibility.

        Returns ``"feasible"`` once every basic value is within its bounds,
        ``"infeasible"`` when a row proves the bounds inconsistent, or
        ``"dual-infeasible"`` / ``"iteration-limit"`` when the caller should
        fall back to a cold solve.
        """
        tab = self.tab
        lo, up = tab.lower, tab.upper
        movable = up > lo
        for it in range(max_iter):
            xb = self.x[self.basis]
            below = lo[self.basis] - xb
            above = xb - up[self.basis]
            infeas = np.maximum(below, above)
            infeas[self.frozen] = 0.0
            r = int(np.argmax(infeas))
            if infeas[r] <= HARRIS_TOL:
                return "feasible", it
            y = cost[self.basis] @ self.Binv
            d = cost - tab.AT @ y
            nonbasic = ~self.is_basic & movable
            # small sign errors are left for the primal cleanup that follows
            if np.any(nonbasic & ~self.at_upper & (d < -1e-5)) or np.any(nonbasic & self.at_upper & (d > 1e-5)):
                return "dual-infeasible", it
            rho = self.Binv[r]
            row = tab.AT @ rho
            to_lower = below[r] > 0
            # columns whose move pushes the leaving value toward its violated bound
            sign = -1.0 if to_lower else 1.0
            cand = nonbasic & (
                (~self.at_upper & (sign * row > PIVOT_TOL)) | (self.at_upper & (sign * row < -PIVOT_TOL))
            )
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return "infeasible", it
            dj = np.abs(d[idx])
            aj = np.abs(row[idx])
            ratios = np.maximum(dj, 0.0) / aj
            relaxed = (np.maximum(dj, 0.0) + DUAL_TOL) / aj
            ties = idx[ratios <= relaxed.min()]
            q = int(ties[np.argmax(np.abs(row[ties]))])
            rows_q, vals_q = tab.column(q)
            alpha = self.Binv[:, rows_q] @ vals_q
            piv = alpha[r]
            if abs(piv) < PIVOT_TOL:
                return "dual-infeasible", it
            leaving = self.basis[r]
            target = lo[leaving] if to_lower else up[leaving]
            t = (xb[r] - target) / piv
            self.x[self.basis] = xb - t * alpha
            self.x[q] += t
            self.x[leaving] = target
            self.at_upper[leaving] = not to_lower
            self.at_upper[q] = False
            self.is_basic[leaving] = False
            self.is_basic[q] = True
            self.basis[r] = q
            _rank_one_update(self.Binv, alpha, r)
            self.since_refactor += 1
            if abs(piv) < ACCEPT_PIVOT * max(1.0, np.abs(alpha).max()) or self.since_refactor >= REFACTOR_EVERY:
                self.refactor()
        return "iteration-limit", max_iter

    def run(self, cost: np.ndarray, max_iter: int, rule: str) -> tuple[str, int]:
        tab = self.tab
        lo, up = tab.lower, tab.upper
        movable = up > lo
        streak = 0
        for it in range(max_iter):
            y = cost[self.basis] @ self.Binv
            d = cost - tab.AT @ y
            can_inc = ~self.is_basic & ~self.at_upper & movable & (d < -DUAL_TOL)
            can_dec = ~self.is_basic & self.at_upper & movable & (d > DUAL_TOL)
            eligible = can_inc | can_dec
            if not eligible.any():
                return "optimal", it
            bland = rule == "bland" or streak >= DEGENERATE_STREAK
            cand = np.flatnonzero(eligible)
            if not bland:
                cand = cand[np.argsort(-np.abs(d[cand]), kind="stable")]
            # try candidates in pricing order until one offers a stable pivot
            fallback = None
            for q in cand[: 1 if bland else CANDIDATE_TRIES]:
                q = int(q)
                step = self._ratio_test(q, can_inc[q], bland)
                if step[0] != "pivot":
                    break
                quality = abs(step[3][step[1]]) / max(1.0, np.abs(step[3]).max())
                if quality >= ACCEPT_PIVOT:
                    break
                if fallback is None or quality > fallback[0]:
                    fallback = (quality, q, step)
            else:
                _, q, step = fallback
            kind, r, t, alpha, delta, direction = step
            shaky = kind == "pivot" and abs(alpha[r]) < ACCEPT_PIVOT * max(1.0, np.abs(alpha).max())
            if kind == "unbounded":
                return "unbounded", it
            xb = self.x[self.basis]
            if kind == "flip":
                self.x[self.basis] = xb - t * delta
                self.at_upper[q] = not self.at_upper[q]
                self.x[q] = up[q] if self.at_upper[q] else lo[q]
                streak = 0 if t > PRIMAL_TOL else streak + 1
                continue
            leaving = self.basis[r]
            self.x[self.basis] = xb - t * delta
            self.x[q] = (lo[q] + t) if direction > 0 else (up[q] - t)
            self.at_upper[leaving] = bool(delta[r] < 0)
            self.x[leaving] = up[leaving] if self.at_upper[leaving] else lo[leaving]
            self.at_upper[q] = False
            self.is_basic[leaving] = False
            self.is_basic[q] = True
            self.basis[r] = q
            piv = alpha[r]
            _rank_one_update(self.Binv, alpha, r)
            self.since_refactor += 1
            if shaky or self.since_refactor >= REFACTOR_EVERY:
                self.refactor()
            streak = 0 if t > PRIMAL_TOL else streak + 1
        return "iteration-limit", max_iter
