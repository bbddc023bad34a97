"""Brute-force references for cross-checking the solver code.

Nothing here calls :mod:`cflplcr.capture`; capture values come from direct
subset enumeration in original facility order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .instance import CustomerView, Instance
from .kernels import enum_objective, enum_phi

MAX_BRUTE_N = 22
VALID_TOL = 1e-9
TIGHT_TOL = 1e-9
RANK_PIVOT = 1e-7


class OracleLimitError(ValueError):
    pass


def _mask_of(S) -> int:
    m = 0
    for j in S:
        m |= 1 << int(j)
    return m


def _set_of(mask: int, n: int) -> tuple:
    return tuple(j for j in range(n) if (mask >> j) & 1)


def objective_table(inst: Instance) -> np.ndarray:
    if inst.n > MAX_BRUTE_N:
        raise OracleLimitError(f"n={inst.n} exceeds the enumeration guard {MAX_BRUTE_N}")
    return enum_objective(inst.u, inst.u0, inst.gamma, inst.b, inst.f)


def brute_optimum(inst: Instance) -> tuple:
    """Best objective and its set (facility ids); ties go to the lexicographically smallest set."""
    vals = objective_table(inst)
    best = vals.max()
    ties = [_set_of(int(k), inst.n) for k in np.flatnonzero(vals == best)]
    return float(best), min(ties)


def evaluate(inst: Instance, S, table: np.ndarray | None = None) -> float:
    """Objective of facility set S, read from the same enumeration as ``brute_optimum``."""
    table = objective_table(inst) if table is None else table
    return float(table[_mask_of(S)])


def original_utilities(view: CustomerView) -> np.ndarray:
    u = np.empty(view.n)
    u[view.perm] = view.u_sorted[: view.n]
    return u


def brute_phi(view: CustomerView, S) -> float:
    """Inner maximum over all subsets of S (sorted positions) with at most gamma members."""
    us = view.u_sorted
    S = list(S)
    if len(S) > MAX_BRUTE_N:
        raise OracleLimitError("set too large to enumerate")
    best = 0.0
    for r in range(1, min(view.gamma, len(S)) + 1):
        for sub in itertools.combinations(S, r):
            v = sum(us[j] for j in sub)
            best = max(best, v / (v + view.u0))
    return best


def brute_lift(c) -> float:
    """Enumerate the canonical lifting problem directly."""
    u = np.concatenate([c.priced_u, c.free_u])
    a = np.concatenate([c.priced_a, np.zeros(c.free_u.shape[0])])
    p = u.shape[0]
    if p > 20:
        raise OracleLimitError("too many items to enumerate")
    best = -np.inf
    for r in range(0, min(c.gamma, p) + 1):
        for sub in itertools.combinations(range(p), r):
            v = sum(u[j] for j in sub)
            val = v / (v + c.u0) - sum(a[j] for j in sub)
            best = max(best, val)
    return float(best) + c.offset


def phi_table(view: CustomerView) -> np.ndarray:
    """Capture value per subset mask over original facility ids."""
    return enum_phi(original_utilities(view), view.u0, view.gamma)


def _row_values(row, n: int) -> np.ndarray:
    masks = np.arange(1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64)
    return row.alpha0 + bits @ row.dense(n)


@dataclass
class Certificate:
    valid: bool
    witness: tuple = ()       # facility ids of a violating set
    worst: float = 0.0        # largest phi - rhs over all sets


def certify_valid(view: CustomerView, row, tol: float = VALID_TOL) -> Certificate:
    n = view.n
    if n > MAX_BRUTE_N:
        raise OracleLimitError("n too large to certify")
    gap = phi_table(view) - _row_values(row, n)
    k = int(np.argmax(gap))
    ok = bool(gap[k] <= tol)
    return Certificate(valid=ok, witness=() if ok else _set_of(k, n), worst=float(gap[k]))


def tight_points(view: CustomerView, row, tol: float = TIGHT_TOL) -> np.ndarray:
    n = view.n
    phis = phi_table(view)
    gap = _row_values(row, n) - phis
    masks = np.flatnonzero(np.abs(gap) <= tol)
    pts = np.zeros((masks.shape[0], n + 1))
    pts[:, 0] = phis[masks]
    pts[:, 1:] = (masks[:, None] >> np.arange(n)[None, :]) & 1
    return pts


def matrix_rank(M: np.ndarray, pivot: float = RANK_PIVOT) -> int:
    """Rank by Gaussian elimination with partial pivoting."""
    A = np.array(M, dtype=np.float64, copy=True)
    rows, cols = A.shape
    r = 0
    for col in range(cols):
        if r == rows:
            break
        k = r + int(np.argmax(np.abs(A[r:, col])))
        if abs(A[k, col]) <= pivot:
            continue
        A[[r, k]] = A[[k, r]]
        A[r + 1:] -= np.outer(A[r + 1:, col] / A[r, col], A[r])
        r += 1
    return r


def facet_rank(view: CustomerView, row) -> int:
    """Number of affinely independent tight points of the row."""
    pts = tight_points(view, row)
    if pts.shape[0] == 0:
        return 0
    return matrix_rank(np.hstack([np.ones((pts.shape[0], 1)), pts]))


def hull_probe_gamma1(view: CustomerView, trials: int, seed: int = 0, tol: float = 1e-9) -> bool:
    return hull_probe_report(view, trials, seed, tol)[0]


def hull_probe_report(view: CustomerView, trials: int, seed: int = 0, tol: float = 1e-9) -> tuple:
    """Compare the LP over the single-choice rows with the discrete maximum.

    Rows are rebuilt here from the utilities (not taken from :mod:`cuts`).
    Returns ``(all_ok, worst_abs_difference)``.
    """
    if view.gamma != 1:
        raise ValueError("probe needs gamma = 1")
    n = view.n
    u = original_utilities(view)
    h = u / (u + view.u0)
    hs = np.sort(h)[::-1]
    thresholds = np.append(hs[1:], 0.0)          # h(u_{l+1}) for l = 1..n
    A = np.zeros((n, n + 1))
    A[:, 0] = 1.0
    A[:, 1:] = -np.maximum(h[None, :] - thresholds[:, None], 0.0)
    rhs = thresholds
    phis = phi_table(view)
    masks = np.arange(1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64)
    rng = np.random.default_rng(seed)
    worst = 0.0
    bounds = [(None, None)] + [(0.0, 1.0)] * n
    opts = dict(primal_feasibility_tolerance=1e-10, dual_feasibility_tolerance=1e-10)
    for _ in range(trials):
        beta = rng.uniform(0.0, 1.0)
        cvec = rng.uniform(-1.0, 1.0, n)
        disc = float(np.max(beta * phis + bits @ cvec))
        if beta == 0.0:
            lp_val = float(np.maximum(cvec, 0.0).sum())
        else:
            res = linprog(-np.concatenate([[beta], cvec]), A_ub=A, b_ub=rhs, bounds=bounds,
                          method="highs-ds", options=opts)
            if res.status != 0:
                return False, float("inf")
            lp_val = -float(res.fun)
        worst = max(worst, abs(lp_val - disc))
    return worst <= tol, worst


def raw_si_values(view: CustomerView, S) -> tuple:
    """Unsimplified first-family row for sorted-position set S: (alpha0, sorted-space coefficients)."""
    phis = _sorted_phi(view)
    n = view.n
    full = (1 << n) - 1
    mS = _mask_of(S)
    a = np.zeros(n)
    for j in range(n):
        if (mS >> j) & 1:
            a[j] = phis[full] - phis[full & ~(1 << j)]
        else:
            a[j] = phis[mS | (1 << j)] - phis[mS]
    alpha0 = phis[mS] - sum(a[j] for j in S)
    return alpha0, a


def raw_sibar_values(view: CustomerView, S) -> tuple:
    """Unsimplified second-family row for sorted-position set S."""
    phis = _sorted_phi(view)
    n = view.n
    mS = _mask_of(S)
    a = np.zeros(n)
    for j in range(n):
        if (mS >> j) & 1:
            a[j] = phis[mS] - phis[mS & ~(1 << j)]
        else:
            a[j] = phis[1 << j] - phis[0]
    alpha0 = phis[mS] - sum(a[j] for j in S)
    return alpha0, a


def _sorted_phi(view: CustomerView) -> np.ndarray:
    return enum_phi(np.asarray(view.u_sorted[: view.n]), view.u0, view.gamma)


# --------------------------------------------------------------------------
# dense tableau simplex, reference for the LP core


def tableau_lp(c, A, beta, lo, hi) -> tuple:
    """``max c.z  s.t.  A z <= beta, lo <= z <= hi`` by a two-phase dense tableau with Bland's rule.

    Returns ``(status, objective, z)``.
    """
    c = np.asarray(c, dtype=np.float64)
    A = np.atleast_2d(np.asarray(A, dtype=np.float64)).reshape(-1, c.shape[0])
    beta = np.asarray(beta, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    nv = c.shape[0]
    # shift z = lo + y, add y <= hi - lo as rows
    G = np.vstack([A, np.eye(nv)])
    h = np.concatenate([beta - A @ lo, hi - lo])
    rows = G.shape[0]
    # make rhs nonnegative; rows with negative rhs get an artificial
    sign = np.where(h < 0, -1.0, 1.0)
    T_A = G * sign[:, None]
    slack = np.diag(sign)
    art_rows = np.flatnonzero(h < 0)
    art = np.zeros((rows, art_rows.shape[0]))
    art[art_rows, np.arange(art_rows.shape[0])] = 1.0
    T = np.hstack([T_A, slack, art, (h * sign)[:, None]])
    ncol = T.shape[1] - 1
    basis = []
    for r in range(rows):
        basis.append(nv + rows + list(art_rows).index(r) if r in art_rows else nv + r)
    n_art = art_rows.shape[0]

    def run(obj, allowed):
        nonlocal T
        for _ in range(50000):
            red = obj - obj[basis] @ T[:, :ncol]
            enter = next((j for j in range(ncol) if allowed[j] and red[j] > 1e-11), None)
            if enter is None:
                return "optimal"
            col = T[:, enter]
            ratios = [(T[r, -1] / col[r], basis[r], r) for r in range(rows) if col[r] > 1e-11]
            if not ratios:
                return "unbounded"
            _, _, r = min(ratios)
            T[r] /= T[r, enter]
            for k in range(rows):
                if k != r and T[k, enter] != 0.0:
                    T[k] -= T[k, enter] * T[r]
            basis[r] = enter
        return "limit"

    allowed = np.ones(ncol, dtype=bool)
    if n_art:
        obj1 = np.zeros(ncol)
        obj1[nv + rows:] = -1.0
        run(obj1, allowed)
        if -obj1[basis] @ T[:, -1] < -1e-9 or any(b >= nv + rows and T[r, -1] > 1e-9 for r, b in enumerate(basis)):
            return "infeasible", float("nan"), None
        allowed[nv + rows:] = False
        # drive zero-level artificials out of the basis
        for r, b in enumerate(basis):
            if b >= nv + rows:
                piv = next((j for j in range(nv + rows) if abs(T[r, j]) > 1e-9), None)
                if piv is None:
                    continue  # redundant row
                T[r] /= T[r, piv]
                for k in range(rows):
                    if k != r and T[k, piv] != 0.0:
                        T[k] -= T[k, piv] * T[r]
                basis[r] = piv
    obj2 = np.zeros(ncol)
    obj2[:nv] = c
    status = run(obj2, allowed)
    if status != "optimal":
        return status, float("nan"), None
    y = np.zeros(ncol)
    for r, b in enumerate(basis):
        y[b] = T[r, -1]
    z = lo + y[:nv]
    return "optimal", float(c @ z), z
