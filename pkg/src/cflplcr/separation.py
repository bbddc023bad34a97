"""Finding violated rows for one customer at an LP point.

Points arrive in original facility order; all set logic runs in the
customer's sorted positions.  Ties in any ordering go to the smaller
sorted position (stable sorts throughout).
"""
from __future__ import annotations

import math

import numpy as np

from . import capture as cap
from . import cuts
from .instance import CustomerView
from .lifting import lift_down, lift_up

FRAC_TOL = 1e-6       # violation needed to accept a cut at a fractional point
INT_TOL = 1e-9        # ... at an integral point
ONE = 1.0 - 1e-9
ZERO = 1e-9

# separation families
SI = "si"
LSI = "lsi"
GBD = "gbd"
GAMMA1 = "gamma1"
FAMILIES = (SI, LSI, GBD, GAMMA1)


def _viol(w, coef, xs):
    alpha0, a = coef[0], coef[1]
    return w - (alpha0 + float(np.dot(a, xs)))


def is_integral(x, tol: float = 1e-9) -> bool:
    x = np.asarray(x)
    return bool(np.all((x <= tol) | (x >= 1.0 - tol)))


# --------------------------------------------------------------------------
# integral points


def separate_integral(view: CustomerView, w: float, x, family: str = SI, customer: int = 0,
                      tol: float = INT_TOL) -> list:
    """Rows violated by a 0/1 point whose capture variable overshoots the true value."""
    S = cap.point_set(view, x)
    if w <= cap.phi(view, S) + tol:
        return []
    xs = cap.to_sorted(view, x)
    if family == SI:
        rows = [cuts.si_cut(view, S, customer), cuts.sibar_cut(view, S, customer)]
    elif family == LSI:
        rows = _lifted(view, S, xs, customer, both=True)
    elif family == GBD:
        rows = [cuts.benders_cut(view, x, customer)]
    elif family == GAMMA1:
        row = separate_gamma1(view, w, x, customer, tol)
        rows = [row] if row is not None else []
    else:
        raise ValueError(f"unknown family {family!r}")
    return [r for r in rows if r.violation(w, x) > tol]


# --------------------------------------------------------------------------
# fractional points


def _greedy(view, w, xs, score):
    """Local search over supports for the row with the largest violation.

    ``score(S)`` returns the violation of the best row generated by S.  Two
    starts are tried (the ones of xs, and its rounding at one half); from
    each, the single fractional addition or removal that raises the score
    most is applied until none helps.  A one-pass sweep in decreasing xs
    order is kept as a third candidate.
    """
    n = view.n
    S1 = tuple(j for j in range(n) if xs[j] >= ONE)
    frac = [j for j in range(n) if ZERO < xs[j] < ONE]
    frac.sort(key=lambda j: (-xs[j], j))

    S = S1
    best = score(S)
    for j in frac:
        T = tuple(sorted(S + (j,)))
        v = score(T)
        if v > best:
            S, best = T, v
    cands = [(best, S)]

    for start in (S1, tuple(sorted(S1 + tuple(j for j in frac if xs[j] >= 0.5)))):
        cur, cv = start, score(start)
        while True:
            move, mv = None, cv
            for j in frac:
                T = tuple(k for k in cur if k != j) if j in cur else tuple(sorted(cur + (j,)))
                v = score(T)
                if v > mv + 1e-15:
                    move, mv = T, v
            if move is None:
                break
            cur, cv = move, mv
        cands.append((cv, cur))
    best, S = max(cands, key=lambda t: t[0])
    return S, best


def greedy_submodular(view: CustomerView, w: float, xs) -> tuple:
    """Greedy support for the two submodular families.

    Returns ``(S, violation_first, violation_second)`` at the final S.
    """
    memo = {}

    def both(S):
        if S not in memo:
            memo[S] = (_viol(w, cuts.si_coef(view, S), xs), _viol(w, cuts.sibar_coef(view, S), xs))
        return memo[S]

    S, _ = _greedy(view, w, xs, lambda S: max(both(S)))
    v1, v2 = both(S)
    return S, v1, v2


def _lifted(view, S, xs, customer, both=False, v1=1.0, v2=1.0, w=None, x=None):
    rows = []
    if both or v1 > 0:
        seed = cap.truncate(view, S).S_gamma
        order = sorted(seed, key=lambda j: (xs[j], j))
        rows.append(lift_down(view, seed, order, customer))
    if both or v2 > 0:
        seed = cap.bar_set(view, S)
        comp = [j for j in range(view.n) if j not in set(seed)]
        order = sorted(comp, key=lambda j: (-xs[j], j))
        rows.append(lift_up(view, seed, order, customer))
    return rows


def separate_fractional(view: CustomerView, w: float, x, family: str = SI, customer: int = 0,
                        tol: float = FRAC_TOL):
    """Most violated row found by the greedy heuristic, or None."""
    xs = cap.to_sorted(view, x)
    if family == GAMMA1:
        return separate_gamma1(view, w, x, customer, tol)
    if family == GBD:
        return _separate_benders(view, w, x, xs, customer, tol)
    S, v1, v2 = greedy_submodular(view, w, xs)
    if max(v1, v2) <= tol:
        return None
    if family == SI:
        row = cuts.si_cut(view, S, customer) if v1 >= v2 else cuts.sibar_cut(view, S, customer)
        return row if row.violation(w, x) > tol else None
    if family == LSI:
        rows = _lifted(view, S, xs, customer, v1=v1 - tol, v2=v2 - tol)
        best = max(rows, key=lambda r: r.violation(w, x))
        return best if best.violation(w, x) > tol else None
    raise ValueError(f"unknown family {family!r}")


def _separate_benders(view, w, x, xs, customer, tol):
    memo = {}

    def score(S):
        if S not in memo:
            memo[S] = _viol(w, cuts.benders_coef(view, S), xs)
        return memo[S]

    S, v = _greedy(view, w, xs, score)
    rounded = tuple(j for j in range(view.n) if xs[j] >= 0.5)
    if score(rounded) > v:
        S, v = rounded, score(rounded)
    if v <= tol:
        return None
    xbar = np.zeros(view.n)
    xbar[view.perm[list(S)]] = 1.0
    row = cuts.benders_cut(view, xbar, customer)
    return row if row.violation(w, x) > tol else None


# --------------------------------------------------------------------------
# single-choice customers


def gamma1_values(view: CustomerView, xs) -> np.ndarray:
    """Right-hand sides of all n single-choice rows at sorted-space point xs (index l-1 for row l)."""
    h = view.h
    n = view.n
    out = np.empty(n)
    for ell in range(1, n + 1):
        t = h[ell]
        out[ell - 1] = t + float(np.dot(np.maximum(h[:n] - t, 0.0), xs))
    return out


def gamma1_index(xs) -> int:
    """Row index minimising the single-choice right-hand side: 1 if the top entry is one,
    else the last prefix whose running sum stays below one."""
    n = len(xs)
    if n == 0:
        return 0
    if xs[0] >= 1.0:
        return 1
    acc = 0.0
    k = 1
    for ell in range(1, n + 1):
        acc += xs[ell - 1]
        if acc < 1.0:
            k = ell
        else:
            break
    return k


def separate_gamma1(view: CustomerView, w: float, x, customer: int = 0, tol: float = FRAC_TOL):
    if view.gamma != 1:
        raise ValueError("single-choice separation needs gamma = 1")
    if view.n == 0:
        return None
    xs = cap.to_sorted(view, x)
    k = gamma1_index(xs)
    h = view.h
    t = h[k]
    val = t + float(np.dot(np.maximum(h[: view.n] - t, 0.0), xs))
    if w > val + tol:
        return cuts.gamma1_cut(view, k, customer)
    return None
