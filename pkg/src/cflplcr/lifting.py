"""Sequential lifting of the two submodular row templates.

Each lifting step asks for the best value of ``w - sum_j price_j x_j`` over
the customer's mixed 0-1 set with some variables fixed.  ``reduce`` turns
that question into a canonical problem

    max  g(sum_j u_j y_j) - sum_{j<=q} a_j y_j + offset
    s.t. sum_j y_j <= gamma,  y binary

where the first q items are priced (``a_j > 0``) and the rest are free.
``solve_lift`` answers it with a dynamic program over (items used, count
chosen, accumulated utility) implemented in :mod:`cflplcr.kernels`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import capture as cap
from . import cuts
from .instance import CustomerView
from .kernels import lift_dp

BOUND_SLACK = 1e-9


class LiftingError(ArithmeticError):
    """A lifted coefficient left its theoretical envelope beyond the slack."""


@dataclass(frozen=True)
class CanonicalLift:
    priced_u: np.ndarray
    priced_a: np.ndarray
    free_u: np.ndarray
    u0: float
    gamma: int
    offset: float = 0.0

    @property
    def q(self) -> int:
        return self.priced_u.shape[0]

    @property
    def p(self) -> int:
        return self.q + self.free_u.shape[0]


@dataclass
class LiftState:
    """Reusable tables for one lifting sequence.

    ``memo`` maps ``(t, tau, bits(lam))`` to ``Z_t(lam, tau)``.  Entries are
    dropped as soon as the priced items they were built on change.
    """

    f: np.ndarray = field(default_factory=lambda: np.zeros(1))
    memo: dict = field(default_factory=dict)
    items: tuple = ()
    hits: int = 0
    misses: int = 0

    def sync(self, items: tuple) -> None:
        common = 0
        for a, b in zip(self.items, items):
            if a != b:
                break
            common += 1
        if common < len(self.items) or common < len(items):
            self.memo = {k: v for k, v in self.memo.items() if k[0] <= common}
        self.items = items


def reduce(view: CustomerView, fixed0, fixed1, prices: Sequence[tuple], offset: float = 0.0) -> CanonicalLift:
    """Canonical form of ``max w - sum price_j x_j`` over the customer's set.

    ``prices`` lists ``(position, price)`` for every free position, in the
    order the priced items should take (only matters for memo reuse).
    """
    fixed0 = set(fixed0)
    fixed1 = set(fixed1)
    if fixed0 & fixed1:
        raise ValueError("a position cannot be fixed to both 0 and 1")
    us = view.u_sorted
    pu, pa, free = [], [], [int(j) for j in fixed1]
    off = float(offset)
    seen = set()
    for j, a in prices:
        j = int(j)
        if j in fixed0 or j in fixed1 or j in seen:
            raise ValueError(f"position {j} priced twice or also fixed")
        seen.add(j)
        if a <= 0.0:
            free.append(j)
            off -= a
        else:
            pu.append(float(us[j]))
            pa.append(float(a))
    free.sort()
    # descending utility, ties by ascending position (stable on sorted positions)
    free_u = np.array([us[j] for j in free], dtype=np.float64)
    order = np.argsort(-free_u, kind="stable")
    return CanonicalLift(priced_u=np.array(pu), priced_a=np.array(pa), free_u=free_u[order],
                         u0=view.u0, gamma=view.gamma, offset=off)


def prefix_table(c: CanonicalLift) -> np.ndarray:
    """``f(tau)`` for ``tau = 0..gamma``: best total utility of ``tau`` free items."""
    f = np.zeros(c.gamma + 1)
    acc = 0.0
    for tau in range(1, c.gamma + 1):
        if tau <= c.free_u.shape[0]:
            acc += c.free_u[tau - 1]
        f[tau] = acc
    return f


def solve_lift(c: CanonicalLift, st: LiftState | None = None) -> float:
    st = st if st is not None else LiftState()
    st.f = prefix_table(c)
    q = c.q
    kmax = min(c.gamma, q) + 1
    lam0 = np.array([st.f[c.gamma - tau] for tau in range(kmax)])
    st.sync(tuple(zip(c.priced_u.tolist(), c.priced_a.tolist())))
    keys = [(q, tau, float(lam0[tau]).hex()) for tau in range(kmax)]
    if all(k in st.memo for k in keys):
        st.hits += 1
        z = [st.memo[k] for k in keys]
    else:
        st.misses += 1
        z = lift_dp(c.priced_u, c.priced_a, c.u0, lam0)
        for k, v in zip(keys, z):
            st.memo[k] = float(v)
    return float(max(z)) + c.offset


# --------------------------------------------------------------------------
# lifted rows


def down_coefficients(view: CustomerView, S, order) -> list:
    """Coefficients for the members of S, lifted one at a time in ``order``."""
    S = cap.as_set(view, S)
    order = [int(j) for j in order]
    if sorted(order) != list(S):
        raise ValueError("ordering must be a permutation of the set")
    base = cap.rho_all(view, S)
    outside = [(j, float(base[j])) for j in range(view.n) if j not in S]
    phiS = cap.phi(view, S)
    rest = cap.rho_rest(view)
    st = LiftState()
    eta = []
    for l, j in enumerate(order):
        prices = outside + [(order[t], eta[t]) for t in range(l)]
        c = reduce(view, (j,), order[l + 1:], prices)
        nu = solve_lift(c, st)
        e = phiS - math.fsum(eta) - nu
        if e < rest[j] - BOUND_SLACK:
            raise LiftingError(f"down-lifted coefficient {e!r} below {rest[j]!r} at position {j}")
        eta.append(e)
    return eta


def lift_down(view: CustomerView, S, order, customer: int = 0) -> cuts.CutRow:
    S = cap.as_set(view, S)
    eta = down_coefficients(view, S, order)
    a = cap.rho_all(view, S)
    for j, e in zip(order, eta):
        a[j] = e
    alpha0 = cap.phi(view, S) - math.fsum(eta)
    return cuts.emit(view, customer, alpha0, a, cuts.LSI_DOWN, S, order)


def up_coefficients(view: CustomerView, S, order) -> list:
    """Coefficients for the positions outside S, lifted one at a time in ``order``."""
    S = cap.as_set(view, S)
    order = [int(j) for j in order]
    if sorted(order) != [j for j in range(view.n) if j not in S]:
        raise ValueError("ordering must be a permutation of the complement")
    drop = cap.rho_drop(view, S)
    inside = [(j, float(v)) for j, v in zip(S, drop)]
    const = -cap.phi(view, S) + math.fsum(drop)
    empty = cap.rho_empty(view)
    st = LiftState()
    zeta = []
    for l, j in enumerate(order):
        prices = inside + [(order[t], zeta[t]) for t in range(l)]
        c = reduce(view, order[l + 1:], (j,), prices)
        z = const + solve_lift(c, st)
        if z > empty[j] + BOUND_SLACK:
            raise LiftingError(f"up-lifted coefficient {z!r} above {empty[j]!r} at position {j}")
        zeta.append(z)
    return zeta


def lift_up(view: CustomerView, S, order, customer: int = 0) -> cuts.CutRow:
    S = cap.as_set(view, S)
    zeta = up_coefficients(view, S, order)
    drop = cap.rho_drop(view, S)
    a = np.zeros(view.n)
    for j, v in zip(S, drop):
        a[j] = v
    for j, z in zip(order, zeta):
        a[j] = z
    alpha0 = cap.phi(view, S) - math.fsum(drop)
    return cuts.emit(view, customer, alpha0, a, cuts.LSI_UP, S, order)
