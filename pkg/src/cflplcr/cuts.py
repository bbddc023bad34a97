"""Static inequality families for ``w_i <= alpha0 + sum_j alpha_j x_j``.

Every constructor takes a ``CustomerView`` and a set of sorted positions,
does its arithmetic in sorted space, and translates to original facility ids
only when the row is emitted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import capture as cap
from .instance import CustomerView

SI = "SI"
SIBAR = "SIbar"
LSI_DOWN = "LSI-down"
LSI_UP = "LSI-up"
BENDERS = "Benders"
GAMMA1 = "Gamma1"
KINDS = (SI, SIBAR, LSI_DOWN, LSI_UP, BENDERS, GAMMA1)

COEF_DROP = 1e-12


@dataclass(frozen=True)
class CutRow:
    customer: int
    alpha0: float
    coefs: tuple              # ((facility id, alpha), ...) sorted by id
    kind: str
    generator: tuple = ()     # facility ids of the generating set, sorted
    order: tuple = ()         # lifting sequence (facility ids), lifted rows only

    @property
    def key(self) -> tuple:
        return (self.customer, self.kind, self.generator, self.order)

    @property
    def nnz(self) -> int:
        return len(self.coefs)

    def dense(self, n: int) -> np.ndarray:
        a = np.zeros(n)
        for j, v in self.coefs:
            a[j] = v
        return a

    def rhs(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        return self.alpha0 + math.fsum(v * x[j] for j, v in self.coefs)

    def violation(self, w: float, x) -> float:
        return float(w) - self.rhs(x)

    def log_line(self) -> str:
        return f"{self.customer} {self.kind} {len(self.generator)} {self.alpha0!r} {self.nnz}"


def emit(view: CustomerView, customer: int, alpha0: float, a_sorted, kind: str,
         generator: Iterable[int] = (), order: Iterable[int] = ()) -> CutRow:
    """Build a row from sorted-space coefficients."""
    perm = view.perm
    pairs = [(int(perm[k]), float(v)) for k, v in enumerate(a_sorted) if abs(v) >= COEF_DROP]
    pairs.sort()
    gen = tuple(sorted(int(perm[k]) for k in generator))
    ordr = tuple(int(perm[k]) for k in order)
    return CutRow(customer=int(customer), alpha0=float(alpha0), coefs=tuple(pairs),
                  kind=kind, generator=gen, order=ordr)


def si_coef(view: CustomerView, S) -> tuple:
    """Sorted-space ``(alpha0, alpha, generator)`` of the first family, generator truncated to top gamma."""
    S = cap.truncate(view, cap.as_set(view, S)).S_gamma
    a = cap.rho_all(view, S)
    rest = cap.rho_rest(view)
    for j in S:
        a[j] = rest[j]
    alpha0 = cap.phi(view, S) - math.fsum(rest[j] for j in S)
    return alpha0, a, S


def sibar_coef(view: CustomerView, S) -> tuple:
    """Sorted-space ``(alpha0, alpha, generator)`` of the second family, generator padded by ``bar_set``."""
    Sb = cap.bar_set(view, cap.as_set(view, S))
    a = np.array(cap.rho_empty(view), dtype=np.float64)
    drop = cap.rho_drop(view, Sb)
    for j, v in zip(Sb, drop):
        a[j] = v
    alpha0 = cap.phi(view, Sb) - math.fsum(drop)
    return alpha0, a, Sb


def si_cut(view: CustomerView, S, customer: int = 0) -> CutRow:
    """Row generated by S, after replacing S by its top-gamma truncation."""
    alpha0, a, gen = si_coef(view, S)
    return emit(view, customer, alpha0, a, SI, gen)


def sibar_cut(view: CustomerView, S, customer: int = 0) -> CutRow:
    """Row of the second family generated by the padded set ``bar_set(S)``."""
    alpha0, a, gen = sibar_coef(view, S)
    return emit(view, customer, alpha0, a, SIBAR, gen)


def benders_coef(view: CustomerView, S) -> tuple:
    """Sorted-space ``(alpha0, lambda, S)`` of the gradient row at the 0/1 point with support S."""
    S = cap.as_set(view, S)
    us = view.u_sorted[: view.n]
    gam = view.gamma
    u0 = view.u0
    if len(S) <= gam:
        den = cap.mass_of(view, S) + u0
        lam = u0 * us / (den * den)
    else:
        den = cap.mass_of(view, S[:gam]) + u0
        lam = u0 * np.maximum(us - view.u_sorted[S[gam]], 0.0) / (den * den)
    alpha0 = cap.phi(view, S) - math.fsum(lam[j] for j in S)
    return alpha0, lam, S


def benders_cut(view: CustomerView, xbar, customer: int = 0) -> CutRow:
    """Gradient-type row at a 0/1 point ``xbar`` (original facility order)."""
    alpha0, lam, S = benders_coef(view, cap.point_set(view, xbar))
    return emit(view, customer, alpha0, lam, BENDERS, S)


def gamma1_cut(view: CustomerView, ell: int, customer: int = 0) -> CutRow:
    """Row ``ell`` (1..n) of the single-choice family; threshold utility is item ``ell+1``."""
    if view.gamma != 1:
        raise ValueError("single-choice rows need gamma = 1")
    if not 1 <= ell <= view.n:
        raise ValueError(f"row index {ell} outside 1..{view.n}")
    h = view.h
    t = h[ell]
    a = np.maximum(h[: view.n] - t, 0.0)
    return emit(view, customer, t, a, GAMMA1, range(ell))


def gamma1_rows(view: CustomerView, customer: int = 0) -> list:
    return [gamma1_cut(view, ell, customer) for ell in range(1, view.n + 1)]
