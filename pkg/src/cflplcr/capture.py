"""Capture probability, top-gamma truncation and marginal gains for one customer.

Sets are tuples of *sorted positions* (0-based indices into
``CustomerView.u_sorted``).  Position ``n`` is the zero-utility sentinel.
Masses are summed with ``math.fsum`` so a set's mass does not depend on the
order its members were listed in, and ``phi(S) == phi(S_gamma)`` exactly.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .instance import CustomerView

FacilitySet = tuple


def as_set(view: CustomerView, S: Iterable[int]) -> FacilitySet:
    out = tuple(sorted({int(j) for j in S}))
    if out and (out[0] < 0 or out[-1] >= view.n):
        raise ValueError(f"set {out} not inside positions 0..{view.n - 1}")
    return out


@dataclass(frozen=True)
class TruncationInfo:
    k: int            # cutoff position (view.n when |S| < gamma)
    u_k: float        # utility at the cutoff (0.0 at the sentinel)
    S_gamma: FacilitySet
    mass: float


def g(view: CustomerView, mass: float) -> float:
    return mass / (mass + view.u0)


def mass_of(view: CustomerView, S: Iterable[int]) -> float:
    us = view.u_sorted
    return math.fsum(us[j] for j in S)


def truncate(view: CustomerView, S: FacilitySet) -> TruncationInfo:
    gam = view.gamma
    if len(S) < gam:
        k = view.n
        top = tuple(S)
    else:
        k = S[gam - 1]
        top = tuple(S[:gam])
    return TruncationInfo(k=k, u_k=float(view.u_sorted[k]), S_gamma=top, mass=mass_of(view, top))


def phi(view: CustomerView, S: FacilitySet) -> float:
    return g(view, truncate(view, S).mass)


def _gain(u0, mass, d):
    return u0 * d / ((mass + d + u0) * (mass + u0))


def rho(view: CustomerView, S: FacilitySet, j: int) -> float:
    if j in S:
        raise ValueError(f"position {j} already in the set")
    tr = truncate(view, S)
    d = max(float(view.u_sorted[j]) - tr.u_k, 0.0)
    return _gain(view.u0, tr.mass, d)


def rho_all(view: CustomerView, S: FacilitySet) -> np.ndarray:
    """``rho_j(S)`` for every position; entries for members of S are zero."""
    tr = truncate(view, S)
    d = np.maximum(view.u_sorted[: view.n] - tr.u_k, 0.0)
    out = view.u0 * d / ((tr.mass + d + view.u0) * (tr.mass + view.u0))
    if S:
        out[list(S)] = 0.0
    return out


def rho_drop(view: CustomerView, S: FacilitySet) -> np.ndarray:
    """``rho_j(S minus j)`` for each member ``j`` of S, aligned with S."""
    us = view.u_sorted
    out = np.empty(len(S))
    for a, j in enumerate(S):
        rest = S[:a] + S[a + 1:]
        tr = truncate(view, rest)
        d = max(float(us[j]) - tr.u_k, 0.0)
        out[a] = _gain(view.u0, tr.mass, d)
    return out


_cache: "weakref.WeakKeyDictionary[CustomerView, dict]" = weakref.WeakKeyDictionary()


def _memo(view: CustomerView, key: str, build):
    d = _cache.setdefault(view, {})
    if key not in d:
        arr = build()
        arr.flags.writeable = False
        d[key] = arr
    return d[key]


def rho_empty(view: CustomerView) -> np.ndarray:
    """``rho_j(empty set)`` for every position."""
    return _memo(view, "empty", lambda: rho_all(view, ()))


def rho_rest(view: CustomerView) -> np.ndarray:
    """``rho_j([n] minus j)`` for every position."""
    return _memo(view, "rest", lambda: rho_drop(view, tuple(range(view.n))))


def bar_set(view: CustomerView, S: FacilitySet) -> FacilitySet:
    """Pad S past its (gamma+1)-th member: S itself when ``|S| <= gamma``,
    otherwise S plus every position from ``j_{gamma+1}`` to the end."""
    gam = view.gamma
    if len(S) <= gam:
        return tuple(S)
    start = S[gam]
    return tuple(sorted(set(S) | set(range(start, view.n))))


def point_set(view: CustomerView, x_orig) -> FacilitySet:
    """Sorted-position support of a 0/1 vector given in original facility order."""
    x = np.asarray(x_orig)
    return tuple(sorted(int(view.pos[j]) for j in np.flatnonzero(x > 0.5)))


def to_sorted(view: CustomerView, x_orig) -> np.ndarray:
    """Reorder a vector from facility order into sorted-position order."""
    return np.asarray(x_orig, dtype=np.float64)[view.perm]
