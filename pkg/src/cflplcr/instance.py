"""Problem data, the gravity-rule generator, and the text file format.

File format (whitespace separated, ``#`` starts a comment)::

    cflp 1
    m n
    b_1 ... b_m          # buying powers
    f_1 ... f_n          # fixed costs
    gamma_1 ... gamma_m  # choice limits
    u0_1 ... u0_m        # outside-option utilities
    u_11 ... u_1n        # m rows of utilities
    ...

Floats are written with ``repr`` (shortest decimal that round-trips the
binary64 value), so ``read(write(inst))`` is field-exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence, Union

import numpy as np

FORMAT_HEADER = ("cflp", "1")
MAX_REDRAWS = 100


class InstanceFormatError(ValueError):
    """Malformed instance file or inconsistent instance data."""


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Instance:
    b: np.ndarray
    f: np.ndarray
    u: np.ndarray
    u0: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        b = _frozen(self.b, np.float64)
        f = _frozen(self.f, np.float64)
        u0 = _frozen(self.u0, np.float64)
        gamma = _frozen(self.gamma, np.int64)
        m, n = b.shape[0], f.shape[0]
        u = _frozen(np.reshape(self.u, (m, n)) if np.size(self.u) == m * n else self.u, np.float64)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "gamma", gamma)
        _check(self)

    @property
    def m(self) -> int:
        return self.b.shape[0]

    @property
    def n(self) -> int:
        return self.f.shape[0]

    @cached_property
    def views(self) -> tuple:
        return tuple(view(self, i) for i in range(self.m))

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("b", "f", "u", "u0", "gamma")
        )

    def __hash__(self):
        return hash((self.m, self.n, self.u.tobytes()))


def _check(inst: Instance) -> None:
    m, n = inst.m, inst.n
    if inst.u.shape != (m, n):
        raise InstanceFormatError(f"utility matrix has shape {inst.u.shape}, expected {(m, n)}")
    for name, arr, size in (("buying power", inst.b, m), ("outside utility", inst.u0, m), ("gamma", inst.gamma, m)):
        if arr.shape != (size,):
            raise InstanceFormatError(f"{name}: expected {size} values, got {arr.shape[0]}")
    if not np.all(np.isfinite(inst.u)) or np.any(inst.u < 0):
        raise InstanceFormatError("utility must be finite and nonnegative")
    if not np.all(np.isfinite(inst.u0)) or np.any(inst.u0 <= 0):
        raise InstanceFormatError("outside utility must be positive")
    if np.any(inst.gamma < 1):
        raise InstanceFormatError("gamma must be an integer >= 1")
    if not np.all(np.isfinite(inst.b)) or np.any(inst.b <= 0):
        raise InstanceFormatError("buying power must be positive")
    if not np.all(np.isfinite(inst.f)) or np.any(inst.f < 0):
        raise InstanceFormatError("fixed cost must be nonnegative")


@dataclass(frozen=True, eq=False)
class CustomerView:
    """One customer's utilities sorted in nonincreasing order.

    ``u_sorted`` has length ``n + 1``; the last entry is the zero sentinel,
    so ``u_sorted[n]`` plays the role of the utility past the last facility.
    All per-customer cut math works in these sorted positions.
    """

    perm: np.ndarray      # sorted position -> facility id
    u_sorted: np.ndarray  # length n + 1
    u0: float
    gamma: int

    @property
    def n(self) -> int:
        return self.perm.shape[0]

    @cached_property
    def pos(self) -> np.ndarray:
        """Inverse permutation: facility id -> sorted position."""
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(self.perm.shape[0])
        inv.flags.writeable = False
        return inv

    @cached_property
    def h(self) -> np.ndarray:
        """Single-facility capture ``u_k / (u_k + u0)`` per sorted position (sentinel included)."""
        out = self.u_sorted / (self.u_sorted + self.u0)
        out.flags.writeable = False
        return out


def view(inst: Instance, i: int) -> CustomerView:
    if not 0 <= i < inst.m:
        raise IndexError(f"customer index {i} out of range for m={inst.m}")
    row = inst.u[i]
    # stable sort on the negated row: equal utilities keep ascending facility id
    perm = np.argsort(-row, kind="stable").astype(np.int64)
    u_sorted = np.append(row[perm], 0.0)
    perm.flags.writeable = False
    u_sorted.flags.writeable = False
    gamma = max(1, min(int(inst.gamma[i]), inst.n))
    return CustomerView(perm=perm, u_sorted=u_sorted, u0=float(inst.u0[i]), gamma=gamma)


# --------------------------------------------------------------------------
# random stream and generator


class Stream:
    """Portable random stream: PCG64 raw 64-bit outputs with fixed transforms.

    Only ``random_raw`` of the bit generator is used, so the sequence does not
    depend on how a numpy version implements its distribution methods.
    """

    def __init__(self, seed: int):
        self._bg = np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF)

    def raw(self) -> int:
        return int(self._bg.random_raw())

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        # 53 high bits -> [0, 1)
        return lo + (hi - lo) * ((self.raw() >> 11) * 2.0 ** -53)

    def integer(self, lo: int, hi: int) -> int:
        """Uniform integer in ``[lo, hi]`` by rejection (no modulo bias)."""
        span = hi - lo + 1
        if span <= 0:
            raise ValueError("empty integer range")
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            r = self.raw()
            if r < limit:
                return lo + r % span


GammaSpec = Union[int, str, tuple]


@dataclass(frozen=True)
class GenConfig:
    m: int
    n: int
    gamma: GammaSpec = 1          # int, "nh" (uniform 1..5), or (lo, hi)
    seed: int = 1
    coord_max: float = 1000.0     # points uniform on [0, coord_max]^2
    fixed_cost: float = 2000.0
    buying_power: tuple = (10, 1000)
    outside_distance: float = 50.0

    def gamma_range(self) -> tuple:
        g = self.gamma
        if isinstance(g, str):
            if g.lower() != "nh":
                raise ValueError(f"unknown gamma mode {g!r}")
            return (1, 5)
        if isinstance(g, (tuple, list)):
            lo, hi = int(g[0]), int(g[1])
            return (lo, hi)
        return (int(g), int(g))

    def validate(self) -> None:
        if self.m < 0 or self.n < 0:
            raise ValueError("m and n must be nonnegative")
        lo, hi = self.gamma_range()
        if lo < 1 or hi < lo:
            raise ValueError("gamma range must be nonempty and >= 1")
        blo, bhi = self.buying_power
        if int(blo) < 1 or int(bhi) < int(blo):
            raise ValueError("buying-power range must be nonempty and positive")
        if not self.coord_max > 0:
            raise ValueError("coordinate range must be nonempty")
        if self.fixed_cost < 0:
            raise ValueError("fixed cost must be nonnegative")
        if not self.outside_distance > 0:
            raise ValueError("outside distance must be positive")


def generate(cfg: GenConfig) -> Instance:
    """Gravity-rule instance: ``u_ij = 1 / d_ij^2``, ``u_i0 = 1 / outside_distance^2``.

    Draw order: customer points, facility points, buying powers, then choice
    limits (only when the limit is not constant).  A facility point that lands
    exactly on a customer is redrawn.
    """
    cfg.validate()
    rs = Stream(cfg.seed)
    m, n, c = cfg.m, cfg.n, float(cfg.coord_max)
    cust = np.array([[rs.uniform(0.0, c), rs.uniform(0.0, c)] for _ in range(m)]).reshape(m, 2)
    fac = np.empty((n, 2))
    for j in range(n):
        for _ in range(MAX_REDRAWS):
            p = (rs.uniform(0.0, c), rs.uniform(0.0, c))
            if m == 0 or not np.any((cust[:, 0] == p[0]) & (cust[:, 1] == p[1])):
                break
        else:
            raise RuntimeError(f"facility {j} coincides with a customer after {MAX_REDRAWS} redraws")
        fac[j] = p
    blo, bhi = (int(v) for v in cfg.buying_power)
    b = np.array([rs.integer(blo, bhi) for _ in range(m)], dtype=np.float64)
    glo, ghi = cfg.gamma_range()
    if glo == ghi:
        gamma = np.full(m, glo, dtype=np.int64)
    else:
        gamma = np.array([rs.integer(glo, ghi) for _ in range(m)], dtype=np.int64)
    dx = cust[:, None, 0] - fac[None, :, 0]
    dy = cust[:, None, 1] - fac[None, :, 1]
    u = 1.0 / (dx * dx + dy * dy)
    u0 = np.full(m, 1.0 / (cfg.outside_distance ** 2))
    f = np.full(n, float(cfg.fixed_cost))
    return Instance(b=b, f=f, u=u, u0=u0, gamma=gamma)


# --------------------------------------------------------------------------
# file I/O


def _fmt(x) -> str:
    return repr(float(x))


def dumps(inst: Instance) -> str:
    lines = [
        " ".join(FORMAT_HEADER),
        f"{inst.m} {inst.n}",
        " ".join(_fmt(v) for v in inst.b),
        " ".join(_fmt(v) for v in inst.f),
        " ".join(str(int(v)) for v in inst.gamma),
        " ".join(_fmt(v) for v in inst.u0),
    ]
    lines.extend(" ".join(_fmt(v) for v in row) for row in inst.u)
    return "\n".join(lines) + "\n"


def write(inst: Instance, path) -> None:
    Path(path).write_text(dumps(inst))


def loads(text: str) -> Instance:
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    it = iter(tokens)

    def take(count: int, what: str, conv):
        out = []
        for k in range(count):
            try:
                tok = next(it)
            except StopIteration:
                raise InstanceFormatError(f"{what}: expected {count} values, found {k}") from None
            try:
                out.append(conv(tok))
            except ValueError:
                raise InstanceFormatError(f"{what}: cannot parse {tok!r}") from None
        return out

    header = tuple(take(2, "header", str))
    if header != FORMAT_HEADER:
        raise InstanceFormatError(f"header: expected 'cflp 1', got {' '.join(header)!r}")
    m, n = take(2, "dimensions", int)
    if m < 0 or n < 0:
        raise InstanceFormatError("dimensions must be nonnegative")
    b = take(m, "buying power", float)
    f = take(n, "fixed cost", float)
    gamma = take(m, "gamma", _int_strict)
    u0 = take(m, "outside utility", float)
    u = take(m * n, "utility", float)
    rest = list(it)
    if rest:
        raise InstanceFormatError(f"trailing data: {len(rest)} unexpected values (dimension mismatch?)")
    return Instance(b=b, f=f, u=np.reshape(np.array(u, dtype=np.float64), (m, n)), u0=u0, gamma=gamma)


def _int_strict(tok: str) -> int:
    v = float(tok)
    if not math.isfinite(v) or v != int(v):
        raise ValueError(tok)
    return int(v)


def read(path) -> Instance:
    return loads(Path(path).read_text())


def from_rows(u: Sequence[Sequence[float]], u0, gamma, b=None, f=None) -> Instance:
    """Convenience constructor for small hand-written instances."""
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    m, n = u.shape
    u0 = np.broadcast_to(np.asarray(u0, dtype=np.float64), (m,))
    gamma = np.broadcast_to(np.asarray(gamma, dtype=np.int64), (m,))
    b = np.ones(m) if b is None else np.broadcast_to(np.asarray(b, dtype=np.float64), (m,))
    f = np.zeros(n) if f is None else np.broadcast_to(np.asarray(f, dtype=np.float64), (n,))
    return Instance(b=b, f=f, u=u, u0=u0, gamma=gamma)
