"""Bounded dual simplex for the relaxations built from cut rows.

Problem form::

    max  c.z   s.t.  A z <= beta,  lo <= z <= hi

with ``z = (x_0..x_{n-1}, w_0..w_{m-1})`` and every structural boxed.  The
basis is kept in a reduced form: a list ``K`` of active rows (their slacks
are nonbasic at zero) and a list ``JB`` of basic structurals with
``|K| == |JB|``.  Only ``B = A[K, JB]`` is factored, which stays small
(at most ``n + m``) however many rows the model holds.

All boxed structurals sit at the bound matching the sign of their reduced
cost, so any basis whose active-row duals are nonnegative is dual feasible.
The empty basis qualifies, which is why the dual simplex alone serves cold
starts, added rows and bound changes.
"""
from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
DEGEN_EPS = 1e-12

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ERROR = "error"


class LpError(RuntimeError):
    pass


@dataclass
class LpResult:
    status: str
    objective: float = float("nan")
    z: np.ndarray = None
    y: np.ndarray = None       # row duals (>= 0)
    d: np.ndarray = None       # structural reduced costs
    iterations: int = 0
    message: str = ""

    def x(self, n: int) -> np.ndarray:
        return self.z[:n]

    def w(self, n: int) -> np.ndarray:
        return self.z[n:]


class LpModel:
    def __init__(self, n: int, m: int, b, f):
        self.n, self.m = int(n), int(m)
        nv = self.n + self.m
        self.c = np.concatenate([-np.asarray(f, dtype=np.float64), np.asarray(b, dtype=np.float64)])
        self.lo = np.zeros(nv)
        self.hi = np.ones(nv)
        self.lo0 = self.lo.copy()
        self.hi0 = self.hi.copy()
        self._A = np.zeros((16, nv))
        self._beta = np.zeros(16)
        self.nrows = 0
        self.rows: list = []      # CutRow or None per row
        self.keys: set = set()
        # basis
        self.K: list = []
        self.JB: list = []
        self.atup = self.c > 0
        self.total_pivots = 0

    # ---------------- model edits

    @property
    def nvars(self) -> int:
        return self.n + self.m

    @property
    def A(self) -> np.ndarray:
        return self._A[: self.nrows]

    @property
    def beta(self) -> np.ndarray:
        return self._beta[: self.nrows]

    def _grow(self):
        if self.nrows == self._A.shape[0]:
            cap = 2 * self._A.shape[0]
            A = np.zeros((cap, self.nvars))
            A[: self.nrows] = self._A[: self.nrows]
            beta = np.zeros(cap)
            beta[: self.nrows] = self._beta[: self.nrows]
            self._A, self._beta = A, beta

    def add_dense_row(self, a, rhs: float, tag=None) -> int:
        self._grow()
        r = self.nrows
        self._A[r] = a
        self._beta[r] = rhs
        self.nrows += 1
        self.rows.append(tag)
        return r

    def add_cut(self, row) -> bool:
        """Add ``w_i <= alpha0 + sum alpha_j x_j``; False if its key is already present."""
        if row.key in self.keys:
            return False
        a = np.zeros(self.nvars)
        a[self.n + row.customer] = 1.0
        for j, v in row.coefs:
            a[j] = -v
        self.add_dense_row(a, row.alpha0, row)
        self.keys.add(row.key)
        return True

    def remove_rows(self, idx) -> None:
        idx = sorted(set(int(r) for r in idx))
        if not idx:
            return
        drop = np.zeros(self.nrows, dtype=bool)
        drop[idx] = True
        keep = np.flatnonzero(~drop)
        remap = -np.ones(self.nrows, dtype=np.int64)
        remap[keep] = np.arange(keep.shape[0])
        if any(drop[r] for r in self.K):
            self.cold_start()
        else:
            self.K = [int(remap[r]) for r in self.K]
        for r in idx:
            tag = self.rows[r]
            if tag is not None and hasattr(tag, "key"):
                self.keys.discard(tag.key)
        self._A[: keep.shape[0]] = self._A[keep]
        self._beta[: keep.shape[0]] = self._beta[keep]
        self.rows = [self.rows[r] for r in keep]
        self.nrows = keep.shape[0]

    def fix(self, j: int, value: float) -> None:
        if not 0 <= j < self.n:
            raise KeyError(f"unknown location variable {j}")
        self.lo[j] = self.hi[j] = float(value)

    def unfix(self, j: int) -> None:
        if not 0 <= j < self.n:
            raise KeyError(f"unknown location variable {j}")
        self.lo[j], self.hi[j] = self.lo0[j], self.hi0[j]

    def set_bounds(self, lo, hi) -> None:
        self.lo[:] = lo
        self.hi[:] = hi

    def cold_start(self) -> None:
        self.K, self.JB = [], []
        self.atup = self.c > 0

    def basis(self) -> tuple:
        return (list(self.K), list(self.JB), self.atup.copy())

    def restore(self, snap) -> None:
        K, JB, atup = snap
        if K and max(K) >= self.nrows:
            self.cold_start()
            return
        self.K, self.JB, self.atup = list(K), list(JB), atup.copy()

    # ---------------- solve

    def solve(self, max_iter: int | None = None) -> LpResult:
        try:
            res = self._dual_simplex(max_iter)
        except LpError:
            res = None
        if res is None or res.status == ERROR:
            # retry once from the slack basis
            self.cold_start()
            try:
                res = self._dual_simplex(max_iter)
            except LpError as e:
                res = LpResult(status=ERROR, message=str(e))
        return res

    def _factor(self, A, K, JB):
        if not K:
            return None
        B = A[np.ix_(K, JB)]
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            try:
                lu = sla.lu_factor(B, check_finite=False)
            except (sla.LinAlgWarning, ValueError) as e:
                raise LpError(f"basis factorization failed: {e}") from None
        diag = np.abs(np.diag(lu[0]))
        if diag.min() <= 1e-13 * max(1.0, diag.max()):
            raise LpError("basis matrix numerically singular")
        return lu

    def _dual_simplex(self, max_iter) -> LpResult:
        A, beta, c, lo, hi = self.A, self.beta, self.c, self.lo, self.hi
        nv, R = self.nvars, self.nrows
        limit = max_iter if max_iter is not None else 50 * (R + nv) + 1000
        degen_cap = 10 * (R + nv)
        degen = 0
        bland = False
        K, JB, atup = self.K, self.JB, self.atup
        fixed = lo == hi
        for it in range(limit + 1):
            lu = self._factor(A, K, JB)
            AK = A[K]
            if K:
                yK = sla.lu_solve(lu, c[JB], trans=1, check_finite=False)
                d = c - AK.T @ yK
            else:
                yK = np.zeros(0)
                d = c.copy()
            if K and yK.min() < -OPT_TOL * max(1.0, np.abs(c).max()):
                raise LpError("lost dual feasibility on an active row")
            basic = np.zeros(nv, dtype=bool)
            basic[JB] = True
            nb = ~basic
            atup[nb & (d > OPT_TOL)] = True
            atup[nb & (d < -OPT_TOL)] = False
            z = np.where(atup, hi, lo)
            z[JB] = 0.0
            if K:
                z[JB] = sla.lu_solve(lu, beta[K] - AK @ z, check_finite=False)
            s = beta - A @ z
            # leaving variable
            viol_b = np.maximum(lo[JB] - z[JB], z[JB] - hi[JB]) if JB else np.zeros(0)
            active = np.zeros(R, dtype=bool)
            active[K] = True
            viol_s = np.where(active, 0.0, -s)
            cand_b = np.flatnonzero(viol_b > FEAS_TOL)
            cand_s = np.flatnonzero(viol_s > FEAS_TOL)
            if cand_b.size == 0 and cand_s.size == 0:
                y = np.zeros(R)
                y[K] = np.maximum(yK, 0.0)
                self.total_pivots += it
                return LpResult(status=OPTIMAL, objective=float(c @ z), z=z, y=y, d=d, iterations=it)
            if it == limit:
                return LpResult(status=ERROR, iterations=it, message="iteration limit")
            if bland:
                # smallest variable index: structurals first, then rows
                if cand_b.size:
                    t = min(cand_b, key=lambda t: JB[t])
                    leave = ("b", int(t))
                else:
                    leave = ("s", int(cand_s[0]))
            else:
                vb = viol_b[cand_b].max() if cand_b.size else -1.0
                vs = viol_s[cand_s].max() if cand_s.size else -1.0
                if vb >= vs:
                    leave = ("b", int(cand_b[np.argmax(viol_b[cand_b])]))
                else:
                    leave = ("s", int(cand_s[np.argmax(viol_s[cand_s])]))
            # tableau row of the leaving variable
            if leave[0] == "b":
                t = leave[1]
                p = JB[t]
                e = np.zeros(len(K))
                e[t] = 1.0
                rhoK = sla.lu_solve(lu, e, trans=1, check_finite=False)
                alpha = rhoK @ AK
                increase = z[p] < lo[p]
            else:
                i = leave[1]
                if K:
                    pi = sla.lu_solve(lu, A[i, JB], trans=1, check_finite=False)
                    rhoK = -pi
                    alpha = A[i] - pi @ AK
                else:
                    rhoK = np.zeros(0)
                    alpha = A[i].copy()
                increase = True
            # entering candidates: structurals then active-row slacks
            a_all = np.concatenate([alpha, rhoK])
            d_all = np.concatenate([d, -yK])
            up_all = np.concatenate([atup, np.zeros(len(K), dtype=bool)])
            ok = np.concatenate([nb & ~fixed, np.ones(len(K), dtype=bool)])
            if increase:
                elig = ok & (((~up_all) & (a_all < -PIVOT_TOL)) | (up_all & (a_all > PIVOT_TOL)))
            else:
                elig = ok & (((~up_all) & (a_all > PIVOT_TOL)) | (up_all & (a_all < -PIVOT_TOL)))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                self.total_pivots += it
                return LpResult(status=INFEASIBLE, iterations=it, message="dual ray")
            ratio = np.abs(d_all[cand]) / np.abs(a_all[cand])
            if bland:
                rmin = ratio.min()
                q = int(cand[np.flatnonzero(ratio <= rmin + DEGEN_EPS)[0]])
                step = rmin
            else:
                tmax = ((np.abs(d_all[cand]) + OPT_TOL) / np.abs(a_all[cand])).min()
                ok2 = np.flatnonzero(ratio <= tmax)
                mags = np.abs(a_all[cand[ok2]])
                best = ok2[np.flatnonzero(mags == mags.max())[0]]
                q = int(cand[best])
                step = ratio[best]
            degen = degen + 1 if step <= DEGEN_EPS else 0
            if degen > degen_cap:
                bland = True
            # basis update
            if leave[0] == "b":
                t = leave[1]
                p = JB[t]
                atup[p] = not increase
                if q < nv:
                    JB[t] = q
                else:
                    r = K[q - nv]
                    JB.pop(t)
                    K.pop(K.index(r))
                    # keep K/JB pairing irrelevant: B is re-sliced each pass
            else:
                i = leave[1]
                if q < nv:
                    K.append(i)
                    JB.append(q)
                else:
                    K[q - nv] = i
        raise LpError("unreachable")

    # ---------------- diagnostics

    def dump(self) -> str:
        """Plain-text listing: one ``var`` line per structural, one ``row`` line per constraint."""
        out = io.StringIO()
        out.write(f"lp n={self.n} m={self.m} rows={self.nrows}\n")
        for j in range(self.nvars):
            name = f"x{j}" if j < self.n else f"w{j - self.n}"
            out.write(f"var {name} lo={self.lo[j]!r} hi={self.hi[j]!r} obj={self.c[j]!r}\n")
        for r in range(self.nrows):
            terms = " ".join(
                f"{('x%d' % j) if j < self.n else ('w%d' % (j - self.n))}:{v!r}"
                for j, v in enumerate(self.A[r]) if v != 0.0
            )
            tag = self.rows[r]
            kind = getattr(tag, "kind", "-")
            out.write(f"row {r} kind={kind} {terms} <= {self.beta[r]!r}\n")
        return out.getvalue()
