"""Two-stage branch-and-cut.

Stage 1 runs a cutting-plane loop on the relaxation, rounding every LP
point for incumbents.  Rows tight at the final LP point carry over to
stage 2, a best-bound branch-and-bound that separates only at integral LP
points (lazily, until no row is violated).
"""
from __future__ import annotations

import heapq
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import capture as cap
from . import separation as sep
from .instance import Instance
from .lp import INFEASIBLE, OPTIMAL, LpModel

FAMILY_CHOICES = ("si", "lsi", "gbd", "auto")
TIMING_FIELDS = ("T", "T1", "CT")


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    family: str = "lsi"             # si | lsi | gbd | auto (single-choice customers get their exact rows)
    time_limit: float = 7200.0
    gap: float = 0.0                # relative
    max_rounds: int = 500
    stall_rounds: int = 10
    stall_eps: float = 1e-9
    frac_tol: float = sep.FRAC_TOL
    int_tol: float = sep.INT_TOL
    saturation: float = 1e-7
    node_limit: int | None = None

    def __post_init__(self):
        if self.family not in FAMILY_CHOICES:
            raise ValueError(f"family must be one of {FAMILY_CHOICES}")
        if self.time_limit <= 0 or self.max_rounds <= 0 or self.gap < 0:
            raise ValueError("limits must be positive and the gap nonnegative")


@dataclass
class SolveReport:
    family: str
    status: str = "optimal"
    nu: float = float("nan")
    UB: float = float("inf")
    LB: float = -float("inf")
    UB1: float = float("nan")
    LB1: float = float("nan")
    T1: float = 0.0
    cuts: dict = field(default_factory=dict)
    CT: float = 0.0
    N: int = 0
    T: float = 0.0
    rounds1: int = 0
    rows_kept: int = 0
    argmax: tuple = ()
    trace: list = field(default_factory=list)   # (stage, counter, UB, LB)

    @property
    def gap_pct(self) -> float:
        if not math.isfinite(self.UB) or not math.isfinite(self.LB):
            return float("inf")
        if self.UB == self.LB:
            return 0.0
        return 100.0 * (self.UB - self.LB) / abs(self.UB) if self.UB != 0 else float("inf")

    def to_dict(self) -> dict:
        d = {
            "family": self.family,
            "status": self.status,
            "nu": self.nu,
            "UB": self.UB,
            "LB": self.LB,
            "G%": self.gap_pct,
            "UB1": self.UB1,
            "LB1": self.LB1,
            "T1": self.T1,
            "T": self.T,
            "CT": self.CT,
            "N": self.N,
            "rounds1": self.rounds1,
            "rows_kept": self.rows_kept,
            "argmax": " ".join(str(j + 1) for j in self.argmax),
        }
        for k in sorted(self.cuts):
            d[f"cuts.{k}"] = self.cuts[k]
        return d

    def to_json(self, drop_timing: bool = False) -> str:
        d = self.to_dict()
        if drop_timing:
            for k in TIMING_FIELDS:
                d.pop(k, None)
        return json.dumps(d, indent=1, allow_nan=True) + "\n"


def objective(inst: Instance, S) -> float:
    """Revenue minus fixed cost of facility set S (original ids), from ``capture.phi``."""
    S = tuple(sorted(int(j) for j in S))
    terms = []
    for i, v in enumerate(inst.views):
        pos = tuple(sorted(int(v.pos[j]) for j in S))
        terms.append(float(inst.b[i]) * cap.phi(v, pos))
    return math.fsum(terms) - math.fsum(float(inst.f[j]) for j in S)


def round_heuristic(inst: Instance, x) -> tuple:
    """Round at one half (ties up); returns ``(set, objective)``."""
    x = np.asarray(x, dtype=np.float64)
    S = tuple(int(j) for j in np.flatnonzero(x >= 0.5))
    return S, objective(inst, S)


def customer_families(inst: Instance, family: str) -> list:
    if family == "auto":
        return [sep.GAMMA1 if v.gamma == 1 else sep.LSI for v in inst.views]
    return [family] * inst.m


class _Run:
    def __init__(self, inst: Instance, cfg: SolveConfig, cut_log=None):
        self.inst = inst
        self.cfg = cfg
        self.fams = customer_families(inst, cfg.family)
        self.model = LpModel(inst.n, inst.m, inst.b, inst.f)
        self.rep = SolveReport(family=cfg.family)
        self.best_S = None
        self.cut_log = cut_log
        self.t0 = time.perf_counter()

    # ---- helpers

    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def offer(self, S, val):
        r = self.rep
        if self.best_S is None or val > r.LB or (val == r.LB and S < self.best_S):
            r.LB, self.best_S = val, S

    def add(self, rows) -> int:
        added = 0
        for row in rows:
            if self.model.add_cut(row):
                added += 1
                self.rep.cuts[row.kind] = self.rep.cuts.get(row.kind, 0) + 1
                if self.cut_log is not None:
                    self.cut_log.write(row.log_line() + "\n")
        return added

    def separate(self, z, integral: bool) -> list:
        n = self.inst.n
        x = np.clip(z[:n], 0.0, 1.0)
        w = z[n:]
        t = time.perf_counter()
        rows = []
        for i, v in enumerate(self.inst.views):
            if integral:
                rows.extend(sep.separate_integral(v, w[i], np.round(x), self.fams[i], i, self.cfg.int_tol))
            else:
                row = sep.separate_fractional(v, w[i], x, self.fams[i], i, self.cfg.frac_tol)
                if row is not None:
                    rows.append(row)
        self.rep.CT += time.perf_counter() - t
        return rows

    def prune(self, bound: float) -> bool:
        lb = self.rep.LB
        return bound - lb <= self.cfg.gap * abs(bound) + 1e-9 * max(1.0, abs(bound))

    def solve_lp(self):
        res = self.model.solve()
        if res.status not in (OPTIMAL, INFEASIBLE):
            raise SolverError(f"LP failure: {res.message}")
        return res

    # ---- stage 1

    def stage1(self):
        cfg, rep, n = self.cfg, self.rep, self.inst.n
        self.offer((), 0.0)
        history = []
        res = None
        for rnd in range(1, cfg.max_rounds + 1):
            res = self.solve_lp()
            if res.status != OPTIMAL:
                raise SolverError("root relaxation infeasible")
            rep.rounds1 = rnd
            S, val = round_heuristic(self.inst, res.z[:n])
            self.offer(S, val)
            rep.UB = min(rep.UB, res.objective)
            rep.trace.append(("stage1", rnd, rep.UB, rep.LB))
            history.append(res.objective)
            if len(history) > cfg.stall_rounds and history[-cfg.stall_rounds - 1] - res.objective < cfg.stall_eps:
                break
            if self.elapsed() > cfg.time_limit:
                break
            integral = sep.is_integral(res.z[:n])
            rows = self.separate(res.z, integral)
            if not rows or self.add(rows) == 0:
                break
        else:
            res = self.solve_lp()
            rep.UB = min(rep.UB, res.objective)
        # keep rows tight at the final point
        slack = self.model.beta - self.model.A @ res.z
        self.model.remove_rows(np.flatnonzero(slack > cfg.saturation))
        rep.rows_kept = self.model.nrows
        rep.UB1 = res.objective
        rep.LB1 = rep.LB
        rep.T1 = self.elapsed()
        return res

    # ---- stage 2

    def stage2(self, root):
        cfg, rep, model, n = self.cfg, self.rep, self.model, self.inst.n
        lo0, hi0 = model.lo0.copy(), model.hi0.copy()
        heap = [(-root.objective, 0, (), (), model.basis())]
        seq = 1
        status = "optimal"
        while heap:
            negb, _, f0, f1, snap = heapq.heappop(heap)
            bound = -negb
            if self.prune(bound):
                continue
            if self.elapsed() > cfg.time_limit or (cfg.node_limit is not None and rep.N >= cfg.node_limit):
                heapq.heappush(heap, (negb, -1, f0, f1, snap))
                status = "limit"
                break
            rep.N += 1
            lo, hi = lo0.copy(), hi0.copy()
            for j in f0:
                hi[j] = 0.0
            for j in f1:
                lo[j] = 1.0
            model.set_bounds(lo, hi)
            model.restore(snap)
            while True:
                res = self.solve_lp()
                if res.status == INFEASIBLE:
                    break
                if self.prune(res.objective):
                    break
                x = res.z[:n]
                if sep.is_integral(x):
                    rows = self.separate(res.z, True)
                    if rows and self.add(rows):
                        continue
                    S = tuple(int(j) for j in np.flatnonzero(x > 0.5))
                    self.offer(S, objective(self.inst, S))
                    break
                frac = np.abs(x - 0.5)
                frac[(x <= 1e-9) | (x >= 1 - 1e-9)] = np.inf
                j = int(np.argmin(frac))
                snap2 = model.basis()
                b = min(bound, res.objective)
                heapq.heappush(heap, (-b, seq, f0, tuple(sorted(f1 + (j,))), snap2))
                heapq.heappush(heap, (-b, seq + 1, tuple(sorted(f0 + (j,))), f1, snap2))
                seq += 2
                break
            open_best = -heap[0][0] if heap else -math.inf
            rep.UB = min(rep.UB, max(rep.LB, open_best))
            rep.trace.append(("stage2", rep.N, rep.UB, rep.LB))
        if status == "optimal":
            rep.UB = rep.LB
        else:
            rep.UB = min(rep.UB, max(rep.LB, max(-h[0] for h in heap)))
        model.set_bounds(lo0, hi0)
        rep.status = status


def branch_and_cut(inst: Instance, cfg: SolveConfig | None = None, cut_log=None) -> SolveReport:
    cfg = cfg or SolveConfig()
    run = _Run(inst, cfg, cut_log)
    root = run.stage1()
    run.stage2(root)
    rep = run.rep
    rep.argmax = run.best_S
    rep.nu = rep.LB
    rep.T = run.elapsed()
    return rep


def solve_gbd(inst: Instance, cfg: SolveConfig | None = None, cut_log=None) -> SolveReport:
    cfg = cfg or SolveConfig(family="gbd")
    if cfg.family != "gbd":
        cfg = SolveConfig(**{**cfg.__dict__, "family": "gbd"})
    return branch_and_cut(inst, cfg, cut_log)


def solve(inst: Instance, family: str = "lsi", **kw) -> SolveReport:
    return branch_and_cut(inst, SolveConfig(family=family, **kw))


def stage1_bound(inst: Instance, family: str, **kw) -> tuple:
    """Root bounds ``(UB1, LB1)`` without running the tree search."""
    run = _Run(inst, SolveConfig(family=family, **kw))
    run.stage1()
    return run.rep.UB1, run.rep.LB1


def gap_improvement(ub_a: float, ub_b: float, nu: float):
    """Percentage of the root gap of ``b`` closed by ``a``; None when the bounds coincide."""
    if abs(ub_a - ub_b) <= 1e-9 * max(1.0, abs(ub_b)):
        return None
    den = nu - ub_b
    if den == 0:
        return None
    return 100.0 * (ub_a - ub_b) / den
