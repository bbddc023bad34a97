"""Command line: ``cflp {generate,solve,verify,bench}``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 time or
node limit reached with a positive gap.
"""
from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import instance as inst_mod
from .solver import FAMILY_CHOICES, SolveConfig, branch_and_cut, gap_improvement

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2, 3


def _gamma_arg(s: str):
    if s.lower() == "nh":
        return "nh"
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError("gamma must be a positive integer or 'nh'") from None
    if v < 1:
        raise argparse.ArgumentTypeError("gamma must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cflp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", help="write a random gravity-rule instance")
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--gamma", type=_gamma_arg, default=1)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--coord-max", type=float, default=1000.0)
    g.add_argument("--fixed-cost", type=float, default=2000.0)
    g.add_argument("--outside", type=float, default=50.0)
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--cuts", choices=FAMILY_CHOICES, default="lsi")
    s.add_argument("--time", type=float, default=7200.0)
    s.add_argument("--gap", type=float, default=0.0)
    s.add_argument("--node-limit", type=int, default=None)
    s.add_argument("--report", default=None, help="write the flat JSON report here")
    s.add_argument("--cut-log", default=None, help="append one line per added row")

    v = sub.add_parser("verify", help="brute-force checks on an instance file")
    v.add_argument("--in", dest="inp", required=True)
    v.add_argument("--suite", choices=("phi", "cuts", "lift", "hull", "all"), default="all")
    v.add_argument("--trials", type=int, default=200)
    v.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("bench", help="run a matrix of generated cells")
    b.add_argument("--m", type=int, nargs="*", default=[50])
    b.add_argument("--n", type=int, nargs="*", default=[25])
    b.add_argument("--gamma", type=_gamma_arg, nargs="*", default=[2])
    b.add_argument("--seeds", type=int, nargs="*", default=[1])
    b.add_argument("--families", nargs="*", choices=FAMILY_CHOICES, default=["lsi", "gbd"])
    b.add_argument("--gi", default=None, help="pair 'a:b' for the gap improvement (default: first two families)")
    b.add_argument("--time", type=float, default=600.0)
    b.add_argument("--json", default=None, help="write the machine-readable document here")
    b.add_argument("--profile", default=None, help="write fraction-solved curves here")
    return p


# ---------------------------------------------------------------- generate / solve


def cmd_generate(a) -> int:
    cfg = inst_mod.GenConfig(m=a.m, n=a.n, gamma=a.gamma, seed=a.seed, coord_max=a.coord_max,
                             fixed_cost=a.fixed_cost, outside_distance=a.outside)
    try:
        cfg.validate()
    except ValueError as e:
        print(f"cflp generate: {e}", file=sys.stderr)
        return EXIT_USAGE
    inst_mod.write(inst_mod.generate(cfg), a.out)
    return EXIT_OK


def cmd_solve(a) -> int:
    inst = inst_mod.read(a.inp)
    cfg = SolveConfig(family=a.cuts, time_limit=a.time, gap=a.gap, node_limit=a.node_limit)
    log = open(a.cut_log, "a") if a.cut_log else None
    try:
        rep = branch_and_cut(inst, cfg, cut_log=log)
    finally:
        if log is not None:
            log.close()
    text = rep.to_json()
    if a.report:
        with open(a.report, "w") as fh:
            fh.write(text)
    print(f"status={rep.status} nu={rep.nu!r} UB={rep.UB!r} N={rep.N} T={rep.T:.3f}s argmax={rep.to_dict()['argmax']}")
    return EXIT_LIMIT if rep.status == "limit" and rep.gap_pct > 0 else EXIT_OK


# ---------------------------------------------------------------- verify


def _subsets(n, rng, limit):
    if n <= 12:
        return [tuple(j for j in range(n) if (k >> j) & 1) for k in range(1 << n)]
    return [tuple(np.flatnonzero(rng.random(n) < 0.5)) for _ in range(limit)]


def verify_instance(inst, suite: str = "all", trials: int = 200, seed: int = 0, out=None) -> bool:
    from . import capture as cap, cuts, lifting, oracle

    rng = np.random.default_rng(seed)
    out = out or sys.stdout
    ok = True

    def report(name, passed, detail=""):
        nonlocal ok
        ok &= bool(passed)
        print(f"{'PASS' if passed else 'FAIL'} {name} {detail}".rstrip(), file=out)

    want = {"phi", "cuts", "lift", "hull"} if suite == "all" else {suite}
    for i, v in enumerate(inst.views):
        if "phi" in want:
            sets = _subsets(v.n, rng, trials) if v.n <= 22 else []
            worst = max((abs(cap.phi(v, S) - oracle.brute_phi(v, S)) for S in sets), default=0.0)
            report(f"phi customer={i}", worst <= 1e-12, f"max_err={worst:.3g}")
        if ("cuts" in want or "lift" in want) and v.n > oracle.MAX_BRUTE_N:
            report(f"cuts customer={i}", True, "skipped: n too large to enumerate")
            continue
        if "cuts" in want:
            bad = 0
            for _ in range(max(1, trials // 20)):
                S = tuple(np.flatnonzero(rng.random(v.n) < 0.4))
                x = np.zeros(v.n)
                x[v.perm[list(S)]] = 1.0
                for row in (cuts.si_cut(v, S, i), cuts.sibar_cut(v, S, i), cuts.benders_cut(v, x, i)):
                    bad += not oracle.certify_valid(v, row).valid
                if v.gamma == 1:
                    bad += sum(not oracle.certify_valid(v, r).valid for r in cuts.gamma1_rows(v, i))
            report(f"cuts customer={i}", bad == 0, f"invalid={bad}")
        if "lift" in want:
            bad = 0
            for _ in range(max(1, trials // 40)):
                S = tuple(np.flatnonzero(rng.random(v.n) < 0.4))
                seed_dn = cap.truncate(v, S).S_gamma
                rows = [lifting.lift_down(v, seed_dn, list(rng.permutation(seed_dn)), i)]
                Sb = cap.bar_set(v, S)
                comp = [j for j in range(v.n) if j not in Sb]
                rows.append(lifting.lift_up(v, Sb, list(rng.permutation(comp)), i))
                bad += sum(not oracle.certify_valid(v, r).valid for r in rows)
            report(f"lift customer={i}", bad == 0, f"invalid={bad}")
        if "hull" in want and v.gamma == 1 and v.n <= 12:
            passed, worst = oracle.hull_probe_report(v, trials, seed + i)
            report(f"hull customer={i}", passed, f"max_err={worst:.3g}")
    return ok


def cmd_verify(a) -> int:
    inst = inst_mod.read(a.inp)
    return EXIT_OK if verify_instance(inst, a.suite, a.trials, a.seed) else EXIT_VERIFY


# ---------------------------------------------------------------- bench


def _run_cell(cell):
    m, n, gamma, seed, fam, tlim = cell
    try:
        inst = inst_mod.generate(inst_mod.GenConfig(m=m, n=n, gamma=gamma, seed=seed))
        rep = branch_and_cut(inst, SolveConfig(family=fam, time_limit=tlim))
        d = rep.to_dict()
    except Exception as e:  # a failed cell must not stop the run
        d = {"family": fam, "status": "error", "error": f"{type(e).__name__}: {e}"}
    d.update({"m": m, "n": n, "gamma": gamma, "seed": seed})
    return d


def bench_cells(ms, ns, gammas, seeds, families, tlim) -> list:
    return [(m, n, g, s, f, tlim) for m, n, g, s in itertools.product(ms, ns, gammas, seeds) for f in families]


def run_bench(cells, workers: int | None = None) -> list:
    workers = workers or int(os.environ.get("CFLP_THREADS", "1") or 1)
    if workers <= 1 or len(cells) <= 1:
        return [_run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_cell, cells))


def gi_rows(results, fam_a, fam_b) -> list:
    by = {}
    for r in results:
        by[(r["m"], r["n"], r["gamma"], r["seed"], r["family"])] = r
    out = []
    for key in sorted({k[:4] for k in by}, key=str):
        a, b = by.get(key + (fam_a,)), by.get(key + (fam_b,))
        if not a or not b or a.get("status") == "error" or b.get("status") == "error":
            continue
        nu = max(a["nu"], b["nu"])
        gi = gap_improvement(a["UB1"], b["UB1"], nu)
        out.append({"m": key[0], "n": key[1], "gamma": key[2], "seed": key[3], "pair": f"{fam_a}:{fam_b}",
                    "GI%": "--" if gi is None else gi,
                    "N_a": a["N"], "N_b": b["N"]})
    return out


COLUMNS = ("m", "n", "gamma", "seed", "family", "status", "T", "G%", "CT", "N", "nu", "UB1", "LB1", "T1")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}" if abs(v) < 1e6 else f"{v:.4e}"
    return str(v)


def format_table(results, gis) -> str:
    lines = []
    if results:
        rows = [[_fmt(r.get(c, "")) for c in COLUMNS] for r in results]
        widths = [max(len(c), *(len(row[k]) for row in rows)) for k, c in enumerate(COLUMNS)]
        lines.append("  ".join(c.rjust(w) for c, w in zip(COLUMNS, widths)))
        lines.extend("  ".join(x.rjust(w) for x, w in zip(row, widths)) for row in rows)
    if gis:
        lines.append("")
        cols = ("m", "n", "gamma", "seed", "pair", "GI%", "N_a", "N_b")
        rows = [[_fmt(g[c]) for c in cols] for g in gis]
        widths = [max(len(c), *(len(row[k]) for row in rows)) for k, c in enumerate(cols)]
        lines.append("  ".join(c.rjust(w) for c, w in zip(cols, widths)))
        lines.extend("  ".join(x.rjust(w) for x, w in zip(row, widths)) for row in rows)
    return "\n".join(lines) + ("\n" if lines else "")


def profile_curves(results) -> str:
    """Columns ``family metric value fraction``: share of cells solved within a time or node budget."""
    lines = ["family metric value fraction"]
    fams = sorted({r["family"] for r in results})
    for fam in fams:
        cells = [r for r in results if r["family"] == fam]
        solved = [r for r in cells if r.get("status") == "optimal"]
        for metric in ("T", "N"):
            vals = sorted(r[metric] for r in solved)
            for k, val in enumerate(vals, 1):
                lines.append(f"{fam} {metric} {val!r} {k / len(cells)!r}")
    return "\n".join(lines) + "\n"


def cmd_bench(a) -> int:
    cells = bench_cells(a.m, a.n, a.gamma, a.seeds, a.families, a.time)
    results = run_bench(cells)
    pair = a.gi.split(":") if a.gi else (a.families[:2] if len(a.families) >= 2 else None)
    gis = gi_rows(results, pair[0], pair[1]) if pair and len(pair) == 2 else []
    sys.stdout.write(format_table(results, gis))
    if a.json:
        with open(a.json, "w") as fh:
            json.dump({"cells": results, "gi": gis}, fh, indent=1)
            fh.write("\n")
    if a.profile:
        with open(a.profile, "w") as fh:
            fh.write(profile_curves(results))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        return {"generate": cmd_generate, "solve": cmd_solve, "verify": cmd_verify, "bench": cmd_bench}[a.cmd](a)
    except (inst_mod.InstanceFormatError, OSError) as e:
        print(f"cflp {a.cmd}: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
