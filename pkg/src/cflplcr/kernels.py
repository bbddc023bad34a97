"""Hot loops, each written as an ``@njit`` loop version and a numpy version.

The public names at the bottom dispatch on ``CFLP_DISABLE_NUMBA``.  Both
twins perform the same floating-point operations in the same order per
output entry, so results agree bit for bit (the tests check this).
"""
import numpy as np

from ._accel import njit, pick

# --------------------------------------------------------------------------
# subset enumeration: capture value of every subset mask


@njit
def _enum_phi_nb(u, u0, gamma):
    n = u.shape[0]
    total = 1 << n
    out = np.empty(total)
    top = np.zeros(max(gamma, 1))
    for mask in range(total):
        # keep the gamma largest selected utilities, descending
        for k in range(gamma):
            top[k] = 0.0
        for j in range(n):
            if (mask >> j) & 1:
                v = u[j]
                if v > top[gamma - 1]:
                    k = gamma - 1
                    while k > 0 and top[k - 1] < v:
                        top[k] = top[k - 1]
                        k -= 1
                    top[k] = v
        s = 0.0
        for k in range(gamma):
            s += top[k]
        out[mask] = s / (s + u0)
    return out


def _mask_bits(n):
    masks = np.arange(1 << n, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1).astype(bool)


def _enum_phi_np(u, u0, gamma):
    n = u.shape[0]
    bits = _mask_bits(n)
    vals = np.where(bits, u[None, :], 0.0)
    vals = -np.sort(-vals, axis=1)
    s = np.zeros(1 << n)
    for k in range(min(gamma, n)):
        s = s + vals[:, k]
    return s / (s + u0)


def _enum_objective_impl(enum_phi):
    def run(u, u0, gamma, b, f):
        m, n = u.shape
        total = np.zeros(1 << n)
        for i in range(m):
            g = min(int(gamma[i]), n) if n else 1
            total = total + b[i] * enum_phi(u[i], u0[i], max(g, 1))
        bits = _mask_bits(n)
        cost = np.zeros(1 << n)
        for j in range(n):
            cost = cost + np.where(bits[:, j], f[j], 0.0)
        return total - cost
    return run


# --------------------------------------------------------------------------
# lifting DP
#
# Z_t(lam, tau) = best value of  g(lam + sum_{j<=t} u_j y_j) - sum_{j<=t} a_j y_j
# with exactly tau of the first t priced items chosen, where g(v) = v/(v+u0).
# Base cases: tau == 0 and tau == t.  Otherwise
#   Z_t(lam, tau) = max(Z_{t-1}(lam, tau), -a_t + Z_{t-1}(lam + u_t, tau - 1)).
# States reachable from the roots (q, f(gamma - tau0), tau0) are generated
# level by level (deduplicated on the exact lam value), then evaluated from
# level 0 upward.


@njit
def _base_nb(pu, pa, u0, t, lam, tau):
    if tau == 0:
        return lam / (lam + u0)
    s = lam
    c = 0.0
    for j in range(t - 1, -1, -1):
        s += pu[j]
        c += pa[j]
    return s / (s + u0) - c


@njit
def _lift_dp_nb(pu, pa, u0, lam0):
    q = pu.shape[0]
    kmax = lam0.shape[0]  # taus 0..kmax-1, kmax-1 <= q
    # per level: lam values and taus, sorted by (tau, lam)
    lev_lam = [np.empty(0)] * (q + 1)
    lev_tau = [np.empty(0, dtype=np.int64)] * (q + 1)
    lev_lam[q] = lam0.copy()
    lev_tau[q] = np.arange(kmax).astype(np.int64)
    for t in range(q, 0, -1):
        lam = lev_lam[t]
        tau = lev_tau[t]
        cnt = 0
        for k in range(lam.shape[0]):
            if tau[k] != 0 and tau[k] != t:
                cnt += 2
        cl = np.empty(cnt)
        ct = np.empty(cnt, dtype=np.int64)
        c = 0
        for k in range(lam.shape[0]):
            if tau[k] != 0 and tau[k] != t:
                cl[c] = lam[k]
                ct[c] = tau[k]
                cl[c + 1] = lam[k] + pu[t - 1]
                ct[c + 1] = tau[k] - 1
                c += 2
        # dedup per tau bucket
        nl = np.empty(cnt)
        nt = np.empty(cnt, dtype=np.int64)
        w = 0
        for tv in range(kmax):
            sel = cl[ct == tv]
            if sel.shape[0] == 0:
                continue
            uq = np.unique(sel)
            for v in uq:
                nl[w] = v
                nt[w] = tv
                w += 1
        lev_lam[t - 1] = nl[:w]
        lev_tau[t - 1] = nt[:w]
    # evaluate upward
    prev_z = np.empty(0)
    prev_lam = np.empty(0)
    prev_tau = np.empty(0, dtype=np.int64)
    for t in range(0, q + 1):
        lam = lev_lam[t]
        tau = lev_tau[t]
        z = np.empty(lam.shape[0])
        for k in range(lam.shape[0]):
            tk = tau[k]
            if tk == 0 or tk == t:
                z[k] = _base_nb(pu, pa, u0, t, lam[k], tk)
            else:
                a = _lookup_nb(prev_lam, prev_tau, prev_z, lam[k], tk)
                b = -pa[t - 1] + _lookup_nb(prev_lam, prev_tau, prev_z, lam[k] + pu[t - 1], tk - 1)
                z[k] = a if a >= b else b
        prev_z, prev_lam, prev_tau = z, lam, tau
    return prev_z


@njit
def _lookup_nb(lam, tau, z, lv, tv):
    lo = 0
    hi = lam.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if tau[mid] < tv or (tau[mid] == tv and lam[mid] < lv):
            lo = mid + 1
        else:
            hi = mid
    return z[lo]


def _base_np(pu, pa, u0, t, lam, tau):
    out = lam / (lam + u0)
    full = tau == t
    if t > 0 and np.any(full):
        s = lam[full].copy()
        c = np.zeros(s.shape[0])
        for j in range(t - 1, -1, -1):
            s = s + pu[j]
            c = c + pa[j]
        out[full] = s / (s + u0) - c
    return out


def _lift_dp_np(pu, pa, u0, lam0):
    q = pu.shape[0]
    kmax = lam0.shape[0]
    levels = [None] * (q + 1)
    levels[q] = (np.array(lam0, dtype=np.float64), np.arange(kmax, dtype=np.int64))
    for t in range(q, 0, -1):
        lam, tau = levels[t]
        inner = (tau != 0) & (tau != t)
        cl = np.concatenate([lam[inner], lam[inner] + pu[t - 1]])
        ct = np.concatenate([tau[inner], tau[inner] - 1])
        order = np.lexsort((cl, ct))
        cl, ct = cl[order], ct[order]
        keep = np.ones(cl.shape[0], dtype=bool)
        keep[1:] = (cl[1:] != cl[:-1]) | (ct[1:] != ct[:-1])
        levels[t - 1] = (cl[keep], ct[keep])
    prev = None
    for t in range(0, q + 1):
        lam, tau = levels[t]
        z = _base_np(pu, pa, u0, t, lam, tau)
        inner = (tau != 0) & (tau != t)
        if np.any(inner):
            plam, ptau, pz = prev
            # composite search key: (tau, lam) sorted, so search per tau bucket
            a = _lookup_np(plam, ptau, pz, lam[inner], tau[inner])
            b = -pa[t - 1] + _lookup_np(plam, ptau, pz, lam[inner] + pu[t - 1], tau[inner] - 1)
            z[inner] = np.where(a >= b, a, b)
        prev = (lam, tau, z)
    return prev[2]


def _lookup_np(lam, tau, z, lv, tv):
    out = np.empty(lv.shape[0])
    for tb in np.unique(tv):
        lo = np.searchsorted(tau, tb, side="left")
        hi = np.searchsorted(tau, tb, side="right")
        sel = tv == tb
        idx = lo + np.searchsorted(lam[lo:hi], lv[sel], side="left")
        out[sel] = z[idx]
    return out


# --------------------------------------------------------------------------
# dispatch

_enum_phi = pick(_enum_phi_nb, _enum_phi_np)
_lift_dp = pick(_lift_dp_nb, _lift_dp_np)


def enum_phi(u, u0, gamma):
    """Capture value of every subset of one customer's facilities.

    Entry ``mask`` holds the value for the set whose bit ``j`` is set,
    in original facility order.  Independent of the sorted-view code.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    return _enum_phi(u, float(u0), int(max(1, min(gamma, u.shape[0]))) if u.shape[0] else 1)


enum_objective_nb = _enum_objective_impl(_enum_phi_nb)
enum_objective_np = _enum_objective_impl(_enum_phi_np)
_enum_objective = pick(enum_objective_nb, enum_objective_np)


def enum_objective(u, u0, gamma, b, f):
    """Revenue minus fixed cost of every subset mask."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    return _enum_objective(u, np.asarray(u0, dtype=np.float64), np.asarray(gamma),
                           np.asarray(b, dtype=np.float64), np.asarray(f, dtype=np.float64))


def lift_dp(pu, pa, u0, lam0):
    """Values ``Z_q(lam0[tau], tau)`` for ``tau = 0 .. len(lam0)-1``."""
    pu = np.ascontiguousarray(pu, dtype=np.float64)
    pa = np.ascontiguousarray(pa, dtype=np.float64)
    lam0 = np.ascontiguousarray(lam0, dtype=np.float64)
    if lam0.shape[0] > pu.shape[0] + 1:
        raise ValueError("more roots than priced items allow")
    return _lift_dp(pu, pa, float(u0), lam0)


# twins exposed for the benchmark and the backend-equivalence tests
TWINS = {
    "enum_phi": (_enum_phi_nb, _enum_phi_np),
    "lift_dp": (_lift_dp_nb, _lift_dp_np),
}
