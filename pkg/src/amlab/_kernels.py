"""Compiled inner loops (policy iteration, min-plus products)."""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _cost(base, lin, f, succ, x, k):
    return base[x, k] - lin[k] - (f[succ[x, k]] - f[x])


@njit(cache=True, nogil=True)
def howard(base, lin, f, succ, policy, eps, max_iter):
    """Howard policy iteration for the minimum mean cycle.

    ``policy`` (one offset index per node) is updated in place.  Returns
    ``(eta, v, iterations)`` where ``eta`` is the mean per step of the cycle
    each node's policy path reaches and ``v`` the bias, normalised to zero at
    the smallest node of every policy cycle.  ``iterations < 0`` signals the
    iteration budget ran out.
    """
    n, K = base.shape
    eta = np.empty(n)
    v = np.empty(n)
    state = np.empty(n, np.int64)
    path = np.empty(n, np.int64)
    for it in range(max_iter):
        state[:] = 0
        for start in range(n):
            if state[start] != 0:
                continue
            m = 0
            x = start
            while state[x] == 0:
                state[x] = 1
                path[m] = x
                m += 1
                x = succ[x, policy[x]]
            if state[x] == 1:
                p = m - 1
                while path[p] != x:
                    p -= 1
                tot = 0.0
                hpos = p
                for q in range(p, m):
                    y = path[q]
                    tot += _cost(base, lin, f, succ, y, policy[y])
                    if y < path[hpos]:
                        hpos = q
                lam = tot / (m - p)
                clen = m - p
                h = path[hpos]
                eta[h] = lam
                v[h] = 0.0
                state[h] = 2
                q = hpos
                for _ in range(clen - 1):
                    q -= 1
                    if q < p:
                        q = m - 1
                    y = path[q]
                    s = succ[y, policy[y]]
                    eta[y] = lam
                    v[y] = _cost(base, lin, f, succ, y, policy[y]) - lam + v[s]
                    state[y] = 2
                m = p
            for q in range(m - 1, -1, -1):
                y = path[q]
                s = succ[y, policy[y]]
                eta[y] = eta[s]
                v[y] = _cost(base, lin, f, succ, y, policy[y]) - eta[s] + v[s]
                state[y] = 2

        changed = False
        for x in range(n):
            best = eta[x] - eps
            bk = -1
            for k in range(K):
                e = eta[succ[x, k]]
                if e < best:
                    best = e
                    bk = k
            if bk >= 0:
                policy[x] = bk
                changed = True
        if changed:
            continue
        for x in range(n):
            best = v[x] - eps
            bk = -1
            ex = eta[x]
            for k in range(K):
                s = succ[x, k]
                if abs(eta[s] - ex) <= eps:
                    val = _cost(base, lin, f, succ, x, k) - ex + v[s]
                    if val < best:
                        best = val
                        bk = k
            if bk >= 0:
                policy[x] = bk
                changed = True
        if not changed:
            return eta, v, it + 1
    return eta, v, -1


@njit(cache=True, nogil=True)
def reduced_costs(base, lin, f, succ, lam, v):
    n, K = base.shape
    out = np.empty((n, K))
    for x in range(n):
        for k in range(K):
            out[x, k] = _cost(base, lin, f, succ, x, k) - lam + v[succ[x, k]] - v[x]
    return out


@njit(cache=True, nogil=True)
def minplus_step(u, base, lin, f, succ, shift):
    """One forward min-plus step: ``out[y] = min over edges x->y of u[x] + cost + shift``."""
    n, K = base.shape
    out = np.full(n, np.inf)
    for x in range(n):
        ux = u[x]
        if ux == np.inf:
            continue
        for k in range(K):
            y = succ[x, k]
            val = ux + _cost(base, lin, f, succ, x, k) + shift
            if val < out[y]:
                out[y] = val
    return out
