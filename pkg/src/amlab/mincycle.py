"""Minimum mean cycle solvers.

``karp`` is the exact O(V E) recurrence on dense cost matrices and serves
small graphs.  ``solve_action_graph`` runs policy iteration on an action
graph and then reads the critical structure off the tight-edge subgraph.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .graph import ActionGraph, _as_dense, _cycle_mean
from .lagrangian import as_cohomology

__all__ = ["karp", "karp_value", "CriticalStructure", "solve_action_graph"]


def karp_value(W: np.ndarray) -> float:
    """Raw Karp minimum mean (per edge) of a dense cost matrix, ``inf`` = no edge."""
    n = W.shape[0]
    D = np.full((n + 1, n), np.inf)
    D[0] = 0.0
    for k in range(1, n + 1):
        D[k] = np.min(D[k - 1][:, None] + W, axis=0)
    best = np.inf
    with np.errstate(invalid="ignore"):
        for v in range(n):
            if not np.isfinite(D[n, v]):
                continue
            ks = np.arange(n)
            fin = np.isfinite(D[:n, v])
            worst = np.max((D[n, v] - D[:n, v][fin]) / (n - ks[fin]))
            best = min(best, worst)
    if not np.isfinite(best):
        raise ValueError("graph has no cycle")
    return float(best)


def _tight_cycles(W: np.ndarray, lam: float, tol: float):
    """Simple cycles of the subgraph of edges tight for ``W - lam``."""
    import networkx as nx

    n = W.shape[0]
    p = np.zeros(n)
    Wl = W - lam
    for _ in range(n + 1):
        p = np.minimum(p, np.min(p[:, None] + Wl, axis=0))
    red = Wl + p[:, None] - p[None, :]
    G = nx.DiGraph()
    G.add_nodes_from(range(n))
    us, vs = np.nonzero(np.isfinite(W) & (red <= tol))
    G.add_edges_from(zip(us.tolist(), vs.tolist()))
    return nx.simple_cycles(G)


def karp(graph, tau: float = 1.0):
    """Minimum mean cycle by Karp's recurrence.

    Returns ``(mean per unit time, node tuple)`` with the same tie-breaking
    as :func:`amlab.graph.brute_force_min_mean`: the reported mean is the
    canonical-order mean of the optimal cycle, the cycle the lexicographically
    smallest among exact minimisers.
    """
    W = _as_dense(graph)
    lam = karp_value(W)
    scale = max(1.0, float(np.max(np.abs(W[np.isfinite(W)]))))
    best = None
    for cyc in _tight_cycles(W, lam, 1e-9 * scale):
        s = int(np.argmin(cyc))
        cyc = tuple(int(c) for c in cyc[s:] + cyc[:s])
        cand = (_cycle_mean(W, cyc, tau), cyc)
        if best is None or cand < best:
            best = cand
    return best


@dataclass(frozen=True, eq=False)
class CriticalStructure:
    """Output of a minimum-mean-cycle solve on an action graph."""

    lam: float                # minimum mean cost per step
    v: np.ndarray             # bias: cost - lam + v(head) - v(tail) >= 0
    policy: np.ndarray
    tight: np.ndarray         # (n, K) bool, reduced cost <= tol
    critical_nodes: np.ndarray   # (n,) bool, on a critical cycle
    critical_edges: np.ndarray   # (n, K) bool, tight and inside a critical component
    labels: np.ndarray        # strong component labels of the tight subgraph
    iterations: int
    tol: float


def solve_action_graph(g: ActionGraph, omega, policy: Optional[np.ndarray] = None,
                       tol: Optional[float] = None, max_iter: int = 10_000) -> CriticalStructure:
    """Minimum mean cycle of the reweighted action graph by policy iteration."""
    omega = as_cohomology(omega)
    succ = _succ_cache(g)
    lin = (omega.coefficients[0] * g.offsets[:, 0] + omega.coefficients[1] * g.offsets[:, 1]) / g.N
    lin = np.ascontiguousarray(lin, dtype=float)
    if omega.exact_part is not None:
        f = np.ascontiguousarray(np.asarray(omega.exact_part, dtype=float).reshape(-1))
        if f.size != g.n_nodes:
            raise ValueError("exact part must have N*N entries")
    else:
        f = np.zeros(g.n_nodes)
    if policy is None:
        cost0 = g.base - lin[None, :]
        if omega.exact_part is not None:
            cost0 = cost0 - (f[succ] - f[:, None])
        policy = np.argmin(cost0, axis=1).astype(np.int64)
    else:
        policy = np.array(policy, dtype=np.int64)
    scale = max(1.0, float(np.max(np.abs(g.base))))
    eps = 1e-12 * scale
    eta, v, iters = _kernels.howard(g.base, lin, f, succ, policy, eps, max_iter)
    if iters < 0:
        raise RuntimeError("policy iteration did not converge in %d rounds" % max_iter)
    lam = float(np.min(eta))
    if np.max(eta) - lam > 1e-9 * scale:
        raise RuntimeError("policy iteration ended with several cycle means; graph not strongly connected?")
    red = _kernels.reduced_costs(g.base, lin, f, succ, lam, v)
    if tol is None:
        tol = 1e-9 * scale + 1e-13 * float(np.max(np.abs(v)))
    tight = red <= tol
    n, K = tight.shape
    rows = np.repeat(np.arange(n), K)[tight.ravel()]
    cols = succ[tight]
    T = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    _, labels = connected_components(T, directed=True, connection="strong")
    same = labels[succ] == labels[:, None]
    crit_e = tight & same
    crit_n = crit_e.any(axis=1)
    return CriticalStructure(lam, v, policy, tight, crit_n, crit_e, labels, iters, tol)


_SUCC = {}


def _succ_cache(g: ActionGraph) -> np.ndarray:
    key = id(g)
    hit = _SUCC.get(key)
    if hit is not None and hit[0] is g:
        return hit[1]
    if len(_SUCC) > 8:
        _SUCC.clear()
    s = np.ascontiguousarray(g.successors())
    _SUCC[key] = (g, s)
    return s
