"""Discretised action functional as a weighted digraph on an N x N torus grid.

Node ``i * N + j`` sits at ``(i/N, j/N)``.  Every node carries one edge per
stencil offset ``(a, b)``; the edge displaces by ``(a, b)/N`` in one time
step ``tau`` and its integer winding increment is ``(a, b)`` (in cell units).
"""
from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .lagrangian import (CohomologyClass, HomologyClass, LagrangianSpec, as_cohomology,
                         speed_bound, step_action)

__all__ = ["ActionGraph", "Cycle", "StencilError", "build_graph", "edge_cost",
           "reweighted_costs", "brute_force_min_mean", "export_adjacency",
           "StencilSaturationWarning"]


class StencilError(ValueError):
    """The requested discretisation cannot carry the a priori speed bound."""

    def __init__(self, msg, suggestion=None):
        super().__init__(msg)
        self.suggestion = suggestion


class StencilSaturationWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class ActionGraph:
    L: LagrangianSpec
    N: int
    tau: float
    omega_max: float
    radius: float              # stencil disc radius in cells
    offsets: np.ndarray        # (K, 2) int
    base: np.ndarray           # (N*N, K) base cost of edge (tail node, offset k)
    boundary: np.ndarray       # (K,) bool, offset in the outermost ring

    @property
    def n_nodes(self) -> int:
        return self.N * self.N

    @property
    def n_edges(self) -> int:
        return self.base.size

    @property
    def self_loop(self) -> int:
        return int(np.flatnonzero((self.offsets[:, 0] == 0) & (self.offsets[:, 1] == 0))[0])

    @property
    def positions(self) -> np.ndarray:
        i, j = np.divmod(np.arange(self.n_nodes), self.N)
        return np.stack([i, j], axis=1) / self.N

    def successors(self) -> np.ndarray:
        """(n, K) array of edge heads."""
        N = self.N
        i, j = np.divmod(np.arange(self.n_nodes), N)
        a = self.offsets[:, 0]
        b = self.offsets[:, 1]
        return (((i[:, None] + a) % N) * N + (j[:, None] + b) % N).astype(np.int64)

    def node(self, i: int, j: int) -> int:
        return (i % self.N) * self.N + (j % self.N)

    @property
    def omega_resolution(self) -> float:
        """Velocity lattice spacing ``1/(N tau)``; the cohomology-side resolution."""
        return 1.0 / (self.N * self.tau)

    @property
    def tol_disc(self) -> float:
        """Velocity-quantisation error scale of alpha on this graph."""
        return self.L.lambda_max * self.omega_resolution ** 2 / 8.0


def build_graph(L: LagrangianSpec, N: int, tau: float, omega_max: float) -> ActionGraph:
    """Build the one-step action graph.

    The stencil holds every offset with ``|(a, b)| / (N tau) <= speed_bound``
    plus the four unit offsets.  Refuses when the stencil radius
    ``R = ceil(V tau N)`` reaches half the grid, where heads would wrap.
    """
    if N < 8:
        raise ValueError("N must be at least 8")
    if tau <= 0:
        raise ValueError("tau must be positive")
    vmax = speed_bound(L, omega_max)
    rad = vmax * tau * N
    R = math.ceil(rad - 1e-9)
    if 2 * R >= N:
        tau_ok = (N / 2 - 1) / (vmax * N)
        n_ok = N
        raise StencilError(
            "stencil radius %d does not fit N=%d (need 2R < N); use tau <= %.4g" % (R, N, tau_ok),
            suggestion=(n_ok, tau_ok))
    r = int(math.floor(rad + 1e-9))
    offs = [(a, b) for a in range(-r, r + 1) for b in range(-r, r + 1)
            if a * a + b * b <= rad * rad + 1e-9]
    for u in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
        if u not in offs:
            offs.append(u)
    offsets = np.array(sorted(offs), dtype=np.int64)
    norms = np.hypot(offsets[:, 0], offsets[:, 1])
    boundary = norms > max(rad - 1.0, 0.0) + 1e-9
    boundary[(offsets[:, 0] == 0) & (offsets[:, 1] == 0)] = False

    pos = np.stack(np.divmod(np.arange(N * N), N), axis=1) / N
    d = offsets / N
    K = len(offsets)
    base = step_action(L, np.broadcast_to(pos[:, None, :], (N * N, K, 2)),
                       np.broadcast_to(d[None, :, :], (N * N, K, 2)), tau)
    base = np.ascontiguousarray(base, dtype=float)
    if not np.all(np.isfinite(base)):
        raise ValueError("non-finite base cost")
    base.setflags(write=False)
    offsets.setflags(write=False)
    boundary.setflags(write=False)
    return ActionGraph(L, int(N), float(tau), float(omega_max), float(rad), offsets, base, boundary)


def _exact_term(g: ActionGraph, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.size != g.n_nodes:
        raise ValueError("exact part must have N*N entries")
    succ = g.successors()
    return f[succ] - f[:, None]


def reweighted_costs(g: ActionGraph, omega) -> np.ndarray:
    """(n, K) costs of ``L - omega``: ``base - <c, d> - (f(head) - f(tail))``."""
    omega = as_cohomology(omega)
    c1, c2 = omega.coefficients
    lin = (c1 * g.offsets[:, 0] + c2 * g.offsets[:, 1]) / g.N
    out = g.base - lin[None, :]
    if omega.exact_part is not None:
        out = out - _exact_term(g, omega.exact_part)
    return out


def edge_cost(g: ActionGraph, e, omega) -> float:
    """Cost of edge ``e = (tail node, offset index)`` for ``L - omega``."""
    node, k = e
    omega = as_cohomology(omega)
    a, b = g.offsets[k]
    c1, c2 = omega.coefficients
    val = g.base[node, k] - (c1 * a + c2 * b) / g.N
    if omega.exact_part is not None:
        f = np.asarray(omega.exact_part, dtype=float).reshape(-1)
        head = g.node(node // g.N + a, node % g.N + b)
        val -= f[head] - f[node]
    return float(val)


@dataclass(frozen=True)
class Cycle:
    """Closed walk on an action graph, started at its smallest node."""

    nodes: tuple
    steps: tuple           # offset index per edge, edge t leaves nodes[t]
    tau: float
    N: int
    winding: tuple         # integer homology class (sum of offsets) / N

    @property
    def length(self) -> int:
        return len(self.nodes)

    @property
    def period(self) -> float:
        return self.length * self.tau

    @property
    def rotation(self) -> HomologyClass:
        q = self.length * Fraction(self.tau).limit_denominator(10 ** 9)
        return HomologyClass((0, 0), rational=(Fraction(self.winding[0]) / q,
                                               Fraction(self.winding[1]) / q))

    def total_cost(self, g: ActionGraph, omega=(0.0, 0.0)) -> float:
        return float(sum(edge_cost(g, (x, k), omega) for x, k in zip(self.nodes, self.steps)))

    def mean_cost(self, g: ActionGraph, omega=(0.0, 0.0)) -> float:
        """Mean cost per unit time."""
        return self.total_cost(g, omega) / self.period

    def key(self) -> tuple:
        return (self.nodes, self.steps)

    @classmethod
    def from_walk(cls, g: ActionGraph, nodes: Sequence[int], steps: Sequence[int]) -> "Cycle":
        nodes = [int(v) for v in nodes]
        steps = [int(k) for k in steps]
        if not nodes or len(nodes) != len(steps):
            raise ValueError("walk needs one step per node")
        for t, (x, k) in enumerate(zip(nodes, steps)):
            a, b = g.offsets[k]
            if g.node(x // g.N + a, x % g.N + b) != nodes[(t + 1) % len(nodes)]:
                raise ValueError("step %d does not lead to the next node" % t)
        s = min(range(len(nodes)), key=lambda t: (nodes[t], nodes[t + 1:] + nodes[:t]))
        nodes = nodes[s:] + nodes[:s]
        steps = steps[s:] + steps[:s]
        tot = g.offsets[steps].sum(axis=0)
        if np.any(tot % g.N):
            raise ValueError("walk is not closed on the torus")
        w = tuple(int(v) for v in tot // g.N)
        return cls(tuple(nodes), tuple(steps), g.tau, g.N, w)


def canonical_rotation(seq: Sequence[int]) -> tuple:
    """Rotate a node sequence so it starts at its lexicographically smallest rotation."""
    seq = list(seq)
    n = len(seq)
    best = min(range(n), key=lambda t: seq[t:] + seq[:t])
    return tuple(seq[best:] + seq[:best])


def _cycle_mean(W: np.ndarray, cyc: Sequence[int], tau: float) -> float:
    total = 0.0
    for t in range(len(cyc)):
        total += W[cyc[t], cyc[(t + 1) % len(cyc)]]
    return total / (len(cyc) * tau)


def _as_dense(graph) -> np.ndarray:
    """Dense cost matrix (inf = no edge) from a matrix or ``(n, edges)``."""
    if isinstance(graph, tuple) and len(graph) == 2 and np.isscalar(graph[0]):
        n, edges = graph
        W = np.full((int(n), int(n)), np.inf)
        for u, v, c in edges:
            W[u, v] = min(W[u, v], float(c))
        return W
    W = np.array(graph, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("cost matrix must be square")
    return W


def brute_force_min_mean(graph, tau: float = 1.0):
    """Exact minimum mean cycle by enumerating every simple cycle.

    ``graph`` is a dense cost matrix with ``inf`` for missing edges or a pair
    ``(n, [(u, v, cost), ...])``; parallel edges keep the cheapest.  Returns
    ``(mean per unit time, node tuple)``; ties go to the lexicographically
    smallest canonical node sequence.
    """
    W = _as_dense(graph)
    n = W.shape[0]
    if n > 8:
        raise ValueError("brute force limited to 8 nodes")
    best = None
    # simple cycles whose smallest node is s, by DFS over larger nodes
    for s in range(n):
        stack = [(s, (s,))]
        while stack:
            v, path = stack.pop()
            for w in range(n):
                if not np.isfinite(W[v, w]):
                    continue
                if w == s:
                    m = _cycle_mean(W, path, tau)
                    cand = (m, path)
                    if best is None or cand < best:
                        best = cand
                elif w > s and w not in path:
                    stack.append((w, path + (w,)))
    if best is None:
        raise ValueError("graph has no cycle")
    return best


def export_adjacency(g: ActionGraph, delimiter: str = ",") -> str:
    """Adjacency records ``node, a, b, base_cost, w1, w2`` one edge per line."""
    buf = io.StringIO()
    buf.write(delimiter.join(["node", "a", "b", "base_cost", "w1", "w2"]) + "\n")
    for x in range(g.n_nodes):
        for k, (a, b) in enumerate(g.offsets):
            buf.write(delimiter.join([str(x), str(a), str(b), repr(float(g.base[x, k])),
                                      str(a), str(b)]) + "\n")
    return buf.getvalue()


def saturation_warning(g: ActionGraph, where: str):
    warnings.warn("critical cycle uses a maximal-radius offset (%s); increase omega_max or refine"
                  % where, StencilSaturationWarning, stacklevel=3)
