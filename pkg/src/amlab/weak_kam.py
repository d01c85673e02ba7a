"""alpha as a minimum mean cycle, discrete weak KAM pairs, Peierls barriers,
and Aubry / Mather set estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from . import _kernels
from .graph import ActionGraph, Cycle, reweighted_costs, saturation_warning
from .lagrangian import CohomologyClass, HomologyClass, as_cohomology, as_homology
from .mincycle import CriticalStructure, _succ_cache, solve_action_graph

__all__ = [
    "AlphaValue", "WeakKAMPair", "AubryEstimate", "BarrierSample", "WeakKAMError",
    "alpha", "weak_kam_pair", "peierls", "aubry_estimate", "default_epsilon",
    "mather_estimate", "fenchel_attainment_check", "dilate",
]

# cap on the number of critical cycles materialised per solve
MAX_CYCLES = 256
_PER_COMPONENT = 8


class WeakKAMError(RuntimeError):
    """Fixed point iteration cannot converge (wrong critical value)."""


@dataclass(eq=False)
class AlphaValue:
    omega: CohomologyClass
    value: float
    critical_cycles: List[Cycle]
    saturation_flag: bool
    graph: ActionGraph = field(repr=False)
    structure: CriticalStructure = field(repr=False)
    n_components: int = 0
    truncated: bool = False

    @property
    def critical_nodes(self) -> np.ndarray:
        return self.structure.critical_nodes

    @property
    def single_cycle(self) -> bool:
        """True when the critical subgraph is exactly one simple cycle."""
        ce = self.structure.critical_edges
        if self.n_components != 1:
            return False
        return bool(np.all(ce[self.structure.critical_nodes].sum(axis=1) == 1))


def _component_cycles(g, ce, succ, nodes, cap):
    """Up to ``cap`` simple cycles of one strongly connected critical component."""
    out = []
    if len(nodes) <= 48:
        import networkx as nx

        G = nx.DiGraph()
        for x in nodes:
            for k in np.flatnonzero(ce[x]):
                G.add_edge(int(x), int(succ[x, k]), k=int(k))
        for cyc in nx.simple_cycles(G):
            steps = [G.edges[cyc[t], cyc[(t + 1) % len(cyc)]]["k"] for t in range(len(cyc))]
            out.append(Cycle.from_walk(g, cyc, steps))
            if len(out) >= cap:
                break
        return out
    # large component: follow the lowest critical offset from the smallest node
    x = int(nodes[0])
    seen = {}
    walk = []
    while x not in seen:
        seen[x] = len(walk)
        k = int(np.flatnonzero(ce[x])[0])
        walk.append((x, k))
        x = int(succ[x, k])
    cyc = walk[seen[x]:]
    out.append(Cycle.from_walk(g, [w[0] for w in cyc], [w[1] for w in cyc]))
    return out


def alpha(g: ActionGraph, omega, policy=None) -> AlphaValue:
    """Mather's alpha of the discretised Lagrangian at ``omega``.

    The minimum mean cycle of ``L - omega`` is found by policy iteration;
    critical cycles are read off the strongly connected components of the
    tight-edge subgraph.  The reported value is ``-(mean per step)/tau`` of
    the best extracted cycle, summed in canonical order.
    """
    omega = as_cohomology(omega)
    if omega.norm > g.omega_max * (1 + 1e-12) + 1e-12:
        # outside the speed bound; saturation_flag is the signal
        pass
    cs = solve_action_graph(g, omega, policy=policy)
    succ = _succ_cache(g)
    ce = cs.critical_edges
    crit = np.flatnonzero(cs.critical_nodes)
    labels = cs.labels[crit]
    comps = {}
    for x, lab in zip(crit.tolist(), labels.tolist()):
        comps.setdefault(lab, []).append(x)
    order = sorted(comps.values(), key=lambda c: c[0])
    cycles = []
    truncated = False
    for nodes in order:
        if len(cycles) >= MAX_CYCLES:
            truncated = True
            break
        cycles.extend(_component_cycles(g, ce, succ, nodes, min(_PER_COMPONENT, MAX_CYCLES - len(cycles))))
    costs = reweighted_costs(g, omega)
    best = None
    for c in cycles:
        tot = 0.0
        for x, k in zip(c.nodes, c.steps):
            tot += costs[x, k]
        m = tot / c.length
        if best is None or (m, c.nodes) < best:
            best = (m, c.nodes)
    lam = best[0] if best is not None else cs.lam
    value = -lam / g.tau + 0.0
    sat = bool(np.any(ce[:, g.boundary]))
    if sat:
        saturation_warning(g, "omega=%s" % (omega.coefficients,))
    return AlphaValue(omega, value, cycles, sat, g, cs, len(order), truncated)


# ---------------------------------------------------------------------------
# weak KAM pairs


@dataclass(eq=False)
class WeakKAMPair:
    u_plus: np.ndarray
    u_minus: np.ndarray
    c: float
    residual_plus: float        # max over edges of u(y) - u(x) - (cost + c tau)
    residual_minus: float
    calibration: float          # max deviation of u_minus from its Bellman update
    alpha: AlphaValue = field(repr=False)

    @property
    def gap(self) -> np.ndarray:
        return self.u_minus - self.u_plus

    @property
    def residuals(self) -> tuple:
        return (self.residual_plus, self.residual_minus)

    @property
    def graph(self) -> ActionGraph:
        return self.alpha.graph


def _csr(succ, data):
    n, K = succ.shape
    indptr = np.arange(0, n * K + 1, K)
    return sp.csr_matrix((data.ravel(), succ.ravel(), indptr), shape=(n, n))


def _dist_from(succ, r, sources, reverse=False):
    G = _csr(succ, np.maximum(r, 0.0))
    if reverse:
        G = G.T.tocsr()
    return dijkstra(G, directed=True, indices=sources, min_only=True)


def weak_kam_pair(g: ActionGraph, omega, c: Optional[float] = None,
                  alpha_value: Optional[AlphaValue] = None) -> WeakKAMPair:
    """Conjugate pair ``(u_plus, u_minus)`` for ``L - omega + c``.

    ``u_minus(y) = min_x u_minus(x) + cost(x->y) + c tau`` and ``u_plus`` the
    same on reversed edges, both solved exactly as shortest-path distances
    from the critical nodes with a strict subsolution as reference.  Both are
    normalised to have minimum zero over critical nodes.

    Raises
    ------
    WeakKAMError
        When ``c`` is not the critical value; the Bellman iteration would
        drift linearly.
    """
    omega = as_cohomology(omega)
    a = alpha_value if alpha_value is not None else alpha(g, omega)
    if c is None:
        c = a.value
    if abs(c - a.value) > 1e-9 * max(1.0, abs(a.value)):
        raise WeakKAMError("c=%.12g is not the critical value %.12g; iteration diverges"
                           % (c, a.value))
    cs = a.structure
    succ = _succ_cache(g)
    lam = -c * g.tau
    costs = reweighted_costs(g, omega)
    what = costs - lam
    crit = np.flatnonzero(cs.critical_nodes)

    psi = -cs.v
    r_psi = what - psi[succ] + psi[:, None]
    d_back = _dist_from(succ, r_psi, crit)
    phi = psi + 0.5 * d_back
    r_phi = what - phi[succ] + phi[:, None]
    d_minus = _dist_from(succ, r_phi, crit)
    d_plus = _dist_from(succ, r_phi, crit, reverse=True)
    u_minus = phi + d_minus
    u_plus = phi - d_plus
    shift = np.min(u_minus[crit])
    u_minus = u_minus - shift
    u_plus = u_plus - shift
    u_plus[crit] = u_minus[crit]

    res_m = float(np.max(u_minus[succ] - u_minus[:, None] - what))
    res_p = float(np.max(u_plus[succ] - u_plus[:, None] - what))
    upd = _kernels.minplus_step(u_minus, g.base, _lin(g, omega), _exact(g, omega), succ, -lam)
    calib = float(np.max(np.abs(upd - u_minus)))
    return WeakKAMPair(u_plus, u_minus, float(c), res_p, res_m, calib, a)


def _lin(g, omega):
    c1, c2 = omega.coefficients
    return np.ascontiguousarray((c1 * g.offsets[:, 0] + c2 * g.offsets[:, 1]) / g.N, dtype=float)


def _exact(g, omega):
    if omega.exact_part is None:
        return np.zeros(g.n_nodes)
    return np.ascontiguousarray(np.asarray(omega.exact_part, dtype=float).reshape(-1))


# ---------------------------------------------------------------------------
# Peierls barrier


@dataclass
class BarrierSample:
    x: int
    y: int
    horizons: list        # window starts, in steps
    values: list          # min of h_t + c t over [T, 2T] and [2T, 4T]
    converged: bool

    @property
    def value(self) -> float:
        return self.values[0]


def peierls(g: ActionGraph, omega, c: float, x: int, y: int, T: Optional[int] = None,
            tol: float = 1e-9) -> BarrierSample:
    """Windowed liminf proxy for the Peierls barrier ``h(x, y)``.

    ``h_t`` is computed by forward min-plus iteration from ``x``; the value
    is the minimum of ``h_t + c t`` over ``t`` in ``[T, 2T]`` steps, checked
    against the window ``[2T, 4T]``.
    """
    omega = as_cohomology(omega)
    if T is None:
        T = g.N
    if T < g.N:
        raise ValueError("horizon must be at least N steps")
    succ = _succ_cache(g)
    lin = _lin(g, omega)
    f = _exact(g, omega)
    u = np.full(g.n_nodes, np.inf)
    u[x] = 0.0
    w1 = np.inf
    w2 = np.inf
    for k in range(1, 4 * T + 1):
        u = _kernels.minplus_step(u, g.base, lin, f, succ, c * g.tau)
        if T <= k <= 2 * T:
            w1 = min(w1, u[y])
        if k >= 2 * T:
            w2 = min(w2, u[y])
    conv = bool(abs(w1 - w2) <= tol * max(1.0, abs(w1)))
    return BarrierSample(int(x), int(y), [T, 2 * T], [float(w1), float(w2)], conv)


# ---------------------------------------------------------------------------
# Aubry / Mather estimates


def default_epsilon(g: ActionGraph) -> float:
    """Gap band for Aubry estimates: a quarter of the cheapest one-cell move."""
    return 0.25 * g.L.lambda_min / (g.N * g.N * g.tau)


def _grid_components(mask: np.ndarray, N: int, diagonal: bool = False):
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    pos = {int(v): t for t, v in enumerate(idx)}
    rows, cols = [], []
    steps = [(1, 0), (0, 1)] + ([(1, 1), (1, -1)] if diagonal else [])
    for v in idx.tolist():
        i, j = divmod(v, N)
        for a, b in steps:
            w = ((i + a) % N) * N + (j + b) % N
            if w in pos:
                rows.append(pos[v])
                cols.append(pos[w])
    A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(idx.size, idx.size))
    nc, lab = connected_components(A, directed=False)
    comps = [idx[lab == c] for c in range(nc)]
    comps.sort(key=lambda c: int(c[0]))
    return [tuple(int(v) for v in c) for c in comps]


@dataclass(eq=False)
class AubryEstimate:
    nodes: np.ndarray           # (n,) bool
    epsilon: float
    components: list
    N: int
    gap: Optional[np.ndarray] = field(default=None, repr=False)
    links: Optional[np.ndarray] = field(default=None, repr=False)   # (m, 4) tail, head, a, b

    @property
    def size(self) -> int:
        return int(self.nodes.sum())

    def __contains__(self, x) -> bool:
        return bool(self.nodes[x])


def aubry_estimate(pair: WeakKAMPair, epsilon: Optional[float] = None) -> AubryEstimate:
    """Nodes where the weak KAM gap ``u_minus - u_plus`` is at most ``epsilon``."""
    g = pair.graph
    if epsilon is None:
        epsilon = default_epsilon(g)
    gap = pair.gap
    nodes = gap <= epsilon
    return AubryEstimate(nodes, float(epsilon), _grid_components(nodes, g.N), g.N, gap,
                         critical_links(pair.alpha))


def critical_links(a: AlphaValue) -> np.ndarray:
    """Critical edges as rows ``(tail, head, a, b)``."""
    g = a.graph
    xs, ks = np.nonzero(a.structure.critical_edges)
    succ = _succ_cache(g)
    return np.stack([xs, succ[xs, ks], g.offsets[ks, 0], g.offsets[ks, 1]], axis=1).astype(np.int64)


def dilate(mask: np.ndarray, N: int, cells: int = 1) -> np.ndarray:
    """Grow a node mask by ``cells`` grid steps (8-neighbourhood) on the torus."""
    m = np.asarray(mask, dtype=bool).reshape(N, N)
    out = m.copy()
    for _ in range(cells):
        cur = out.copy()
        for a in (-1, 0, 1):
            for b in (-1, 0, 1):
                out |= np.roll(np.roll(cur, a, axis=0), b, axis=1)
    return out.reshape(-1)


def mather_estimate(a: AlphaValue) -> list:
    """Critical cycles with period, rotation class and mean cost per unit time."""
    g = a.graph
    out = []
    for c in a.critical_cycles:
        out.append({
            "cycle": c,
            "period": c.period,
            "rotation": c.rotation,
            "mean_cost": c.mean_cost(g, a.omega),
        })
    return out


def fenchel_attainment_check(a: AlphaValue, beta: Callable) -> list:
    """Fenchel-Young residuals ``alpha(omega) + beta(rho) - <omega, rho>`` per critical rotation.

    ``beta`` maps a homology class (or pair) to a value, e.g. a bound
    ``functools.partial(beta, surface)`` or a closed form.
    """
    out = []
    seen = set()
    for c in a.critical_cycles:
        rho = c.rotation
        if rho.rotation in seen:
            continue
        seen.add(rho.rotation)
        b = beta(rho)
        b = getattr(b, "value", b)
        out.append((rho.rotation, float(a.value + b - a.omega.pairing(rho))))
    return out
