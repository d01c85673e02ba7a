"""Homology of node bands on the torus grid.

A band is a set of grid nodes.  Its graph joins nodes that are 8-neighbours
on the torus, plus any extra links (critical edges of the action graph)
whose two ends lie in the band.  Integer windings of the fundamental cycles
of a spanning forest span the image of the band's first homology in
``H_1(T^2) = Z^2``.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, connected_components
from scipy.sparse.linalg import spsolve

from .weak_kam import AubryEstimate, dilate

__all__ = ["band_edges", "band_windings", "homology_of_neighborhood",
           "E_dimension", "G_dimension", "primitive"]

_NEIGH = ((1, 0), (0, 1), (1, 1), (1, -1))


def _wrap(d, N):
    return (d + N // 2) % N - N // 2


def band_edges(mask: np.ndarray, N: int, links=None):
    """Undirected edges ``(u, v, a, b)`` of the band graph; ``(a, b)`` is the lift step u->v."""
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    idx = np.flatnonzero(mask)
    i, j = np.divmod(idx, N)
    us, vs, da, db = [], [], [], []
    for a, b in _NEIGH:
        w = ((i + a) % N) * N + (j + b) % N
        keep = mask[w]
        us.append(idx[keep])
        vs.append(w[keep])
        da.append(np.full(keep.sum(), a))
        db.append(np.full(keep.sum(), b))
    if links is not None and len(links):
        links = np.asarray(links, dtype=np.int64).reshape(-1, 4)
        keep = mask[links[:, 0]] & mask[links[:, 1]] & (links[:, 0] != links[:, 1])
        us.append(links[keep, 0])
        vs.append(links[keep, 1])
        da.append(links[keep, 2])
        db.append(links[keep, 3])
    u = np.concatenate(us) if us else np.zeros(0, np.int64)
    v = np.concatenate(vs) if vs else np.zeros(0, np.int64)
    a = np.concatenate(da) if da else np.zeros(0, np.int64)
    b = np.concatenate(db) if db else np.zeros(0, np.int64)
    return u.astype(np.int64), v.astype(np.int64), a.astype(np.int64), b.astype(np.int64)


def band_windings(mask: np.ndarray, N: int, links=None) -> np.ndarray:
    """Integer windings of the fundamental cycles (one row per non-tree edge)."""
    u, v, a, b = band_edges(mask, N, links)
    if u.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    n = N * N
    A = sp.csr_matrix((np.ones(u.size), (u, v)), shape=(n, n))
    A = A + A.T
    lift = np.full((n, 2), np.iinfo(np.int64).min, dtype=np.int64)
    nodes = np.flatnonzero(np.asarray(mask, dtype=bool).reshape(-1))
    done = np.zeros(n, dtype=bool)
    for s in nodes:
        if done[s]:
            continue
        order, pred = breadth_first_order(A, int(s), directed=False, return_predecessors=True)
        i0, j0 = divmod(int(s), N)
        lift[s] = (i0, j0)
        done[order] = True
        for x in order[1:]:
            p = pred[x]
            pi, pj = divmod(int(p), N)
            xi, xj = divmod(int(x), N)
            lift[x] = lift[p] + (_wrap(xi - pi, N), _wrap(xj - pj, N))
    step = np.stack([a, b], axis=1)
    w = lift[u] + step - lift[v]
    if np.any(w % N):
        raise AssertionError("inconsistent lift")
    w = w // N
    return w[np.any(w != 0, axis=1)]


def primitive(vec) -> tuple:
    """Primitive integer vector with first non-zero entry positive."""
    p, q = int(vec[0]), int(vec[1])
    d = math.gcd(p, q)
    if d == 0:
        return (0, 0)
    p, q = p // d, q // d
    if p < 0 or (p == 0 and q < 0):
        p, q = -p, -q
    return (p, q)


def _span(windings: np.ndarray):
    if windings.shape[0] == 0:
        return 0, []
    first = windings[0]
    cross = first[0] * windings[:, 1] - first[1] * windings[:, 0]
    if np.any(cross != 0):
        return 2, [(1, 0), (0, 1)]
    return 1, [primitive(first)]


def _links(aubry: AubryEstimate):
    return getattr(aubry, "links", None)


def homology_of_neighborhood(aubry: AubryEstimate, g=None, links=None):
    """``(dim V, integer basis)`` of the band's homology image in ``Z^2``."""
    N = aubry.N if g is None else g.N
    if links is None:
        links = _links(aubry)
    return _span(band_windings(aubry.nodes, N, links))


def E_dimension(aubry: AubryEstimate, g=None, cells: int = 1) -> int:
    """Dimension of classes supported off the band: ``2 - dim V`` of the dilated band."""
    N = aubry.N if g is None else g.N
    grown = dilate(aubry.nodes, N, cells)
    dim, _ = _span(band_windings(grown, N, _links(aubry)))
    return 2 - dim


def G_dimension(aubry: AubryEstimate, g=None, threshold: float = 1e-8) -> int:
    """Dimension of classes ``xi`` with ``<xi, d(e)> = f(head) - f(tail)`` on every band edge.

    Solved as a least-squares problem in the node potential ``f`` for each
    coordinate form; feasible ``xi`` are the kernel of the residual map.
    """
    N = aubry.N if g is None else g.N
    u, v, a, b = band_edges(aubry.nodes, N, _links(aubry))
    if u.size == 0:
        return 2
    nodes = np.unique(np.concatenate([u, v]))
    pos = np.full(N * N, -1, dtype=np.int64)
    pos[nodes] = np.arange(nodes.size)
    m = u.size
    rows = np.concatenate([np.arange(m), np.arange(m)])
    cols = np.concatenate([pos[v], pos[u]])
    vals = np.concatenate([np.ones(m), -np.ones(m)])
    B = sp.csr_matrix((vals, (rows, cols)), shape=(m, nodes.size))
    D = np.stack([a, b], axis=1) / N
    lap = (B.T @ B).tocsc()
    # pin one node per component so the Laplacian is invertible
    _, lab = connected_components(lap, directed=False)
    pinned = np.unique(lab, return_index=True)[1]
    free = np.setdiff1d(np.arange(nodes.size), pinned)
    R = np.empty_like(D)
    for col in range(2):
        rhs = B.T @ D[:, col]
        f = np.zeros(nodes.size)
        if free.size:
            sub = lap[free][:, free]
            f[free] = np.atleast_1d(spsolve(sub.tocsc(), rhs[free]))
        R[:, col] = D[:, col] - B @ f
    s = np.linalg.svd(R, compute_uv=False)
    return 2 - int(np.sum(s > threshold))
