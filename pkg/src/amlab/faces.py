"""alpha surfaces, beta by discrete Fenchel conjugation, and faces of alpha."""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .graph import ActionGraph
from .lagrangian import CohomologyClass, HomologyClass, as_cohomology, as_homology
from .weak_kam import alpha

__all__ = ["AlphaSurface", "BetaSample", "FaceReport", "alpha_surface", "beta",
           "face_at", "flat_half_width", "irrationality_dimension",
           "differentiability_directions", "subderivative_density_probe",
           "rationalize_direction", "default_deltas", "delta_ladder", "default_tol_flat", "thread_count"]


def thread_count(threads: Optional[int] = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("AMLAB_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


@dataclass(eq=False)
class AlphaSurface:
    omega_max: float
    M: int
    values: np.ndarray        # (2M+1, 2M+1), first index along omega_1
    saturation: np.ndarray    # same shape, bool
    N: int
    tau: float
    omega_resolution: float

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.omega_max, self.omega_max, 2 * self.M + 1)

    @property
    def spacing(self) -> float:
        return self.omega_max / self.M

    @property
    def grid(self) -> np.ndarray:
        """(2M+1, 2M+1, 2) sample cohomology classes."""
        ax = self.axis
        W1, W2 = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([W1, W2], axis=-1)

    @property
    def face_resolution(self) -> float:
        """Smallest face extent resolvable on this surface."""
        return 2.0 * max(self.spacing, self.omega_resolution)

    def convexity_defect(self) -> float:
        """Largest midpoint-convexity violation over axis and diagonal triples."""
        v = self.values
        worst = 0.0
        for s1, s2 in ((1, 0), (0, 1), (1, 1), (1, -1)):
            n1, n2 = v.shape
            a = slice(max(0, -2 * s2), n2 - max(0, 2 * s2))
            lo = v[0:n1 - 2 * s1, a]
            mid = v[s1:n1 - s1, slice(a.start + s2, a.stop + s2)]
            hi = v[2 * s1:n1, slice(a.start + 2 * s2, a.stop + 2 * s2)]
            if lo.size:
                worst = max(worst, float(np.max(mid - 0.5 * (lo + hi))))
        return worst


def _row(g, axis, a_idx):
    vals = np.empty(axis.size)
    sat = np.zeros(axis.size, dtype=bool)
    policy = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for b_idx, w2 in enumerate(axis):
            av = alpha(g, (axis[a_idx], w2), policy=policy)
            policy = av.structure.policy
            vals[b_idx] = av.value
            sat[b_idx] = av.saturation_flag
    return vals, sat


def alpha_surface(g: ActionGraph, omega_max: float, M: int, threads: Optional[int] = None) -> AlphaSurface:
    """Sample alpha on the ``(2M+1)^2`` lattice over ``[-omega_max, omega_max]^2``.

    Rows of fixed ``omega_1`` are independent tasks; each row warm-starts
    policy iteration from its previous sample, so results do not depend on
    thread scheduling.
    """
    if M < 1:
        raise ValueError("M must be positive")
    axis = np.linspace(-omega_max, omega_max, 2 * M + 1)
    with ThreadPoolExecutor(thread_count(threads)) as ex:
        rows = list(ex.map(lambda i: _row(g, axis, i), range(axis.size)))
    values = np.stack([r[0] for r in rows])
    sat = np.stack([r[1] for r in rows])
    if sat.any():
        warnings.warn("%d surface samples saturate the stencil" % int(sat.sum()))
    return AlphaSurface(float(omega_max), int(M), values, sat, g.N, g.tau, g.omega_resolution)


@dataclass(eq=False)
class BetaSample:
    h: HomologyClass
    value: float
    argmax_set: np.ndarray          # (m, 2) cohomology samples
    dim_F_h: int
    extents: tuple                   # principal extents of the argmax set
    axes: np.ndarray                 # principal directions (rows)
    boundary: bool
    connected: bool
    spacing: float

    @property
    def differentiable_directions(self) -> int:
        return 2 - self.dim_F_h

    @property
    def segment_length(self) -> float:
        """Length of the argmax set along its main axis, one grid cell added."""
        return self.extents[0] + self.spacing

    @property
    def diameter(self) -> float:
        return float(np.hypot(*self.extents))


def _principal_extents(pts: np.ndarray):
    if len(pts) == 1:
        return (0.0, 0.0), np.eye(2)
    c = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(c, full_matrices=True)
    proj = c @ vt.T
    ext = proj.max(axis=0) - proj.min(axis=0)
    return (float(ext[0]), float(ext[1])), vt


def beta(surface: AlphaSurface, h, tol: float = 1e-9) -> BetaSample:
    """Discrete conjugate ``beta(h) = max over samples of <omega, h> - alpha(omega)``.

    The argmax set (within ``tol``) approximates the face of subderivatives.
    Its dimension counts principal extents larger than the surface's face
    resolution.  A maximiser on the lattice border sets ``boundary``.
    """
    h = as_homology(h)
    grid = surface.grid
    vals = grid[..., 0] * h.rotation[0] + grid[..., 1] * h.rotation[1] - surface.values
    m = float(np.max(vals))
    mask = vals >= m - tol * max(1.0, abs(m))
    idx = np.argwhere(mask)
    pts = grid[mask]
    last = 2 * surface.M
    boundary = bool(np.any((idx == 0) | (idx == last)))
    if boundary:
        warnings.warn("beta(%s) attained on the lattice border; widen omega_max" % (h.rotation,))
    ext, axes = _principal_extents(pts)
    dim = int(sum(e > surface.face_resolution for e in ext))
    # 8-connectivity of the argmax set as a grid subset
    from scipy.ndimage import label

    _, ncomp = label(mask, structure=np.ones((3, 3)))
    return BetaSample(h, m, pts, dim, ext, axes, boundary, ncomp == 1, surface.spacing)


def differentiability_directions(surface: AlphaSurface, h) -> int:
    """Number of directions in which beta is differentiable at ``h``: ``2 - dim F_h``."""
    b = beta(surface, h)
    k = irrationality_dimension(h)
    if b.differentiable_directions < k:
        warnings.warn("directions %d below irrationality %d at h=%s"
                      % (b.differentiable_directions, k, as_homology(h).rotation))
    return b.differentiable_directions


def irrationality_dimension(h, height: int = 10 ** 6) -> int:
    """Dimension of the smallest rational subspace containing ``h``.

    Exact fractions are decided exactly.  For floats the answer is relative
    to ``height``: an integer relation ``p h1 + q h2 = 0`` with ``|p|, |q| <=
    height`` must hold to floating-point precision.
    """
    if height < 1:
        raise ValueError("height must be at least 1")
    h = as_homology(h)
    if h.rational is not None:
        return 0 if h.rational == (0, 0) else 1
    h1, h2 = h.rotation
    if h1 == 0.0 and h2 == 0.0:
        return 0
    if h1 == 0.0 or h2 == 0.0:
        return 1
    # order so that |ratio| <= 1
    r = h1 / h2 if abs(h1) <= abs(h2) else h2 / h1
    fr = Fraction(r).limit_denominator(height)
    if abs(fr.numerator) <= height and abs(r - float(fr)) <= 16 * np.finfo(float).eps * max(1.0, abs(r)):
        return 1
    return 2


def rationalize_direction(eta, height: int = 64):
    """Closest primitive integer vector of height ``<= height`` and its angle error."""
    t1, t2 = float(eta[0]), float(eta[1])
    if abs(t1) >= abs(t2):
        fr = Fraction(t2 / t1).limit_denominator(height)
        vec = (fr.denominator, fr.numerator)
    else:
        fr = Fraction(t1 / t2).limit_denominator(height)
        vec = (fr.numerator, fr.denominator)
    p, q = vec
    d = math.gcd(p, q)
    p, q = p // d, q // d
    if p < 0 or (p == 0 and q < 0):
        p, q = -p, -q
    ang_v = math.atan2(q, p)
    ang_e = math.atan2(t2, t1)
    err = abs((ang_e - ang_v + math.pi / 2) % math.pi - math.pi / 2)
    return (p, q), err


def delta_ladder(omega_max: float, tol_flat: float, lambda_max: float) -> tuple:
    """``(0.02, 0.05, 0.1) omega_max``, stretched so the top rung resolves curvature.

    A strictly convex direction rises by at least ``delta^2 / (2 lambda_max)``
    minus the discretisation error; the top rung is kept at or above
    ``2 sqrt(lambda_max tol_flat)`` so that rise clears ``tol_flat``.
    """
    ladder = np.array([0.02, 0.05, 0.1]) * omega_max
    floor = 2.0 * math.sqrt(lambda_max * tol_flat)
    if ladder[-1] < floor:
        ladder *= floor / ladder[-1]
    return tuple(float(d) for d in ladder)


def default_tol_flat(g: ActionGraph) -> float:
    return 3.0 * g.tol_disc


def default_deltas(g: ActionGraph, tol_flat: Optional[float] = None) -> tuple:
    if tol_flat is None:
        tol_flat = default_tol_flat(g)
    return delta_ladder(g.omega_max, tol_flat, g.L.lambda_max)


@dataclass(eq=False)
class FaceReport:
    omega: CohomologyClass
    directions_tested: np.ndarray
    flat_directions: np.ndarray
    dim_vect_F: int
    integer_basis: Optional[list]
    deltas: tuple
    tol_flat: float
    direction: Optional[np.ndarray] = None
    angle_error: Optional[float] = None
    noise: bool = False


def face_at(g: ActionGraph, omega, deltas: Optional[Sequence[float]] = None,
            tol_flat: Optional[float] = None, n_directions: int = 8,
            alpha_value=None) -> FaceReport:
    """Flat directions of alpha at ``omega`` by finite differences on a delta ladder.

    A direction ``eta`` is flat when ``alpha(omega +- delta eta) - alpha(omega)
    <= tol_flat`` for every ``delta``.  Flat at the largest delta but not at a
    smaller one is inconsistent and the report is marked as noise (dim 0).
    """
    omega = as_cohomology(omega)
    if tol_flat is None:
        tol_flat = default_tol_flat(g)
    deltas = tuple(sorted(deltas if deltas is not None else default_deltas(g, tol_flat)))
    a0 = alpha_value if alpha_value is not None else alpha(g, omega)
    base_val = a0.value
    pol = a0.structure.policy
    thetas = np.arange(n_directions) * np.pi / n_directions
    dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    c = np.array(omega.coefficients)
    flat = np.zeros(n_directions, dtype=bool)
    noise = False
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")

        def is_flat(eta, d):
            for s in (1.0, -1.0):
                w = c + s * d * eta
                if alpha(g, CohomologyClass(tuple(w), omega.exact_part), policy=pol).value - base_val > tol_flat:
                    return False
            return True

        for i, eta in enumerate(dirs):
            if not is_flat(eta, deltas[-1]):
                continue
            ok = all(is_flat(eta, d) for d in deltas[:-1])
            if ok:
                flat[i] = True
            else:
                noise = True
    if noise:
        return FaceReport(omega, dirs, dirs[:0], 0, None, deltas, tol_flat, noise=True)
    nflat = int(flat.sum())
    if nflat == 0:
        return FaceReport(omega, dirs, dirs[:0], 0, None, deltas, tol_flat)
    if nflat == n_directions:
        return FaceReport(omega, dirs, dirs[flat], 2, [(1, 0), (0, 1)], deltas, tol_flat)
    # axial mean of the flat directions
    ang = 2.0 * thetas[flat]
    mean = math.atan2(np.sin(ang).sum(), np.cos(ang).sum()) / 2.0
    eta = np.array([math.cos(mean), math.sin(mean)])
    vec, err = rationalize_direction(eta)
    return FaceReport(omega, dirs, dirs[flat], 1, [vec], deltas, tol_flat, eta, err)


def flat_half_width(g: ActionGraph, omega, eta, tol: float = 1e-9, hi: Optional[float] = None,
                    iterations: int = 30) -> float:
    """Largest ``s`` with ``alpha(omega +- s eta) - alpha(omega) <= tol``, by bisection."""
    omega = as_cohomology(omega)
    eta = np.asarray(eta, dtype=float)
    eta = eta / np.linalg.norm(eta)
    a0 = alpha(g, omega)
    pol = a0.structure.policy
    c = np.array(omega.coefficients)
    if hi is None:
        hi = g.omega_max
    lo = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")

        def flat(s):
            return all(alpha(g, tuple(c + sg * s * eta), policy=pol).value - a0.value
                       <= tol * max(1.0, abs(a0.value)) for sg in (1.0, -1.0))

        if flat(hi):
            return hi
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            if flat(mid):
                lo = mid
            else:
                hi = mid
    return 0.5 * (lo + hi)


def subderivative_density_probe(surface: AlphaSurface, h_list: Sequence) -> dict:
    """Covering radius of the union of beta argmax sets over ``h_list``."""
    pts = surface.grid.reshape(-1, 2)
    diameter = 2.0 * math.sqrt(2.0) * surface.omega_max
    if len(h_list) == 0:
        return {"covering_radius": diameter, "n_faces": 0, "covered": 0}
    union = []
    for h in h_list:
        union.append(beta(surface, h).argmax_set)
    U = np.unique(np.concatenate(union), axis=0)
    d = np.min(np.linalg.norm(pts[:, None, :] - U[None, :, :], axis=2), axis=1)
    return {"covering_radius": float(d.max()), "n_faces": len(h_list), "covered": int(len(U))}
