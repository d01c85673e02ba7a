"""Composite experiments: the inclusion chain of homological spaces, Aubry
monotonicity along faces, semicontinuity under perturbation and the
uniqueness sweep for randomly perturbed Lagrangians."""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .faces import FaceReport, face_at, flat_half_width, thread_count
from .graph import ActionGraph, build_graph
from .homology import E_dimension, G_dimension, homology_of_neighborhood
from .lagrangian import CohomologyClass, LagrangianSpec, as_cohomology, random_trig_potential
from .weak_kam import AubryEstimate, alpha, aubry_estimate, default_epsilon, dilate, weak_kam_pair

__all__ = ["ChainReport", "chain_report", "aubry_monotone_check", "semicontinuity_probe",
           "mane_sweep", "MonotoneSample", "SemicontinuityReport", "ManeReport"]


@dataclass(eq=False)
class ChainReport:
    omega: CohomologyClass
    aubry: AubryEstimate = field(repr=False)
    dim_E: int
    dim_F: int
    dim_G: int
    dim_V: int
    V_basis: list
    face: FaceReport = field(repr=False)
    epsilon: float
    deltas: tuple
    tol_flat: float

    @property
    def dim_Vperp(self) -> int:
        return 2 - self.dim_V

    @property
    def dims(self) -> tuple:
        """``(dim E, dim Vect F, dim G, dim V-perp)``."""
        return (self.dim_E, self.dim_F, self.dim_G, self.dim_Vperp)

    @property
    def inclusion_verdicts(self) -> dict:
        return {
            "E<=F": self.dim_E <= self.dim_F,
            "F<=G": self.dim_F <= self.dim_G,
            "G<=Vperp": self.dim_G <= self.dim_Vperp,
            "E=Vperp": self.dim_E == self.dim_Vperp,
        }

    @property
    def all_equal(self) -> bool:
        return len(set(self.dims)) == 1

    @property
    def flat_basis(self) -> Optional[list]:
        return self.face.integer_basis

    def summary(self) -> dict:
        return {
            "omega": list(self.omega.coefficients),
            "dims": list(self.dims),
            "V_basis": [list(v) for v in self.V_basis],
            "flat_basis": None if self.flat_basis is None else [list(v) for v in self.flat_basis],
            "verdicts": self.inclusion_verdicts,
            "all_equal": self.all_equal,
            "epsilon": self.epsilon,
            "deltas": list(self.deltas),
            "tol_flat": self.tol_flat,
            "aubry_size": self.aubry.size,
        }


def chain_report(g: ActionGraph, omega, epsilon: Optional[float] = None,
                 deltas: Optional[Sequence[float]] = None,
                 tol_flat: Optional[float] = None) -> ChainReport:
    """Dimensions of ``E``, ``Vect F``, ``G`` and ``V``-perp at ``omega`` and their chain."""
    omega = as_cohomology(omega)
    a = alpha(g, omega)
    pair = weak_kam_pair(g, omega, alpha_value=a)
    aub = aubry_estimate(pair, epsilon)
    face = face_at(g, omega, deltas, tol_flat, alpha_value=a)
    dim_V, basis = homology_of_neighborhood(aub, g)
    rep = ChainReport(omega, aub, E_dimension(aub, g), face.dim_vect_F, G_dimension(aub, g),
                      dim_V, basis, face, aub.epsilon, face.deltas, face.tol_flat)
    if not rep.all_equal:
        warnings.warn("chain not all equal at omega=%s: dims %s (epsilon=%.3g, deltas=%s)"
                      % (omega.coefficients, rep.dims, aub.epsilon, face.deltas))
    return rep


@dataclass
class MonotoneSample:
    omega1: tuple
    contained: bool          # A(omega) inside A(omega1) grown by one cell
    coincide: bool           # equal up to one dilation cell both ways
    sizes: tuple


def _within(a: np.ndarray, b: np.ndarray, N: int) -> bool:
    return bool(np.all(~a | dilate(b, N, 1)))


def aubry_monotone_check(g: ActionGraph, omega, face: FaceReport, epsilon: Optional[float] = None,
                         samples: int = 5, half_width: Optional[float] = None) -> list:
    """Compare Aubry estimates at ``omega`` and at interior points of its face.

    Samples sit at ``s_k = +-(k / (samples + 1)) w`` along the detected flat
    direction, ``w`` the flat half-width found by bisection.  A face of
    dimension 0 passes vacuously (empty list).
    """
    if face.dim_vect_F == 0:
        return []
    omega = as_cohomology(omega)
    if epsilon is None:
        epsilon = default_epsilon(g)
    eta = face.direction if face.direction is not None else np.array([1.0, 0.0])
    if half_width is None:
        half_width = flat_half_width(g, omega, eta)
    base = aubry_estimate(weak_kam_pair(g, omega), epsilon).nodes
    c = np.array(omega.coefficients)
    out = []
    for k in range(1, samples + 1):
        s = (1 if k % 2 else -1) * k / (samples + 1) * half_width
        w1 = tuple(float(t) for t in c + s * eta)
        other = aubry_estimate(weak_kam_pair(g, w1), epsilon).nodes
        cont = _within(base, other, g.N)
        out.append(MonotoneSample(w1, cont, cont and _within(other, base, g.N),
                                  (int(base.sum()), int(other.sum()))))
    return out


@dataclass
class SemicontinuityReport:
    omega: tuple
    base_dim_E: int
    entries: list            # (perturbation index, amplitude, dim_E)
    failing_amplitude: Optional[float]

    @property
    def holds(self) -> bool:
        return self.failing_amplitude is None


def _dim_E(L, omega, N, tau, omega_max, epsilon):
    g = build_graph(L, N, tau, omega_max)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pair = weak_kam_pair(g, omega)
    return E_dimension(aubry_estimate(pair, epsilon), g)


def semicontinuity_probe(L: LagrangianSpec, perturbations: Sequence, amplitudes: Sequence[float],
                         omega=(0.0, 0.0), N: int = 32, tau: float = 0.1,
                         omega_max: float = 1.0, epsilon: Optional[float] = None) -> SemicontinuityReport:
    """``dim E`` at ``omega`` for ``L`` and for ``L`` with potential ``+ a phi``.

    Zero amplitudes are skipped.  ``failing_amplitude`` is the smallest
    amplitude at which ``dim E`` drops below its unperturbed value.
    """
    omega = as_cohomology(omega)
    base = _dim_E(L, omega, N, tau, omega_max, epsilon)
    entries = []
    fail = None
    for i, phi in enumerate(perturbations):
        for a in amplitudes:
            if a == 0:
                continue
            d = _dim_E(L.plus_potential(_scaled(phi, a)), omega, N, tau, omega_max, epsilon)
            entries.append((i, float(a), d))
            if d < base and (fail is None or a < fail):
                fail = float(a)
    return SemicontinuityReport(omega.coefficients, base, entries, fail)


def _scaled(phi, a):
    if hasattr(phi, "scaled"):
        return phi.scaled(a)
    return lambda x1, x2: a * phi(x1, x2)


@dataclass
class ManeReport:
    fraction: float
    exceptional: list        # omega samples without a unique critical cycle
    rotation_fraction: float   # samples whose critical cycles share one rotation class
    n_samples: int
    seed: int
    amplitude: float


def mane_sweep(L: LagrangianSpec, seed: int, amplitude: float, omega_max: float = 2.0,
               M: int = 10, N: int = 32, tau: float = 0.1, threads: Optional[int] = None) -> ManeReport:
    """Fraction of ``(2M+1)^2`` grid classes whose critical set is one simple cycle.

    A seeded random trigonometric potential of the given amplitude is added
    first (amplitude 0 keeps ``L``).  The graph is built for the largest
    class on the grid, ``sqrt(2) omega_max``.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    if amplitude > 0:
        L = L.plus_potential(random_trig_potential(seed, amplitude=amplitude))
    g = build_graph(L, N, tau, np.sqrt(2.0) * omega_max)
    axis = np.linspace(-omega_max, omega_max, 2 * M + 1)

    def row(i):
        flags = []
        single_rot = []
        policy = None
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for w2 in axis:
                a = alpha(g, (axis[i], w2), policy=policy)
                policy = a.structure.policy
                flags.append(a.single_cycle)
                rots = {c.rotation.rotation for c in a.critical_cycles}
                single_rot.append(len(rots) == 1 and not a.truncated)
        return flags, single_rot

    with ThreadPoolExecutor(thread_count(threads)) as ex:
        rows = list(ex.map(row, range(axis.size)))
    flags = np.array([r[0] for r in rows])
    rot = np.array([r[1] for r in rows])
    exc = [(float(axis[i]), float(axis[j])) for i, j in np.argwhere(~flags)]
    return ManeReport(float(flags.mean()), exc, float(rot.mean()), int(flags.size), int(seed),
                      float(amplitude))
