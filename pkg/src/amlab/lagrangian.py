"""Quadratic Lagrangians on the flat torus T^2 = R^2 / Z^2.

A model is ``L(x, v) = 1/2 v.K(x).v + theta(x).v - V(x)`` where ``K`` is a
symmetric positive definite matrix field, ``theta`` a one-form (drift) and
``V`` a potential.  Every field is 1-periodic in both coordinates.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Mapping, Optional, Sequence, Union

import numpy as np

try:  # pragma: no cover - exercised implicitly
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

__all__ = [
    "ConstantField",
    "CosineField",
    "TrigPolynomial",
    "TabulatedField",
    "SumField",
    "LagrangianSpec",
    "CohomologyClass",
    "HomologyClass",
    "ModelError",
    "load_spec",
    "step_action",
    "pair",
    "speed_bound",
    "random_trig_potential",
]

TWO_PI = 2.0 * np.pi

# Sampling resolution used to estimate sup/inf of built-in fields.
_PROBE_N = 64


class ModelError(ValueError):
    """Invalid model descriptor or field table."""


# ---------------------------------------------------------------------------
# scalar fields


@dataclass(frozen=True)
class ConstantField:
    value: float = 0.0

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        return np.full(np.broadcast(x1, np.asarray(x2)).shape, self.value)


@dataclass(frozen=True)
class CosineField:
    """``amplitude * cos(2 pi (k1 x1 + k2 x2) + phase)``."""

    amplitude: float
    k1: int = 1
    k2: int = 0
    phase: float = 0.0

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return self.amplitude * np.cos(TWO_PI * (self.k1 * x1 + self.k2 * x2) + self.phase)


@dataclass(frozen=True)
class TrigPolynomial:
    """Sum of ``a cos(2 pi k.x) + b sin(2 pi k.x)`` over integer wave vectors."""

    modes: tuple  # ((k1, k2, a, b), ...)

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        out = np.zeros(np.broadcast(x1, x2).shape)
        for k1, k2, a, b in self.modes:
            arg = TWO_PI * (k1 * x1 + k2 * x2)
            out = out + a * np.cos(arg) + b * np.sin(arg)
        return out

    def scaled(self, factor: float) -> "TrigPolynomial":
        return TrigPolynomial(tuple((k1, k2, a * factor, b * factor) for k1, k2, a, b in self.modes))


@dataclass(frozen=True, eq=False)
class TabulatedField:
    """Periodic bilinear interpolation of an ``n x n`` table.

    ``table[i, j]`` is the value at ``(i/n, j/n)``; the first index runs
    along ``x1``.
    """

    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def __call__(self, x1, x2):
        n = self.table.shape[0]
        s1 = np.mod(np.asarray(x1, dtype=float), 1.0) * n
        s2 = np.mod(np.asarray(x2, dtype=float), 1.0) * n
        i0 = np.floor(s1).astype(int)
        j0 = np.floor(s2).astype(int)
        f1 = s1 - i0
        f2 = s2 - j0
        i0 %= n
        j0 %= n
        i1 = (i0 + 1) % n
        j1 = (j0 + 1) % n
        t = self.table
        return ((1 - f1) * (1 - f2) * t[i0, j0] + f1 * (1 - f2) * t[i1, j0]
                + (1 - f1) * f2 * t[i0, j1] + f1 * f2 * t[i1, j1])


@dataclass(frozen=True)
class SumField:
    terms: tuple

    def __call__(self, x1, x2):
        out = 0.0
        for t in self.terms:
            out = out + t(x1, x2)
        return out


Field = Callable[[Any, Any], np.ndarray]


# ---------------------------------------------------------------------------
# cohomology / homology


@dataclass(frozen=True, eq=False)
class CohomologyClass:
    """Closed one-form ``c1 dx1 + c2 dx2 + df``.

    ``exact_part`` is an optional node-potential table ``f`` of shape
    ``(N, N)`` on the grid of the graph it is used with.
    """

    coefficients: tuple = (0.0, 0.0)
    exact_part: Optional[np.ndarray] = None

    def __post_init__(self):
        c = tuple(float(v) for v in self.coefficients)
        if len(c) != 2:
            raise ValueError("cohomology class needs two coefficients")
        object.__setattr__(self, "coefficients", c)
        if self.exact_part is not None:
            f = np.array(self.exact_part, dtype=float)
            f.setflags(write=False)
            object.__setattr__(self, "exact_part", f)

    @property
    def c(self) -> np.ndarray:
        return np.array(self.coefficients)

    @property
    def norm(self) -> float:
        return float(math.hypot(*self.coefficients))

    def pairing(self, h) -> float:
        """Pairing with a homology class, independent of the exact part."""
        h = h.rotation if isinstance(h, HomologyClass) else h
        return self.coefficients[0] * float(h[0]) + self.coefficients[1] * float(h[1])

    def __eq__(self, other):
        if not isinstance(other, CohomologyClass):
            return NotImplemented
        if self.coefficients != other.coefficients:
            return False
        if self.exact_part is None or other.exact_part is None:
            return self.exact_part is None and other.exact_part is None
        return np.array_equal(self.exact_part, other.exact_part)

    def __hash__(self):
        return hash(self.coefficients)

    def __repr__(self):
        extra = "" if self.exact_part is None else ", exact_part=<%dx%d>" % self.exact_part.shape
        return "CohomologyClass(%r%s)" % (self.coefficients, extra)


def as_cohomology(omega) -> CohomologyClass:
    if isinstance(omega, CohomologyClass):
        return omega
    return CohomologyClass(tuple(omega))


@dataclass(frozen=True)
class HomologyClass:
    """Real homology class (winding per unit time).

    When ``rational`` is given it is a pair of fractions reproducing
    ``rotation``; it is reduced on construction.
    """

    rotation: tuple
    rational: Optional[tuple] = None

    def __post_init__(self):
        if self.rational is not None:
            r = tuple(Fraction(v) for v in self.rational)
            object.__setattr__(self, "rational", r)
            object.__setattr__(self, "rotation", tuple(float(v) for v in r))
        else:
            object.__setattr__(self, "rotation", tuple(float(v) for v in self.rotation))
        if len(self.rotation) != 2:
            raise ValueError("homology class needs two components")

    @classmethod
    def from_fractions(cls, p1, p2) -> "HomologyClass":
        return cls((0.0, 0.0), rational=(Fraction(p1), Fraction(p2)))

    @property
    def h(self) -> np.ndarray:
        return np.array(self.rotation)

    @property
    def common_denominator(self) -> Optional[int]:
        if self.rational is None:
            return None
        return math.lcm(self.rational[0].denominator, self.rational[1].denominator)


def as_homology(h) -> HomologyClass:
    if isinstance(h, HomologyClass):
        return h
    return HomologyClass(tuple(h))


# ---------------------------------------------------------------------------
# Lagrangian


@dataclass(frozen=True, eq=False)
class LagrangianSpec:
    """``L(x, v) = 1/2 v.K(x).v + drift(x).v - potential(x)``.

    ``kinetic`` is a triple of scalar fields ``(K11, K12, K22)``; ``drift``
    a pair ``(theta1, theta2)``.  Fields are evaluated vectorised.
    """

    name: str
    kinetic: tuple = (ConstantField(1.0), ConstantField(0.0), ConstantField(1.0))
    drift: tuple = (ConstantField(0.0), ConstantField(0.0))
    potential: Field = ConstantField(0.0)
    # sampled bounds, filled by __post_init__
    lambda_min: float = field(default=float("nan"), compare=False)
    lambda_max: float = field(default=float("nan"), compare=False)
    drift_sup: float = field(default=float("nan"), compare=False)
    potential_min: float = field(default=float("nan"), compare=False)
    potential_max: float = field(default=float("nan"), compare=False)

    def __post_init__(self):
        n = self._probe_size()
        g = np.arange(n) / n
        X1, X2 = np.meshgrid(g, g, indexing="ij")
        k11, k12, k22 = (np.broadcast_to(f(X1, X2), X1.shape) for f in self.kinetic)
        for name, arr in (("K11", k11), ("K12", k12), ("K22", k22)):
            _check_finite(arr, name)
        tr = 0.5 * (k11 + k22)
        disc = np.sqrt(0.25 * (k11 - k22) ** 2 + k12 ** 2)
        lo = tr - disc
        if np.min(lo) <= 0.0:
            idx = np.unravel_index(np.argmin(lo), lo.shape)
            raise ModelError("kinetic matrix not positive definite at sample %s (eigenvalue %.3g)"
                             % (tuple(int(i) for i in idx), float(lo[idx])))
        th1, th2 = (np.broadcast_to(f(X1, X2), X1.shape) for f in self.drift)
        _check_finite(th1, "drift1")
        _check_finite(th2, "drift2")
        pot = np.broadcast_to(self.potential(X1, X2), X1.shape)
        _check_finite(pot, "potential")
        object.__setattr__(self, "lambda_min", float(np.min(lo)))
        object.__setattr__(self, "lambda_max", float(np.max(tr + disc)))
        object.__setattr__(self, "drift_sup", float(np.max(np.hypot(th1, th2))))
        object.__setattr__(self, "potential_min", float(np.min(pot)))
        object.__setattr__(self, "potential_max", float(np.max(pot)))

    def _probe_size(self) -> int:
        sizes = [_PROBE_N]
        for f in (*self.kinetic, *self.drift, self.potential):
            sizes.extend(_table_sizes(f))
        n = max(sizes)
        # keep table samples on the probe grid
        for s in sizes:
            if n % s:
                n = math.lcm(n, s)
        return min(n, 1024)

    @property
    def oscillation(self) -> float:
        return self.potential_max - self.potential_min

    def __call__(self, x1, x2, v1, v2):
        k11, k12, k22 = (f(x1, x2) for f in self.kinetic)
        th1, th2 = (f(x1, x2) for f in self.drift)
        v1 = np.asarray(v1, dtype=float)
        v2 = np.asarray(v2, dtype=float)
        kin = 0.5 * (k11 * v1 * v1 + 2.0 * k12 * v1 * v2 + k22 * v2 * v2)
        return kin + th1 * v1 + th2 * v2 - self.potential(x1, x2)

    def plus_potential(self, extra: Field, name: Optional[str] = None) -> "LagrangianSpec":
        """Model with potential ``V + extra`` (so ``L`` decreases by ``extra``)."""
        return LagrangianSpec(name or "%s+pert" % self.name, self.kinetic, self.drift,
                              SumField((self.potential, extra)))

    def shifted(self, k: float) -> "LagrangianSpec":
        """Model for ``L + k``."""
        return LagrangianSpec("%s%+g" % (self.name, k), self.kinetic, self.drift,
                              SumField((self.potential, ConstantField(-float(k)))))


def _table_sizes(f) -> list:
    if isinstance(f, TabulatedField):
        return [f.table.shape[0]]
    if isinstance(f, SumField):
        return [s for t in f.terms for s in _table_sizes(t)]
    return []


def _check_finite(arr, name):
    bad = ~np.isfinite(arr)
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ModelError("non-finite %s value at sample %s" % (name, idx))


# ---------------------------------------------------------------------------
# descriptors

_BUILTIN_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def _builtin(name: str, args: Sequence[float]) -> LagrangianSpec:
    if name == "flat":
        if args:
            raise ModelError("flat takes no parameters")
        return LagrangianSpec("flat")
    a = float(args[0]) if args else 1.0
    if len(args) > 1:
        raise ModelError("%s takes at most one parameter" % name)
    if name == "pendulum":
        return LagrangianSpec("pendulum(%g)" % a, potential=CosineField(a, 1, 0))
    if name == "doublewell":
        return LagrangianSpec("doublewell(%g)" % a, potential=CosineField(a, 2, 0))
    raise ModelError("unknown built-in model %r" % name)


def _table(obj, n_expected, what) -> np.ndarray:
    try:
        t = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelError("%s table is not numeric: %s" % (what, exc)) from None
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ModelError("%s table must be square, got shape %s" % (what, t.shape))
    if n_expected is not None and t.shape[0] != n_expected:
        raise ModelError("%s table has size %d, expected %d" % (what, t.shape[0], n_expected))
    _check_finite(t, what)
    return t


def _from_mapping(d: Mapping) -> LagrangianSpec:
    d = dict(d)
    name = str(d.pop("name", d.pop("model", "tabulated")))
    m = _BUILTIN_RE.match(name)
    if m and m.group(1) != "tabulated" and not d:
        return load_spec(name)
    if m is None or m.group(1) != "tabulated":
        raise ModelError("mapping descriptors must be named 'tabulated', got %r" % name)
    size = d.pop("size", None)
    n = int(size) if size is not None else None

    def table_field(key, sub, default):
        sec = d.get(key, {})
        if not isinstance(sec, Mapping):
            raise ModelError("section %r must be a table" % key)
        if sub not in sec:
            return ConstantField(default)
        nonlocal n
        t = _table(sec[sub], n, "%s.%s" % (key, sub))
        n = t.shape[0]
        return TabulatedField(t)

    unknown = set(d) - {"kinetic", "drift", "potential"}
    if unknown:
        raise ModelError("unknown descriptor keys: %s" % ", ".join(sorted(unknown)))
    pot = table_field("potential", "table", 0.0)
    kin = (table_field("kinetic", "k11", 1.0), table_field("kinetic", "k12", 0.0),
           table_field("kinetic", "k22", 1.0))
    drift = (table_field("drift", "theta1", 0.0), table_field("drift", "theta2", 0.0))
    for key in ("kinetic", "drift", "potential"):
        sec = d.get(key, {})
        allowed = {"kinetic": {"k11", "k12", "k22"}, "drift": {"theta1", "theta2"},
                   "potential": {"table"}}[key]
        extra = set(sec) - allowed
        if extra:
            raise ModelError("unknown keys in [%s]: %s" % (key, ", ".join(sorted(extra))))
    return LagrangianSpec("tabulated", kin, drift, pot)


def load_spec(descriptor: Union[str, Mapping, LagrangianSpec]) -> LagrangianSpec:
    """Build a validated model from a descriptor.

    Accepted forms are a built-in name (``"flat"``, ``"pendulum(a)"``,
    ``"doublewell(a)"``), a mapping, or TOML text of the form::

        name = "tabulated"
        [potential]
        table = [[...], ...]
        [kinetic]
        k11 = [[...], ...]

    Raises
    ------
    ModelError
        On unknown names, mismatched table sizes, non-finite samples or a
        kinetic table that is not positive definite somewhere.
    """
    if isinstance(descriptor, LagrangianSpec):
        return descriptor
    if isinstance(descriptor, Mapping):
        return _from_mapping(descriptor)
    text = str(descriptor)
    m = _BUILTIN_RE.match(text)
    if m and "=" not in text:
        name, raw = m.group(1), m.group(2)
        args = []
        if raw is not None and raw.strip():
            try:
                args = [float(a) for a in raw.split(",")]
            except ValueError:
                raise ModelError("bad parameters in %r" % text) from None
        if name == "tabulated":
            raise ModelError("tabulated models need table data")
        return _builtin(name, args)
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ModelError("cannot parse model descriptor: %s" % exc) from None
    return _from_mapping(data)


# ---------------------------------------------------------------------------
# evaluation


def step_action(L: LagrangianSpec, x, d, tau: float) -> float:
    """Midpoint-rule action of the straight segment from ``x`` to ``x + d`` in time ``tau``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    mid = x + 0.5 * d
    v = d / tau
    return tau * L(mid[..., 0], mid[..., 1], v[..., 0], v[..., 1])


def pair(omega: CohomologyClass, d, start=None, end=None) -> float:
    """Integral of ``omega`` along one step of displacement ``d``.

    The exact part contributes ``f(end) - f(start)`` where ``start``/``end``
    index the exact-part table (node indices ``(i, j)``).
    """
    omega = as_cohomology(omega)
    d = np.asarray(d, dtype=float)
    val = omega.coefficients[0] * d[..., 0] + omega.coefficients[1] * d[..., 1]
    if omega.exact_part is not None and start is not None and end is not None:
        f = omega.exact_part
        val = val + f[tuple(end)] - f[tuple(start)]
    return val


def speed_bound(L: LagrangianSpec, omega_max: float) -> float:
    """A priori speed bound for minimisers of ``L - omega`` with ``|omega| <= omega_max``."""
    if omega_max < 0:
        raise ValueError("omega_max must be non-negative")
    return (omega_max + L.drift_sup + math.sqrt(2.0 * L.lambda_max * L.oscillation) + 1.0) / L.lambda_min


def random_trig_potential(seed: int, degree: int = 3, amplitude: float = 1.0) -> TrigPolynomial:
    """Seeded trigonometric polynomial of degree ``<= degree``, sup norm ``amplitude``."""
    rng = np.random.default_rng(seed)
    modes = []
    for k1 in range(0, degree + 1):
        for k2 in range(-degree, degree + 1):
            if (k1, k2) <= (0, 0) or abs(k1) + abs(k2) > degree:
                continue
            a, b = rng.normal(size=2) / (k1 * k1 + k2 * k2)
            modes.append((k1, k2, float(a), float(b)))
    poly = TrigPolynomial(tuple(modes))
    g = np.arange(256) / 256
    X1, X2 = np.meshgrid(g, g, indexing="ij")
    sup = float(np.max(np.abs(poly(X1, X2))))
    return poly.scaled(amplitude / sup)
