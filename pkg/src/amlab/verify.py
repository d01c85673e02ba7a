"""Property suite run by ``amlab verify``.

Exact checks (oracles, gauge and shift invariance, weak KAM contracts,
convexity, the inclusion chain) use fixed tolerances.  The analytic
reference checks compare against closed forms where the model has them
and use the config's ``tol``; for other models the reference is the same
model at half the resolution.
"""
from __future__ import annotations

import math

import numpy as np

from .experiments import chain_report
from .faces import alpha_surface, flat_half_width
from .graph import brute_force_min_mean, build_graph
from .lagrangian import CohomologyClass, load_spec
from .mincycle import karp
from .weak_kam import alpha, aubry_estimate, mather_estimate, weak_kam_pair

__all__ = ["property_suite", "random_digraph"]


def random_digraph(rng: np.random.Generator, n_max: int = 8, integer: bool = False):
    """Random strongly connected digraph on at most ``n_max`` nodes as a dense matrix."""
    n = int(rng.integers(2, n_max + 1))
    W = np.full((n, n), np.inf)
    mask = rng.random((n, n)) < 0.4
    perm = rng.permutation(n)
    for t in range(n):
        mask[perm[t], perm[(t + 1) % n]] = True
    if integer:
        vals = rng.integers(-9, 10, size=(n, n)).astype(float)
    else:
        vals = rng.normal(size=(n, n))
    W[mask] = vals[mask]
    return W


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


def _samples(cfg):
    w = cfg.Omega
    pts = [(0.0, 0.0), tuple(cfg.omega), (0.5 * w, 0.0), (0.0, 0.5 * w), (w / 3, -w / 4)]
    out = []
    for p in pts:
        if p not in out:
            out.append(p)
    return out


def property_suite(cfg) -> list:
    """Run all checks for a resolved config; returns ``(name, passed, detail)`` triples."""
    L = load_spec(cfg.model if not cfg.model.startswith("@") else open(cfg.model[1:]).read())
    g = build_graph(L, cfg.N, cfg.tau, cfg.Omega)
    checks = []

    rng = np.random.default_rng(cfg.seed)
    bad = 0
    for _ in range(20):
        W = random_digraph(rng)
        if karp(W)[0] != brute_force_min_mean(W)[0]:
            bad += 1
    checks.append(("karp_oracle", bad == 0, "%d of 20 disagree" % bad))

    omega = CohomologyClass(tuple(cfg.omega))
    a0 = alpha(g, omega)
    f = np.random.default_rng(cfg.seed + 1).normal(size=g.n_nodes)
    ag = alpha(g, CohomologyClass(omega.coefficients, f))
    checks.append(("gauge_invariance", _rel(a0.value, ag.value) <= 1e-12,
                   "alpha %.15g vs %.15g" % (a0.value, ag.value)))
    k = 0.37
    gs = build_graph(L.shifted(k), cfg.N, cfg.tau, cfg.Omega)
    as_ = alpha(gs, omega)
    checks.append(("constant_shift", _rel(as_.value, a0.value - k) <= 1e-12,
                   "alpha(L+k) %.15g vs alpha(L)-k %.15g" % (as_.value, a0.value - k)))

    worst_res, worst_order, mather_ok = 0.0, -np.inf, True
    for w in _samples(cfg):
        pair = weak_kam_pair(g, w)
        worst_res = max(worst_res, *pair.residuals)
        worst_order = max(worst_order, float(np.max(pair.u_plus - pair.u_minus)))
        aub = aubry_estimate(pair, cfg.epsilon)
        for m in mather_estimate(pair.alpha):
            mather_ok &= all(aub.nodes[x] for x in m["cycle"].nodes)
    checks.append(("domination", worst_res <= 1e-9, "max residual %.3g" % worst_res))
    checks.append(("u_plus_le_u_minus", worst_order <= 1e-9, "max u+ - u- %.3g" % worst_order))
    checks.append(("mather_in_aubry", bool(mather_ok), "over %d classes" % len(_samples(cfg))))

    s = alpha_surface(g, 0.5 * cfg.Omega, 2, threads=1)
    d = s.convexity_defect()
    checks.append(("convexity", d <= 2 * g.tol_disc, "defect %.3g" % d))

    for w in [(0.0, 0.0)] + ([tuple(cfg.omega)] if tuple(cfg.omega) != (0.0, 0.0) else []):
        rep = chain_report(g, w, cfg.epsilon, cfg.deltas, cfg.tol_flat)
        v = rep.inclusion_verdicts
        checks.append(("chain@%s" % (w,), all(v.values()),
                       "dims %s verdicts %s" % (rep.dims, v)))

    checks.extend(_reference_checks(L, g, cfg))
    return checks


def _reference_checks(L, g, cfg) -> list:
    tol = cfg.tol
    name = L.name
    out = []
    if name == "flat":
        worst = 0.0
        for w in [(0.5 * cfg.Omega, 0.0), (0.3 * cfg.Omega, -0.4 * cfg.Omega), (0.0, 0.7 * cfg.Omega)]:
            ref = 0.5 * (w[0] ** 2 + w[1] ** 2)
            err = abs(alpha(g, w).value - ref) / (1.0 + 2.0 * ref)
            worst = max(worst, err)
        out.append(("reference_flat_alpha", worst <= tol, "relative error %.3g" % worst))
        return out
    if name.startswith(("pendulum", "doublewell")):
        amp = float(name[name.index("(") + 1:-1])
        a0 = alpha(g, (0.0, 0.0)).value
        e0 = abs(a0 - abs(amp)) / (1.0 + abs(amp))
        w2 = 0.5 * cfg.Omega
        a2 = alpha(g, (0.0, w2)).value
        e2 = abs(a2 - abs(amp) - 0.5 * w2 * w2) / (1.0 + abs(amp) + 0.5 * w2 * w2)
        out.append(("reference_critical_value", e0 <= tol, "relative error %.3g" % e0))
        out.append(("reference_decoupled_slice", e2 <= tol, "relative error %.3g" % e2))
        ref_w = 4.0 * math.sqrt(abs(amp)) / math.pi
        if ref_w < cfg.Omega:
            w = flat_half_width(g, (0.0, 0.0), (1.0, 0.0), iterations=20)
            ew = abs(w - ref_w) / ref_w
            out.append(("reference_flat_width", ew <= tol, "width %.4f vs %.4f" % (w, ref_w)))
        return out
    # no closed form: agreement with the half-resolution graph
    half = build_graph(L, max(4, g.N // 2), g.tau, cfg.Omega)
    worst = 0.0
    for w in [(0.0, 0.0), tuple(cfg.omega)]:
        a, b = alpha(g, w).value, alpha(half, w).value
        worst = max(worst, _rel(a, b))
    out.append(("reference_resolution", worst <= tol, "relative change %.3g" % worst))
    return out
