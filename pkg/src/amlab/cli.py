"""Experiment configs, run records and the ``amlab`` command line.

A config is plain ``key = value`` text, one entry per line, ``#`` starts a
comment.  Every key has an explicit default; parsing fills them all in so
that rendering a parsed config lists the complete experiment.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
import warnings
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .experiments import chain_report, mane_sweep
from .faces import alpha_surface, beta, delta_ladder, face_at
from .graph import StencilError, build_graph
from .lagrangian import ModelError, load_spec
from .weak_kam import alpha, aubry_estimate, mather_estimate, weak_kam_pair

__all__ = ["ConfigError", "ExperimentConfig", "RunRecord", "parse_config", "render_config",
           "run", "export_surface", "main", "COMMANDS"]

COMMANDS = ("alpha", "beta", "aubry", "faces", "chain", "sweep", "mane", "verify")

EXIT_OK, EXIT_INPUT, EXIT_PROPERTY = 0, 1, 2


class ConfigError(ValueError):
    """Invalid config entry; ``line`` is 1-based (``None`` for whole-config problems)."""

    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(msg if line is None else "line %s: %s" % (line, msg))


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "flat"
    N: int = 64
    tau: float = 0.1
    Omega: float = 2.0
    M: int = 20
    epsilon: Optional[float] = None
    deltas: Optional[tuple] = None
    tol_flat: Optional[float] = None
    tol: float = 0.05
    seed: int = 0
    omega: tuple = (0.0, 0.0)
    h: tuple = (0.0, 0.0)
    horizon: Optional[int] = None
    amplitude: float = 0.1
    outdir: str = "runs"

    def resolved(self) -> "ExperimentConfig":
        """Copy with model-dependent defaults (epsilon, deltas, tol_flat) made explicit."""
        if None not in (self.epsilon, self.deltas, self.tol_flat, self.horizon):
            return self
        L = load_spec(_model_text(self.model))
        eps = self.epsilon
        if eps is None:
            eps = 0.25 * L.lambda_min / (self.N * self.N * self.tau)
        tol_flat = self.tol_flat
        if tol_flat is None:
            tol_flat = 3.0 * L.lambda_max * (1.0 / (self.N * self.tau)) ** 2 / 8.0
        deltas = self.deltas
        if deltas is None:
            deltas = delta_ladder(self.Omega, tol_flat, L.lambda_max)
        horizon = self.horizon if self.horizon is not None else self.N
        return replace(self, epsilon=eps, deltas=tuple(deltas), tol_flat=tol_flat, horizon=horizon)

    def digest(self) -> str:
        """Hash of everything that affects results (not ``outdir``)."""
        text = render_config(replace(self, outdir=""))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _model_text(model: str) -> str:
    if model.startswith("@"):
        return Path(model[1:]).read_text()
    return model


_INT = {"N", "M", "seed", "horizon"}
_FLOAT = {"tau", "Omega", "epsilon", "tol_flat", "tol", "amplitude"}
_PAIR = {"omega", "h"}


def _parse_value(key, raw, line):
    raw = raw.strip()
    if key in ("model", "outdir"):
        if not raw:
            raise ConfigError("%s must not be empty" % key, line)
        return raw
    if raw.lower() == "auto" and key in ("epsilon", "deltas", "tol_flat", "horizon"):
        return None
    try:
        if key in _INT:
            if not raw.lstrip("+-").isdigit():
                raise ValueError
            return int(raw)
        if key in _FLOAT:
            return float(raw)
        parts = [p for p in raw.strip("()[] ").split(",") if p.strip()]
        vals = tuple(float(p) for p in parts)
    except ValueError:
        kind = "integer" if key in _INT else "number" if key in _FLOAT else "list of numbers"
        raise ConfigError("%s expects %s, got %r" % (key, kind, raw), line) from None
    if key in _PAIR and len(vals) != 2:
        raise ConfigError("%s expects two numbers, got %d" % (key, len(vals)), line)
    if key == "deltas" and not vals:
        raise ConfigError("deltas must not be empty", line)
    return vals


def _check_range(key, val, line):
    bad = None
    if val is None:
        return
    if key == "N" and val < 8:
        bad = "N must be at least 8"
    elif key in ("tau", "Omega", "epsilon") and not (val > 0 and math.isfinite(val)):
        bad = "%s must be positive" % key
    elif key == "M" and val < 1:
        bad = "M must be at least 1"
    elif key in ("tol", "tol_flat", "amplitude") and not (val >= 0 and math.isfinite(val)):
        bad = "%s must be non-negative" % key
    elif key in ("seed", "horizon") and val < 0:
        bad = "%s must be non-negative" % key
    elif key == "deltas" and not all(d > 0 and math.isfinite(d) for d in val):
        bad = "deltas must be positive"
    elif key in _PAIR and not all(math.isfinite(v) for v in val):
        bad = "%s must be finite" % key
    if bad:
        raise ConfigError(bad, line)


def parse_config(text: str, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Parse config text and ``key=value`` overrides into a resolved config.

    Raises
    ------
    ConfigError
        Unknown key, duplicate key, type mismatch or out-of-range value,
        with the offending line number (overrides are numbered after the
        text, as ``--set #k``).
    """
    names = {f.name for f in fields(ExperimentConfig)}
    values = {}
    entries = [(i + 1, ln) for i, ln in enumerate(text.splitlines())]
    entries += [("--set #%d" % (k + 1), ov) for k, ov in enumerate(overrides)]
    seen = set()
    for line, raw in entries:
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected key = value, got %r" % body, line)
        key, val = body.split("=", 1)
        key = key.strip()
        if key not in names:
            raise ConfigError("unknown key %r" % key, line)
        if key in seen and not str(line).startswith("--set"):
            raise ConfigError("duplicate key %r" % key, line)
        seen.add(key)
        v = _parse_value(key, val, line)
        _check_range(key, v, line)
        values[key] = v
    cfg = ExperimentConfig(**values)
    if cfg.horizon is not None and cfg.horizon < cfg.N:
        raise ConfigError("horizon must be at least N")
    try:
        return cfg.resolved()
    except (ModelError, OSError) as exc:
        raise ConfigError("model: %s" % exc) from None


def _fmt(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_config(cfg: ExperimentConfig) -> str:
    """Config text that parses back to ``cfg``."""
    return "".join("%s = %s\n" % (f.name, _fmt(getattr(cfg, f.name))) for f in fields(cfg))


# ---------------------------------------------------------------------------
# running


@dataclass
class RunRecord:
    config_hash: str
    version: str
    command: str
    wall_time: float
    payload: dict
    warnings: list
    exit_code: int = EXIT_OK
    path: Optional[str] = None

    def payload_bytes(self) -> bytes:
        return _dumps(self.payload).encode()


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=True)


def _cycles(a) -> list:
    return [{"nodes": list(c.nodes), "rotation": list(c.rotation.rotation),
             "period": c.period, "length": c.length} for c in a.critical_cycles[:32]]


def _graph(cfg, omega_max=None):
    L = load_spec(_model_text(cfg.model))
    return build_graph(L, cfg.N, cfg.tau, cfg.Omega if omega_max is None else omega_max)


def _surface_payload(s) -> dict:
    return {"kind": "surface", "axis": s.axis.tolist(), "values": s.values.tolist(),
            "saturation": s.saturation.astype(int).tolist(),
            "convexity_defect": s.convexity_defect()}


def _cmd_alpha(cfg):
    g = _graph(cfg)
    a = alpha(g, cfg.omega)
    return {"omega": list(cfg.omega), "value": a.value, "saturated": a.saturation_flag,
            "n_components": a.n_components, "cycles": _cycles(a)}


def _cmd_sweep(cfg):
    g = _graph(cfg)
    return _surface_payload(alpha_surface(g, cfg.Omega, cfg.M))


def _cmd_beta(cfg):
    g = _graph(cfg)
    s = alpha_surface(g, cfg.Omega, cfg.M)
    b = beta(s, cfg.h)
    out = _surface_payload(s)
    out.update({"h": list(cfg.h), "beta": b.value, "argmax": b.argmax_set.tolist(),
                "dim_F_h": b.dim_F_h, "differentiable_directions": b.differentiable_directions,
                "boundary": b.boundary, "connected": b.connected})
    return out


def _cmd_aubry(cfg):
    g = _graph(cfg)
    pair = weak_kam_pair(g, cfg.omega)
    aub = aubry_estimate(pair, cfg.epsilon)
    return {"omega": list(cfg.omega), "c": pair.c, "residuals": list(pair.residuals),
            "calibration": pair.calibration, "epsilon": aub.epsilon,
            "nodes": np.flatnonzero(aub.nodes).tolist(), "components": len(aub.components),
            "mather": [{"rotation": list(m["rotation"].rotation), "period": m["period"],
                        "mean_cost": m["mean_cost"]} for m in mather_estimate(pair.alpha)[:32]]}


def _face_payload(f):
    return {"omega": list(f.omega.coefficients), "dim": f.dim_vect_F,
            "flat_directions": f.flat_directions.tolist(),
            "integer_basis": None if f.integer_basis is None else [list(v) for v in f.integer_basis],
            "noise": f.noise, "deltas": list(f.deltas), "tol_flat": f.tol_flat}


def _cmd_faces(cfg):
    g = _graph(cfg)
    return _face_payload(face_at(g, cfg.omega, cfg.deltas, cfg.tol_flat))


def _cmd_chain(cfg):
    g = _graph(cfg)
    return chain_report(g, cfg.omega, cfg.epsilon, cfg.deltas, cfg.tol_flat).summary()


def _cmd_mane(cfg):
    L = load_spec(_model_text(cfg.model))
    r = mane_sweep(L, cfg.seed, cfg.amplitude, cfg.Omega, cfg.M, cfg.N, cfg.tau)
    return {"fraction": r.fraction, "rotation_fraction": r.rotation_fraction,
            "exceptional": [list(w) for w in r.exceptional], "n_samples": r.n_samples,
            "seed": r.seed, "amplitude": r.amplitude}


def _verify_checks(cfg):
    """Property suite; yields ``(name, passed, detail)``."""
    from .verify import property_suite

    return property_suite(cfg)


def _cmd_verify(cfg):
    checks = _verify_checks(cfg)
    return {"checks": [{"name": n, "passed": bool(p), "detail": d} for n, p, d in checks],
            "passed": all(p for _, p, _ in checks)}


_DISPATCH = {"alpha": _cmd_alpha, "beta": _cmd_beta, "aubry": _cmd_aubry, "faces": _cmd_faces,
             "chain": _cmd_chain, "sweep": _cmd_sweep, "mane": _cmd_mane, "verify": _cmd_verify}


def run(command: str, config: ExperimentConfig, persist: bool = True) -> RunRecord:
    """Run one command and persist its record under ``outdir/<config hash>/``."""
    if command not in _DISPATCH:
        raise ConfigError("unknown command %r (choose from %s)" % (command, ", ".join(COMMANDS)))
    cfg = config.resolved()
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        payload = _DISPATCH[command](cfg)
    wall = time.perf_counter() - t0
    msgs = sorted({str(w.message) for w in caught})
    payload = json.loads(_dumps(payload))
    code = EXIT_PROPERTY if command == "verify" and not payload["passed"] else EXIT_OK
    rec = RunRecord(cfg.digest(), __version__, command, wall, payload, msgs, code)
    if persist:
        d = Path(cfg.outdir) / rec.config_hash
        d.mkdir(parents=True, exist_ok=True)
        (d / "config.txt").write_text(render_config(cfg))
        (d / ("%s.payload.json" % command)).write_text(_dumps(payload))
        meta = {k: v for k, v in asdict(rec).items() if k not in ("payload", "path")}
        (d / ("%s.record.json" % command)).write_text(_dumps(meta))
        rec.path = str(d)
    return rec


def export_surface(record, fmt: str = "matrix", path=None) -> str:
    """Write a surface payload as a matrix or as ``omega1 omega2 alpha`` records.

    Returns the text; also writes it to ``path`` when given.
    """
    payload = record.payload if isinstance(record, RunRecord) else record
    if not payload or payload.get("kind") != "surface":
        raise ValueError("record holds no surface payload")
    axis = [float(x) for x in payload["axis"]]
    vals = np.asarray(payload["values"], dtype=float)
    if vals.size == 0:
        raise ValueError("empty surface payload")
    if fmt == "matrix":
        head = "# rows: omega1, cols: omega2, axis: " + " ".join(repr(x) for x in axis)
        lines = [head] + [" ".join(repr(float(v)) for v in row) for row in vals]
    elif fmt == "records":
        lines = ["%r %r %r" % (axis[i], axis[j], float(vals[i, j]))
                 for i in range(len(axis)) for j in range(len(axis))]
    else:
        raise ValueError("format must be 'matrix' or 'records'")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def main(argv: Optional[Sequence[str]] = None) -> int:
    p = argparse.ArgumentParser(prog="amlab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="config file (key = value lines)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry; may repeat")
    p.add_argument("--export", choices=("matrix", "records"),
                   help="also write the surface (sweep, beta) next to the record")
    p.add_argument("--quiet", action="store_true")
    args = p.parse_args(argv)
    try:
        text = Path(args.config).read_text() if args.config else ""
        cfg = parse_config(text, args.set)
        rec = run(args.command, cfg)
        if args.export:
            export_surface(rec, args.export, Path(rec.path) / ("surface.%s.txt" % args.export))
    except (ConfigError, ModelError, StencilError, OSError) as exc:
        print("amlab: error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print("amlab: error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    for w in rec.warnings:
        print("warning: %s" % w, file=sys.stderr)
    if not args.quiet:
        print(_dumps({"command": rec.command, "config_hash": rec.config_hash, "path": rec.path,
                      "wall_time": round(rec.wall_time, 3), "exit_code": rec.exit_code,
                      "payload": rec.payload if args.command != "sweep" else "<surface>"}))
    return rec.exit_code


if __name__ == "__main__":
    sys.exit(main())
