import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amlab.cli import (ConfigError, ExperimentConfig, export_surface, main, parse_config,
                       render_config, run)

SMALL = "model = flat\nN = 16\ntau = 0.1\nOmega = 1.0\nM = 2\n"


def test_defaults():
    c = parse_config("model=flat")
    assert (c.N, c.tau, c.Omega, c.M) == (64, 0.1, 2.0, 20)
    assert c.epsilon == pytest.approx(0.25 / (64 * 64 * 0.1))
    assert c.deltas is not None and c.tol_flat is not None and c.horizon == 64


@pytest.mark.parametrize("text, line, match", [
    ("model=flat\nN=-3", 2, "at least"),
    ("model=flat\nfoo = 1", 2, "unknown key"),
    ("N = 1.5", 1, "integer"),
    ("omega = 1", 1, "two numbers"),
    ("tau = 0", 1, "positive"),
    ("model=flat\n# comment\nmodel=flat", 3, "duplicate"),
    ("just words", 1, "key = value"),
])
def test_diagnostics(text, line, match):
    with pytest.raises(ConfigError, match=match) as info:
        parse_config(text)
    assert info.value.line == line


def test_override_wins_and_is_numbered():
    c = parse_config(SMALL, ["N=32"])
    assert c.N == 32
    with pytest.raises(ConfigError, match="--set #2"):
        parse_config(SMALL, ["N=32", "bogus=1"])


def test_bad_model():
    with pytest.raises(ConfigError, match="model"):
        parse_config("model = sombrero")


@settings(max_examples=40, deadline=None)
@given(st.integers(8, 128), st.floats(1e-3, 1.0), st.floats(0.1, 5.0), st.integers(1, 30),
       st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 10 ** 6),
       st.sampled_from(["flat", "pendulum(1)", "doublewell(0.5)"]))
def test_round_trip(N, tau, Om, M, w1, w2, seed, model):
    c = parse_config("", ["model=%s" % model, "N=%d" % N, "tau=%r" % tau, "Omega=%r" % Om,
                          "M=%d" % M, "omega=%r, %r" % (w1, w2), "seed=%d" % seed])
    assert parse_config(render_config(c)) == c


def test_run_alpha_flat(tmp_path):
    c = parse_config(SMALL, ["omega=1, 0", "outdir=%s" % tmp_path, "N=32", "Omega=1.5"])
    rec = run("alpha", c)
    assert rec.payload["value"] == pytest.approx(0.5, abs=0.02)
    assert rec.exit_code == 0
    files = sorted(p.name for p in (tmp_path / rec.config_hash).iterdir())
    assert files == ["alpha.payload.json", "alpha.record.json", "config.txt"]
    again = run("alpha", c)
    assert again.payload_bytes() == rec.payload_bytes()
    assert (tmp_path / rec.config_hash / "alpha.payload.json").read_bytes() == rec.payload_bytes()


def test_hash_ignores_outdir(tmp_path):
    a = parse_config(SMALL, ["outdir=a"])
    b = parse_config(SMALL, ["outdir=b"])
    assert a.digest() == b.digest()
    assert parse_config(SMALL, ["seed=1"]).digest() != a.digest()


@pytest.mark.parametrize("command", ["beta", "aubry", "faces", "chain", "sweep", "mane"])
def test_commands_run(command, tmp_path):
    c = parse_config(SMALL, ["outdir=%s" % tmp_path, "h=0.2, 0.1"])
    rec = run(command, c)
    assert rec.exit_code == 0 and rec.payload


def test_export_surface(tmp_path):
    c = parse_config(SMALL, ["outdir=%s" % tmp_path])
    rec = run("sweep", c)
    text = export_surface(rec, "matrix", tmp_path / "m.txt")
    lines = text.splitlines()
    assert lines[0].startswith("# rows: omega1")
    mat = np.array([[float(v) for v in ln.split()] for ln in lines[1:]])
    np.testing.assert_allclose(mat, mat[::-1, ::-1], atol=1e-12)
    recs = export_surface(rec, "records").splitlines()
    assert len(recs) == 25 and len(recs[0].split()) == 3
    with pytest.raises(ValueError):
        export_surface({}, "matrix")
    with pytest.raises(ValueError):
        export_surface(run("alpha", c), "matrix")


def test_pendulum_slice_records_show_flat(tmp_path):
    c = parse_config("model = pendulum(1)\nN = 32\nOmega = 1.6\nM = 4\n", ["outdir=%s" % tmp_path])
    rec = run("sweep", c)
    rows = [tuple(map(float, ln.split())) for ln in export_surface(rec, "records").splitlines()]
    flat = [a for w1, w2, a in rows if w2 == 0.0 and abs(w1) <= 1.25]
    assert len(flat) == 7 and max(abs(a - 1.0) for a in flat) < 1e-12
    edge = [a for w1, w2, a in rows if w2 == 0.0 and abs(w1) > 1.25]
    assert min(edge) > 1.0


def test_main_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("model = pendulum(1)\nN = 32\ntau = 0.1\nOmega = 1.6\nM = 4\noutdir = %s\n" % tmp_path)
    assert main(["verify", "--config", str(cfg), "--quiet"]) == 0
    assert main(["verify", "--config", str(cfg), "--set", "tol=0", "--quiet"]) == 2
    assert main(["alpha", "--config", str(cfg), "--set", "N=-3"]) == 1
    assert "line --set #1" in capsys.readouterr().err
    # stencil that cannot fit is an input error
    assert main(["alpha", "--config", str(cfg), "--set", "Omega=2", "--quiet"]) == 1


def test_main_prints_record(tmp_path, capsys):
    assert main(["alpha", "--set", "outdir=%s" % tmp_path, "--set", "N=16", "--set", "Omega=1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["payload"]["value"] == 0.0 and out["exit_code"] == 0


def test_threads_env_does_not_change_payload(tmp_path, monkeypatch):
    c = parse_config(SMALL, ["outdir=%s" % tmp_path])
    monkeypatch.setenv("AMLAB_THREADS", "1")
    a = run("sweep", c).payload_bytes()
    monkeypatch.setenv("AMLAB_THREADS", "4")
    assert run("sweep", c).payload_bytes() == a
