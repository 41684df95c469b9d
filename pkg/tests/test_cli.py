import json
import subprocess
import sys

import numpy as np
import pytest

from schedkit import cli, schemas


def run(*argv):
    return cli.main(list(argv))


def load(path):
    return json.loads(path.read_text())


def test_generate_cosine_midpoint(tmp_path):
    out = tmp_path / "s.json"
    assert run("generate", "--family", "fisher-cosine", "--steps", "1000", "--out", str(out)) == 0
    doc = load(out)
    schemas.validate("schedule", doc)
    assert doc["alpha_bars"][499] == 0.5


def test_generate_constant_variance_stdout(capsys):
    assert run("generate", "--family", "constant-variance", "--steps", "4", "--out", "-") == 0
    assert json.loads(capsys.readouterr().out)["betas"] == [0.25, 1 / 3, 0.5, 1.0]


def test_generate_entropy_clamped(tmp_path):
    out = tmp_path / "e.json"
    assert run("generate", "--family", "entropy", "--steps", "10", "--sigma0-sq", "1.261e-6",
               "--entropy-form", "derived", "--out", str(out)) == 0
    doc = load(out)
    assert doc["alpha_bars"][-1] == doc["alpha_bar_floor"] and doc["clamped_indices"] == [10]


def test_generate_custom_from_import_path(tmp_path):
    out = tmp_path / "c.json"
    assert run("generate", "--family", "custom", "--steps", "10", "--density", "schedkit.sampler_design:_cv_evaluator",
               "--singular-at-one", "--out", str(out)) == 0
    k = np.arange(1, 11)
    np.testing.assert_allclose(load(out)["alpha_bars"][:-1], (1 - (k / 10) ** 2)[:-1], rtol=1e-12)


@pytest.mark.parametrize("argv", [
    ["generate", "--family", "nope", "--steps", "3"],
    ["generate", "--family", "fisher-cosine", "--steps", "0"],
    ["generate", "--family", "custom", "--steps", "3"],
    ["generate", "--family", "custom", "--steps", "3", "--density", "no.such.module:f"],
    ["generate", "--family", "linear-beta", "--steps", "3", "--beta-end", "3"],
    ["generate", "--family", "fisher-cosine", "--steps", "3", "--alpha-bar-floor", "0"],
    [],
])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        code = run(*argv)
        raise SystemExit(code)
    assert exc.value.code == 2


def test_io_error(tmp_path):
    assert run("generate", "--family", "fisher-cosine", "--steps", "3", "--out", str(tmp_path / "no" / "x.json")) == 3
    assert run("convert", "--in", str(tmp_path / "missing.json"), "--emit", "betas") == 3


def test_convert_examples(tmp_path, capsys):
    rep = tmp_path / "b.json"
    rep.write_text(json.dumps({"format_version": 1, "representation": "betas", "T": 3,
                               "alpha_bar_floor": 1e-12, "values": [0.25, 1 / 3, 0.5]}))
    assert run("convert", "--in", str(rep), "--emit", "times", "--out", "-") == 0
    doc = json.loads(capsys.readouterr().out)
    np.testing.assert_allclose(doc["values"], [-0.5 * np.log(0.75), 0.5 * np.log(2), np.log(2)], rtol=1e-15)
    assert run("convert", "--in", str(rep), "--emit", "betas", "--format", "csv", "--out", "-") == 0
    assert capsys.readouterr().out.splitlines()[0] == "k,beta,alpha,alpha_bar,t"


def test_convert_roundtrip(tmp_path):
    s, t, b, t2 = (tmp_path / n for n in ("s.json", "t.json", "b.json", "t2.json"))
    run("generate", "--family", "linear-beta", "--steps", "100", "--out", str(s))
    assert run("convert", "--in", str(s), "--emit", "times", "--out", str(t)) == 0
    assert run("convert", "--in", str(t), "--emit", "betas", "--out", str(b)) == 0
    assert run("convert", "--in", str(b), "--emit", "times", "--out", str(t2)) == 0
    np.testing.assert_allclose(load(t2)["values"], load(t)["values"], rtol=1e-12)
    for p in (t, b, t2):
        schemas.validate("representation", load(p))


def test_convert_malformed(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format_version": 1}')
    assert run("convert", "--in", str(bad), "--emit", "times") == 2


def test_verify_corrupted_exits_2(tmp_path):
    s = tmp_path / "s.json"
    run("generate", "--family", "fisher-cosine", "--steps", "50", "--out", str(s))
    doc = load(s)
    doc["alpha_bars"][7] *= 1.01
    s.write_text(json.dumps(doc))
    out = tmp_path / "r.json"
    assert run("verify", "--schedule", str(s), "--samples", "200000", "--out", str(out)) == 2
    assert not out.exists()


def test_verify_underpowered(tmp_path):
    s, r = tmp_path / "s.json", tmp_path / "r.json"
    run("generate", "--family", "fisher-cosine", "--steps", "10", "--out", str(s))
    assert run("verify", "--schedule", str(s), "--samples", "100", "--seed", "4", "--out", str(r)) == 0
    doc = load(r)
    schemas.validate("report", doc)
    assert doc["underpowered"] and any("underpowered" in w for w in doc["warnings"])


def test_verify_seed_env_fallback(tmp_path, monkeypatch):
    s = tmp_path / "s.json"
    run("generate", "--family", "fisher-cosine", "--steps", "5", "--out", str(s))
    monkeypatch.setenv("SCHEDKIT_SEED", "17")
    run("verify", "--schedule", str(s), "--samples", "500", "--out", str(tmp_path / "a.json"))
    assert load(tmp_path / "a.json")["config"]["seed"] == 17
    run("verify", "--schedule", str(s), "--samples", "500", "--seed", "3", "--out", str(tmp_path / "b.json"))
    assert load(tmp_path / "b.json")["config"]["seed"] == 3
    monkeypatch.setenv("SCHEDKIT_SEED", "abc")
    assert run("verify", "--schedule", str(s), "--samples", "500") == 2


def test_verify_fails_on_broken_equivalence(tmp_path, monkeypatch):
    from schedkit import equivalence

    s = tmp_path / "s.json"
    run("generate", "--family", "fisher-cosine", "--steps", "10", "--out", str(s))
    real = equivalence.run_equivalence

    def doubled(sched, cfg, alpha, **kw):
        times = equivalence.ObservationTimes(2 * sched.observation_times().times)
        return real(sched, cfg, alpha, times=times, **kw)

    monkeypatch.setattr(cli, "run_equivalence", doubled)
    assert run("verify", "--schedule", str(s), "--samples", "20000", "--out", str(tmp_path / "r.json")) == 1
    assert load(tmp_path / "r.json")["verdict"] == "fail"


def test_compare(tmp_path, capsys):
    assert run("compare", "--families", "fisher-cosine,constant-variance", "--steps", "4", "--format", "csv") == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 5 and lines[0].count(",") == 4
    out = tmp_path / "c.json"
    assert run("compare", "--steps", "1000", "--out", str(out)) == 0
    doc = load(out)
    schemas.validate("compare", doc)
    for col in doc["columns"].values():
        assert np.all(np.diff(col["alpha_bars"]) < 0)
    assert doc["columns"]["cv-quadratic"]["alpha_bars"][-1] == 1e-12


def test_scaling(tmp_path):
    out = tmp_path / "g.json"
    assert run("scaling", "--family", "fisher-cosine", "--steps", "100", "--factor", "10", "--out", str(out)) == 0
    assert load(out)["max_gap"] < 1e-12
    assert run("scaling", "--family", "linear-beta", "--steps", "100", "--factor", "10", "--out", str(out)) == 0
    schemas.validate("scaling", load(out))
    assert load(out)["max_gap"] > 0.01
    assert run("scaling", "--family", "fisher-cosine", "--steps", "10", "--factor", "1") == 2


def test_mi_feasibility(tmp_path, capsys):
    out = tmp_path / "m.json"
    assert run("mi-feasibility", "--out", str(out)) == 0
    doc = load(out)
    schemas.validate("feasibility", doc)
    assert len(doc["points"]) == 1000
    assert not doc["rhs_in_unit_interval"] and not any(p["in_unit_interval"] for p in doc["points"])
    assert run("mi-feasibility", "--grid", "1", "--out", str(out)) == 0
    assert len(load(out)["points"]) == 1
    assert run("mi-feasibility", "--sigma0-sq", "1.5") == 2
    assert run("mi-feasibility", "--sigma0-sq", "0") == 2
    assert run("mi-feasibility", "--grid", "3", "--format", "csv") == 0
    assert capsys.readouterr().out.splitlines()[0] == "t,mutual_information,rhs,in_unit_interval"


def test_byte_identical_outputs(tmp_path):
    for name in ("a", "b"):
        run("generate", "--family", "entropy", "--steps", "64", "--out", str(tmp_path / f"{name}.json"))
        run("verify", "--schedule", str(tmp_path / "a.json"), "--samples", "3000", "--seed", "9",
            "--out", str(tmp_path / f"{name}.report.json"))
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "a.report.json").read_bytes() == (tmp_path / "b.report.json").read_bytes()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "schedkit", "generate", "--family", "cv-quadratic", "--steps", "3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["T"] == 3
