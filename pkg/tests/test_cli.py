from __future__ import annotations

import json

import pytest

from gplab import cli
from gplab.experiments import EXPERIMENTS


def _main(*argv):
    return cli.main(list(argv))


@pytest.mark.parametrize(
    "argv",
    [
        ["enumerate", "--n", "9"],
        ["enumerate", "--n", "0"],
        ["est-lemma22", "--pairs", "[[2.0, 1.0]]"],
        ["est-lemma22", "--pairs", "[[1.0, 1.0]]"],
        ["nls-run", "--d", "2"],
        ["nls-run", "--dt", "0.3"],
        ["nls-factor-check", "--ks", "[4]"],
        ["verify-moves", "--seed", "-1"],
    ],
)
def test_invalid_configs_exit_2(argv, tmp_path, capsys):
    assert _main(*argv, "--outdir", str(tmp_path)) == cli.EXIT_INVALID
    assert "invalid configuration" in capsys.readouterr().err
    assert not any(tmp_path.iterdir())


def test_unknown_params_and_ids():
    assert cli.validate(cli.ExperimentConfig("nope"))
    assert any("unknown parameters" in v for v in cli.validate(cli.ExperimentConfig("counts", {"colour": 1})))
    with pytest.raises(cli.ValidationError):
        cli.run(cli.ExperimentConfig("enumerate", {"n": 20}), write=False)


@pytest.mark.parametrize("exp_id", sorted(EXPERIMENTS))
def test_defaults_validate(exp_id):
    assert cli.validate(cli.ExperimentConfig(exp_id)) == []


def test_validate_only(tmp_path, capsys):
    assert _main("counts", "--validate-only", "--outdir", str(tmp_path)) == cli.EXIT_PASS
    assert "configuration ok" in capsys.readouterr().out
    assert not any(tmp_path.iterdir())


def test_config_file_overrides_flags(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"id": "enumerate", "params": {"n": 4}, "seed": 3}))
    out = tmp_path / "out"
    assert _main("enumerate", "--n", "2", "--config", str(cfg), "--outdir", str(out), "--run-id", "a") == 0
    rec = json.loads((out / "enumerate" / "a" / "result.json").read_text())
    assert rec["config"]["params"]["n"] == 4 and rec["config"]["seed"] == 3
    assert rec["summary"]["count"] == 24
    cfg.write_text(json.dumps({"id": "counts"}))
    assert _main("enumerate", "--config", str(cfg), "--outdir", str(out)) == cli.EXIT_INVALID
    assert _main("enumerate", "--config", str(tmp_path / "missing.json")) == cli.EXIT_INVALID


@pytest.mark.parametrize(
    "argv,artifact,header",
    [
        (["counts", "--n-max", "6", "--brute-force-max", "4"], "counts.csv", None),
        (["classes", "--n", "3"], "classes.csv", "n,class_representative,member_count,measure"),
        (["verify-comm", "--j-max", "3", "--seeds", "2"], "commutation.csv", None),
        (["nls-factor-check", "--seeds", "1"], "factorization.csv", "k,seed,tensor_norm,product_norm,residual"),
        (["remark-bound", "--runs", "2", "--dt", "0.01"], "remark.csv", "run,k,lhs_R,lhs_grad,lhs_tensor,rhs,ratio,B_T"),
    ],
)
def test_outputs_deterministic(argv, artifact, header, tmp_path):
    for rid in ("r1", "r2"):
        assert _main(*argv, "--outdir", str(tmp_path), "--run-id", rid) == cli.EXIT_PASS
    base = tmp_path / argv[0]
    for name in ("result.json", artifact):
        assert (base / "r1" / name).read_bytes() == (base / "r2" / name).read_bytes()
    timing = json.loads((base / "r1" / "timing.json").read_text())
    assert timing["wall_time_s"] >= 0 and timing["backend"] in ("compiled", "python")
    rec = json.loads((base / "r1" / "result.json").read_text())
    assert "wall_time" not in json.dumps(rec)
    assert artifact in rec["artifacts"]
    if header is not None:
        assert (base / "r1" / artifact).read_text().splitlines()[0] == header


def test_seed_changes_random_outputs(tmp_path):
    for seed in ("0", "1"):
        _main("nls-factor-check", "--seeds", "1", "--seed", seed, "--outdir", str(tmp_path), "--run-id", seed)
    a = (tmp_path / "nls-factor-check" / "0" / "factorization.csv").read_text()
    b = (tmp_path / "nls-factor-check" / "1" / "factorization.csv").read_text()
    assert a != b


def test_failing_check_exit_1(tmp_path, capsys):
    # a tolerance of 1e-300 cannot be met by floating-point residuals
    assert _main("nls-factor-check", "--seeds", "1", "--tol", "1e-300", "--outdir", str(tmp_path)) == cli.EXIT_FAIL
    assert "FAIL" in capsys.readouterr().out


def test_report(tmp_path, capsys):
    _main("enumerate", "--outdir", str(tmp_path), "--run-id", "ok")
    _main("nls-factor-check", "--seeds", "1", "--tol", "1e-300", "--outdir", str(tmp_path), "--run-id", "bad")
    capsys.readouterr()
    assert _main("report", str(tmp_path / "enumerate")) == cli.EXIT_PASS
    assert _main("report", str(tmp_path), "--json") == cli.EXIT_FAIL
    summary = json.loads(capsys.readouterr().out.split("1/1 passed\n")[-1])
    assert summary["total"] == 2 and summary["failed"] == 1
    bad = next(r for r in summary["runs"] if not r["pass"])
    assert bad["failed_checks"] == ["max_factor_residual"]


def test_format_report():
    text = cli.format_report(cli.report([{"experiment": "x", "pass": True, "checks": []}]))
    assert text.splitlines() == ["PASS  x", "1/1 passed"]
