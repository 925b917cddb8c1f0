import csv
import hashlib
import math

import numpy as np
import pytest

from hbkit import cli
from hbkit.quadrature import QuadratureError
from tests.conftest import ROOT

EXAMPLES = ROOT / "configs" / "examples"


def run(tmp_path, command, text, *extra, name="out"):
    cfg = tmp_path / f"{name}.yaml"
    cfg.write_text(text)
    out = tmp_path / name
    return cli.main([command, "--config", str(cfg), "--out", str(out), *extra]), out


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def without_timestamp(path):
    lines = path.read_text().splitlines()
    assert lines[-1].startswith("timestamp=")
    return lines[:-1]


class TestExamples:
    def test_eval_zero_at_i(self, tmp_path):
        status, out = run(tmp_path, "eval", (EXAMPLES / "eval_zero.yaml").read_text())
        assert status == cli.EXIT_OK
        (row,) = rows(out / "eval.csv")
        assert (float(row["re"]), float(row["im"])) == (0.0, 1.0)
        assert [float(row[k]) for k in ("b_re", "b_im", "d1_re", "d1_im")] == [0.0, 0.0, 0.0, 0.0]

    def test_weight_sweep_zero_at_i(self, tmp_path):
        text = "symbol: {preset: zero}\nweight_sweep:\n  p: [2.0]\n  n: [1]\n  grid: {points: [[0.0, 1.0]]}\n"
        status, out = run(tmp_path, "weight-sweep", text)
        assert status == cli.EXIT_OK
        (row,) = rows(out / "weight-sweep.csv")
        assert float(row["w"]) == pytest.approx((math.pi / 2) ** (-1 / 3), rel=1e-12)
        assert float(row["w"]) == pytest.approx(0.8603, abs=5e-5)

    def test_bad_gamma(self, tmp_path, capsys):
        status, out = run(tmp_path, "riesz", (EXAMPLES / "riesz_bad_gamma.yaml").read_text())
        assert status == cli.EXIT_CONFIG
        assert "gamma > 1/3" in capsys.readouterr().err
        assert not out.exists()

    def test_levelset(self, tmp_path):
        status, out = run(tmp_path, "levelset", (EXAMPLES / "levelset_step.yaml").read_text())
        assert status == cli.EXIT_OK
        table = rows(out / "levelset.csv")
        assert len(table) == 13
        for r in table:
            x = float(r["x"])
            assert float(r["d_tilde"]) == min(float(r["d0"]), float(r["d_eps"]))
            if abs(x) <= 1:
                assert float(r["d0"]) == 0.0

    def test_bernstein(self, tmp_path):
        status, out = run(tmp_path, "bernstein", (EXAMPLES / "bernstein_blaschke.yaml").read_text())
        assert status == cli.EXIT_OK
        table = rows(out / "bernstein.csv")
        assert len(table) == 16 and all(float(r["ratio"]) >= 0 for r in table)


class TestExitCodes:
    def test_wrong_subcommand(self, tmp_path, capsys):
        status, _ = run(tmp_path, "riesz", (EXAMPLES / "eval_zero.yaml").read_text())
        assert status == cli.EXIT_CONFIG
        assert "eval" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path):
        status, _ = run(tmp_path, "eval", "symbol: {preset: zero}\neval: {points: [[0, 1]]}\nextra: 1\n")
        assert status == cli.EXIT_CONFIG

    def test_threads_must_be_positive(self, tmp_path):
        status, _ = run(tmp_path, "eval", (EXAMPLES / "eval_zero.yaml").read_text(), "--threads", "0")
        assert status == cli.EXIT_CONFIG

    def test_numerical_failure(self, tmp_path, monkeypatch):
        def boom(ctx):
            raise QuadratureError("panel budget exhausted")

        monkeypatch.setitem(cli.RUNNERS, "eval", boom)
        status, out = run(tmp_path, "eval", (EXAMPLES / "eval_zero.yaml").read_text())
        assert status == cli.EXIT_NUMERICAL
        summary = (out / "summary.txt").read_text()
        assert "error: numerical failure: QuadratureError" in summary
        assert "exit_status=3" in (out / "manifest.txt").read_text()

    def test_findings(self, tmp_path):
        text = "symbol: {preset: zero}\nriesz:\n  geometric: [1.0, 4.0, 4]\n  gamma: 0.4\n  trials: 2\n  lam_threshold: 0.99\n"
        status, out = run(tmp_path, "riesz", text)
        assert status == cli.EXIT_FINDINGS
        assert "finding: zero: lam_min" in (out / "summary.txt").read_text()


class TestReports:
    def test_manifest(self, tmp_path):
        status, out = run(tmp_path, "eval", (EXAMPLES / "eval_zero.yaml").read_text())
        lines = (out / "manifest.txt").read_text().splitlines()
        keys = [ln.split("=", 1)[0] for ln in lines]
        assert keys[:7] == ["toolkit", "version", "command", "seed", "rel_tol", "config_sha256", "config"]
        assert keys[-2:] == ["exit_status", "timestamp"]
        for ln in lines:
            if ln.startswith("output."):
                key, digest = ln.split("=")
                name = key[len("output."):-len(".sha256")]
                assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest

    def test_seed_override(self, tmp_path):
        _, out = run(tmp_path, "eval", (EXAMPLES / "eval_zero.yaml").read_text(), "--seed", "99")
        assert "seed=99" in (out / "manifest.txt").read_text().splitlines()

    def test_threads_do_not_change_bytes(self, tmp_path):
        text = (EXAMPLES / "bernstein_blaschke.yaml").read_text()
        _, a = run(tmp_path, "bernstein", text, "--threads", "1", name="a")
        _, b = run(tmp_path, "bernstein", text, "--threads", "4", name="b")
        for name in ("bernstein.csv", "summary.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes()
        assert without_timestamp(a / "manifest.txt") == without_timestamp(b / "manifest.txt")

    @pytest.mark.parametrize(
        "v, s", [(True, "1"), (np.int64(3), "3"), (0.1, "0.10000000000000001"), (math.inf, "inf"), (math.nan, "nan")]
    )
    def test_fmt(self, v, s):
        assert cli.fmt(v) == s
