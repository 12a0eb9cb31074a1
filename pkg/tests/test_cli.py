import json
import subprocess
import sys
from pathlib import Path

import pytest

from sarmanov_ruin import cli
from sarmanov_ruin import montecarlo as mc

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
MODEL = json.loads((CONFIGS / "fgm_valid.json").read_text())["model"]


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def _run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(autouse=True)
def _no_env_workers(monkeypatch):
    monkeypatch.delenv(mc.WORKERS_ENV, raising=False)


class TestExitCodes:
    def test_validate_ok(self, capsys):
        assert _run("validate", "--config", CONFIGS / "fgm_valid.json") == 0
        assert json.loads(capsys.readouterr().out)["valid"] is True

    def test_validate_fails(self, capsys):
        assert _run("validate", "--config", CONFIGS / "fgm_invalid.json") == 2
        assert "nonnegativity" in json.loads(capsys.readouterr().out)["failed"]

    def test_parse_error_reports_position(self, tmp_path, capsys):
        cfg = _write(tmp_path, "bad.json", '{"model":\n  {"F": }\n}')
        assert _run("validate", "--config", cfg) == 1
        err = capsys.readouterr().err
        assert "line 2" in err and "column" in err

    def test_missing_config_flag(self, capsys):
        assert _run("validate") == 1

    def test_no_subcommand(self, capsys):
        assert _run() == 1

    def test_missing_seed(self, tmp_path, capsys):
        cfg = _write(tmp_path, "p.json", {"model": MODEL, "x": [5.0], "N": 1000})
        assert _run("product-tail", "--config", cfg, "--out", tmp_path) == 1
        assert "seed" in capsys.readouterr().err

    def test_invalid_model_in_simulation(self, tmp_path, capsys):
        bad = dict(MODEL, theta=1.5)
        cfg = _write(tmp_path, "p.json", {"model": bad, "x": [5.0], "N": 1000, "seed": 1})
        assert _run("product-tail", "--config", cfg, "--out", tmp_path) == 2

    def test_empty_grid(self, tmp_path, capsys):
        cfg = _write(tmp_path, "p.json", {"model": MODEL, "x": [], "N": 1000, "seed": 1})
        assert _run("product-tail", "--config", cfg, "--out", tmp_path) == 1

    def test_bad_beta_window(self, tmp_path, capsys):
        cfg = _write(tmp_path, "m.json", {"law": {"family": "Uniform01", "params": {}},
                                          "alpha": 2.0, "beta_max": 0})
        assert _run("mellin-scan", "--config", cfg, "--out", tmp_path) == 1

    def test_bad_oscillation(self, tmp_path, capsys):
        cfg = _write(tmp_path, "c.json", {"a": 0.8, "b": 0.3})
        assert _run("counterexample", "--config", cfg, "--out", tmp_path) == 2

    def test_infeasible_truncation(self, tmp_path, capsys):
        model = dict(MODEL, G={"family": "TwoAtom", "params": {"y1": 1.0, "p1": 0.5, "y2": 2.0}},
                     theta=0.0)
        cfg = _write(tmp_path, "r.json", {"model": model, "x": [10.0], "n": ["inf"], "N": 1000,
                                          "seed": 1})
        assert _run("ruin", "--config", cfg, "--out", tmp_path) == 3
        assert "infeasible" in capsys.readouterr().err


class TestOutputs:
    def test_ruin_files(self, tmp_path, capsys):
        cfg = _write(tmp_path, "r.json", {"model": MODEL, "x": [5.0, 10.0], "n": [1, 3, "inf"],
                                          "N": 20000, "eps_trunc": 1e-2, "chunk_size": 5000})
        assert _run("ruin", "--config", cfg, "--out", tmp_path, "--seed", 4) == 0
        lines = (tmp_path / "ruin.csv").read_text().splitlines()
        assert lines[0].startswith("x,horizon,p_hat")
        assert len(lines) == 1 + 6
        side = json.loads((tmp_path / "ruin.json").read_text())
        assert side["seed"] == 4 and side["chunk_size"] == 5000
        assert side["workers"] == {"count": 1, "source": "default", "env_var": mc.WORKERS_ENV}
        assert side["result"]["constants"]["inf"] == pytest.approx(0.625)
        assert "elapsed_seconds" not in side

    def test_timing_flag(self, tmp_path, capsys):
        cfg = CONFIGS / "mellin_uniform.json"
        assert _run("mellin-scan", "--config", cfg, "--out", tmp_path, "--timing") == 0
        assert "elapsed_seconds" in json.loads((tmp_path / "mellin_scan.json").read_text())

    def test_mellin_two_atom(self, tmp_path, capsys):
        assert _run("mellin-scan", "--config", CONFIGS / "mellin_two_atom.json", "--out", tmp_path) == 0
        res = json.loads(capsys.readouterr().out)
        assert res["verdict"].startswith("zeros:") and res["zeros"]

    def test_hill_and_tail_ratio(self, tmp_path, capsys):
        assert _run("hill", "--config", CONFIGS / "hill.json", "--out", tmp_path, "--seed", 3) == 0
        ests = json.loads(capsys.readouterr().out)["estimates"]
        assert [e["k"] for e in ests] == [100, 1000, 10000]
        assert _run("tail-ratio", "--config", CONFIGS / "tail_ratio.json", "--out", tmp_path) == 0
        assert json.loads(capsys.readouterr().out)["verdict"] == "OSCILLATING"

    def test_dominated_check(self, tmp_path, capsys):
        cfg = _write(tmp_path, "d.json", {"law": {"family": "Pareto", "params": {"alpha": 2.0, "xm": 1.0}},
                                          "check": "dominated", "y": 0.5, "x": {"geom": [1, 1e4, 50]}})
        assert _run("tail-ratio", "--config", cfg, "--out", tmp_path) == 0
        assert json.loads(capsys.readouterr().out)["verdict"] == "IN_D"


class TestDeterminism:
    def _product(self, tmp_path, sub, *extra):
        cfg = _write(tmp_path, "p.json", {"model": MODEL, "x": [2.0, 5.0], "N": 60000,
                                          "chunk_size": 15000})
        out = tmp_path / sub
        assert _run("product-tail", "--config", cfg, "--out", out, "--seed", 9, *extra) == 0
        return out

    def test_byte_identical_rerun(self, tmp_path, capsys):
        a = self._product(tmp_path, "a")
        b = self._product(tmp_path, "b")
        for name in ("product_tail.csv", "product_tail.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_workers_do_not_change_csv(self, tmp_path, capsys):
        a = self._product(tmp_path, "one", "--workers", 1)
        b = self._product(tmp_path, "two", "--workers", 2)
        assert (a / "product_tail.csv").read_bytes() == (b / "product_tail.csv").read_bytes()
        assert json.loads((b / "product_tail.json").read_text())["workers"]["source"] == "flag"

    def test_env_overrides_flag(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv(mc.WORKERS_ENV, "2")
        out = self._product(tmp_path, "env", "--workers", 1)
        side = json.loads((out / "product_tail.json").read_text())
        assert side["workers"]["count"] == 2 and side["workers"]["source"] == "env"


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sarmanov_ruin", "validate", "--config",
                           str(CONFIGS / "fgm_invalid.json")], capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stdout)["valid"] is False
