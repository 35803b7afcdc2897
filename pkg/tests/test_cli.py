import os

import numpy as np
import pytest

from skinfem import cli


def write_ini(tmp_path, body, name="exp.ini"):
    path = tmp_path / name
    path.write_text(body)
    return str(path)


BASE = """\
[experiment]
study = solve
config = A
sigma = 5
p = 2
mesh = M1
out = {out}
"""


class TestValidation:
    def test_empty_sigma_list(self, tmp_path):
        path = write_ini(
            tmp_path,
            "[experiment]\nstudy = solve\nconfig = B1\nsigma =\np = 2\n",
        )
        assert cli.main(["--config", path]) == cli.EXIT_CONFIG

    def test_unknown_study(self, tmp_path):
        path = write_ini(
            tmp_path,
            "[experiment]\nstudy = wizardry\nconfig = B1\nsigma = 5\np = 2\n",
        )
        assert cli.main(["--config", path]) == cli.EXIT_CONFIG

    def test_corner_study_requires_config_a(self, tmp_path):
        path = write_ini(
            tmp_path,
            "[experiment]\nstudy = corner-study\nconfig = B1\nsigma = 5\np = 2\n",
        )
        assert cli.main(["--config", path]) == cli.EXIT_CONFIG

    def test_unknown_field(self, tmp_path):
        path = write_ini(
            tmp_path,
            "[experiment]\nstudy = solve\nconfig = A\nsigma = 5\np = 2\nfrobnicate = 1\n",
        )
        assert cli.main(["--config", path]) == cli.EXIT_CONFIG

    def test_missing_file(self):
        assert cli.main(["--config", "/nonexistent/exp.ini"]) == cli.EXIT_CONFIG

    def test_bad_threads(self, tmp_path):
        path = write_ini(tmp_path, BASE.format(out=tmp_path / "out"))
        assert cli.main(["--config", path, "--threads", "0"]) == cli.EXIT_CONFIG

    def test_nonnumeric_sigma(self, tmp_path):
        path = write_ini(
            tmp_path,
            "[experiment]\nstudy = solve\nconfig = A\nsigma = high\np = 2\n",
        )
        assert cli.main(["--config", path]) == cli.EXIT_CONFIG


class TestRuns:
    def test_solve_study_artifacts(self, tmp_path):
        out = tmp_path / "out"
        path = write_ini(tmp_path, BASE.format(out=out))
        assert cli.main(["--config", path]) == cli.EXIT_OK
        assert (out / "manifest.txt").exists()
        assert (out / "norms.csv").exists()
        manifest = (out / "manifest.txt").read_text().splitlines()
        assert manifest[0].startswith("input ")
        assert any("norms.csv" in line for line in manifest[1:])

    def test_rerun_byte_identical(self, tmp_path):
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        p1 = write_ini(tmp_path, BASE.format(out=out1), "a.ini")
        p2 = write_ini(tmp_path, BASE.format(out=out2), "b.ini")
        assert cli.main(["--config", p1]) == cli.EXIT_OK
        assert cli.main(["--config", p2]) == cli.EXIT_OK
        assert (out1 / "norms.csv").read_bytes() == (out2 / "norms.csv").read_bytes()

    def test_study_override_flag(self, tmp_path):
        out = tmp_path / "out"
        body = BASE.format(out=out).replace("study = solve", "study = corner-study")
        path = write_ini(tmp_path, body)
        # override back to solve via the flag
        assert cli.main(["--config", path, "--study", "solve"]) == cli.EXIT_OK

    def test_sigma_scaling_study(self, tmp_path):
        out = tmp_path / "out"
        body = (
            "[experiment]\nstudy = sigma-scaling\nconfig = A\n"
            f"sigma = 5, 10, 20\np = 2\nmesh = M1\nout = {out}\n"
        )
        path = write_ini(tmp_path, body)
        assert cli.main(["--config", path]) == cli.EXIT_OK
        t = float((out / "scaling_exponent.txt").read_text())
        assert -1.0 < t < 0.0

    def test_slope_table_columns(self, tmp_path):
        out = tmp_path / "out"
        body = (
            "[experiment]\nstudy = slope-study\nconfig = A\n"
            f"sigma = 5\np = 8\nmesh = M2\nout = {out}\n"
        )
        path = write_ini(tmp_path, body)
        assert cli.main(["--config", path]) == cli.EXIT_OK
        header = (out / "slope_table.csv").read_text().splitlines()[0]
        assert header == "sigma,ell,s,curv_ratio,p,n,s_fit,err"

    def test_solve_failure_removes_partial_outputs(self, tmp_path, monkeypatch):
        out = tmp_path / "out"
        path = write_ini(tmp_path, BASE.format(out=out))
        from skinfem import postprocess

        def boom(field):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(cli.postprocess, "conductor_norm", boom)
        assert cli.main(["--config", path]) == cli.EXIT_SOLVE
        assert not (out / "norms.csv").exists()
        leftovers = [f for f in os.listdir(out)] if out.exists() else []
        assert not any(f.startswith("field_") for f in leftovers)
