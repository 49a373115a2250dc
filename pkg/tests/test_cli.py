import csv
import io
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml
from scipy.optimize import brentq

from certkit.cli import (
    CSV_COLUMNS,
    EXIT_CONFIG,
    EXIT_DIVERGED,
    EXIT_INFEASIBLE,
    EXIT_OK,
    main,
    parse_grid,
)
from certkit.config import load_example
from certkit.errors import ConfigurationError

GOLDEN = Path(__file__).with_name("golden")


def write_cfg(tmp_path, mutate=None, name="run.cfg"):
    data = load_example().echo()
    data["output"]["dir"] = str(tmp_path)
    if mutate:
        mutate(data)
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


class TestCertify:
    def test_example(self, tmp_path, capsys):
        assert main(["certify", "--config", str(write_cfg(tmp_path))]) == EXIT_OK
        assert (tmp_path / "report.json").exists() and (tmp_path / "report.txt").exists()
        assert "13.9929495" in capsys.readouterr().out

    def test_large_sigma(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, lambda d: d["nonlinearity"].update(sigma=20.0))
        assert main(["certify", "--config", str(cfg)]) == EXIT_INFEASIBLE
        err = capsys.readouterr().err
        assert "3" in err and "omega > 0" in err

    def test_missing_P(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, lambda d: d["system"].pop("P"))
        assert main(["certify", "--config", str(cfg)]) == EXIT_CONFIG
        assert "system.P" in capsys.readouterr().err

    def test_no_config(self, capsys):
        assert main(["certify"]) == EXIT_CONFIG

    def test_bad_command(self, capsys):
        assert main(["frobnicate"]) == EXIT_CONFIG

    def test_out_override(self, tmp_path):
        other = tmp_path / "elsewhere"
        assert main(["certify", "--config", str(write_cfg(tmp_path)), "--out", str(other)]) == EXIT_OK
        assert (other / "report.json").exists()


class TestSimulate:
    def test_example_bounds_hold(self, tmp_path, capsys):
        def shorten(d):
            d["numerics"].update(T=10.0, N=24)

        assert main(["simulate", "--config", str(write_cfg(tmp_path, shorten))]) == EXIT_OK
        header, rows = read_csv(tmp_path / "trajectory.csv")
        assert tuple(header) == CSV_COLUMNS
        vals = np.array(rows, dtype=float)
        assert np.all(vals[:, 2] <= vals[:, 4]) and np.all(vals[:, 1] <= vals[:, 5])
        assert "bound_violations: 0" in capsys.readouterr().out

    def test_golden_header(self, tmp_path):
        def tiny(d):
            d["numerics"].update(T=0.1, N=8)

        main(["simulate", "--config", str(write_cfg(tmp_path, tiny))])
        text = (tmp_path / "trajectory.csv").read_text()
        assert text.splitlines(keepends=True)[0] == (GOLDEN / "trajectory_header.csv").read_text()
        assert "\r" not in text

    def test_shortest_repr_floats(self, tmp_path):
        def tiny(d):
            d["numerics"].update(T=0.1, N=8)

        main(["simulate", "--config", str(write_cfg(tmp_path, tiny))])
        _, rows = read_csv(tmp_path / "trajectory.csv")
        for cell in rows[-1]:
            assert repr(float(cell)) == cell

    def test_zero_config(self, tmp_path):
        def zero(d):
            d["system"].update(C=-1.0, B={"kind": "constant", "value": 0.0}, D={"kind": "constant", "value": 0.0})
            d["nonlinearity"].update(sigma=0.0, L=0.0, f={"kind": "zero"})
            d["disturbance"] = {"d1": {"kind": "zero"}, "d2": {"kind": "zero"}, "d_inf": 0.0}
            d["initial"] = {"phi": {"kind": "zero"}, "x0": [0.0]}
            d["numerics"].update(T=1.0, N=8)

        assert main(["simulate", "--config", str(write_cfg(tmp_path, zero))]) == EXIT_OK
        _, rows = read_csv(tmp_path / "trajectory.csv")
        vals = np.array(rows, dtype=float)
        assert np.all(vals[:, 1:] == 0.0)

    def test_imex_divergence(self, tmp_path, capsys):
        def coarse(d):
            d["numerics"].update(scheme="imex-euler", dt=20.0, T=4000.0, record_dt=20.0, N=8)

        assert main(["simulate", "--config", str(write_cfg(tmp_path, coarse))]) == EXIT_DIVERGED
        err = capsys.readouterr().err
        assert "divergence at t =" in err

    def test_backend_flag(self, tmp_path, capsys):
        def tiny(d):
            d["numerics"].update(T=0.1, N=8)

        assert main(["simulate", "--config", str(write_cfg(tmp_path, tiny)), "--backend", "python"]) == EXIT_OK
        import json

        assert json.loads((tmp_path / "report.json").read_text())["numerics"]["backend"] == "python"


class TestSweep:
    def test_p_grid(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        assert main(["sweep", "--config", str(cfg), "--param", "p", "--grid", "0.5,1,2"]) == EXIT_OK
        header, rows = read_csv(tmp_path / "sweep.csv")
        assert len(rows) == 3
        feas = {float(r[1]): r[header.index("feasible")] for r in rows}
        assert feas[1.0] == "true"

    def test_empty_grid(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        assert main(["sweep", "--config", str(cfg), "--param", "p", "--grid", " , "]) == EXIT_CONFIG

    def test_unknown_param(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        assert main(["sweep", "--config", str(cfg), "--param", "zzz", "--grid", "1"]) == EXIT_CONFIG
        assert "zzz" in capsys.readouterr().err

    def test_dotted_param(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        assert main(["sweep", "--config", str(cfg), "--param", "nonlinearity.sigma", "--grid", "1,20"]) == EXIT_OK
        header, rows = read_csv(tmp_path / "sweep.csv")
        assert [r[header.index("feasible")] for r in rows] == ["true", "false"]

    def test_sigma_flip_at_omega_zero(self, tmp_path, capsys):
        # with L = 0 the off-diagonal of Xi vanishes, so feasibility is exactly omega > 0
        cfg = write_cfg(tmp_path, lambda d: d["nonlinearity"].update(L=0.0))
        grid = np.linspace(7.0, 8.0, 11)
        assert main(["sweep", "--config", str(cfg), "--param", "sigma",
                     "--grid", ",".join(repr(float(v)) for v in grid)]) == EXIT_OK
        header, rows = read_csv(tmp_path / "sweep.csv")
        omega = np.array([float(r[header.index("omega")]) for r in rows])
        feas = [r[header.index("feasible")] == "true" for r in rows]
        assert feas == list(omega > 0)
        assert any(feas) and not all(feas)
        # omega is affine in sigma; bisect the sign change and probe either side
        slope = (omega[-1] - omega[0]) / (grid[-1] - grid[0])
        star = brentq(lambda s: omega[0] + slope * (s - grid[0]), grid[0], grid[-1])
        probe = f"{float(star) - 1e-6!r},{float(star) + 1e-6!r}"
        main(["sweep", "--config", str(cfg), "--param", "sigma", "--grid", probe])
        _, rows = read_csv(tmp_path / "sweep.csv")
        assert [r[header.index("feasible")] for r in rows] == ["true", "false"]

    def test_rows_independent_of_threads(self, tmp_path, monkeypatch, capsys):
        cfg = write_cfg(tmp_path)
        args = ["sweep", "--config", str(cfg), "--param", "sigma", "--grid", "0.5,1,1.5,2"]
        monkeypatch.setenv("CERTKIT_THREADS", "1")
        main(args)
        one = (tmp_path / "sweep.csv").read_bytes()
        monkeypatch.setenv("CERTKIT_THREADS", "4")
        main(args)
        assert (tmp_path / "sweep.csv").read_bytes() == one

    def test_parse_grid(self):
        assert parse_grid("1, 2.5,3") == [1.0, 2.5, 3.0]
        with pytest.raises(ConfigurationError):
            parse_grid("1,x")


class TestAudit:
    def test_example(self, tmp_path, capsys):
        assert main(["audit", "--config", str(write_cfg(tmp_path))]) == EXIT_OK
        assert "VIOLATION" not in capsys.readouterr().out

    def test_square(self, tmp_path, capsys):
        sq = {"kind": "polynomial", "coeffs": [0.0, 0.0, 1.0]}
        cfg = write_cfg(tmp_path, lambda d: d["nonlinearity"].update(f=sq))
        assert main(["audit", "--config", str(cfg), "--seed", "3"]) == EXIT_INFEASIBLE
        out = capsys.readouterr().out
        assert "VIOLATION" in out and "witness=" in out

    def test_zero_samples(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, lambda d: d["numerics"].update(audit_samples=0))
        assert main(["audit", "--config", str(cfg)]) == EXIT_CONFIG

    def test_bad_handle(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, lambda d: d["nonlinearity"].update(f={"kind": "mystery"}))
        assert main(["audit", "--config", str(cfg)]) == EXIT_CONFIG
        assert "nonlinearity.f" in capsys.readouterr().err


class TestReproduce:
    def test_table(self, capsys):
        assert main(["reproduce-example"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "kappa" in out and "1.48259431" in out and "K2" in out

    def test_byte_identical(self, tmp_path, capsys):
        main(["reproduce-example", "--out", str(tmp_path)])
        first = {n: (tmp_path / n).read_bytes() for n in ("report.json", "report.txt")}
        main(["reproduce-example", "--out", str(tmp_path)])
        for name, data in first.items():
            assert (tmp_path / name).read_bytes() == data


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "certkit.cli", "certify", "--config", str(write_cfg(tmp_path))],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
