"""CLI surface: symbol parsing, subcommands, config runner, determinism."""

import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from bargspec.cli import ParseError, main, parse_symbol


class TestParseSymbol:
    def test_json_map(self):
        sym = parse_symbol('{"1,1":[1,0]}')
        assert sym.coeffs == {(1, 1): 1.0}

    def test_shorthand_pq(self):
        sym = parse_symbol("p^2+q^2")
        assert sym.coeffs == {(1, 1): 2.0}

    def test_shorthand_builtin_units(self):
        assert parse_symbol("|z|^2").coeffs == {(1, 1): 1.0}
        assert parse_symbol("z*zbar").coeffs == {(1, 1): 1.0}
        assert parse_symbol("|z|^4").coeffs == {(2, 2): 1.0}

    def test_shorthand_coefficients(self):
        sym = parse_symbol("2*|z|^2 - 0.5*z^2")
        assert sym.coeffs[(1, 1)] == 2.0
        assert sym.coeffs[(2, 0)] == -0.5

    def test_complex_coefficient(self):
        sym = parse_symbol("(1+0.3j)*|z|^4")
        assert sym.coeffs[(2, 2)] == 1 + 0.3j

    def test_malformed_complex_raises(self):
        with pytest.raises(ParseError):
            parse_symbol('{"1,1":[1]}')

    def test_unknown_unit_raises(self):
        with pytest.raises(ParseError):
            parse_symbol("p^3+q^2")

    def test_bad_json_raises_with_position(self):
        with pytest.raises(ParseError) as err:
            parse_symbol('{"1,1": [1, 0')
        assert "line" in str(err.value)

    def test_round_trip(self):
        sym = parse_symbol("p^2+q^2")
        assert parse_symbol(sym.to_json()).coeffs == sym.coeffs


class TestSubcommands:
    def test_spectrum_stdout(self, capsys):
        rc = main(["spectrum", "--symbol", "p^2+q^2", "--hbar", "0.1", "--count", "3"])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.splitlines()[0] == "0.2,0.0"

    def test_spectrum_to_file(self, tmp_path, capsys):
        out = tmp_path / "eig.csv"
        rc = main(
            ["spectrum", "--symbol", "|z|^2", "--hbar", "0.1", "--count", "2", "--out", str(out)]
        )
        assert rc == 0
        assert out.read_text().splitlines() == ["0.1,0.0", "0.2,0.0"]

    def test_action_exit_codes(self, capsys):
        assert main(["action", "--d", "1,0", "--energy", "0.3,0", "--winding", "1"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["value"][0] == pytest.approx(2 * np.pi * 0.3)

    def test_normal_form_json(self, capsys):
        rc = main(["normal-form", "--symbol", "p^2+q^2"])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["d0"] == [pytest.approx(2.0), pytest.approx(0.0, abs=1e-12)]
        assert doc["zeta"][0] == pytest.approx(1.0)
        assert len(doc["kappa1"]) == 2  # row-major 2x2

    def test_normal_form_rejects_nonquadratic(self, capsys):
        assert main(["normal-form", "--symbol", "|z|^4"]) == 1

    def test_normal_form_hyperbolic_tolerance_exit(self, capsys):
        sym = '{"2,0":[1,0],"0,2":[1,0]}'  # p^2 - q^2 in z coordinates
        assert main(["normal-form", "--symbol", sym]) == 2

    def test_pseudospec_csv(self, tmp_path):
        out = tmp_path / "field.csv"
        rc = main(
            [
                "pseudospec",
                "--symbol",
                "|z|^2",
                "--hbar",
                "0.1",
                "--rect",
                "0.0,0.3,-0.1,0.1",
                "--res",
                "4,3",
                "--c",
                "0.2",
                "--n-max",
                "32",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 12
        assert all(len(line.split(",")) == 4 for line in lines)

    def test_birkhoff_and_moser(self, capsys):
        assert main(["birkhoff", "--symbol", "|z|^2+|z|^4", "--degree", "8"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["mu0"][1] == [pytest.approx(1.0), pytest.approx(0.0)]
        assert doc["mu0"][2] == [pytest.approx(1.0), pytest.approx(0.0)]
        assert main(["moser", "--symbol", "z", "--order", "2", "--degree", "4"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert max(abs(x[0]) + abs(x[1]) for p in doc["r_final"] for x in p) < 1e-12


class TestConfigRunner:
    def make_config(self, tmp_path, tasks):
        cfg = {
            "seed": 0,
            "out_dir": str(tmp_path / "out"),
            "hbar": [0.1],
            "n_max": 32,
            "symbol": {"shorthand": "p^2+q^2"},
            "tasks": tasks,
        }
        path = tmp_path / "config.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_empty_tasks_is_config_error(self, tmp_path, capsys):
        path = self.make_config(tmp_path, [])
        assert main(["run", "--config", str(path)]) == 1

    def test_spectrum_task_and_manifest(self, tmp_path):
        path = self.make_config(
            tmp_path,
            [
                {"type": "spectrum", "count": 3, "out": "eig.csv"},
                {"type": "action", "d": [1.0, 0.0], "energy": [0.2, 0.0], "out": "action.json"},
            ],
        )
        assert main(["run", "--config", str(path)]) == 0
        out_dir = tmp_path / "out"
        eig = (out_dir / "eig.csv").read_text()
        assert eig.splitlines()[0] == "0.2,0.0"
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert len(manifest["artifacts"]) == 2
        for item in manifest["artifacts"]:
            data = (tmp_path / item["path"]).read_bytes() if not item["path"].startswith("/") else open(item["path"], "rb").read()
            assert hashlib.sha256(data).hexdigest() == item["sha256"]

    def test_determinism_byte_identical(self, tmp_path):
        p1 = self.make_config(tmp_path, [{"type": "spectrum", "count": 4, "out": "eig.csv"}])
        main(["run", "--config", str(p1)])
        first = (tmp_path / "out" / "eig.csv").read_bytes()
        main(["run", "--config", str(p1)])
        assert (tmp_path / "out" / "eig.csv").read_bytes() == first

    def test_bad_hbar_rejected(self, tmp_path):
        cfg = {
            "out_dir": str(tmp_path / "o"),
            "hbar": [1.5],
            "symbol": {"shorthand": "|z|^2"},
            "tasks": [{"type": "spectrum"}],
        }
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg))
        assert main(["run", "--config", str(path)]) == 1

    def test_unknown_task_rejected(self, tmp_path):
        path = self.make_config(tmp_path, [{"type": "frobnicate"}])
        assert main(["run", "--config", str(path)]) == 1


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "bargspec.cli", "action", "--d", "1,0", "--energy", "0,0"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
