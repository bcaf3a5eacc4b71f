"""CLI subcommands, exit codes, and output formats."""

import json
import os
import subprocess
import sys

import pytest

from nfbdd.cli import EXIT_CAP, EXIT_OK, EXIT_PARAMS, EXIT_PARSE, main
from nfbdd.core import count_exact
from nfbdd.formats import parse_nfbdd, serialize_nfbdd, gen_random

DNF_TEXT = "p dnf 3 2\n1 2 0\n-1 3 0\n"


@pytest.fixture
def instance_file(tmp_path):
    path = tmp_path / "inst.nfbdd"
    path.write_text(serialize_nfbdd(gen_random(4, 14, 1)))
    return str(path)


@pytest.fixture
def dnf_file(tmp_path):
    path = tmp_path / "f.dnf"
    path.write_text(DNF_TEXT)
    return str(path)


class TestExact:
    def test_nfbdd_input(self, instance_file, capsys):
        assert main(["exact", instance_file]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "10"

    def test_dnf_input(self, dnf_file, capsys):
        assert main(["exact", dnf_file, "--dnf"]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "4"

    def test_cap_exceeded(self, instance_file, capsys):
        assert main(["exact", instance_file, "--cap", "2"]) == EXIT_CAP

    def test_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.nfbdd"
        bad.write_text("p nfbdd 1 1\n1 T\n")  # missing footer
        assert main(["exact", str(bad)]) == EXIT_PARSE

    def test_missing_file(self, capsys):
        assert main(["exact", "/nonexistent/file"]) == EXIT_PARSE


class TestCount:
    def test_small_goes_exact(self, instance_file, capsys):
        assert main(["count", instance_file, "--format", "json"]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["estimate"] == 10.0 and doc["exact"] == 10
        assert doc["runs"] == []

    def test_sampling_path(self, instance_file, capsys):
        rc = main(
            ["count", instance_file, "--no-exact-when-small", "--format", "json",
             "--epsilon", "1.0", "--delta", "0.5", "--seed", "3"]
        )
        assert rc == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["params"]["m"] == 6 and len(doc["runs"]) == 6
        assert abs(doc["estimate"] - 10) <= 10  # epsilon = 1 guarantee band
        assert "wall_millis" not in doc  # timings are opt-in

    def test_timings_flag(self, instance_file, capsys):
        assert main(["count", instance_file, "--format", "json", "--timings"]) == EXIT_OK
        assert "wall_millis" in json.loads(capsys.readouterr().out)

    def test_bad_epsilon(self, instance_file, capsys):
        assert main(["count", instance_file, "--epsilon", "0"]) == EXIT_PARAMS

    def test_unsat_dnf(self, tmp_path, capsys):
        path = tmp_path / "empty.dnf"
        path.write_text("p dnf 3 0\n")
        assert main(["count", str(path), "--dnf", "--format", "json"]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["estimate"] == 0.0 and doc["exact"] == 0

    def test_text_format(self, instance_file, capsys):
        assert main(["count", instance_file]) == EXIT_OK
        assert "estimate" in capsys.readouterr().out


class TestNormalize:
    def test_roundtrip_preserves_count(self, instance_file, capsys, tmp_path):
        out = tmp_path / "norm.nfbdd"
        assert main(["normalize", instance_file, "-o", str(out)]) == EXIT_OK
        N = parse_nfbdd(out.read_text())
        assert count_exact(N) == 10

    def test_stdout_output(self, dnf_file, capsys):
        assert main(["normalize", dnf_file, "--dnf"]) == EXIT_OK
        text = capsys.readouterr().out
        assert text.startswith("p nfbdd 3 ")

    def test_constant_false(self, tmp_path, capsys):
        path = tmp_path / "empty.dnf"
        path.write_text("p dnf 2 0\n")
        assert main(["normalize", str(path), "--dnf"]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "CONSTANT_FALSE"


class TestValidate:
    def test_valid(self, instance_file, capsys):
        assert main(["validate", instance_file]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "valid"

    def test_invalid_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.nfbdd"
        bad.write_text("garbage\n")
        assert main(["validate", str(bad)]) == EXIT_PARSE


class TestGen:
    def test_writes_valid_instance(self, tmp_path, capsys):
        out = tmp_path / "g.nfbdd"
        assert main(["gen", "5", "14", "--seed", "2", "-o", str(out)]) == EXIT_OK
        B = parse_nfbdd(out.read_text())
        assert B.n_vars == 5 and 7 <= B.size <= 28

    def test_bad_parameters(self, capsys):
        assert main(["gen", "0", "14"]) == EXIT_PARAMS


class TestCalibrate:
    def test_text_output(self, instance_file, capsys):
        rc = main(["calibrate", instance_file, "--epsilon", "1.0", "--delta", "0.5",
                   "--trials", "2", "--seed", "1"])
        assert rc == EXIT_OK
        assert "interrupt rate" in capsys.readouterr().out

    def test_json_output(self, instance_file, capsys):
        rc = main(["calibrate", instance_file, "--epsilon", "1.0", "--delta", "0.5",
                   "--trials", "2", "--format", "json"])
        assert rc == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["instances"][0]["exact"] == 10

    def test_bad_delta(self, instance_file, capsys):
        rc = main(["calibrate", instance_file, "--delta", "1.5", "--trials", "1"])
        assert rc == EXIT_PARAMS


class TestEntryPoint:
    def test_module_invocation(self, instance_file):
        proc = subprocess.run(
            [sys.executable, "-m", "nfbdd.cli", "exact", instance_file],
            capture_output=True, text=True, env=os.environ.copy(),
        )
        assert proc.returncode == 0
        assert proc.stdout.strip() == "10"
