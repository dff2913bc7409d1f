import json
from fractions import Fraction

import pytest

from conftest import PROBLEMS
from shiftq.cli import CommandConfig, UsageError, main, parse_config, run
from shiftq.hochschild import moyal
from shiftq.io import SCHEMA, star_to_json
from shiftq.polyvector import Polyvector


def cfg(sub, name, **kw):
    return CommandConfig(sub, str(PROBLEMS / f"{name}.json"), **kw)


def write(tmp_path, data, name="p.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return str(p)


class TestParseConfig:
    def test_examples(self):
        c = parse_config(["classical", "--input", "so3.json", "--kmax", "3"])
        assert (c.subcommand, c.input_path, c.kmax, c.output_format) == ("classical", "so3.json", 3, "json")
        c = parse_config(["star-check", "--input", "moyal.json", "--hbar-cap", "4", "--format", "text"])
        assert c.subcommand == "star-check" and c.hbar_cap == 4 and c.output_format == "text"

    @pytest.mark.parametrize(
        "argv",
        [
            ["classical"],
            ["frobnicate", "--input", "x.json"],
            ["classical", "--input", "x.json", "--unknown"],
            ["classical", "--input", "x.json", "--kmax", "two"],
            ["scan", "--input", "x.json", "--arity-cutoff", "0"],
        ],
    )
    def test_usage_errors(self, argv):
        with pytest.raises(UsageError):
            parse_config(argv)

    def test_main_usage_exit(self, capsys):
        assert main(["classical"]) == 2
        assert "usage" in capsys.readouterr().err


class TestInputErrors:
    def test_missing_file(self, tmp_path):
        code, rep = run(CommandConfig("classical", str(tmp_path / "absent.json")))
        assert code == 2 and "cannot read" in rep["error"]

    def test_malformed_json_location(self, tmp_path):
        path = write(tmp_path, '{\n  "vars": ["x",\n}')
        code, rep = run(CommandConfig("classical", path))
        assert code == 2
        assert "line 3 column 1" in rep["error"]

    def test_missing_key(self, tmp_path):
        code, rep = run(CommandConfig("classical", write(tmp_path, {"vars": ["x"]})))
        assert code == 2 and rep["pass"] is False


EXPECTED = [
    ("classical", "so3", 0),
    ("classical", "gl2", 0),
    ("classical", "binary", 0),
    ("classical", "so3_negative", 1),
    ("star-check", "moyal", 0),
    ("linfty-check", "g1", 0),
    ("linfty-check", "g2", 0),
    ("morphism-check", "g2_hom", 0),
    ("morphism-check", "g2_nonchain", 1),
    ("derivation-check", "g2_inner", 0),
    ("quantum", "bridge", 0),
    ("quantum", "moyal_quantum", 0),
    ("nijenhuis", "bridge_nijenhuis", 0),
    ("scan", "scan_lifts", 0),
    ("scan", "scan_nonderivations", 0),
]


@pytest.mark.parametrize("sub,name,code", EXPECTED)
def test_exit_codes(sub, name, code):
    got, rep = run(cfg(sub, name))
    assert got == code
    assert rep["schema"] == SCHEMA and rep["command"] == sub
    assert rep["pass"] is (code == 0)
    if code:
        assert rep["failed"]


class TestReports:
    def test_classical(self):
        _, rep = run(cfg("classical", "so3"))
        assert rep["all_zero"] is True
        assert rep["truncation"]["kmax"] == 3
        assert [g["value"] for g in rep["generators"]][:3] == ["x1^2 + x2^2 + x3^2", "2*x3", "2"]

    def test_negative_names_defect(self):
        _, rep = run(cfg("classical", "so3_negative"))
        assert rep["failed"] == ["hypothesis:nijenhuis"]
        bad = [c for c in rep["checks"] if not c["pass"]][0]
        assert bad["residual"] is not None

    def test_kmax_override(self):
        _, rep = run(cfg("classical", "so3", kmax=1))
        assert len(rep["generators"]) == 2

    def test_linfty_twist(self):
        _, rep = run(cfg("linfty-check", "g1"))
        assert rep["twisted_differential"]["x"] == [{"b": "y", "c": "-1"}]

    def test_quantum_coincides(self):
        _, rep = run(cfg("quantum", "bridge"))
        names = [c["name"] for c in rep["checks"]]
        assert "coincides with classical family" in names
        assert rep["truncation"]["arity_cutoff"] == 4

    def test_scan(self):
        _, rep = run(cfg("scan", "scan_lifts"))
        assert len(rep["found"]) == 3 and not any(f["genuine"] for f in rep["found"])
        _, rep = run(cfg("scan", "scan_nonderivations"))
        assert rep["found"] == []

    def test_byte_identical(self, tmp_path):
        for sub, name, _ in EXPECTED:
            outs = []
            for k in range(2):
                out = tmp_path / f"{name}{k}.json"
                main([sub, "--input", str(PROBLEMS / f"{name}.json"), "--report", str(out)])
                outs.append(out.read_bytes())
            assert outs[0] == outs[1]
            json.loads(outs[0])

    def test_text_format(self, capsys):
        assert main(["classical", "--input", str(PROBLEMS / "so3.json"), "--format", "text"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out or "pass" in out


class TestStarPerturbation:
    def test_b2_perturbation_exits_one(self, tmp_path):
        data = star_to_json(moyal(Polyvector.basis(("x", "y"), (0, 1)), 4))
        for term in data["B"]:
            if term["hbar"] == 2:
                term["coeff"] = str(Fraction(term["coeff"]) + 1)
                break
        code, rep = run(CommandConfig("star-check", write(tmp_path, data)))
        assert code == 1
        orders = sorted(int(n.split()[1][len("hbar^"):]) for n in rep["failed"] if n.startswith("mc_defect"))
        assert orders and orders[0] == 2

    def test_unperturbed_roundtrip(self, tmp_path):
        data = star_to_json(moyal(Polyvector.basis(("x", "y"), (0, 1)), 4))
        code, rep = run(CommandConfig("star-check", write(tmp_path, data)))
        assert code == 0 and rep["checks"][0]["name"] == "mc_defect through hbar^4"


class TestErrorCodes:
    def test_resource(self, tmp_path):
        data = json.loads((PROBLEMS / "scan_lifts.json").read_text())
        code, rep = run(CommandConfig("scan", write(tmp_path, data), budget=2))
        assert code == 4
        assert rep["partial"]["examined"] == 2
        assert rep["partial"]["checks"][0]["pass"] is False

    def test_resource_env(self, tmp_path, monkeypatch):
        data = json.loads((PROBLEMS / "scan_lifts.json").read_text())
        del data["budget"]
        monkeypatch.setenv("SHIFTQ_BUDGET", "1")
        code, _ = run(CommandConfig("scan", write(tmp_path, data)))
        assert code == 4

    def test_domain(self, tmp_path):
        data = {"tpoly": {"vars": ["x1", "x2"]}, "X": []}
        code, rep = run(CommandConfig("derivation-check", write(tmp_path, data)))
        assert code == 3 and "DomainError" in rep["error"]

    def test_structural(self, tmp_path):
        data = json.loads((PROBLEMS / "g2.json").read_text())
        data["D"][0]["entries"][0]["value"] = [{"b": "z", "c": "1"}]
        code, rep = run(CommandConfig("linfty-check", write(tmp_path, data)))
        assert code == 3
