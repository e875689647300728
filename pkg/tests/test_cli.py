import json
import os

import pytest

from uniton.cli import main
from uniton.corpus import builtin_examples
from uniton.errors import InvariantViolation, ParseError
from uniton.manifest import (builtin_manifest, parse_manifest,
                             parse_manifest_text, serialize_manifest)
from uniton.numlin import subspace_distance


class TestManifest:
    @pytest.mark.parametrize("name", sorted(builtin_examples()))
    def test_roundtrip(self, name):
        m = builtin_manifest(name)
        text = serialize_manifest(m)
        again = parse_manifest_text(text)
        assert again == m
        assert serialize_manifest(again) == text

    def test_model_matches_builtin(self):
        m = builtin_manifest("real_n5_r2")
        w1 = m.model()
        w2 = builtin_examples()["real_n5_r2"].model()
        assert subspace_distance(w1.fiber(0.7 + 0.2j).space,
                                 w2.fiber(0.7 + 0.2j).space) < 1e-12

    def test_power_bound(self):
        with pytest.raises(InvariantViolation):
            parse_manifest_text(
                "n = 2\nr = 1\n[[sections]]\n[[sections.terms]]\n"
                "power = 1\nvector = [1, 0]")

    def test_decimal_rationalized(self):
        m = parse_manifest_text(
            'n = 2\nr = 1\n[[sections]]\n[[sections.terms]]\n'
            'power = 0\nvector = [0.5, "1/3+2i"]')
        entry = m.sections[0][1].terms[0].entries[0]
        assert str(entry) == "1/2"

    def test_parse_errors(self):
        with pytest.raises(ParseError):
            parse_manifest_text("r = 1")
        with pytest.raises(ParseError):
            parse_manifest_text("n = 2\nr = 1\nmode = \"nope\"")
        with pytest.raises(ParseError):
            parse_manifest("/definitely/not/here.toml")

    def test_vector_length_checked(self):
        with pytest.raises(InvariantViolation):
            parse_manifest_text(
                "n = 3\nr = 1\n[[sections]]\n[[sections.terms]]\n"
                "power = 0\nvector = [1, 0]")


class TestCli:
    def test_examples_list(self, capsys):
        assert main(["examples", "--list"]) == 0
        out = capsys.readouterr().out
        assert len(out.strip().splitlines()) >= 8
        assert "mixed_pair" in out

    def test_emit_and_verify(self, tmp_path, capsys):
        assert main(["examples", "--emit", "line_cp1",
                     "--out", str(tmp_path)]) == 0
        path = tmp_path / "line_cp1.toml"
        assert path.exists()
        code = main(["verify", "--input", str(path), "--grid", "8",
                     "--out", str(tmp_path), "--strict"])
        assert code == 0
        report = json.loads((tmp_path / "line_cp1.report.json").read_text())
        assert report["schema"] == "uniton-report/1"
        assert report["overall"] is True

    def test_factor_artifacts(self, tmp_path):
        code = main(["factor", "--input", "mixed_pair", "--grid", "8",
                     "--strategy", "uhlenbeck", "--out", str(tmp_path)])
        assert code == 0
        chain = json.loads((tmp_path / "mixed_pair.chain.json").read_text())
        assert chain["schema"] == "uniton-chain/1"
        assert chain["strategy"] == "uhlenbeck"
        assert len(chain["unitons"]) == 2

    def test_input_error_exit(self, capsys):
        assert main(["verify", "--input", "no_such_thing"]) == 3

    def test_strict_failure_exit(self, tmp_path):
        # a manifest that wrongly promises reality must fail under --strict
        m = builtin_manifest("mixed_pair")
        m.expect_real = True
        path = tmp_path / "wrong.toml"
        path.write_text(serialize_manifest(m))
        code = main(["verify", "--input", str(path), "--grid", "8",
                     "--out", str(tmp_path), "--strict"])
        assert code == 2
        # without --strict the report is still written, exit 0
        code = main(["verify", "--input", str(path), "--grid", "8",
                     "--out", str(tmp_path)])
        assert code == 0

    def test_iwasawa_command(self, tmp_path):
        code = main(["iwasawa", "--input", "iwasawa_line",
                     "--out", str(tmp_path), "--strict"])
        assert code == 0
        data = json.loads((tmp_path / "iwasawa_line.iwasawa.json").read_text())
        assert data["report"]["neg_mass"] < 1e-8
        assert data["report"]["product_residual"] < 1e-8

    def test_limit_and_classify(self, tmp_path, capsys):
        assert main(["limit-s1", "--input", "dai_terng_r3", "--grid", "8",
                     "--out", str(tmp_path)]) == 0
        data = json.loads((tmp_path / "dai_terng_r3.limit.json").read_text())
        assert data["max_deformed_distance"] < 0.05
        assert main(["classify", "--input", "sp2_nonGrassmannian",
                     "--grid", "8", "--out", str(tmp_path)]) == 0
        cls = json.loads(
            (tmp_path / "sp2_nonGrassmannian.classify.json").read_text())
        assert cls["label"].startswith("Sp(m)")

    def test_export_grid(self, tmp_path):
        assert main(["export-grid", "--input", "line_cp1", "--grid", "4",
                     "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "line_cp1.grid.csv").read_text().splitlines()
        header = lines[0].split(",")
        assert header[:4] == ["z_re", "z_im", "lambda_re", "lambda_im"]
        assert len(header) == 4 + 2 * 4  # n^2 entry pairs for n = 2

    def test_seed_flag(self, tmp_path):
        code = main(["verify", "--input", "line_cp1", "--grid", "8",
                     "--seed", "0xBEEF", "--out", str(tmp_path), "--strict"])
        assert code == 0

    def test_tol_scale_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("UNITON_TOL_SCALE", "100")
        assert main(["verify", "--input", "line_cp1", "--grid", "8",
                     "--out", str(tmp_path), "--strict"]) == 0
