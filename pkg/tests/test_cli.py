import json

import pytest

from app import EXIT_ERROR, EXIT_OK, EXIT_TOLERANCE, ConformalGaussLab
from CGM_Engine.exceptions import ConfigError
from main import build_config, main, parse_tolerances


# ----------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------
class TestBuildConfig:
    def test_flags(self):
        config = build_config(
            ["energy", "--surface", "torus:3,1", "--level", "1", "--tol", "gauss_bonnet=1e-3", "--format", "csv"]
        )
        assert config.command == "energy"
        assert config.surface.major_radius == 3.0
        assert config.level == 1
        assert config.output.format == "csv"
        assert config.tolerance_table()["gauss_bonnet"] == 1e-3

    def test_flags_override_the_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"command": "verify", "level": 3, "seed": 11, "surface": {"kind": "sphere"}}))
        config = build_config(["verify", "--config", str(path), "--level", "1"])
        assert (config.level, config.seed, config.surface.kind) == (1, 11, "sphere")

    def test_moebius_flag(self):
        config = build_config(["invariance", "--moebius", "dilation:2+inversion:8,0,0,0,0"])
        assert [p.kind for p in config.moebius.primitives] == ["dilation", "inversion"]

    @pytest.mark.parametrize(
        "argv",
        [
            ["energy", "--tol", "codazzi"],
            ["energy", "--tol", "codazzi=abc"],
            ["energy", "--tol", "no_such_suite=1e-3"],
            ["energy", "--tol", "codazzi=-1"],
            ["energy", "--level", "-1"],
            ["energy", "--order", "9"],
            ["energy", "--surface", "klein-bottle"],
            ["energy", "--surface", "torus:1,1"],
            ["invariance", "--moebius", "shear:2"],
            ["neck-scan", "--neck-lengths", "1,-2"],
            ["fly"],
        ],
    )
    def test_invalid_input_is_a_config_error(self, argv):
        with pytest.raises(ConfigError):
            build_config(argv)

    def test_unknown_key_in_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"command": "energy", "colour": "blue"}))
        with pytest.raises(ConfigError):
            build_config(["energy", "--config", str(path)])

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ConfigError):
            build_config(["energy", "--config", str(tmp_path / "missing.json")])

    def test_parse_tolerances(self):
        assert parse_tolerances(["codazzi=1e-9", " lorentz = 2e-6"]) == {"codazzi": 1e-9, "lorentz": 2e-6}


# ----------------------------------------------------------------------
# runs
# ----------------------------------------------------------------------
class TestRuns:
    def test_neck_scan(self, tmp_path):
        out = tmp_path / "neck.json"
        code = main(["neck-scan", "--level", "0", "--neck-lengths", "1,2,4", "--out", str(out)])
        assert code == EXIT_OK
        data = json.loads(out.read_text())
        assert data["meta"]["command"] == "neck-scan"
        assert data["residuals"]["neck_fit"]["pass"]
        assert set(data["results"]["scan"]) == {"L=1", "L=2", "L=4"}

    def test_energy_on_a_patch_writes_csv(self, tmp_path):
        out = tmp_path / "patch.csv"
        code = main(["energy", "--surface", "patch-r2xs2:1", "--level", "0", "--format", "csv", "--out", str(out)])
        assert code == EXIT_OK
        assert out.read_text().startswith("quantity,value\n")

    def test_duality_refused_on_the_sphere(self, tmp_path):
        out = tmp_path / "duality.json"
        assert main(["duality", "--surface", "sphere", "--level", "0", "--out", str(out)]) == EXIT_ERROR
        assert not out.exists()

    def test_tight_tolerance_gives_exit_two(self, tmp_path):
        out = tmp_path / "sphere.json"
        code = main(
            ["energy", "--surface", "sphere", "--level", "0", "--tol", "gauss_bonnet=1e-300", "--out", str(out)]
        )
        assert code == EXIT_TOLERANCE
        data = json.loads(out.read_text())
        assert data["residuals"]["gauss_bonnet"]["tolerance"] == 1e-300
        assert not data["residuals"]["gauss_bonnet"]["pass"]

    def test_invariance_needs_a_map(self, tmp_path):
        config = build_config(["invariance", "--surface", "sphere", "--level", "0", "--out", str(tmp_path / "x.json")])
        assert ConformalGaussLab(config).run() == EXIT_ERROR

    def test_invariance_run(self, tmp_path):
        out = tmp_path / "inv.json"
        code = main(
            ["invariance", "--surface", "patch-rxs3:1", "--level", "0", "--moebius", "dilation:2", "--out", str(out)]
        )
        assert code == EXIT_OK
        data = json.loads(out.read_text())
        assert data["residuals"]["drift_E_GR"]["pass"]

    def test_bad_flag_exit_code(self, capsys):
        assert main(["energy", "--tol", "oops"]) == EXIT_ERROR
        assert "suite=value" in capsys.readouterr().err
