import json
import math

import pytest

from nstlab.config import (
    EXPERIMENT_KINDS,
    default_config,
    load_config,
    parse_config,
)
from nstlab.errors import ConfigurationError
from nstlab.manifest import RunRecorder, fmt_cell, write_csv_atomic


class TestConfig:
    @pytest.mark.parametrize("kind", EXPERIMENT_KINDS)
    def test_defaults_validate(self, kind):
        cfg = default_config(kind)
        assert cfg.kind == kind

    @pytest.mark.parametrize("kind", EXPERIMENT_KINDS)
    def test_serialization_round_trip(self, kind):
        cfg = default_config(kind)
        text = cfg.serialize()
        again = parse_config(text)
        assert again == cfg
        assert again.serialize() == text  # byte-exact canonical form

    def test_round_trip_with_awkward_floats(self):
        cfg = default_config(
            "mach-sweep",
            **{("fluid", "mu"): 0.1 + 0.2, ("time", "dt"): 1.0 / 3.0},
        )
        again = parse_config(cfg.serialize())
        assert again.get("fluid", "mu") == 0.1 + 0.2
        assert again.get("time", "dt") == 1.0 / 3.0

    def test_unknown_section_rejected(self):
        text = default_config("lp-selftest").serialize() + "\n[wormholes]\nenabled = on\n"
        with pytest.raises(ConfigurationError, match="unknown config section"):
            parse_config(text)

    def test_unknown_key_rejected(self):
        text = default_config("lp-selftest").serialize().replace(
            "[grid]\n", "[grid]\nwarp = 9\n"
        )
        with pytest.raises(ConfigurationError, match="unknown key"):
            parse_config(text)

    def test_kind_mismatch_rejected(self):
        text = default_config("lp-selftest").serialize()
        with pytest.raises(ConfigurationError, match="does not match"):
            parse_config(text, kind="greens-verify")

    def test_validation_errors(self):
        with pytest.raises(ConfigurationError):
            default_config("decay-linear", **{("decay", "sigma0"): 0.5})
        with pytest.raises(ConfigurationError):
            default_config("decay-linear", **{("decay", "sigmas"): [2.5]})
        with pytest.raises(ConfigurationError):
            default_config("mach-sweep", **{("mach", "eps_list"): [0.1, 0.25]})
        with pytest.raises(ConfigurationError):
            default_config("mach-sweep", **{("mach", "eps_list"): []})
        with pytest.raises(ConfigurationError):
            default_config("decay-nonlinear", **{("fluid", "gamma"): 0.9})
        with pytest.raises(ConfigurationError):
            default_config("decay-nonlinear", **{("grid", "n"): 9})
        with pytest.raises(ConfigurationError):
            default_config("lp-selftest", **{("lp", "k0"): -2})

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "cfg.ini"
        path.write_text(default_config("energy-check").serialize(), encoding="utf-8")
        cfg = load_config(path, kind="energy-check")
        assert cfg.kind == "energy-check"

    def test_bad_value_reports_key(self):
        text = default_config("lp-selftest").serialize().replace("n = 64", "n = sixty-four")
        with pytest.raises(ConfigurationError, match="bad value"):
            parse_config(text)


class TestManifest:
    def test_fmt_cell(self):
        assert fmt_cell(0.1) == "0.1"
        assert fmt_cell(float("nan")) == "nan"
        assert fmt_cell(True) == "true"
        assert fmt_cell(3) == "3"

    def test_csv_row_width_guard(self, tmp_path):
        with pytest.raises(ConfigurationError):
            write_csv_atomic(tmp_path / "x.csv", ["a", "b"], [[1.0]])

    def test_recorder_flow(self, tmp_path):
        cfg = default_config("lp-selftest")
        rec = RunRecorder.start(cfg, tmp_path)
        assert (tmp_path / "manifest.json").exists()
        assert len(rec.manifest_hash) == 64
        rec.check_le("alpha", 0.5, 1.0)
        rec.check_ge("beta", 2.0, 1.0, detail="two is at least one")
        rec.write_table("numbers", ["t", "quantity", "value"], [[0.0, "x", 1.5]])
        ok = rec.finish()
        assert ok
        checks = json.loads((tmp_path / "checks.json").read_text())
        assert checks["all_passed"] is True
        assert checks["manifest_hash"] == rec.manifest_hash
        lines = (tmp_path / "numbers.csv").read_text().splitlines()
        assert lines[0] == "t,quantity,value,manifest_hash"
        assert lines[1].endswith(rec.manifest_hash)

    def test_failed_check_fails_run(self, tmp_path):
        cfg = default_config("lp-selftest")
        rec = RunRecorder.start(cfg, tmp_path)
        rec.check_le("too_big", 2.0, 1.0)
        assert rec.finish() is False

    def test_manifest_written_before_tables(self, tmp_path):
        cfg = default_config("lp-selftest")
        rec = RunRecorder.start(cfg, tmp_path)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["kind"] == "lp-selftest"
        assert "config_ini" in manifest
        assert math.isfinite(len(manifest["config_ini"]))
