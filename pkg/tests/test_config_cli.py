import json
import os

import pytest

from degenbranch.cli import main
from degenbranch.config import (config_digest, config_to_dict, load_config,
                                parse_config)
from degenbranch.exceptions import ConfigError

GOOD = {
    "alphas": [0.6666666666666666],
    "gamma": 1.0,
    "theta": 1.0,
    "kappa": 0.5,
    "n_schedule": [4, 8],
    "replicates": 100,
    "phi": {"centers": [0.0], "widths": [1.0]},
    "t_grid": [0.5, 1.0],
    "master_seed": 3,
}


class TestConfigSchema:
    def test_good_config_parses(self):
        cfg = parse_config(dict(GOOD))
        assert cfg.replicates == 100
        assert cfg.phi.amplitude == 1.0

    def test_round_trip(self):
        cfg = parse_config(dict(GOOD))
        again = parse_config(config_to_dict(cfg))
        assert again == cfg
        assert config_digest(again) == config_digest(cfg)

    def test_unknown_key_rejected(self):
        doc = dict(GOOD)
        doc["replicas"] = 5
        with pytest.raises(ConfigError) as err:
            parse_config(doc)
        assert err.value.path == "replicas"

    def test_kappa_bound_names_field_and_interval(self):
        doc = dict(GOOD)
        doc["kappa"] = 1.5
        with pytest.raises(ConfigError) as err:
            parse_config(doc)
        assert err.value.path == "kappa"
        assert "(0, 1)" in str(err.value)

    def test_alpha_bound_named(self):
        doc = dict(GOOD)
        doc["alphas"] = [2.5]
        with pytest.raises(ConfigError) as err:
            parse_config(doc)
        assert err.value.path == "alphas[0]"
        assert "(0, 2]" in str(err.value)

    def test_missing_required_key(self):
        doc = dict(GOOD)
        del doc["gamma"]
        with pytest.raises(ConfigError) as err:
            parse_config(doc)
        assert err.value.path == "gamma"

    def test_phi_shape_mismatch(self):
        doc = dict(GOOD)
        doc["phi"] = {"centers": [0.0, 1.0], "widths": [1.0, 1.0]}
        with pytest.raises(ConfigError) as err:
            parse_config(doc)
        assert err.value.path == "phi"

    def test_unknown_centering_mode(self):
        doc = dict(GOOD)
        doc["centering_mode"] = "magic"
        with pytest.raises(ConfigError):
            parse_config(doc)


def _write_config(tmp_path, doc):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestCli:
    def test_constants_subcommand(self, capsys):
        assert main(["constants", "--alphas", "0.5", "--gamma", "1",
                     "--theta", "1", "--kappa", "0.5"]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["constant"] == "c1"
        assert record["value"] == pytest.approx(0.5641895835477563, abs=1e-6)

    def test_constants_subcritical_rejected(self, capsys):
        assert main(["constants", "--alphas", "2.0"]) == 2

    def test_invalid_config_exit_2(self, tmp_path, capsys):
        doc = dict(GOOD)
        doc["kappa"] = 1.5
        path = _write_config(tmp_path, doc)
        code = main(["simulate", "--config", path, "--out", str(tmp_path / "o")])
        assert code == 2
        err = capsys.readouterr().err
        assert "kappa" in err and "(0, 1)" in err

    def test_simulate_writes_outputs(self, tmp_path, capsys):
        path = _write_config(tmp_path, GOOD)
        out = str(tmp_path / "out")
        assert main(["simulate", "--config", path, "--out", out,
                     "--workers", "1", "--format", "csv"]) == 0
        manifest = json.loads(open(os.path.join(out, "manifest.json")).read())
        assert manifest["status"] == "complete"
        assert set(manifest["output_digests"]) == {"samples", "summary_results",
                                                   "variances_csv"}
        summary = json.loads(open(os.path.join(out, "summary.json")).read())
        assert summary["run_info"]["config"]["kappa"] == 0.5
        lines = open(os.path.join(out, "samples.jsonl")).read().splitlines()
        assert len(lines) == 2 * 2 * 100 * 2
        rec = json.loads(lines[0])
        assert set(rec) == {"n", "t", "replicate", "value", "L",
                            "centering_mode", "accuracy_flag"}
        csv = open(os.path.join(out, "variances.csv")).read().splitlines()
        assert csv[0].startswith("n,t,variance")

    def test_seed_override_changes_digest(self, tmp_path, capsys):
        path = _write_config(tmp_path, GOOD)
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        main(["simulate", "--config", path, "--out", out1, "--workers", "1"])
        main(["simulate", "--config", path, "--out", out2, "--workers", "1",
              "--seed", "99"])
        d1 = json.loads(open(os.path.join(out1, "manifest.json")).read())
        d2 = json.loads(open(os.path.join(out2, "manifest.json")).read())
        assert d1["output_digests"]["samples"] != d2["output_digests"]["samples"]
        assert d2["master_seed"] == 99


class TestReporting:
    def test_canonical_json_floats(self):
        from degenbranch.reporting import canonical_json
        text = canonical_json({"x": 0.1, "n": 3, "s": "a", "v": [1.5, None, True]})
        assert json.loads(text)["x"] == 0.1
        assert "0.10000000000000001" in text

    def test_canonical_json_rejects_nan(self):
        from degenbranch.reporting import canonical_json
        with pytest.raises(ValueError):
            canonical_json({"x": float("nan")})

    def test_seed_streams(self):
        from degenbranch.seeding import derive_stream
        a = derive_stream(1, 0, "motion").standard_normal(8)
        b = derive_stream(1, 0, "motion").standard_normal(8)
        c = derive_stream(1, 1, "motion").standard_normal(8)
        d = derive_stream(1, 0, "branching").standard_normal(8)
        assert (a == b).all()
        assert not (a == c).all()
        assert not (a == d).all()

    def test_stream_independence_smoke(self):
        import numpy as np
        from degenbranch.seeding import derive_stream
        x = derive_stream(5, 0, "motion").standard_normal(10_000)
        y = derive_stream(5, 1, "motion").standard_normal(10_000)
        assert abs(np.corrcoef(x, y)[0, 1]) < 0.05

    def test_manifest_lifecycle(self, tmp_path):
        # a run that never finalizes leaves the manifest in the running state
        from degenbranch.reporting import finalize_manifest, start_manifest
        manifest = start_manifest({"label": "x"}, 7, str(tmp_path))
        doc = json.loads(open(tmp_path / "manifest.json").read())
        assert doc["status"] == "running"
        assert doc["output_digests"] == {}
        finalize_manifest(manifest, str(tmp_path), {"samples": "abc"})
        doc = json.loads(open(tmp_path / "manifest.json").read())
        assert doc["status"] == "complete"
        assert doc["output_digests"] == {"samples": "abc"}
