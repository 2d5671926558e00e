import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from oflm import config as cfgmod
from oflm import levy, runner
from oflm.errors import SchemaError, ValidationError
from oflm.service import app


def minimal_config(**overrides):
    cfg = {
        "schema_version": 1,
        "process": {
            "kind": "maofLm",
            "hurst": [[0.7]],
            "kernel": {"variant": "general", "M_plus": [[1.0]], "M_minus": [[0.0]]},
        },
        "measure": {"variant": "discrete",
                    "atoms": [{"z": [1.0], "w": 0.5}, {"z": [-1.0], "w": 0.5}]},
        "grid": {"times": [1.0, 2.0]},
        "simulation": {"replications": 50},
    }
    cfg.update(overrides)
    return cfg


def rhoflm_config():
    return {
        "schema_version": 1,
        "process": {
            "kind": "rhofLm",
            "hurst": [[0.75]],
            "kernel": {"variant": "fourier", "A_real": [[1.0]], "A_imag": [[0.4]]},
        },
        "measure": {"variant": "discrete",
                    "atoms": [{"z": [0.5, 0.5], "w": 0.5}, {"z": [-0.5, -0.5], "w": 0.5},
                              {"z": [0.5, -0.5], "w": 0.5}, {"z": [-0.5, 0.5], "w": 0.5}]},
        "grid": {"times": [1.0, 2.0]},
        "simulation": {"replications": 50},
    }


class TestParseConfig:
    def test_minimal_valid(self):
        cfg = cfgmod.parse_config(minimal_config())
        assert cfg.kind == "maofLm" and cfg.p == 1
        assert cfg.time_params is not None
        assert isinstance(cfg.measure, levy.DiscreteMeasure)
        assert len(cfg.digest) == 64

    def test_bad_eigenvalue_names_it(self):
        bad = minimal_config()
        bad["process"]["hurst"] = [[1.2]]
        with pytest.raises(ValidationError) as err:
            cfgmod.parse_config(bad)
        assert "1.2" in str(err.value)
        assert err.value.pointer == "/process/hurst"

    def test_unknown_field_pointer(self):
        bad = minimal_config()
        bad["grid"]["step"] = 0.1
        with pytest.raises(SchemaError) as err:
            cfgmod.parse_config(bad)
        assert "step" in str(err.value)

    def test_digest_stable_under_key_order(self):
        a = minimal_config()
        b = json.loads(json.dumps(a, sort_keys=True))
        assert cfgmod.config_digest(a) == cfgmod.config_digest(b)

    def test_normalized_flag(self):
        cfg = minimal_config()
        cfg["measure"]["normalized"] = True
        parsed = cfgmod.parse_config(cfg)
        assert np.allclose(levy.second_moment(parsed.measure), np.eye(1))

    def test_rhoflm_requires_fourier_kernel(self):
        bad = rhoflm_config()
        bad["process"]["kernel"] = {"variant": "general", "M_plus": [[1.0]],
                                    "M_minus": [[0.0]]}
        with pytest.raises(ValidationError):
            cfgmod.parse_config(bad)


class TestRunner:
    def test_validate(self, tmp_path):
        results, manifest = runner.run("validate", minimal_config(), out_dir=tmp_path)
        assert results["regime"] == "upper"
        assert (tmp_path / "validation.json").exists()
        assert (tmp_path / "manifest.json").exists()
        assert manifest["config_digest"] == cfgmod.config_digest(minimal_config())

    def test_simulate_deterministic_csv(self, tmp_path):
        cfg = minimal_config()
        runner.run("simulate", cfg, seed=123, out_dir=tmp_path / "a")
        runner.run("simulate", cfg, seed=123, out_dir=tmp_path / "b", threads=4)
        a = (tmp_path / "a" / "ensemble.csv").read_bytes()
        b = (tmp_path / "b" / "ensemble.csv").read_bytes()
        assert a == b

    def test_cov_with_scaling(self, tmp_path):
        cfg = minimal_config()
        cfg["experiment"] = {"pairs": [[1.0, 2.0]], "scaling_factors": [2.0]}
        results, _ = runner.run("cov", cfg, out_dir=tmp_path)
        assert results["scaling"]["max_residual"] < 1e-6
        assert (tmp_path / "cov.csv").exists()

    def test_timerev_reversible_verdict(self, tmp_path):
        cfg = minimal_config()
        cfg["process"]["kernel"]["M_minus"] = [[1.0]]
        results, _ = runner.run("timerev", cfg, out_dir=tmp_path)
        assert results["verdict"] == "reversible"
        data = json.loads((tmp_path / "timerev.json").read_text())
        assert set(data) >= {"condition_a_residual", "condition_b_residual",
                             "verdict", "caveats"}

    def test_timerev_irreversible(self):
        cfg = minimal_config()
        cfg["process"]["kernel"]["M_minus"] = [[2.0]]
        cfg["measure"] = {"variant": "discrete", "atoms": [{"z": [1.0], "w": 1.0}]}
        results, _ = runner.run("timerev", cfg)
        assert results["verdict"] == "irreversible"

    def test_parseval(self, tmp_path):
        cfg = minimal_config()
        cfg["measure"]["normalized"] = True
        cfg["experiment"] = {"pairs": [[1.0, 2.0]]}
        results, _ = runner.run("parseval", cfg, out_dir=tmp_path)
        assert results["max_residual"] < 1e-4

    def test_limits_kurtosis_rows(self):
        cfg = minimal_config()
        cfg["experiment"] = {"mode": "kurtosis_scaling", "t": 1.0,
                             "c_list": [1.0, 10.0], "replications": 400}
        results, _ = runner.run("limits", cfg, seed=3)
        rows = results["rows"]
        assert np.isclose(rows[1]["predicted"] / rows[0]["predicted"], 0.1)


class TestService:
    def test_healthz(self):
        with TestClient(app) as client:
            resp = client.get("/healthz")
        assert resp.status_code == 200 and resp.json()["status"] == "ok"

    def test_validate_endpoint(self):
        with TestClient(app) as client:
            resp = client.post("/validate", json={"config": minimal_config()})
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "ok" and body["results"]["regime"] == "upper"

    def test_config_error_maps_to_422(self):
        bad = minimal_config()
        bad["process"]["hurst"] = [[1.5]]
        with TestClient(app) as client:
            resp = client.post("/validate", json={"config": bad})
        assert resp.status_code == 422
        assert resp.json()["detail"]["kind"] == "config_error"
        assert resp.json()["detail"]["exit_code"] == 2

    def test_unknown_schema_field_maps_to_422(self):
        bad = minimal_config()
        bad["extra"] = 1
        with TestClient(app) as client:
            resp = client.post("/validate", json={"config": bad})
        assert resp.status_code == 422

    def test_simulate_endpoint_writes_artifacts(self, tmp_path):
        with TestClient(app) as client:
            resp = client.post("/simulate", json={
                "config": minimal_config(), "seed": 7, "out_dir": str(tmp_path)})
        assert resp.status_code == 200
        assert (tmp_path / "ensemble.csv").exists()
        assert "ensemble.csv" in resp.json()["manifest"]["artifacts"]

    def test_timerev_endpoint(self):
        cfg = minimal_config()
        cfg["process"]["kernel"]["M_minus"] = [[1.0]]
        with TestClient(app) as client:
            resp = client.post("/timerev", json={"config": cfg})
        assert resp.status_code == 200
        assert resp.json()["results"]["verdict"] == "reversible"


class TestHalfVariantConfig:
    def test_half_kernel_roundtrip(self, tmp_path):
        cfg = {
            "schema_version": 1,
            "process": {"kind": "maofLm", "hurst": [[0.5]],
                        "kernel": {"variant": "half", "M": [[1.0]], "N": [[0.4]]}},
            "measure": {"variant": "discrete",
                        "atoms": [{"z": [1.0], "w": 0.5}, {"z": [-1.0], "w": 0.5}]},
            "grid": {"times": [1.0]},
            "simulation": {"replications": 30},
        }
        parsed = cfgmod.parse_config(cfg)
        assert parsed.time_params.variant == "half"
        results, _ = runner.run("simulate", cfg, seed=1, out_dir=tmp_path)
        assert results["replications"] == 30

    def test_half_kernel_wrong_regime_rejected(self):
        cfg = {
            "schema_version": 1,
            "process": {"kind": "maofLm", "hurst": [[0.7]],
                        "kernel": {"variant": "half", "M": [[1.0]], "N": [[0.4]]}},
            "measure": {"variant": "discrete", "atoms": [{"z": [1.0], "w": 1.0}]},
            "grid": {"times": [1.0]},
        }
        with pytest.raises(ValidationError):
            cfgmod.parse_config(cfg)
