"""Pruebas de la API HTTP con el TestClient de FastAPI."""

import pytest
from fastapi.testclient import TestClient

from app.classifiers.architectures import build_model
from app.classifiers.checkpoint import save_model
from app.config import settings
from app.data.dataset_io import write_dataset
from app.main import app


@pytest.fixture
def client():
    with TestClient(app) as test_client:
        yield test_client


class TestRoot:

    def test_root(self, client):
        body = client.get("/").json()
        assert body["service"] == "axrx-robustness-service"
        assert body["endpoints"]["run"] == "/api/v1/experiments/run"

    def test_health(self, client):
        assert client.get("/health").json() == {"status": "healthy"}

    def test_experiments_health(self, client):
        body = client.get("/api/v1/experiments/health").json()
        assert body["status"] == "healthy"
        assert {"numpy", "scipy", "workers"} <= set(body["dependencies"])


class TestAUCEndpoint:

    def test_mean_auc(self, client):
        response = client.post("/api/v1/experiments/auc", json={
            "logits": [[0.1, 0.9], [0.4, 0.2], [0.35, 0.8], [0.8, 0.1]],
            "labels": [[0, 1], [0, 0], [1, 1], [1, 0]],
            "label_names": ["Atelectasis", "Edema"],
        })
        assert response.status_code == 200
        body = response.json()
        assert body["mean_auc"] == pytest.approx(0.875)
        assert body["per_label_auc"] == {"Atelectasis": pytest.approx(0.75), "Edema": 1.0}

    def test_excluded_label(self, client):
        body = client.post("/api/v1/experiments/auc", json={
            "logits": [[0.1, 0.3], [0.9, 0.2]],
            "labels": [[0, 1], [1, 1]],
        }).json()
        assert body["excluded_labels"] == ["label_1"]
        assert body["per_label_auc"]["label_1"] is None

    def test_shape_mismatch(self, client):
        response = client.post("/api/v1/experiments/auc", json={"logits": [[0.1, 0.2]], "labels": [[1]]})
        assert response.status_code == 422

    def test_undefined(self, client):
        response = client.post("/api/v1/experiments/auc", json={"logits": [[0.1], [0.2]], "labels": [[1], [1]]})
        assert response.status_code == 422


class TestRunEndpoint:

    @pytest.fixture
    def output_root(self, tmp_path, monkeypatch):
        root = tmp_path / "outputs"
        monkeypatch.setattr(settings, "OUTPUT_DIR", str(root))
        return root

    def test_missing_files_rejected(self, client, tmp_path, output_root):
        response = client.post("/api/v1/experiments/run", json={
            "kind": "transfer_matrix",
            "dataset": str(tmp_path / "missing.axds"),
            "models": {"linear": str(tmp_path / "missing.axmd")},
            "output": "report.csv",
        })
        assert response.status_code == 422
        assert "missing.axds" in response.json()["detail"]

    def test_invalid_plan_rejected(self, client, tmp_path):
        response = client.post("/api/v1/experiments/run", json={
            "kind": "defense_sweep",
            "dataset": str(tmp_path / "d.axds"),
            "models": {"linear": str(tmp_path / "m.axmd")},
        })
        assert response.status_code == 422

    @pytest.mark.parametrize("output", ["/tmp/report.csv", "../report.csv", "sub/../../report.csv"])
    def test_output_outside_root_rejected(self, client, tmp_path, output_root, tiny_dataset, output):
        write_dataset(tiny_dataset, tmp_path / "d.axds")
        save_model(build_model("linear", side=8, num_labels=3), tmp_path / "m.axmd")
        response = client.post("/api/v1/experiments/run", json={
            "kind": "eps_sweep",
            "dataset": str(tmp_path / "d.axds"),
            "models": {"linear": str(tmp_path / "m.axmd")},
            "attacks": [{"method": "fgsm"}],
            "output": output,
        })
        assert response.status_code == 422
        assert not (tmp_path / "report.csv").exists()

    def test_runs_plan(self, client, tmp_path, output_root, tiny_dataset):
        write_dataset(tiny_dataset, tmp_path / "d.axds")
        save_model(build_model("linear", side=8, num_labels=3), tmp_path / "m.axmd")
        response = client.post("/api/v1/experiments/run", json={
            "kind": "eps_sweep",
            "dataset": str(tmp_path / "d.axds"),
            "models": {"linear": str(tmp_path / "m.axmd")},
            "attacks": [{"method": "fgsm", "minibatch": 16}],
            "epsilons": [0.0, 0.05],
            "output": "sweeps/eps.csv",
            "workers": 1,
        })
        assert response.status_code == 200
        body = response.json()
        assert body["kind"] == "eps_sweep" and len(body["reports"]) == 2
        assert all(r["wall_clock_seconds"] is None for r in body["reports"])
        assert (output_root / "sweeps" / "eps.csv").is_file()
        assert body["csv_path"] == str((output_root / "sweeps" / "eps.csv").resolve())
