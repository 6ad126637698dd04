import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from daxs.extract import SeedCurves
from daxs.hamiltonian import ModelParams, branch_energies
from daxs.service import create_app


def wait_done(client: TestClient, job_id: str, timeout: float = 60.0) -> dict:
    deadline = time.time() + timeout
    while time.time() < deadline:
        record = client.get(f"/jobs/{job_id}").json()
        if record["status"] in ("done", "failed"):
            return record
        time.sleep(0.05)
    raise TimeoutError(f"job {job_id} did not finish")


@pytest.fixture
def service(tmp_path):
    app = create_app(tmp_path / "data")
    with TestClient(app) as client:
        yield client, tmp_path / "data"


@pytest.fixture
def fixture_docs(fixture_paths):
    return {
        "image_bytes": fixture_paths["image"].read_bytes(),
        "seeds": json.loads(fixture_paths["seeds"].read_text()),
        "config": json.loads(fixture_paths["fit_config"].read_text()),
        "expected": json.loads(fixture_paths["expected"].read_text()),
    }


class TestImages:
    def test_upload_then_get_byte_identical(self, service, fixture_docs):
        client, _ = service
        response = client.post("/images", content=fixture_docs["image_bytes"])
        assert response.status_code == 200
        image_id = response.json()["id"]
        fetched = client.get(f"/images/{image_id}")
        assert fetched.status_code == 200
        assert fetched.content == fixture_docs["image_bytes"]

    def test_unknown_image_404(self, service):
        client, _ = service
        assert client.get("/images/doesnotexist").status_code == 404
        assert client.get("/images/doesnotexist/png").status_code == 404

    def test_invalid_image_400(self, service):
        client, _ = service
        response = client.post("/images", content=b'{"format": "wrong"}')
        assert response.status_code == 400
        assert "error" in response.json()

    def test_png_rendering(self, service, fixture_docs):
        client, _ = service
        image_id = client.post("/images", content=fixture_docs["image_bytes"]).json()["id"]
        png = client.get(f"/images/{image_id}/png")
        assert png.status_code == 200
        assert png.headers["content-type"] == "image/png"
        assert png.content[:8] == b"\x89PNG\r\n\x1a\n"

    def test_bare_png_matches_data_grid(self, service, fixture_docs):
        import struct

        client, _ = service
        image_id = client.post("/images", content=fixture_docs["image_bytes"]).json()["id"]
        png = client.get(f"/images/{image_id}/png", params={"bare": 1})
        assert png.status_code == 200
        width, height = struct.unpack(">II", png.content[16:24])
        doc = json.loads(fixture_docs["image_bytes"])
        assert (width, height) == (doc["x_axis"]["count"], doc["y_axis"]["count"])


class TestJobs:
    def test_unknown_job_404(self, service):
        client, _ = service
        assert client.get("/jobs/nope").status_code == 404

    def test_invalid_kind_400(self, service):
        client, _ = service
        response = client.post("/jobs", json={"kind": "dance"})
        assert response.status_code == 400

    def test_job_with_unknown_image_404(self, service, fixture_docs):
        client, _ = service
        response = client.post("/jobs", json={
            "kind": "fit", "image_id": "missing",
            "seeds": fixture_docs["seeds"], "config": fixture_docs["config"]})
        assert response.status_code == 404

    def test_fit_job_round_trip_and_overlay(self, service, fixture_docs):
        client, _ = service
        image_id = client.post("/images", content=fixture_docs["image_bytes"]).json()["id"]
        response = client.post("/jobs", json={
            "kind": "fit", "image_id": image_id,
            "seeds": fixture_docs["seeds"], "config": fixture_docs["config"]})
        assert response.status_code == 200
        job_id = response.json()["job_id"]

        record = wait_done(client, job_id)
        assert record["status"] == "done", record.get("error")
        doc = record["result_document"]
        expected = fixture_docs["expected"]
        tolerance = expected["coupling_tolerance_percent"] / 100.0
        for name, entry in expected["fitted_reference"].items():
            assert abs(abs(doc["couplings"][name]) - entry["true"]) / entry["true"] \
                < tolerance

        overlay = client.get(f"/fits/{job_id}/overlay")
        assert overlay.status_code == 200
        curves = overlay.json()["curves"]
        assert len(curves) == 4

        # overlay polylines track the true branch curves within 0.05 * linewidth
        seeds = SeedCurves.from_dict(fixture_docs["seeds"])
        truth = ModelParams.from_dict(expected["true_params"])
        bindings = {c.track_id: c.branch for c in seeds}
        for curve in curves:
            label = bindings[curve["track_id"]]
            points = np.array(curve["points"])
            model = branch_energies(truth, [label], points[:, 0])[0]
            assert np.max(np.abs(points[:, 1] - model)) < 0.05 * 2.0

    def test_overlay_for_unfinished_or_missing_job_404(self, service):
        client, _ = service
        assert client.get("/fits/here-be-dragons/overlay").status_code == 404

    def test_failed_job_reports_error(self, service, fixture_docs):
        client, _ = service
        image_id = client.post("/images", content=fixture_docs["image_bytes"]).json()["id"]
        seeds = dict(fixture_docs["seeds"])
        seeds["curves"] = [dict(seeds["curves"][0],
                                branch={"sector": "singlet", "index": 6, "spin_z": 0})]
        response = client.post("/jobs", json={
            "kind": "fit", "image_id": image_id,
            "seeds": seeds, "config": fixture_docs["config"]})
        job_id = response.json()["job_id"]
        record = wait_done(client, job_id)
        assert record["status"] == "failed"
        assert "absent branch" in record["error"]

    def test_align_average_job(self, service, fixture_docs):
        client, _ = service
        image_id = client.post("/images", content=fixture_docs["image_bytes"]).json()["id"]
        track_spec = {"format": "daxs-seeds", "version": 1,
                      "curves": [fixture_docs["seeds"]["curves"][0]]}
        response = client.post("/jobs", json={
            "kind": "align-average", "image_ids": [image_id, image_id],
            "seeds": track_spec, "config": {}})
        assert response.status_code == 200
        record = wait_done(client, response.json()["job_id"])
        assert record["status"] == "done", record.get("error")
        averaged_id = record["result_document"]["image_id"]
        assert client.get(f"/images/{averaged_id}").status_code == 200
        report = record["result_document"]["report"]
        assert [r["shift"] for r in report] == [[0, 0], [0, 0]]

    def test_align_average_needs_two_images(self, service, fixture_docs):
        client, _ = service
        image_id = client.post("/images", content=fixture_docs["image_bytes"]).json()["id"]
        response = client.post("/jobs", json={
            "kind": "align-average", "image_ids": [image_id],
            "seeds": fixture_docs["seeds"]})
        assert response.status_code == 400


class TestPersistence:
    def test_completed_jobs_survive_restart(self, tmp_path, fixture_docs):
        data_dir = tmp_path / "data"
        app = create_app(data_dir)
        with TestClient(app) as client:
            image_id = client.post("/images",
                                   content=fixture_docs["image_bytes"]).json()["id"]
            job_id = client.post("/jobs", json={
                "kind": "fit", "image_id": image_id,
                "seeds": fixture_docs["seeds"],
                "config": fixture_docs["config"]}).json()["job_id"]
            record = wait_done(client, job_id)
            assert record["status"] == "done"

        fresh = create_app(data_dir)
        with TestClient(fresh) as client:
            record = client.get(f"/jobs/{job_id}").json()
            assert record["status"] == "done"
            assert record["result_document"] is not None
            assert client.get(f"/images/{image_id}").content \
                == fixture_docs["image_bytes"]
            assert client.get(f"/fits/{job_id}/overlay").status_code == 200
