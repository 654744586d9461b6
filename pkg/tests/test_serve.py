import base64
import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from conftest import box_phantom, identity_config
from voxsynth.server import create_app


@pytest.fixture(scope="module")
def client():
    roster = {"phantom": box_phantom(extent=24, ndim=3),
              "flat": box_phantom(extent=16, ndim=3, labels=3)}
    cfg = identity_config(translation_mm=(-5.0, 5.0),
                          noise_sd_pct=(0.0, 5.0))
    return TestClient(create_app(roster, cfg))


def decode_png(payload):
    return np.asarray(Image.open(io.BytesIO(base64.b64decode(payload))))


class TestRosterAndConfig:
    def test_labels_listing(self, client):
        body = client.get("/labels").json()
        ids = [entry["id"] for entry in body["labels"]]
        assert ids == ["flat", "phantom"]
        assert body["labels"][1]["shape"] == [24, 24, 24]
        assert body["labels"][1]["label_count"] == 2

    def test_config_document(self, client):
        doc = client.get("/config").json()
        assert doc["schema_version"] == 1
        assert doc["ranges"]["gamma"] == [1.0, 1.0]
        assert set(doc) == {"schema_version", "ndim", "voxel_size_mm",
                            "ranges", "structure", "probabilities"}


class TestValidate:
    def test_valid_overrides(self, client):
        r = client.post("/validate",
                        json={"overrides": {"ranges": {"gamma": [0.7, 1.3]}}})
        assert r.status_code == 200 and r.json() == {"valid": True}

    def test_crossed_range_names_field(self, client):
        r = client.post("/validate",
                        json={"overrides": {"ranges": {"gamma": [2, 1]}}})
        assert r.status_code == 422
        assert "gamma" in r.json()["detail"]

    def test_unknown_key_rejected(self, client):
        r = client.post("/validate",
                        json={"overrides": {"ranges": {"sharpen": [0, 1]}}})
        assert r.status_code == 422


class TestPreview:
    def test_identical_bodies_identical_payloads(self, client):
        body = {"label_id": "phantom", "seed": 4}
        a = client.post("/preview", json=body)
        b = client.post("/preview", json=body)
        assert a.status_code == 200
        assert a.content == b.content

    def test_mean_image_cutoff_limits_intensities(self, client):
        r = client.post("/preview", json={"label_id": "phantom", "seed": 2,
                                          "stage": "mean-image"})
        raster = decode_png(r.json()["image_png"])
        assert len(np.unique(raster)) <= 2  # J = 2 labels

    def test_full_chain_has_many_intensities(self, client):
        r = client.post("/preview", json={"label_id": "phantom", "seed": 2})
        raster = decode_png(r.json()["image_png"])
        assert len(np.unique(raster)) > 2

    def test_provenance_included(self, client):
        r = client.post("/preview", json={"label_id": "phantom", "seed": 5})
        prov = r.json()["provenance"]
        assert prov["seed"] == 5
        assert "spatial" in prov["stages"]

    def test_crossed_gamma_override_names_field(self, client):
        r = client.post("/preview", json={
            "label_id": "phantom", "seed": 0,
            "overrides": {"ranges": {"gamma": [2, 1]}}})
        assert r.status_code == 422
        assert "gamma" in r.json()["detail"]

    def test_unknown_label_map_is_404(self, client):
        r = client.post("/preview", json={"label_id": "nope", "seed": 0})
        assert r.status_code == 404

    def test_unknown_stage_rejected(self, client):
        r = client.post("/preview", json={"label_id": "phantom", "seed": 0,
                                          "stage": "sharpen"})
        assert r.status_code == 422

    def test_max_effect_toggle_changes_output(self, client):
        base = client.post("/preview", json={"label_id": "phantom",
                                             "seed": 3})
        biased = client.post("/preview", json={
            "label_id": "phantom", "seed": 3, "max_effect": "bias",
            "overrides": {"ranges": {"bias_drop_pct": [0.0, 50.0]}}})
        assert biased.status_code == 200
        assert base.json()["image_png"] != biased.json()["image_png"]

    def test_slice_selection(self, client):
        r = client.post("/preview", json={"label_id": "phantom", "seed": 1,
                                          "slice_axis": 0,
                                          "slice_index": 7})
        body = r.json()
        assert body["slice_axis"] == 0 and body["slice_index"] == 7
        bad = client.post("/preview", json={"label_id": "phantom",
                                            "seed": 1, "slice_index": 99})
        assert bad.status_code == 422

    def test_labels_raster_matches_label_count(self, client):
        r = client.post("/preview", json={"label_id": "flat", "seed": 6,
                                          "stage": "spatial"})
        raster = decode_png(r.json()["labels_png"])
        colors = {tuple(c) for c in raster.reshape(-1, raster.shape[-1])}
        assert len(colors) <= 3
