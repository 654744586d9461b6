"""HTTP preview service consumed by the tuning UI.

Endpoints:

* GET  /labels   — the loaded label-map roster
* GET  /config   — the current default config document
* POST /preview  — render one seeded sample (optionally truncated at a
                   pipeline stage, optionally with one stage forced to
                   its maximum effect) as base-64 PNG slices plus the
                   full provenance record
* POST /validate — schema verdict for sparse config overrides

The service is stateless apart from the read-only roster, so identical
request bodies always produce identical responses.
"""

from __future__ import annotations

import base64
import io as _io
import os

import yaml
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import (SynthesisConfig, config_from_document, default_config,
                     max_effect_config, serialize_config)
from .errors import ConfigError, GenerationError, VolumeIOError
from .fields import LabelVolume
from .io import export_slice, load_volume
from .pipeline import STAGES, generate


class PreviewRequest(BaseModel):
    label_id: str
    overrides: dict = {}
    seed: int = 0
    slice_axis: int | None = None
    slice_index: int | None = None
    stage: str | None = None  # stage cutoff; None runs the full chain
    max_effect: str | None = None


class ValidateRequest(BaseModel):
    overrides: dict = {}


def _merge_documents(base: dict, overrides: dict) -> dict:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return merged


def _config_error(exc: ConfigError) -> JSONResponse:
    return JSONResponse(status_code=422, content={"detail": str(exc)})


def _png_b64(volume, axis: int, index: int) -> str:
    buf = _io.BytesIO()
    # export_slice only writes to paths; reuse its rendering via a
    # temp-free in-memory call
    from .io import _slice_image  # local import avoids a public alias
    _slice_image(volume, axis, index).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def load_roster(roster_dir) -> dict:
    """Load every supported volume in a directory as the label roster."""
    roster = {}
    for name in sorted(os.listdir(roster_dir)):
        if not name.endswith((".nii", ".nii.gz", ".vxr")):
            continue
        volume, _ = load_volume(os.path.join(roster_dir, name),
                                kind="integer-labels")
        key = name
        for suffix in (".nii.gz", ".nii", ".vxr"):
            if key.endswith(suffix):
                key = key[:-len(suffix)]
                break
        roster[key] = volume
    if not roster:
        raise VolumeIOError(f"no label maps found in {roster_dir}")
    return roster


def create_app(roster: dict, base_config: SynthesisConfig | None = None) \
        -> FastAPI:
    """Build the service around a name -> LabelVolume roster."""
    if not roster:
        raise ConfigError("the service needs a non-empty label-map roster")
    base = base_config if base_config is not None else default_config()
    base_doc = yaml.safe_load(serialize_config(base))
    app = FastAPI(title="voxsynth preview service")

    @app.get("/labels")
    def labels():
        return {"labels": [
            {"id": name, "shape": list(vol.shape),
             "label_count": vol.label_count}
            for name, vol in sorted(roster.items())]}

    @app.get("/config")
    def config():
        return base_doc

    @app.post("/validate")
    def validate(req: ValidateRequest):
        try:
            config_from_document(_merge_documents(base_doc, req.overrides))
        except ConfigError as exc:
            return _config_error(exc)
        return {"valid": True}

    @app.post("/preview")
    def preview(req: PreviewRequest):
        if req.label_id not in roster:
            return JSONResponse(status_code=404, content={
                "detail": f"unknown label map {req.label_id!r}; known: "
                          f"{sorted(roster)}"})
        if req.stage is not None and req.stage not in STAGES:
            return _config_error(ConfigError(
                f"unknown stage {req.stage!r}; expected one of "
                f"{list(STAGES)}"))
        try:
            cfg = config_from_document(
                _merge_documents(base_doc, req.overrides))
            if req.max_effect is not None:
                cfg = max_effect_config(cfg, req.max_effect)
        except ConfigError as exc:
            return _config_error(exc)
        volume: LabelVolume = roster[req.label_id]
        if cfg.ndim != volume.ndim:
            return _config_error(ConfigError(
                f"config is {cfg.ndim}-D but label map "
                f"{req.label_id!r} is {volume.ndim}-D"))
        try:
            pair = generate(volume, cfg, req.seed, stop_after=req.stage)
        except GenerationError as exc:
            return JSONResponse(status_code=500, content={
                "detail": f"generation failed at stage '{exc.stage}'"})
        axis = req.slice_axis if req.slice_axis is not None \
            else volume.ndim - 1
        if not 0 <= axis < volume.ndim:
            return _config_error(ConfigError(
                f"slice_axis {axis} out of range for a {volume.ndim}-D "
                "volume"))
        extent = pair.image.shape[axis]
        index = req.slice_index if req.slice_index is not None \
            else extent // 2
        if not 0 <= index < extent:
            return _config_error(ConfigError(
                f"slice_index {index} out of range (axis extent {extent})"))
        return {
            "label_id": req.label_id,
            "seed": pair.seed,
            "stage": req.stage or STAGES[-1],
            "slice_axis": axis,
            "slice_index": index,
            "image_png": _png_b64(pair.image, axis, index),
            "labels_png": _png_b64(pair.labels, axis, index),
            "provenance": pair.provenance,
        }

    return app
