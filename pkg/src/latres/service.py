"""Local HTTP inference service.

Serves alpha-controlled restoration from one loaded checkpoint:

    GET  /api/health   liveness + model state
    GET  /api/models   loaded model summary
    GET  /api/samples  bundled degraded samples (restorable by id)
    POST /api/restore  {image|sample_id, alpha, reference?} -> restored PNG

Payload images are base64 PNG. The loaded bundle is read-only, so
concurrent requests are served without locking and identical requests
return identical bytes.
"""

from __future__ import annotations

import base64
import binascii
import json
import time
from importlib import resources
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .checkpoint import CheckpointBundle
from .errors import ValidationError
from .imageio import decode_png_bytes, encode_png_bytes, load_image
from .metrics import compute_metrics
from .pipeline import InferenceSession

MAX_PIXELS_DEFAULT = 16_000_000


class RestoreRequest(BaseModel):
    image: str | None = None
    sample_id: str | None = None
    alpha: float = 0.5
    reference: str | None = None


class Sample:
    def __init__(self, sample_id: str, kind: str, image: np.ndarray, reference: np.ndarray | None):
        self.sample_id = sample_id
        self.kind = kind
        self.image = image
        self.reference = reference


def load_samples(samples_dir: Path | None = None) -> list[Sample]:
    """Sample images shipped with the package (or from a directory)."""
    if samples_dir is None:
        samples_dir = Path(str(resources.files("latres") / "assets" / "samples"))
    index = samples_dir / "samples.json"
    if not index.exists():
        return []
    samples = []
    for entry in json.loads(index.read_text()):
        img = load_image(samples_dir / f"{entry['id']}.png")
        ref_path = samples_dir / f"{entry['id']}_ref.png"
        ref = load_image(ref_path) if ref_path.exists() else None
        samples.append(Sample(entry["id"], entry["kind"], img, ref))
    return samples


def _b64_image(img: np.ndarray) -> str:
    return base64.b64encode(encode_png_bytes(img)).decode("ascii")


def _decode_b64(payload: str, max_pixels: int) -> np.ndarray:
    try:
        blob = base64.b64decode(payload, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise HTTPException(status_code=400, detail=f"invalid base64 payload: {exc}")
    try:
        img = decode_png_bytes(blob)
    except ValidationError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    if img.shape[0] * img.shape[1] > max_pixels:
        raise HTTPException(
            status_code=400,
            detail=f"image has {img.shape[0] * img.shape[1]} pixels, limit is {max_pixels}",
        )
    return img


def create_app(
    bundle: CheckpointBundle | None,
    samples_dir: Path | None = None,
    max_pixels: int = MAX_PIXELS_DEFAULT,
    ui_dir: Path | None = None,
) -> FastAPI:
    app = FastAPI(title="latres inference service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    session = InferenceSession(bundle) if bundle is not None else None
    samples = {s.sample_id: s for s in load_samples(samples_dir)}

    @app.get("/api/health")
    def health():
        return {"status": "ok", "model_loaded": session is not None}

    @app.get("/api/models")
    def models():
        if session is None:
            return []
        from .pipeline import parameter_report

        return [
            {
                "model_id": bundle.model_id(),
                "stage": bundle.stage,
                "has_adapters": session.has_adapters,
                "parameters": parameter_report(bundle),
            }
        ]

    @app.get("/api/samples")
    def list_samples():
        return [
            {
                "id": s.sample_id,
                "kind": s.kind,
                "image": _b64_image(s.image),
                "reference": _b64_image(s.reference) if s.reference is not None else None,
            }
            for s in sorted(samples.values(), key=lambda s: s.sample_id)
        ]

    @app.post("/api/restore")
    def restore(req: RestoreRequest):
        if session is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        if not 0.0 <= req.alpha <= 1.0:
            raise HTTPException(
                status_code=400, detail=f"alpha must be in [0, 1], got {req.alpha}"
            )
        reference = None
        if req.sample_id is not None:
            sample = samples.get(req.sample_id)
            if sample is None:
                raise HTTPException(status_code=400, detail=f"unknown sample id {req.sample_id!r}")
            image = sample.image
            reference = sample.reference
        elif req.image is not None:
            image = _decode_b64(req.image, max_pixels)
        else:
            raise HTTPException(status_code=400, detail="provide image or sample_id")
        if req.reference is not None:
            reference = _decode_b64(req.reference, max_pixels)

        start = time.perf_counter()
        out = session.restore(image, req.alpha)
        latency_ms = (time.perf_counter() - start) * 1000.0
        response = {
            "image": _b64_image(out),
            "alpha": req.alpha,
            "latency_ms": latency_ms,
            "model_id": bundle.model_id(),
            "metrics": None,
        }
        if reference is not None:
            response["metrics"] = compute_metrics(out, reference, session.prior).to_dict()
        return response

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
