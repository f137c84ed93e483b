"""HTTP facade over the pipeline: predict, verified submission, retrieval."""

from __future__ import annotations

import asyncio
import datetime
import uuid
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from pathlib import Path

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .. import __version__
from ..errors import (
    BackendUnavailable,
    CircaError,
    CorruptStream,
    NonImageDicom,
    UnsupportedFormat,
)
from ..imaging.raster import mask_to_png_bytes, raster_to_png_bytes
from ..models.gmm import CLASS_LABELS
from ..pipeline import PipelineRuntime, load_config, normalize_heatmap, process_case
from .storage import CaseStore

_ACCEPTED_CONTENT_TYPES = {
    "image/png", "image/jpeg", "application/dicom",
    "application/octet-stream", None, "",
}

_worker_runtime = None


def _init_worker(config_path: str) -> None:
    global _worker_runtime
    _worker_runtime = PipelineRuntime.load(load_config(config_path))


def _run_case(image_bytes: bytes, format_hint, with_saliency):
    """Executed inside a pool worker; returns a picklable bundle."""
    out = process_case(image_bytes, _worker_runtime, format_hint, with_saliency)
    artifacts = {}
    if out.artifacts.mask is not None:
        artifacts["mask"] = mask_to_png_bytes(out.artifacts.mask)
    if out.artifacts.roi is not None:
        artifacts["roi"] = raster_to_png_bytes(out.artifacts.roi)
    if out.artifacts.saliency is not None:
        artifacts["saliency"] = raster_to_png_bytes(
            normalize_heatmap(out.artifacts.saliency))
    return out.result.to_dict(), artifacts


def _error_payload(status: int, code: str, message: str, stage: str = "request"):
    return JSONResponse(status_code=status, content={
        "error": {"code": code, "message": message, "stage": stage}})


def _map_pipeline_error(exc: Exception):
    if isinstance(exc, UnsupportedFormat):
        return _error_payload(400, "unsupported_format", str(exc), "decode")
    if isinstance(exc, CorruptStream):
        return _error_payload(400, "corrupt_stream", str(exc), "decode")
    if isinstance(exc, NonImageDicom):
        return _error_payload(400, "non_image_dicom", str(exc), "decode")
    if isinstance(exc, BackendUnavailable):
        return _error_payload(503, "backend_unavailable", str(exc), "backend")
    if isinstance(exc, CircaError):
        return _error_payload(500, "pipeline_failure", str(exc), "pipeline")
    return _error_payload(500, "internal_error", str(exc), "unknown")


def create_app(config_path) -> FastAPI:
    """Build the service around a config file.

    Pipeline runs execute in a process pool sized by service.workers so no
    request blocks on another's computation; a thread pool is the fallback
    when subprocesses are unavailable.
    """
    config_path = str(config_path)
    config = load_config(config_path)
    runtime = PipelineRuntime.load(config)
    store = CaseStore(config.resolve(config.service.storage_dir))
    max_bytes = config.service.max_upload_mib * 1024 * 1024
    tokens = set(config.service.tokens)

    try:
        pool = ProcessPoolExecutor(max_workers=config.service.workers,
                                   initializer=_init_worker,
                                   initargs=(config_path,))
    except (OSError, ValueError):  # pragma: no cover - sandboxed environments
        global _worker_runtime
        _worker_runtime = runtime
        pool = ThreadPoolExecutor(max_workers=config.service.workers)

    app = FastAPI(title="circa", version=__version__)
    app.state.pool = pool
    app.state.store = store
    app.state.runtime = runtime

    @app.on_event("shutdown")
    def _shutdown() -> None:
        pool.shutdown(wait=False, cancel_futures=True)

    async def _execute(data: bytes, format_hint):
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(pool, _run_case, data, format_hint, None)

    def _persist(data: bytes, result: dict, artifact_pngs: dict,
                 submitter: str, verified_label=None, notes=None) -> dict:
        case_id = str(uuid.uuid4())
        record = {
            "id": case_id,
            "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "submitter": submitter,
            "image_blob": store.put_blob(data),
            "artifacts": {kind: store.put_blob(png)
                          for kind, png in artifact_pngs.items()},
            "result": result,
        }
        if verified_label is not None:
            record["verified_label"] = verified_label
        if notes:
            record["notes"] = notes
        store.add_case(record)
        return record

    def _artifact_urls(record: dict) -> dict:
        return {kind: f"/api/v1/cases/{record['id']}/artifacts/{kind}"
                for kind in record["artifacts"]}

    async def _handle_upload(request: Request, file: UploadFile, format_hint):
        if file.content_type not in _ACCEPTED_CONTENT_TYPES:
            return None, _error_payload(400, "unsupported_format",
                                        f"content type {file.content_type}",
                                        "request")
        declared = request.headers.get("content-length")
        if declared and declared.isdigit() and int(declared) > max_bytes + 4096:
            return None, _error_payload(413, "payload_too_large",
                                        f"limit is {max_bytes} bytes")
        data = await file.read()
        if len(data) > max_bytes:
            return None, _error_payload(413, "payload_too_large",
                                        f"limit is {max_bytes} bytes")
        return data, None

    @app.post("/api/v1/predict")
    async def predict(request: Request, file: UploadFile = File(...),
                      format: str | None = Form(default=None)):
        data, err = await _handle_upload(request, file, format)
        if err is not None:
            return err
        try:
            result, artifact_pngs = await _execute(data, format)
        except Exception as exc:
            return _map_pipeline_error(exc)
        record = _persist(data, result, artifact_pngs, submitter="anonymous")
        return JSONResponse(status_code=200, content={
            "case_id": record["id"],
            "result": result,
            "artifacts": _artifact_urls(record),
        })

    @app.post("/api/v1/verified")
    async def submit_verified(request: Request, file: UploadFile = File(...),
                              label: str = Form(...),
                              notes: str | None = Form(default=None),
                              format: str | None = Form(default=None)):
        auth = request.headers.get("authorization", "")
        token = auth.removeprefix("Bearer ").strip() if auth.startswith("Bearer ") else None
        if not token or token not in tokens:
            return _error_payload(401, "unauthorized", "missing or invalid token")
        if label not in CLASS_LABELS:
            return _error_payload(400, "invalid_label",
                                  f"label must be one of {', '.join(CLASS_LABELS)}")
        data, err = await _handle_upload(request, file, format)
        if err is not None:
            return err
        try:
            result, artifact_pngs = await _execute(data, format)
        except Exception as exc:
            return _map_pipeline_error(exc)
        record = _persist(data, result, artifact_pngs, submitter="registered",
                          verified_label=label, notes=notes)
        return JSONResponse(status_code=201, content={
            "case_id": record["id"],
            "verified_label": label,
        })

    @app.get("/api/v1/cases/{case_id}")
    async def get_case(case_id: str):
        record = store.get_case(case_id)
        if record is None:
            return _error_payload(404, "unknown_case", case_id)
        payload = dict(record)
        payload["artifacts"] = _artifact_urls(record)
        return JSONResponse(status_code=200, content=payload)

    @app.get("/api/v1/cases/{case_id}/artifacts/{kind}")
    async def get_artifact(case_id: str, kind: str):
        record = store.get_case(case_id)
        if record is None or kind not in record["artifacts"]:
            return _error_payload(404, "unknown_artifact", f"{case_id}/{kind}")
        data = store.get_blob(record["artifacts"][kind])
        return Response(content=data, media_type="image/png")

    @app.get("/api/v1/health")
    async def health():
        checksums = runtime.artifact_checksums()
        backends = [
            {"kind": kind, "identifier": b.descriptor.identifier, "reachable": True}
            for kind, b in runtime.backends.items()
        ]
        missing = [k for k in ("segmentation", "image_classifier",
                               "feature_extractor") if k not in runtime.backends]
        degraded = bool(missing) or any(v is None for v in checksums.values())
        body = {
            "status": "degraded" if degraded else "ok",
            "version": __version__,
            "backends": backends,
            "missing_backends": missing,
            "artifacts": checksums,
            "cases_stored": store.case_count(),
            "gmm_summary": _gmm_summary(runtime),
        }
        return JSONResponse(status_code=200, content=body)

    ui_dir = config.service.ui_dir
    if ui_dir:
        ui_path = config.resolve(ui_dir)
        if Path(ui_path).is_dir():
            app.mount("/", StaticFiles(directory=str(ui_path), html=True),
                      name="webui")

    return app


def _gmm_summary(runtime) -> dict:
    """Component means/covariances for the UI's subtype ellipse overlay."""
    out = {}
    for label, mix in runtime.gmm.mixtures.items():
        out[label] = [
            {"weight": float(mix.weights[j]),
             "mean": [float(v) for v in mix.means[j]],
             "cov": [[float(c) for c in row] for row in mix.covs[j]]}
            for j in range(mix.k)
        ]
    return out
