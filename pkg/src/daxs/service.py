"""HTTP service exposing images, fit jobs and overlays to the annotation UI.

Artifacts live in a flat directory tree keyed by content hash; job execution
is FIFO through a single worker thread, so results are deterministic and a
restart preserves every completed record.

    POST /images              upload a DAXS-IMG document, returns {"id": ...}
    GET  /images/{id}         the stored document, byte-identical
    GET  /images/{id}/png     rendered heatmap
    POST /jobs                {"kind", "image_id"|"image_ids", "seeds", "config"}
    GET  /jobs/{id}           job record, result inlined when done
    GET  /fits/{id}/overlay   fitted branch polylines for a done fit job
"""

from __future__ import annotations

import hashlib
import json
import queue
import threading
import time
import traceback
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .extract import SeedCurves
from .globalfit import FitConfig
from .image import SpectralImage
from .pipeline import (
    extraction_config_from,
    overlay_polylines,
    run_align_average,
    run_fit,
    run_sign_compare,
)
from .plotting import heatmap_png_bytes, raster_png_bytes

JOB_KINDS = ("fit", "sign-compare", "align-average")


def _content_id(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()[:16]


class JobStore:
    """Disk-backed image and job registry with a FIFO worker."""

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        for sub in ("images", "jobs", "results", "overlays", "tracks"):
            (self.data_dir / sub).mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._queue: queue.Queue[str] = queue.Queue()
        self._worker = threading.Thread(target=self._run_worker, daemon=True)
        self._recover()
        self._worker.start()

    # ---- images ----

    def put_image(self, payload: bytes) -> str:
        SpectralImage.from_json(payload.decode("utf-8"))  # validates
        image_id = _content_id(payload)
        (self.data_dir / "images" / f"{image_id}.json").write_bytes(payload)
        return image_id

    def image_bytes(self, image_id: str) -> bytes | None:
        path = self.data_dir / "images" / f"{image_id}.json"
        return path.read_bytes() if path.exists() else None

    def image(self, image_id: str) -> SpectralImage | None:
        payload = self.image_bytes(image_id)
        return None if payload is None else SpectralImage.from_json(payload.decode("utf-8"))

    # ---- job records ----

    def _job_path(self, job_id: str) -> Path:
        return self.data_dir / "jobs" / f"{job_id}.json"

    def job(self, job_id: str) -> dict | None:
        path = self._job_path(job_id)
        return json.loads(path.read_text()) if path.exists() else None

    def _write_job(self, record: dict) -> None:
        self._job_path(record["job_id"]).write_text(json.dumps(record, indent=2))

    def submit(self, body: dict) -> dict:
        created = time.time()
        payload = json.dumps(body, sort_keys=True).encode()
        job_id = _content_id(payload + repr(created).encode())
        record = {
            "job_id": job_id,
            "kind": body["kind"],
            "status": "queued",
            "input": body,
            "result": None,
            "error": None,
            "created_at": created,
            "started_at": None,
            "finished_at": None,
        }
        with self._lock:
            self._write_job(record)
        self._queue.put(job_id)
        return record

    def result_document(self, job_id: str) -> dict | None:
        path = self.data_dir / "results" / f"{job_id}.json"
        return json.loads(path.read_text()) if path.exists() else None

    def overlay_document(self, job_id: str) -> list | None:
        path = self.data_dir / "overlays" / f"{job_id}.json"
        return json.loads(path.read_text()) if path.exists() else None

    def wait_idle(self, timeout: float = 60.0) -> None:
        """Block until every queued job has been processed (used by tests)."""
        deadline = time.time() + timeout
        while time.time() < deadline:
            if self._queue.empty() and not self._busy:
                return
            time.sleep(0.02)
        raise TimeoutError("job queue did not drain")

    # ---- worker ----

    def _recover(self) -> None:
        self._busy = False
        for path in sorted((self.data_dir / "jobs").glob("*.json")):
            record = json.loads(path.read_text())
            if record["status"] == "queued":
                self._queue.put(record["job_id"])
            elif record["status"] == "running":
                record["status"] = "failed"
                record["error"] = "interrupted by service restart"
                record["finished_at"] = time.time()
                self._write_job(record)

    def _run_worker(self) -> None:
        while True:
            job_id = self._queue.get()
            self._busy = True
            try:
                self._execute(job_id)
            finally:
                self._busy = False
                self._queue.task_done()

    def _transition(self, job_id: str, **updates) -> dict:
        with self._lock:
            record = self.job(job_id)
            record.update(updates)
            self._write_job(record)
            return record

    def _execute(self, job_id: str) -> None:
        record = self._transition(job_id, status="running", started_at=time.time())
        try:
            handler = {
                "fit": self._run_fit_job,
                "sign-compare": self._run_sign_compare_job,
                "align-average": self._run_align_average_job,
            }[record["kind"]]
            result_ref = handler(job_id, record["input"])
            self._transition(job_id, status="done", result=result_ref,
                             finished_at=time.time())
        except Exception as exc:  # job errors are reported, not fatal
            self._transition(job_id, status="failed",
                             error=f"{type(exc).__name__}: {exc}",
                             finished_at=time.time())
            traceback.print_exc()

    def _fit_inputs(self, body: dict):
        img = self.image(body["image_id"])
        if img is None:
            raise ValueError(f"unknown image_id {body.get('image_id')!r}")
        seeds = SeedCurves.from_dict(body["seeds"])
        config = body.get("config", {})
        fit_cfg = FitConfig.from_dict(config)
        return img, seeds, fit_cfg, extraction_config_from(config)

    def _run_fit_job(self, job_id: str, body: dict) -> str:
        img, seeds, fit_cfg, extraction = self._fit_inputs(body)
        tracks, result = run_fit(img, seeds, fit_cfg, extraction)
        (self.data_dir / "results" / f"{job_id}.json").write_text(result.to_json())
        (self.data_dir / "tracks" / f"{job_id}.csv").write_text(tracks.to_csv())
        overlay = overlay_polylines(img, result, tracks.bindings)
        (self.data_dir / "overlays" / f"{job_id}.json").write_text(json.dumps(overlay))
        return f"results/{job_id}.json"

    def _run_sign_compare_job(self, job_id: str, body: dict) -> str:
        img, seeds, fit_cfg, extraction = self._fit_inputs(body)
        tracks, comparison = run_sign_compare(img, seeds, fit_cfg, extraction)
        doc = comparison.to_dict()
        doc["fits"] = {name: fit.to_dict() for name, fit in comparison.fits.items()}
        (self.data_dir / "results" / f"{job_id}.json").write_text(json.dumps(doc, indent=2))
        return f"results/{job_id}.json"

    def _run_align_average_job(self, job_id: str, body: dict) -> str:
        image_ids = body.get("image_ids") or []
        images = []
        for image_id in image_ids:
            img = self.image(image_id)
            if img is None:
                raise ValueError(f"unknown image_id {image_id!r}")
            images.append(img)
        seeds = SeedCurves.from_dict(body["seeds"])
        if len(seeds) == 0:
            raise ValueError("track spec contains no curves")
        config = body.get("config", {})
        average, report = run_align_average(images, image_ids, seeds.curves[0],
                                            extraction_config_from(config))
        payload = average.image.to_json().encode()
        averaged_id = self.put_image(payload)
        doc = {"image_id": averaged_id, "report": report}
        (self.data_dir / "results" / f"{job_id}.json").write_text(json.dumps(doc, indent=2))
        return f"results/{job_id}.json"


def _error(status: int, message: str, detail: str = "") -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": message, "detail": detail})


def create_app(data_dir) -> FastAPI:
    store = JobStore(Path(data_dir))
    app = FastAPI(title="daxs service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    app.state.store = store

    @app.post("/images")
    async def post_image(request: Request):
        payload = await request.body()
        try:
            image_id = store.put_image(payload)
        except (ValueError, UnicodeDecodeError, json.JSONDecodeError) as exc:
            return _error(400, "invalid DAXS-IMG document", str(exc))
        return {"id": image_id}

    @app.get("/images/{image_id}")
    def get_image(image_id: str):
        payload = store.image_bytes(image_id)
        if payload is None:
            return _error(404, "unknown image", image_id)
        return Response(content=payload, media_type="application/json")

    @app.get("/images/{image_id}/png")
    def get_image_png(image_id: str, bare: bool = False):
        img = store.image(image_id)
        if img is None:
            return _error(404, "unknown image", image_id)
        payload = raster_png_bytes(img) if bare else heatmap_png_bytes(img)
        return Response(content=payload, media_type="image/png")

    @app.post("/jobs")
    async def post_job(request: Request):
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            return _error(400, "invalid JSON body", str(exc))
        if not isinstance(body, dict) or body.get("kind") not in JOB_KINDS:
            return _error(400, "invalid job body",
                          f"kind must be one of {', '.join(JOB_KINDS)}")
        if body["kind"] in ("fit", "sign-compare"):
            image_id = body.get("image_id")
            if not image_id or store.image_bytes(image_id) is None:
                return _error(404, "unknown image", str(image_id))
            if "seeds" not in body or "config" not in body:
                return _error(400, "invalid job body", "seeds and config are required")
            try:
                SeedCurves.from_dict(body["seeds"])
                FitConfig.from_dict(body["config"])
            except (ValueError, KeyError, TypeError) as exc:
                return _error(400, "invalid job body", str(exc))
        else:
            image_ids = body.get("image_ids") or []
            if len(image_ids) < 2:
                return _error(400, "invalid job body",
                              "align-average needs at least 2 image_ids")
            for image_id in image_ids:
                if store.image_bytes(image_id) is None:
                    return _error(404, "unknown image", str(image_id))
            if "seeds" not in body:
                return _error(400, "invalid job body", "seeds (track spec) required")
        record = store.submit(body)
        return {"job_id": record["job_id"], "status": record["status"]}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        record = store.job(job_id)
        if record is None:
            return _error(404, "unknown job", job_id)
        if record["status"] == "done":
            record = dict(record)
            record["result_document"] = store.result_document(job_id)
        return record

    @app.get("/fits/{job_id}/overlay")
    def get_overlay(job_id: str):
        record = store.job(job_id)
        if record is None or record["kind"] != "fit":
            return _error(404, "unknown fit job", job_id)
        if record["status"] != "done":
            return _error(404, "fit job not finished", record["status"])
        overlay = store.overlay_document(job_id)
        if overlay is None:
            return _error(404, "overlay unavailable", job_id)
        return {"job_id": job_id, "curves": overlay}

    return app
