"""Local HTTP API exposing scene storage, rendering, jobs, and judgments.

Single-tenant and local-first: it fronts the user's own data directory
with flat content-addressed files, no database. Scenes are stored in
canonical form keyed by their hash, so any scene retrievable by id
re-validates cleanly and renders reproducibly.
"""

from __future__ import annotations

import json
import os
import threading

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from . import evaluate as ev
from . import gateway as gw
from .render import StyleConfig, render_annotations
from .scene import SceneError, scene_hash, validate_scene
from .specio import SceneParseError, parse_scene, serialize_scene

DEFAULT_PORT = 8787


def _error(status: int, code: str, message: str, json_path: str | None = None,
           extra: dict | None = None) -> JSONResponse:
    body = {"status": status, "code": code, "message": message}
    if json_path:
        body["json_path"] = json_path
    if extra:
        body.update(extra)
    return JSONResponse(status_code=status, content=body)


class SceneStore:
    """Canonical scene documents under <data_dir>/scenes/<hash>.ivi.json."""

    def __init__(self, base_dir: str):
        self.dir = os.path.join(base_dir, "scenes")
        os.makedirs(self.dir, exist_ok=True)

    def path(self, scene_id: str) -> str:
        return os.path.join(self.dir, f"{scene_id}.ivi.json")

    def put(self, spec) -> str:
        digest = scene_hash(spec)
        path = self.path(digest)
        if not os.path.isfile(path):
            tmp = path + ".tmp"
            with open(tmp, "wb") as fh:
                fh.write(serialize_scene(spec))
            os.replace(tmp, path)
        return digest

    def get_bytes(self, scene_id: str) -> bytes | None:
        path = self.path(scene_id)
        if not os.path.isfile(path):
            return None
        with open(path, "rb") as fh:
            return fh.read()


class JudgmentStore:
    """Append-only judgments CSV per experiment tag; duplicate-safe."""

    def __init__(self, base_dir: str):
        self.dir = os.path.join(base_dir, "judgments")
        os.makedirs(self.dir, exist_ok=True)
        self._lock = threading.Lock()

    def path(self, experiment: str) -> str:
        return os.path.join(self.dir, f"{experiment}.csv")

    def load(self, experiment: str) -> list[ev.Judgment]:
        path = self.path(experiment)
        if not os.path.isfile(path):
            return []
        with open(path, encoding="utf-8") as fh:
            return ev.read_judgments_csv(fh.read())

    def append(self, experiment: str, judgment: ev.Judgment) -> bool:
        """False when the (job, instruction, rater) triple already exists."""
        with self._lock:
            existing = self.load(experiment)
            if any(j.key == judgment.key for j in existing):
                return False
            path = self.path(experiment)
            data = ev.write_judgments_csv(existing + [judgment])
            tmp = path + ".tmp"
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(data)
            os.replace(tmp, path)
            return True


def create_app(data_dir: str | None = None, ui_dir: str | None = None) -> FastAPI:
    base_dir = data_dir or gw.data_dir()
    os.makedirs(base_dir, exist_ok=True)
    scenes = SceneStore(base_dir)
    judgments = JudgmentStore(base_dir)
    gateway = gw.Gateway(base_dir)
    backends = gw.load_backend_configs(os.path.join(base_dir, "backends.json"))

    app = FastAPI(title="ivi service", version="0.1.0")

    @app.post("/api/scenes")
    async def post_scene(request: Request):
        raw = await request.body()
        try:
            spec = parse_scene(raw)
        except SceneParseError as exc:
            return _error(422, exc.code, exc.message, exc.json_path)
        report = validate_scene(spec)
        if not report.ok:
            first = report.errors[0]
            return _error(422, first.code, first.message, first.path,
                          {"issues": report.to_doc()})
        scene_id = scenes.put(spec)
        return JSONResponse(status_code=201,
                            content={"scene_id": scene_id, "scene_hash": scene_id})

    @app.get("/api/scenes/{scene_id}")
    def get_scene(scene_id: str):
        data = scenes.get_bytes(scene_id)
        if data is None:
            return _error(404, "UNKNOWN_SCENE", f"no scene {scene_id!r}")
        return Response(content=data, media_type="application/json")

    @app.post("/api/scenes/{scene_id}/render")
    async def render_scene(scene_id: str, request: Request):
        data = scenes.get_bytes(scene_id)
        if data is None:
            return _error(404, "UNKNOWN_SCENE", f"no scene {scene_id!r}")
        raw = await request.body()
        style = StyleConfig()
        if raw.strip():
            try:
                style = StyleConfig.from_doc(json.loads(raw))
            except (ValueError, TypeError) as exc:
                return _error(400, "BAD_STYLE", str(exc))
        spec = parse_scene(data)
        try:
            frame = render_annotations(spec, style)  # pure; safe in parallel
        except SceneError as exc:
            return _error(422, exc.code, str(exc))
        return Response(content=frame.png_bytes(), media_type="image/png")

    @app.post("/api/jobs")
    async def post_job(request: Request):
        try:
            body = json.loads(await request.body())
        except ValueError:
            return _error(400, "MALFORMED", "body must be JSON")
        scene_id = body.get("scene_id")
        backend_id = body.get("backend_id", "interpreter")
        if not scene_id:
            return _error(400, "MISSING_FIELD", "scene_id is required", "$.scene_id")
        data = scenes.get_bytes(scene_id)
        if data is None:
            return _error(404, "UNKNOWN_SCENE", f"no scene {scene_id!r}")
        backend = backends.get(backend_id)
        if backend is None:
            return _error(404, "UNKNOWN_BACKEND", f"no backend {backend_id!r}")
        overrides = {}
        if "frames" in body:
            overrides["frames"] = int(body["frames"])
        if "fps" in body:
            overrides["fps"] = int(body["fps"])
        if "bake_annotations" in body:
            overrides["bake_annotations"] = bool(body["bake_annotations"])
        if overrides:
            doc = {k: getattr(backend, k) for k in backend.__dataclass_fields__}
            doc.update(overrides)
            backend = gw.BackendConfig(**doc)
        spec = parse_scene(data)
        try:
            frame = render_annotations(spec)
            job = gateway.submit(frame, spec, backend,
                                 body.get("prompt_override"))
            if job.status == "succeeded":
                gateway.fetch_artifacts(job.job_id)
        except (SceneError, gw.GatewayError) as exc:
            return _error(500, getattr(exc, "code", "INTERNAL"), str(exc))
        return JSONResponse(status_code=201, content=job.to_doc())

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        try:
            job = gateway.poll(job_id)
        except gw.GatewayError as exc:
            return _error(404, exc.code, str(exc))
        return JSONResponse(content=job.to_doc())

    @app.get("/api/jobs/{job_id}/artifacts")
    def get_artifacts(job_id: str):
        try:
            manifest = gateway.fetch_artifacts(job_id)
        except gw.GatewayError as exc:
            status = 404 if exc.code == "UNKNOWN_JOB" else 409
            return _error(status, exc.code, str(exc))
        return JSONResponse(content=manifest)

    @app.post("/api/judgments")
    async def post_judgment(request: Request):
        try:
            body = json.loads(await request.body())
        except ValueError:
            return _error(400, "MALFORMED", "body must be JSON")
        experiment = body.pop("experiment", "default")
        required = {"job_id", "instruction_id", "rater_id", "verdict"}
        missing = required - set(body)
        if missing:
            return _error(400, "MISSING_FIELD",
                          f"missing fields: {sorted(missing)}")
        try:
            judgment = ev.Judgment(
                job_id=str(body["job_id"]),
                instruction_id=str(body["instruction_id"]),
                rater_id=str(body["rater_id"]),
                verdict=str(body["verdict"]),
                timestamp=str(body.get("timestamp", "")),
            )
        except ValueError as exc:
            return _error(400, "RANGE", str(exc))
        if not judgments.append(experiment, judgment):
            return _error(409, "DUPLICATE_JUDGMENT",
                          "a verdict for this (job, instruction, rater) exists")
        return JSONResponse(status_code=201, content={"recorded": True,
                                                      "experiment": experiment})

    @app.get("/api/reports/success-rate")
    def get_report(experiment: str = "default"):
        rows = judgments.load(experiment)
        if not rows:
            return _error(404, "EMPTY_GROUP",
                          f"no judgments recorded for experiment {experiment!r}")
        methods = {job.job_id: job.backend_id for job in gateway.list_jobs()}
        report = ev.success_rate_report(rows, methods)
        return JSONResponse(content=report.to_doc())

    if ui_dir and os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="studio")

    return app
