"""Uniform job interface over image-to-video generators.

Two backend kinds: the built-in interpreter (synchronous, deterministic)
and a generic HTTP adapter driven entirely by config (endpoint, request
template, JSON paths into the upstream response). Vendor specifics belong
in config, not code. The gateway also owns run persistence: every job gets
a content-addressed directory under runs/ holding the canonical scene, the
submitted frame, outputs, and a digest manifest.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
import secrets
import shutil
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Any, Optional

import requests

from . import interpreter
from .render import AnnotatedFrame
from .scene import SceneSpec, scene_hash
from .specio import serialize_scene

# The one global text prompt used for every generation unless overridden.
FIXED_PROMPT = "Follow the instructions step by step."

ENV_BACKEND_URL = "IVI_BACKEND_URL"
ENV_BACKEND_API_KEY = "IVI_BACKEND_API_KEY"
ENV_DATA_DIR = "IVI_DATA_DIR"
DEFAULT_DATA_DIR = "ivi_data"

_JOB_NAMESPACE = uuid.UUID("6b1b5ec1-7f05-4c6c-9e24-6a0d6a1f54d7")

JOB_STATUSES = ("queued", "running", "succeeded", "failed")
# Allowed transitions; status never regresses.
_NEXT = {"queued": {"running", "failed"}, "running": {"succeeded", "failed"},
         "succeeded": set(), "failed": set()}


class GatewayError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


def data_dir() -> str:
    return os.environ.get(ENV_DATA_DIR, DEFAULT_DATA_DIR)


def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class BackendConfig:
    """One generation backend; `kind` is "interpreter" or "http"."""
    id: str
    kind: str
    # http adapter
    endpoint: str = ""
    status_endpoint: str = ""  # template; {job_id} is the upstream id
    auth_header: str = "Authorization"
    api_key: str = ""
    timeout_s: float = 300.0
    poll_interval_s: float = 5.0
    max_retries: int = 3
    aspect_ratio: str = "16:9"
    resolution: str = "720p"
    duration_s: float = 5.0
    # JSON paths (dot separated) into upstream responses
    response_job_id_path: str = "job_id"
    response_status_path: str = "status"
    response_artifact_path: str = "artifact_url"
    status_map: dict = field(default_factory=lambda: {
        "queued": "queued", "pending": "queued", "submitted": "queued",
        "running": "running", "processing": "running",
        "succeeded": "succeeded", "success": "succeeded", "completed": "succeeded",
        "failed": "failed", "error": "failed",
    })
    # interpreter backend
    frames: int = 48
    fps: int = 12
    bake_annotations: bool = False

    def __post_init__(self):
        if self.kind not in ("interpreter", "http"):
            raise GatewayError("CONFIG_INVALID", f"unknown backend kind {self.kind!r}")
        if self.timeout_s <= 0:
            raise GatewayError("CONFIG_INVALID", "timeout_s must be > 0")
        if self.max_retries < 0:
            raise GatewayError("CONFIG_INVALID", "max_retries must be >= 0")
        if self.kind == "http" and not self.endpoint:
            raise GatewayError("CONFIG_INVALID", "http backend needs an endpoint")

    @classmethod
    def from_doc(cls, doc: dict) -> "BackendConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise GatewayError("CONFIG_INVALID", f"unknown backend fields {sorted(unknown)}")
        doc = dict(doc)
        doc.setdefault("endpoint", os.environ.get(ENV_BACKEND_URL, ""))
        doc.setdefault("api_key", os.environ.get(ENV_BACKEND_API_KEY, ""))
        return cls(**doc)

    def snapshot(self) -> dict:
        doc = {k: getattr(self, k) for k in self.__dataclass_fields__}
        doc["api_key"] = "***" if self.api_key else ""
        return doc


@dataclass
class GenerationJob:
    job_id: str
    scene_hash: str
    backend_id: str
    prompt: str
    status: str = "queued"
    created_at: str = ""
    updated_at: str = ""
    failure_reason: str = ""
    upstream_id: str = ""
    frames: int = 0
    fps: int = 0

    def to_doc(self) -> dict:
        return {
            "job_id": self.job_id, "scene_hash": self.scene_hash,
            "backend_id": self.backend_id, "prompt": self.prompt,
            "status": self.status, "created_at": self.created_at,
            "updated_at": self.updated_at, "failure_reason": self.failure_reason,
            "upstream_id": self.upstream_id, "frames": self.frames, "fps": self.fps,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "GenerationJob":
        return cls(**doc)


def _json_path(doc: Any, path: str) -> Any:
    node = doc
    for part in path.split("."):
        if not part:
            continue
        if isinstance(node, dict) and part in node:
            node = node[part]
        else:
            return None
    return node


class Gateway:
    """Job submission, polling, and artifact retrieval with run persistence."""

    def __init__(self, base_dir: Optional[str] = None, max_parallel_jobs: int = 4):
        self.base_dir = base_dir or data_dir()
        self.runs_dir = os.path.join(self.base_dir, "runs")
        os.makedirs(self.runs_dir, exist_ok=True)
        self._write_lock = threading.Lock()
        self._http_slots = threading.Semaphore(max_parallel_jobs)

    # -- persistence -------------------------------------------------------

    def run_dir(self, job_id: str) -> str:
        return os.path.join(self.runs_dir, job_id)

    def _save_job(self, job: GenerationJob) -> None:
        with self._write_lock:
            job.updated_at = _utcnow()
            path = os.path.join(self.run_dir(job.job_id), "job.json")
            tmp = path + ".tmp"
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(job.to_doc(), fh, sort_keys=True, indent=2)
            os.replace(tmp, path)

    def _load_job(self, job_id: str) -> GenerationJob:
        path = os.path.join(self.run_dir(job_id), "job.json")
        if not os.path.isfile(path):
            raise GatewayError("UNKNOWN_JOB", f"no job {job_id!r}")
        with open(path, encoding="utf-8") as fh:
            return GenerationJob.from_doc(json.load(fh))

    def _transition(self, job: GenerationJob, status: str,
                    failure_reason: str = "") -> None:
        if status not in _NEXT.get(job.status, set()):
            raise GatewayError("CONFIG_INVALID",
                               f"illegal status transition {job.status} -> {status}")
        job.status = status
        job.failure_reason = failure_reason
        self._save_job(job)

    def list_jobs(self) -> list[GenerationJob]:
        out = []
        if os.path.isdir(self.runs_dir):
            for name in sorted(os.listdir(self.runs_dir)):
                if os.path.isfile(os.path.join(self.runs_dir, name, "job.json")):
                    out.append(self._load_job(name))
        return out

    # -- operations --------------------------------------------------------

    def submit(self, frame: AnnotatedFrame, spec: SceneSpec, backend: BackendConfig,
               prompt_override: Optional[str] = None) -> GenerationJob:
        """Persist a new job and hand it to the backend.

        The stored prompt is exactly the fixed protocol prompt unless an
        override is given. The interpreter backend completes synchronously;
        http submission failures surface as a failed job after
        max_retries + 1 attempts.
        """
        digest = scene_hash(spec)
        nonce = secrets.token_hex(8)
        job_id = str(uuid.uuid5(_JOB_NAMESPACE, f"{digest}:{backend.id}:{nonce}"))
        run_dir = self.run_dir(job_id)
        os.makedirs(os.path.join(run_dir, "output"), exist_ok=True)
        with open(os.path.join(run_dir, "scene.ivi.json"), "wb") as fh:
            fh.write(serialize_scene(spec))
        with open(os.path.join(run_dir, "input.png"), "wb") as fh:
            fh.write(frame.png_bytes())
        with open(os.path.join(run_dir, "input_mask.png"), "wb") as fh:
            fh.write(frame.mask_png_bytes())
        with open(os.path.join(run_dir, "backend.json"), "w", encoding="utf-8") as fh:
            json.dump(backend.snapshot(), fh, sort_keys=True, indent=2)

        job = GenerationJob(
            job_id=job_id, scene_hash=digest, backend_id=backend.id,
            prompt=prompt_override if prompt_override is not None else FIXED_PROMPT,
            created_at=_utcnow(),
            frames=backend.frames, fps=backend.fps,
        )
        self._save_job(job)

        if backend.kind == "interpreter":
            self._run_interpreter(job, spec, backend)
        else:
            self._submit_http(job, backend)
        return job

    def _run_interpreter(self, job: GenerationJob, spec: SceneSpec,
                         backend: BackendConfig) -> None:
        self._transition(job, "running")
        try:
            result = interpreter.simulate(spec, frames=backend.frames, fps=backend.fps,
                                          bake_annotations=backend.bake_annotations)
            interpreter.write_run(result, os.path.join(self.run_dir(job.job_id), "output"))
        except interpreter.SimulationError as exc:
            self._transition(job, "failed", failure_reason=exc.code)
            return
        self._transition(job, "succeeded")

    def _submit_http(self, job: GenerationJob, backend: BackendConfig) -> None:
        self._transition(job, "running")
        png_path = os.path.join(self.run_dir(job.job_id), "input.png")
        fields = {
            "prompt": job.prompt,
            "duration_s": backend.duration_s,
            "resolution": backend.resolution,
            "aspect_ratio": backend.aspect_ratio,
        }
        headers = {}
        if backend.api_key:
            headers[backend.auth_header] = backend.api_key
        attempts = backend.max_retries + 1
        with self._http_slots:
            for attempt in range(attempts):
                try:
                    with open(png_path, "rb") as fh:
                        resp = requests.post(
                            backend.endpoint,
                            files={"image": ("input.png", fh, "image/png")},
                            data={k: str(v) for k, v in fields.items()},
                            headers=headers,
                            timeout=backend.timeout_s,
                        )
                    resp.raise_for_status()
                    doc = resp.json()
                    job.upstream_id = str(_json_path(doc, backend.response_job_id_path) or "")
                    self._save_job(job)
                    return
                except (requests.RequestException, ValueError):
                    if attempt < attempts - 1:
                        time.sleep(min(backend.poll_interval_s, 0.05))
        self._transition(job, "failed", failure_reason="BACKEND_UNREACHABLE")

    def poll(self, job_id: str, backend: Optional[BackendConfig] = None) -> GenerationJob:
        """Latest persisted status; one upstream request for in-flight http jobs."""
        job = self._load_job(job_id)
        if job.status in ("succeeded", "failed") or backend is None \
                or backend.kind != "http" or not job.upstream_id:
            return job
        url = backend.status_endpoint.format(job_id=job.upstream_id) \
            if backend.status_endpoint else f"{backend.endpoint}/{job.upstream_id}"
        headers = {}
        if backend.api_key:
            headers[backend.auth_header] = backend.api_key
        try:
            resp = requests.get(url, headers=headers, timeout=backend.timeout_s)
            resp.raise_for_status()
            doc = resp.json()
        except (requests.RequestException, ValueError):
            return job  # transient; status unchanged
        upstream = str(_json_path(doc, backend.response_status_path) or "").lower()
        mapped = backend.status_map.get(upstream)
        if mapped and mapped != job.status:
            if mapped == "succeeded":
                url_value = _json_path(doc, backend.response_artifact_path)
                if url_value:
                    self._store_artifact_url(job, str(url_value))
            self._transition(job, mapped)
        return job

    def _store_artifact_url(self, job: GenerationJob, url: str) -> None:
        path = os.path.join(self.run_dir(job.job_id), "artifact_url.txt")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(url)

    def fetch_artifacts(self, job_id: str, dest_dir: Optional[str] = None,
                        backend: Optional[BackendConfig] = None) -> dict:
        """Materialize run outputs and write the digest manifest.

        Idempotent: a re-fetch verifies digests against the stored manifest
        and fails with DIGEST_MISMATCH if any artifact changed on disk.
        """
        job = self._load_job(job_id)
        if job.status != "succeeded":
            raise GatewayError("JOB_NOT_DONE", f"job {job_id} is {job.status}")
        run_dir = self.run_dir(job_id)
        out_dir = os.path.join(run_dir, "output")

        url_file = os.path.join(run_dir, "artifact_url.txt")
        if os.path.isfile(url_file) and not os.listdir(out_dir):
            self._download_artifact(url_file, out_dir, backend)

        manifest_path = os.path.join(run_dir, "manifest.json")
        if os.path.isfile(manifest_path):
            with open(manifest_path, encoding="utf-8") as fh:
                manifest = json.load(fh)
            for art in manifest["artifacts"]:
                path = os.path.join(out_dir, art["path"])
                if not os.path.isfile(path) or sha256_file(path) != art["sha256"]:
                    raise GatewayError("DIGEST_MISMATCH",
                                       f"artifact {art['path']} does not match its digest")
        else:
            artifacts = []
            for root, _dirs, files in os.walk(out_dir):
                for name in sorted(files):
                    full = os.path.join(root, name)
                    rel = os.path.relpath(full, out_dir)
                    artifacts.append({"path": rel.replace(os.sep, "/"),
                                      "sha256": sha256_file(full),
                                      "bytes": os.path.getsize(full)})
            artifacts.sort(key=lambda a: a["path"])
            with open(os.path.join(run_dir, "backend.json"), encoding="utf-8") as fh:
                config_snapshot = json.load(fh)
            manifest = {
                "job": job.to_doc(),
                "input_digest": sha256_file(os.path.join(run_dir, "input.png")),
                "artifacts": artifacts,
                "config": config_snapshot,
            }
            tmp = manifest_path + ".tmp"
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(manifest, fh, sort_keys=True, indent=2)
            os.replace(tmp, manifest_path)

        if dest_dir and os.path.abspath(dest_dir) != os.path.abspath(out_dir):
            os.makedirs(dest_dir, exist_ok=True)
            for art in manifest["artifacts"]:
                src = os.path.join(out_dir, art["path"])
                dst = os.path.join(dest_dir, art["path"])
                os.makedirs(os.path.dirname(dst) or ".", exist_ok=True)
                shutil.copyfile(src, dst)
        return manifest

    def _download_artifact(self, url_file: str, out_dir: str,
                           backend: Optional[BackendConfig]) -> None:
        with open(url_file, encoding="utf-8") as fh:
            url = fh.read().strip()
        headers = {}
        if backend and backend.api_key:
            headers[backend.auth_header] = backend.api_key
        timeout = backend.timeout_s if backend else 300.0
        resp = requests.get(url, headers=headers, timeout=timeout)
        resp.raise_for_status()
        name = os.path.basename(url.split("?")[0]) or "artifact.bin"
        with open(os.path.join(out_dir, name), "wb") as fh:
            fh.write(resp.content)


def load_backend_configs(path: Optional[str] = None) -> dict[str, BackendConfig]:
    """Backend registry: the built-in interpreter plus any configured http ones."""
    configs = {"interpreter": BackendConfig(id="interpreter", kind="interpreter")}
    if path and os.path.isfile(path):
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        for entry in doc.get("backends", []):
            cfg = BackendConfig.from_doc(entry)
            configs[cfg.id] = cfg
    return configs
