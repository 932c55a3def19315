"""The `ivi` command line: author, validate, render, simulate, generate,
evaluate, and report, wired so stages pipe into each other.

Piped stages exchange a JSON envelope on stdout: each command echoes the
scene document under "scene" and adds the artifacts it produced ("frame",
"run_dir"). Exit codes: 0 success, 1 validation or check failure, 2 usage
error, 3 backend or I/O failure.
"""

from __future__ import annotations

import json
import os
import sys

import click

from . import evaluate as ev
from . import gateway as gw
from . import interpreter as itp
from . import scenarios as sc
from .render import StyleConfig, decode_png, render_annotations
from .scene import SceneError, scene_hash, validate_scene
from .specio import SceneParseError, parse_scene, serialize_scene

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_BACKEND = 3


def _read_scene_input(scene_arg):
    """Scene from file path, or from the stdin envelope when piped."""
    if scene_arg and scene_arg != "-":
        with open(scene_arg, "rb") as fh:
            raw = fh.read()
    else:
        raw = sys.stdin.buffer.read()
    envelope = {}
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError):
        doc = None
    if isinstance(doc, dict) and "scene" in doc and "spec_version" not in doc:
        envelope = doc
        raw = json.dumps(doc["scene"]).encode("utf-8")
    return parse_scene(raw), envelope


def _emit(envelope: dict) -> None:
    sys.stdout.write(json.dumps(envelope, sort_keys=True) + "\n")


def _fail(code: int, message: str):
    click.echo(message, err=True)
    sys.exit(code)


def _scene_doc(spec) -> dict:
    return json.loads(serialize_scene(spec).decode("utf-8"))


def _load_style(style_path) -> StyleConfig:
    if not style_path:
        return StyleConfig()
    with open(style_path, encoding="utf-8") as fh:
        return StyleConfig.from_doc(json.load(fh))


@click.group()
def main():
    """Author and evaluate in-frame visual instructions for video generation."""


@main.command("validate")
@click.argument("scene", required=False)
@click.option("--json", "as_json", is_flag=True, help="machine-readable report")
def cmd_validate(scene, as_json):
    """Validate a scene document and print its report."""
    try:
        spec, _ = _read_scene_input(scene)
    except SceneParseError as exc:
        if as_json:
            _emit({"errors": [{"severity": "error", "code": exc.code,
                               "path": exc.json_path, "message": exc.message}]})
        else:
            click.echo(f"error {exc.code} at {exc.json_path}: {exc.message}")
        sys.exit(EXIT_DOMAIN)
    except OSError as exc:
        _fail(EXIT_BACKEND, f"cannot read scene: {exc}")
    report = validate_scene(spec)
    if as_json:
        _emit({"ok": report.ok, "issues": report.to_doc(),
               "scene_hash": scene_hash(spec) if report.ok else None})
    else:
        for issue in report.issues:
            click.echo(f"{issue.severity} {issue.code} at {issue.path}: {issue.message}")
        if report.ok:
            click.echo(f"ok {scene_hash(spec)}")
    sys.exit(EXIT_OK if report.ok else EXIT_DOMAIN)


@main.command("render")
@click.argument("scene", required=False)
@click.option("-o", "--out", default="annotated.png", show_default=True)
@click.option("--style", "style_path", default=None, help="style overrides JSON")
@click.option("--mask", "mask_out", default=None, help="write the annotation mask PNG")
def cmd_render(scene, out, style_path, mask_out):
    """Render the annotated frame to PNG (plus optional mask)."""
    try:
        spec, envelope = _read_scene_input(scene)
        frame = render_annotations(spec, _load_style(style_path))
    except (SceneParseError, SceneError) as exc:
        _fail(EXIT_DOMAIN, str(exc))
    except OSError as exc:
        _fail(EXIT_BACKEND, f"render failed: {exc}")
    with open(out, "wb") as fh:
        fh.write(frame.png_bytes())
    if mask_out:
        with open(mask_out, "wb") as fh:
            fh.write(frame.mask_png_bytes())
    envelope.update({"scene": _scene_doc(spec), "frame": out})
    _emit(envelope)
    sys.exit(EXIT_OK)


@main.command("simulate")
@click.argument("scene", required=False)
@click.option("--frames", default=48, show_default=True)
@click.option("--fps", default=12, show_default=True)
@click.option("--bake-annotations", is_flag=True,
              help="keep annotation ink stamped on every simulated frame")
@click.option("-o", "--out", "out_dir", default=None,
              help="run directory [default: <data-dir>/sim-<hash12>]")
def cmd_simulate(scene, frames, fps, bake_annotations, out_dir):
    """Execute the scene in the reference interpreter and write a run dir."""
    try:
        spec, envelope = _read_scene_input(scene)
    except SceneParseError as exc:
        _fail(EXIT_DOMAIN, str(exc))
    except OSError as exc:
        _fail(EXIT_BACKEND, f"cannot read scene: {exc}")
    if out_dir is None:
        out_dir = os.path.join(gw.data_dir(), f"sim-{scene_hash(spec)[:12]}")
    try:
        result = itp.simulate(spec, frames=frames, fps=fps,
                              bake_annotations=bake_annotations)
    except itp.SimulationError as exc:
        _fail(EXIT_DOMAIN, str(exc))
    os.makedirs(out_dir, exist_ok=True)
    itp.write_run(result, out_dir)
    with open(os.path.join(out_dir, "scene.ivi.json"), "wb") as fh:
        fh.write(serialize_scene(spec))
    annotated = render_annotations(spec)
    with open(os.path.join(out_dir, "input.png"), "wb") as fh:
        fh.write(annotated.png_bytes())
    with open(os.path.join(out_dir, "input_mask.png"), "wb") as fh:
        fh.write(annotated.mask_png_bytes())
    envelope.update({"scene": _scene_doc(spec), "run_dir": out_dir})
    _emit(envelope)
    sys.exit(EXIT_OK)


@main.command("generate")
@click.argument("scene", required=False)
@click.option("--backend", "backend_id", default="interpreter", show_default=True)
@click.option("--config", "config_path", default=None, help="backends JSON registry")
@click.option("--prompt", "prompt_override", default=None,
              help="override the fixed generation prompt")
@click.option("-o", "--out", "data_dir_opt", default=None, help="data directory for runs/")
def cmd_generate(scene, backend_id, config_path, prompt_override, data_dir_opt):
    """Submit the rendered frame to a generation backend."""
    try:
        spec, envelope = _read_scene_input(scene)
    except SceneParseError as exc:
        _fail(EXIT_DOMAIN, str(exc))
    except OSError as exc:
        _fail(EXIT_BACKEND, f"cannot read scene: {exc}")
    try:
        backends = gw.load_backend_configs(config_path)
        backend = backends.get(backend_id)
        if backend is None:
            _fail(EXIT_USAGE, f"unknown backend {backend_id!r}; "
                              f"configured: {sorted(backends)}")
        frame = render_annotations(spec)
        gateway = gw.Gateway(data_dir_opt)
        job = gateway.submit(frame, spec, backend, prompt_override)
        if job.status == "succeeded":
            gateway.fetch_artifacts(job.job_id)
    except (SceneError, gw.GatewayError) as exc:
        _fail(EXIT_BACKEND, str(exc))
    envelope.update({"scene": _scene_doc(spec), "job": job.to_doc(),
                     "run_dir": gateway.run_dir(job.job_id)})
    _emit(envelope)
    sys.exit(EXIT_OK if job.status == "succeeded" else EXIT_BACKEND)


def _find_run_file(run_dir: str, name: str):
    for candidate in (os.path.join(run_dir, name), os.path.join(run_dir, "output", name)):
        if os.path.isfile(candidate):
            return candidate
    return None


def _load_run(run_dir: str, tracks_override):
    with open(os.path.join(run_dir, "scene.ivi.json"), "rb") as fh:
        spec = parse_scene(fh.read())
    tracks_path = tracks_override or _find_run_file(run_dir, "tracks.json")
    if not tracks_path:
        raise FileNotFoundError("tracks.json not found in run dir")
    with open(tracks_path, encoding="utf-8") as fh:
        tracks = itp.tracks_from_doc(json.load(fh))
    camera = None
    camera_path = _find_run_file(run_dir, "camera.json")
    if camera_path:
        with open(camera_path, encoding="utf-8") as fh:
            camera = itp.camera_from_doc(json.load(fh))
    timeline_path = _find_run_file(run_dir, "timeline.json")
    if timeline_path:
        with open(timeline_path, encoding="utf-8") as fh:
            timeline = itp.timeline_from_doc(json.load(fh))
    else:
        frames = len(next(iter(tracks.values())).poses) if tracks else 2
        timeline = itp.schedule_instructions(spec, frames)
    return spec, tracks, camera, timeline


def _load_persistence_inputs(run_dir: str):
    input_path = os.path.join(run_dir, "input.png")
    mask_path = os.path.join(run_dir, "input_mask.png")
    frames_dir = _find_run_file(run_dir, "frames") or (
        os.path.join(run_dir, "frames") if os.path.isdir(os.path.join(run_dir, "frames"))
        else os.path.join(run_dir, "output", "frames"))
    if not (os.path.isfile(input_path) and os.path.isfile(mask_path)
            and os.path.isdir(frames_dir)):
        return None, None, None
    frame_files = sorted(os.listdir(frames_dir))
    if not frame_files:
        return None, None, None
    with open(input_path, "rb") as fh:
        input_pixels = decode_png(fh.read())
    with open(mask_path, "rb") as fh:
        mask = decode_png(fh.read())[:, :, 0] > 127
    with open(os.path.join(frames_dir, frame_files[-1]), "rb") as fh:
        last = decode_png(fh.read())
    return input_pixels, mask, last


@main.command("evaluate")
@click.argument("run_dir", required=False)
@click.option("--checks", default="direction,path,order,stationary,camera",
              show_default=True, help="comma-separated check names")
@click.option("--tracks", "tracks_path", default=None,
              help="external tracks.json overriding the run's own")
@click.option("--report", "report_out", default=None, help="write results JSON here")
@click.option("--path-tol", default=ev.PATH_TOL_INTERPRETER_PX, show_default=True)
@click.option("--direction-threshold", default=ev.DIRECTION_THRESHOLD, show_default=True)
@click.option("--stationary-eps", default=ev.STATIONARY_EPS_PX, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def cmd_evaluate(run_dir, checks, tracks_path, report_out, path_tol,
                 direction_threshold, stationary_eps, as_json):
    """Run instruction-following checks against a run directory."""
    if not run_dir:
        try:
            envelope = json.loads(sys.stdin.read())
            run_dir = envelope.get("run_dir")
        except ValueError:
            run_dir = None
    if not run_dir or not os.path.isdir(run_dir):
        _fail(EXIT_USAGE, "evaluate needs a run directory (argument or piped envelope)")
    check_names = tuple(c.strip() for c in checks.split(",") if c.strip())
    try:
        spec, tracks, camera, timeline = _load_run(run_dir, tracks_path)
    except (OSError, SceneParseError, KeyError) as exc:
        _fail(EXIT_BACKEND, f"cannot load run: {exc}")
    input_pixels = mask = last = None
    if "persistence" in check_names:
        input_pixels, mask, last = _load_persistence_inputs(run_dir)
    try:
        results = ev.evaluate_run(
            spec, tracks, camera, timeline, checks=check_names,
            input_pixels=input_pixels, input_mask=mask, last_frame=last,
            path_tol_px=path_tol, direction_threshold=direction_threshold,
            stationary_eps_px=stationary_eps)
    except ev.EvalError as exc:
        _fail(EXIT_DOMAIN, str(exc))
    doc = {"run_dir": run_dir, "results": [r.to_doc() for r in results],
           "all_pass": all(r.passed for r in results)}
    if report_out:
        with open(report_out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
    if as_json:
        _emit(doc)
    else:
        for r in results:
            status = "pass" if r.passed else "FAIL"
            subject = f" [{r.instruction_id}]" if r.instruction_id else ""
            click.echo(f"{status} {r.check}{subject} score={r.score:.6g} {r.details}")
        click.echo("all checks passed" if doc["all_pass"] else "checks failed")
    sys.exit(EXIT_OK if doc["all_pass"] else EXIT_DOMAIN)


@main.command("report")
@click.argument("judgments_csv")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text",
              show_default=True)
@click.option("--methods", "methods_path", default=None,
              help="JSON mapping of job_id to method label")
@click.option("--runs-dir", default=None,
              help="resolve methods from job records under this data dir")
def cmd_report(judgments_csv, fmt, methods_path, runs_dir):
    """Aggregate a judgments CSV into a success-rate table."""
    try:
        with open(judgments_csv, encoding="utf-8") as fh:
            judgments = ev.read_judgments_csv(fh.read())
    except OSError as exc:
        _fail(EXIT_BACKEND, f"cannot read judgments: {exc}")
    except (ev.EvalError, ValueError) as exc:
        _fail(EXIT_DOMAIN, str(exc))
    methods = {}
    if methods_path:
        with open(methods_path, encoding="utf-8") as fh:
            methods = json.load(fh)
    elif runs_dir or os.path.isdir(os.path.join(gw.data_dir(), "runs")):
        gateway = gw.Gateway(runs_dir or gw.data_dir())
        methods = {job.job_id: job.backend_id for job in gateway.list_jobs()}
    try:
        report = ev.success_rate_report(judgments, methods)
    except ev.EvalError as exc:
        _fail(EXIT_DOMAIN, str(exc))
    if fmt == "json":
        _emit(report.to_doc())
    else:
        click.echo(report.to_text())
    sys.exit(EXIT_OK)


@main.command("scenario")
@click.argument("kind", type=click.Choice(sc.TEMPLATE_KINDS))
@click.option("--objects", default=3, show_default=True)
@click.option("--index", default=1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--canvas", default="640x480", show_default=True)
@click.option("--camera", default="zoom_in", show_default=True)
@click.option("--action", default="jump", show_default=True)
@click.option("--baseline-prompt", is_flag=True,
              help="print the positional text-prompt paraphrase instead")
@click.option("-o", "--out", default=None, help="write scene here instead of stdout")
def cmd_scenario(kind, objects, index, seed, canvas, camera, action,
                 baseline_prompt, out):
    """Generate a fixture scene for one experimental configuration."""
    try:
        w, h = (int(v) for v in canvas.lower().split("x"))
    except ValueError:
        _fail(EXIT_USAGE, f"--canvas must look like 640x480, got {canvas!r}")
    try:
        template = sc.ScenarioTemplate(kind=kind, objects=objects, index=index,
                                       canvas=(w, h), seed=seed, camera=camera,
                                       action=action)
        if baseline_prompt:
            click.echo(sc.text_baseline_prompt(template))
            sys.exit(EXIT_OK)
        spec = sc.instantiate(template)
        data = serialize_scene(spec)
    except sc.TemplateError as exc:
        _fail(EXIT_USAGE, str(exc))
    except SceneError as exc:
        _fail(EXIT_DOMAIN, str(exc))
    if out:
        with open(out, "wb") as fh:
            fh.write(data)
        click.echo(out)
    else:
        sys.stdout.buffer.write(data + b"\n")
    sys.exit(EXIT_OK)


@main.command("serve")
@click.option("--port", default=8787, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", "data_dir_opt", default=None)
@click.option("--ui-dir", default=None,
              help="serve the built studio UI from this directory at /")
def cmd_serve(port, host, data_dir_opt, ui_dir):
    """Run the local HTTP API for the studio UI and scripts."""
    import uvicorn

    from .service import create_app

    app = create_app(data_dir_opt or gw.data_dir(), ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
