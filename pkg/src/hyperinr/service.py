"""HTTP exploration service.

Endpoints:
  GET  /api/space    — parameter space, atlas/training positions, engines
  POST /api/render   — assemble + render one frame; PNG body with
                       X-Assemble-Ms / X-Render-Ms timing headers
  POST /api/metrics  — PSNR/SSIM rows per theta, same code path as CLI eval

Errors: 400 malformed body, 422 out-of-bounds parameters or sizes, 503 when
no checkpoint is loaded. The model is read-only while serving; identical
requests produce identical bytes.
"""

from __future__ import annotations

import os
import time

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .config import ExperimentConfig
from .experiments import ENGINES, eval_metrics, field_for_engine, render_field
from .fields import encode_png
from .renderer import Camera, TransferFunction

__all__ = ["build_app"]

_MAX_IMAGE = 1024


class CameraSpec(BaseModel):
    eye: tuple[float, float, float]
    look_at: tuple[float, float, float] = (0.5, 0.5, 0.5)
    up: tuple[float, float, float] = (0.0, 0.0, 1.0)
    fov_deg: float = 45.0


class RenderRequest(BaseModel):
    theta: list[float]
    engine: str = "hyperinr"
    size: int = 256
    camera: CameraSpec | None = None
    tf_points: list | None = None
    shadow: str = "none"


class MetricsRequest(BaseModel):
    thetas: list[list[float]] = Field(default_factory=list)
    engines: list[str] = Field(default_factory=lambda: ["hyperinr", "lerp"])


class _State:
    def __init__(self, cfg: ExperimentConfig, model, training):
        self.cfg = cfg
        self.model = model
        self.training = training


def _check_theta(cfg: ExperimentConfig, theta: list[float]) -> np.ndarray:
    vec = np.asarray(theta, dtype=np.float64)
    if vec.shape != (cfg.space.dim,):
        raise HTTPException(
            422, f"expected {cfg.space.dim} parameters, got {len(theta)}"
        )
    lo = np.asarray(cfg.space.lower)
    hi = np.asarray(cfg.space.upper)
    if np.any(vec < lo) or np.any(vec > hi):
        raise HTTPException(
            422,
            f"parameters {theta} outside bounds "
            f"{list(zip(cfg.space.lower, cfg.space.upper))}",
        )
    return vec


def build_app(
    cfg: ExperimentConfig,
    model_path: str | None,
    data_dir: str | None = None,
    ui_dir: str | None = None,
) -> FastAPI:
    """Assemble the service around one checkpoint. `data_dir` is a gen-data
    output directory backing the lerp engine; when absent the training set
    is regenerated from the config (identical bytes either way)."""
    from .experiments import build_training_set
    from .training import TrainingSet

    model = None
    if model_path is not None:
        from .checkpoint import load_model

        model = load_model(model_path)
    if data_dir is not None:
        training = TrainingSet.load(os.path.join(data_dir, "train"))
    else:
        training = build_training_set(cfg)
    state = _State(cfg, model, training)

    app = FastAPI(title="inr-exploration-service")

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def require_model():
        if state.model is None:
            raise HTTPException(503, "no checkpoint loaded")

    @app.get("/api/space")
    def space() -> dict:
        require_model()
        cfg_ = state.cfg
        atlas = state.model.atlas
        positions = [
            [float(v) for v in cfg_.space.denormalize(p)] for p in atlas.positions
        ]
        return {
            "task": cfg_.task,
            "names": list(cfg_.space.names),
            "lower": list(cfg_.space.lower),
            "upper": list(cfg_.space.upper),
            "encoder_positions": positions,
            "training_positions": [list(t) for t in state.training.thetas],
            "engines": list(ENGINES),
            "atlas_size": len(atlas),
        }

    @app.post("/api/render")
    def render(req: RenderRequest) -> Response:
        require_model()
        cfg_ = state.cfg
        if req.engine not in ENGINES:
            raise HTTPException(422, f"engine must be one of {ENGINES}")
        if not 1 <= req.size <= _MAX_IMAGE:
            raise HTTPException(422, f"size must be in [1, {_MAX_IMAGE}]")
        theta = _check_theta(cfg_, req.theta)

        fld, assemble_ms = field_for_engine(
            cfg_, req.engine, theta, model=state.model, data=state.training
        )
        camera = None
        if req.camera is not None:
            camera = Camera(
                eye=req.camera.eye,
                look_at=req.camera.look_at,
                up=req.camera.up,
                fov_deg=req.camera.fov_deg,
                width=req.size,
                height=req.size,
            )
        elif cfg_.task != "nvs":
            from .experiments import default_camera

            camera = default_camera(req.size, req.size)
        tf = (
            TransferFunction.from_dict({"points": req.tf_points})
            if req.tf_points
            else None
        )
        t0 = time.perf_counter()
        img = render_field(cfg_, fld, theta, camera=camera, tf=tf)
        render_ms = (time.perf_counter() - t0) * 1e3
        return Response(
            content=encode_png(img),
            media_type="image/png",
            headers={
                "X-Assemble-Ms": f"{assemble_ms:.3f}",
                "X-Render-Ms": f"{render_ms:.3f}",
            },
        )

    @app.post("/api/metrics")
    def metrics(req: MetricsRequest) -> dict:
        require_model()
        cfg_ = state.cfg
        for engine in req.engines:
            if engine not in ("hyperinr", "lerp"):
                raise HTTPException(422, f"metrics engines are hyperinr/lerp, got {engine}")
        thetas = [_check_theta(cfg_, t) for t in req.thetas]
        rows = eval_metrics(
            cfg_,
            thetas,
            model=state.model,
            data=state.training,
            engines=tuple(req.engines),
        )
        # Equal images give +inf PSNR; strict JSON has no Infinity, so the
        # wire format carries null there.
        clean = [
            {
                k: (None if isinstance(v, float) and not np.isfinite(v) else v)
                for k, v in row.items()
            }
            for row in rows
        ]
        return {"task": cfg_.task, "rows": clean}

    ui = ui_dir or os.environ.get("HYPERINR_UI_DIR")
    if ui is None:
        guess = os.path.join(os.getcwd(), "frontend", "dist")
        ui = guess if os.path.isdir(guess) else None
    if ui and os.path.isdir(ui):
        app.mount("/", StaticFiles(directory=ui, html=True), name="ui")

    return app
