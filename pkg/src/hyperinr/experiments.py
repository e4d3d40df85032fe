"""Task wiring: turns one ExperimentConfig into training sets, teachers,
atlases, models, reference fields, per-engine field evaluation, and metric
rows. The CLI and the HTTP service both call through here, so a number
reported by one is bit-identical to the other.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .config import ExperimentConfig
from .datasets import dgs_density, synth_dgs, synth_nvs, synth_tsr
from .fields import ImageRGB, ScalarField, grid_coordinates
from .hypernet import (
    EncoderAtlas,
    HyperINRModel,
    assemble_inr,
    eval_inr,
)
from .metrics import metric_report
from .networks import (
    CoordNet,
    CoordNetConfig,
    MLPConfig,
    SynthesisMLP,
    init_hash_encoder,
    init_mlp,
    init_siren,
)
from .numerics import Rng
from .renderer import (
    Camera,
    DirectionalLight,
    ShadowMode,
    TransferFunction,
    field_sampler,
    raymarch,
)
from .sampling import SamplingPlan, compose_plan
from .training import DistillationSet, TrainingSet, lerp_baseline

__all__ = [
    "reference_field",
    "build_training_set",
    "teacher_config",
    "new_teacher",
    "atlas_positions",
    "distill_positions",
    "new_model",
    "held_out_thetas",
    "field_for_engine",
    "render_field",
    "eval_metrics",
    "default_camera",
    "ENGINES",
]

ENGINES = ("hyperinr", "lerp", "reference")


def reference_field(cfg: ExperimentConfig, theta_native: np.ndarray):
    """Analytic ground truth at any parameter value."""
    theta = np.atleast_1d(np.asarray(theta_native, dtype=np.float64))
    if cfg.task == "tsr":
        return synth_tsr(float(theta[0]), cfg.coord_dims)
    if cfg.task == "nvs":
        return synth_nvs((float(theta[0]), float(theta[1])), cfg.coord_dims[0])
    return synth_dgs((float(theta[0]), float(theta[1])), cfg.coord_dims)


def _grid_2d(space, count: int) -> np.ndarray:
    """Deterministic near-square grid of native parameter vectors, strictly
    inside the bounds on the ends so views/lights stay well-posed."""
    rows = max(2, int(np.floor(np.sqrt(count))))
    cols = int(np.ceil(count / rows))
    a = np.linspace(0.02, 0.98, rows)
    b = np.linspace(0.02, 0.98, cols)
    grid = np.stack(np.meshgrid(a, b, indexing="ij"), axis=-1).reshape(-1, 2)
    return np.stack([space.denormalize(g) for g in grid[:count]])


def build_training_set(cfg: ExperimentConfig) -> TrainingSet:
    count = int(cfg.dataset["train_count"])
    if cfg.task == "tsr":
        ts = np.linspace(0.0, 1.0, count)
        thetas = [tuple(cfg.space.denormalize([t])) for t in ts]
    else:
        thetas = [tuple(t) for t in _grid_2d(cfg.space, count)]
    fields = [reference_field(cfg, np.asarray(t)) for t in thetas]
    return TrainingSet(cfg.space, thetas, fields)


def teacher_config(cfg: ExperimentConfig) -> CoordNetConfig:
    t = cfg.teacher
    return CoordNetConfig(
        in_dim=len(cfg.coord_dims) + cfg.space.dim,
        out_dim=cfg.out_dim,
        width=int(t["width"]),
        encoder_blocks=int(t["encoder_blocks"]),
        trunk_blocks=int(t["trunk_blocks"]),
        decoder_blocks=int(t["decoder_blocks"]),
    )


def new_teacher(cfg: ExperimentConfig, rng: Rng | None = None) -> CoordNet:
    net = CoordNet.zeros(teacher_config(cfg))
    return init_siren(net, rng or Rng(cfg.seed).spawn("teacher-init"))


def _plan_points(cfg: ExperimentConfig, plan: list[dict], stream: str, training=None):
    strategies = []
    for s in plan:
        s = dict(s)
        if s.get("anchors") == "train":
            if training is None:
                raise ValueError("plan references training anchors; none given")
            s["anchors"] = training.normalized_thetas().tolist()
        strategies.append(s)
    tag = hashlib.sha256(f"{cfg.seed}:{stream}".encode()).digest()
    sp = SamplingPlan(
        dim=cfg.space.dim,
        strategies=tuple(strategies),
        seed=int.from_bytes(tag[:8], "little"),
    )
    return np.clip(compose_plan(sp), 0.0, 1.0)


def atlas_positions(cfg: ExperimentConfig, training=None) -> np.ndarray:
    """Normalized encoder positions from the configured plan."""
    return _plan_points(cfg, cfg.atlas["plan"], "atlas-plan", training)


def distill_positions(cfg: ExperimentConfig, training=None) -> np.ndarray:
    """Normalized distillation parameters from the configured plan."""
    return _plan_points(cfg, cfg.distill["plan"], "distill-plan", training)


def new_model(
    cfg: ExperimentConfig, positions: np.ndarray, rng: Rng | None = None
) -> HyperINRModel:
    """Fresh atlas (uniform table init per encoder, in position order) and
    He-initialized shared MLP."""
    from .hash_encoding import HashEncoder

    rng = rng or Rng(cfg.seed).spawn("model-init")
    encoders = []
    for _ in range(positions.shape[0]):
        encoders.append(init_hash_encoder(HashEncoder.zeros(cfg.encoder), rng))
    atlas = EncoderAtlas(cfg.space, positions, encoders)
    mlp_cfg = MLPConfig(
        in_dim=cfg.encoder.out_dim,
        out_dim=cfg.out_dim,
        width=int(cfg.mlp["width"]),
        hidden=int(cfg.mlp["hidden"]),
    )
    mlp = init_mlp(SynthesisMLP.zeros(mlp_cfg), rng)
    return HyperINRModel(
        atlas=atlas,
        shared_mlp=mlp,
        k=int(cfg.distill["k"]),
        p=float(cfg.distill["p"]),
    )


def held_out_thetas(cfg: ExperimentConfig, training: TrainingSet, count: int = 8):
    """Evaluation parameters that are not training parameters: midpoints of
    consecutive training times in 1-D, seeded uniform draws otherwise."""
    if cfg.space.dim == 1:
        ts = sorted(t[0] for t in training.thetas)
        mids = [(a + b) / 2.0 for a, b in zip(ts, ts[1:])]
        step = max(1, len(mids) // count)
        return [np.array([m]) for m in mids[::step][:count]]
    rng = Rng(cfg.seed).spawn("held-out")
    unit = 0.05 + 0.9 * rng.uniform(size=(count, cfg.space.dim), dtype=np.float64)
    return [cfg.space.denormalize(u) for u in unit]


def evaluate_instance_field(cfg: ExperimentConfig, instance, chunk: int = 65536):
    """Sample an assembled INR over the task lattice into a field/image."""
    coords = grid_coordinates(cfg.coord_dims)
    out = np.empty((coords.shape[0], cfg.out_dim), dtype=np.float32)
    for lo in range(0, coords.shape[0], chunk):
        hi = min(lo + chunk, coords.shape[0])
        out[lo:hi] = eval_inr(instance, coords[lo:hi])
    out = np.clip(out, 0.0, 1.0)
    if cfg.task == "nvs":
        return ImageRGB(out.reshape(*cfg.coord_dims, 3))
    return ScalarField(out.reshape(cfg.coord_dims))


def field_for_engine(
    cfg: ExperimentConfig,
    engine: str,
    theta_native: np.ndarray,
    model: HyperINRModel | None = None,
    data=None,
):
    """(field, assemble_ms) for one engine at one parameter point. `data`
    backs the lerp engine (training or distillation set)."""
    if engine == "reference":
        return reference_field(cfg, theta_native), 0.0
    if engine == "lerp":
        if data is None:
            raise ValueError("lerp engine needs a stored dataset")
        return lerp_baseline(data, theta_native), 0.0
    if engine == "hyperinr":
        if model is None:
            raise ValueError("hyperinr engine needs a model")
        instance = assemble_inr(model, theta_native)
        return (
            evaluate_instance_field(cfg, instance),
            instance.provenance.assemble_ms,
        )
    raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")


def default_camera(width: int = 256, height: int = 256) -> Camera:
    return Camera(eye=(1.9, 1.35, 1.55), width=width, height=height)


def render_field(
    cfg: ExperimentConfig,
    fld,
    theta_native: np.ndarray,
    camera: Camera | None = None,
    tf: TransferFunction | None = None,
    step: float | None = None,
) -> ImageRGB:
    """Present a per-engine field as an image. Images pass through; volume
    tasks ray-march — dgs fields are shadow volumes, so they modulate the
    fixed density scene under the parameterized light."""
    if cfg.task == "nvs":
        return fld if isinstance(fld, ImageRGB) else ImageRGB(fld.values)
    camera = camera or default_camera()
    tf = tf or TransferFunction.default()
    step = step or 1.0 / 256.0
    if cfg.task == "dgs":
        from .datasets import spherical_direction

        theta = np.atleast_1d(np.asarray(theta_native, dtype=np.float64))
        light = DirectionalLight(
            direction=tuple(spherical_direction(theta[0], theta[1]))
        )
        density = dgs_density(cfg.coord_dims)
        mode = ShadowMode.shadow_inr(field_sampler(fld))
        return raymarch(field_sampler(density), camera, tf, light, mode, step)
    return raymarch(field_sampler(fld), camera, tf, step=step)


def eval_metrics(
    cfg: ExperimentConfig,
    thetas: list,
    model: HyperINRModel | None = None,
    data=None,
    engines: tuple[str, ...] = ("hyperinr", "lerp"),
) -> list[dict]:
    """One row per theta: PSNR/SSIM of each engine's field against the
    reference generator. Shared verbatim by CLI eval and POST /api/metrics."""
    rows = []
    for theta in thetas:
        theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
        truth, _ = field_for_engine(cfg, "reference", theta)
        row: dict = {"theta": [float(v) for v in theta]}
        for engine in engines:
            fld, _ = field_for_engine(cfg, engine, theta, model=model, data=data)
            report = metric_report(fld, truth)
            row[f"psnr_{engine}"] = report["psnr"]
            row[f"ssim_{engine}"] = report["ssim"]
        rows.append(row)
    return rows
