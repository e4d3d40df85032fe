"""Command-line pipeline driver.

Subcommands mirror the pipeline stages: gen-data, train-teacher,
build-distill, distill, eval, render, bake-shadows, serve. Every command is
deterministic given identical inputs and seed — artifacts carry no
timestamps. Exit codes: 0 success, 2 configuration error, 3 divergence.
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from .config import ConfigError, ExperimentConfig, default_config, load_config, save_config

_EXIT_CONFIG = 2
_EXIT_DIVERGED = 3


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _resolve_config(config_path: str | None, task: str | None, seed: int | None) -> ExperimentConfig:
    try:
        if config_path:
            cfg = load_config(config_path)
        elif task:
            cfg = default_config(task)
        else:
            raise ConfigError("pass --config PATH or --task {tsr,nvs,dgs}")
    except (ConfigError, OSError, ValueError) as e:
        _fail(str(e), _EXIT_CONFIG)
    if seed is not None:
        cfg.seed = seed
    return cfg


def _parse_theta(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=np.float64)
    except ValueError:
        _fail(f"cannot parse parameter vector {text!r}", _EXIT_CONFIG)


def _config_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="Experiment config JSON.")(fn)
    fn = click.option("--task", type=click.Choice(["tsr", "nvs", "dgs"]), default=None,
                      help="Use built-in defaults for this task.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Override config seed.")(fn)
    return fn


@click.group()
@click.option("--device-threads", type=int, default=None,
              help="Cap math-library threads (best effort; set before heavy work).")
def main(device_threads: int | None) -> None:
    """Hypernetwork-assembled INR pipeline."""
    if device_threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(device_threads)


@main.command("gen-data")
@_config_options
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
def gen_data(config_path, task, seed, out) -> None:
    """Write the synthetic training set and the resolved config."""
    from .experiments import build_training_set

    cfg = _resolve_config(config_path, task, seed)
    training = build_training_set(cfg)
    os.makedirs(out, exist_ok=True)
    training.save(os.path.join(out, "train"))
    save_config(cfg, os.path.join(out, "config.json"))
    click.echo(f"wrote {len(training)} training fields to {out}/train")


@main.command("train-teacher")
@_config_options
@click.option("--data", "data_dir", type=click.Path(), default=None,
              help="gen-data output dir (default: regenerate from config).")
@click.option("--out", required=True, type=click.Path(), help="Teacher checkpoint path.")
@click.option("--epochs", type=int, default=None, help="Override teacher epochs.")
def train_teacher_cmd(config_path, task, seed, data_dir, out, epochs) -> None:
    """Fit the sinusoidal teacher on the training set."""
    from .checkpoint import save_teacher
    from .experiments import build_training_set, new_teacher
    from .numerics import Rng
    from .training import TrainingSet, train_teacher

    cfg = _resolve_config(config_path, task, seed)
    if data_dir:
        training = TrainingSet.load(os.path.join(data_dir, "train"))
    else:
        training = build_training_set(cfg)
    net = new_teacher(cfg)
    n_epochs = epochs if epochs is not None else int(cfg.teacher["epochs"])
    report = train_teacher(
        net,
        training,
        epochs=n_epochs,
        batch_size=int(cfg.teacher["batch"]),
        rng=Rng(cfg.seed).spawn("teacher-train"),
        lr=float(cfg.teacher["lr"]),
    )
    save_teacher(net, out)
    report.write_log(out + ".log.jsonl")
    last = report.losses[-1] if report.losses else float("nan")
    click.echo(f"teacher: {report.epochs} epochs, final loss {last:.6f}")
    if report.diverged:
        _fail("teacher training diverged", _EXIT_DIVERGED)


@main.command("build-distill")
@_config_options
@click.option("--teacher", "teacher_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Distillation-set directory.")
def build_distill(config_path, task, seed, teacher_path, out) -> None:
    """Evaluate the teacher over the distillation parameter plan."""
    from .checkpoint import load_teacher
    from .experiments import build_training_set, distill_positions
    from .training import build_distillation_set

    cfg = _resolve_config(config_path, task, seed)
    teacher = load_teacher(teacher_path)
    training = build_training_set(cfg)
    params = distill_positions(cfg, training)
    build_distillation_set(teacher, cfg.space, params, cfg.coord_dims, out_dir=out)
    click.echo(f"wrote {len(params)} teacher fields to {out}")


@main.command("distill")
@_config_options
@click.option("--distill-set", "dset_dir", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Model checkpoint path.")
@click.option("--epochs", type=int, default=None, help="Override distill epochs.")
def distill_cmd(config_path, task, seed, dset_dir, out, epochs) -> None:
    """Distill the hypernetwork from the teacher's fields."""
    from .checkpoint import save_model
    from .experiments import atlas_positions, build_training_set, new_model
    from .numerics import Rng
    from .training import DistillationSet, distill_hyperinr

    cfg = _resolve_config(config_path, task, seed)
    dset = DistillationSet.load(dset_dir)
    training = build_training_set(cfg)
    model = new_model(cfg, atlas_positions(cfg, training))
    n_epochs = epochs if epochs is not None else int(cfg.distill["epochs"])
    report = distill_hyperinr(
        model,
        dset,
        epochs=n_epochs,
        batch=int(cfg.distill["batch"]),
        rng=Rng(cfg.seed).spawn("distill-train"),
        lr=float(cfg.distill["lr"]),
    )
    save_model(model, out)
    report.write_log(out + ".log.jsonl")
    last = report.losses[-1] if report.losses else float("nan")
    click.echo(
        f"distilled {len(model.atlas)} encoders: {report.epochs} epochs, "
        f"final loss {last:.6f}"
    )
    if report.diverged:
        _fail("distillation diverged", _EXIT_DIVERGED)


@main.command("eval")
@_config_options
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--thetas", default=None,
              help="Semicolon-separated parameter vectors, e.g. '0.1;0.5;0.9'.")
@click.option("--held-out", "held_out_count", type=int, default=8,
              help="Number of held-out parameters when --thetas is absent.")
@click.option("--out", type=click.Path(), default=None, help="Metrics JSON path.")
def eval_cmd(config_path, task, seed, model_path, thetas, held_out_count, out) -> None:
    """Score hyperinr and lerp against the reference generator."""
    from .checkpoint import load_model
    from .experiments import build_training_set, eval_metrics, held_out_thetas

    cfg = _resolve_config(config_path, task, seed)
    model = load_model(model_path)
    training = build_training_set(cfg)
    if thetas:
        points = [_parse_theta(part) for part in thetas.split(";") if part]
    else:
        points = held_out_thetas(cfg, training, held_out_count)
    rows = eval_metrics(cfg, points, model=model, data=training)
    table = {"task": cfg.task, "rows": rows}
    text = json.dumps(table, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as f:
            f.write(text)
    header = f"{'theta':24s} {'psnr_hyper':>10s} {'psnr_lerp':>10s} {'ssim_hyper':>10s} {'ssim_lerp':>10s}"
    click.echo(header)
    for r in rows:
        theta_s = ",".join(f"{v:.4f}" for v in r["theta"])
        click.echo(
            f"{theta_s:24s} {r['psnr_hyperinr']:10.3f} {r['psnr_lerp']:10.3f} "
            f"{r['ssim_hyperinr']:10.4f} {r['ssim_lerp']:10.4f}"
        )


@main.command("render")
@_config_options
@click.option("--model", "model_path", type=click.Path(), default=None)
@click.option("--field", "field_path", type=click.Path(), default=None,
              help="Render a raw field file directly (no network).")
@click.option("--engine", type=click.Choice(["hyperinr", "lerp", "reference"]),
              default="hyperinr")
@click.option("--theta", default="0.5", help="Comma-separated parameter vector.")
@click.option("--size", type=int, default=256)
@click.option("--shadow", type=click.Choice(["none", "secondary"]), default="none")
@click.option("--out", required=True, type=click.Path())
def render_cmd(config_path, task, seed, model_path, field_path, engine, theta,
               size, shadow, out) -> None:
    """Render a frame to PNG (or PPM by extension)."""
    from .fields import load_field, save_image
    from .renderer import Camera, ShadowMode, TransferFunction, field_sampler, raymarch

    theta_vec = _parse_theta(theta)
    if field_path:
        fld = load_field(field_path)
        cam = Camera(eye=(1.9, 1.35, 1.55), width=size, height=size)
        mode = ShadowMode.secondary_rays() if shadow == "secondary" else ShadowMode.none()
        img = raymarch(field_sampler(fld), cam, TransferFunction.default(), mode=mode)
        save_image(img, out)
        click.echo(f"wrote {out}")
        return

    from .experiments import build_training_set, default_camera, field_for_engine, render_field

    cfg = _resolve_config(config_path, task, seed)
    model = None
    data = None
    if engine == "hyperinr":
        if not model_path:
            _fail("--model is required for the hyperinr engine", _EXIT_CONFIG)
        from .checkpoint import load_model

        model = load_model(model_path)
    if engine == "lerp":
        data = build_training_set(cfg)
    fld, _ = field_for_engine(cfg, engine, theta_vec, model=model, data=data)
    img = render_field(cfg, fld, theta_vec, camera=default_camera(size, size))
    save_image(img, out)
    click.echo(f"wrote {out}")


@main.command("bake-shadows")
@_config_options
@click.option("--theta", default="0.6,0.8", help="Light angles 'polar,azimuth'.")
@click.option("--out", required=True, type=click.Path(), help="Output field path.")
def bake_shadows(config_path, task, seed, theta, out) -> None:
    """Bake a shadow volume of the dgs density field for one light."""
    from .datasets import synth_dgs
    from .fields import save_field

    cfg = _resolve_config(config_path, task or "dgs", seed)
    theta_vec = _parse_theta(theta)
    if theta_vec.shape[0] != 2:
        _fail("bake-shadows wants two light angles", _EXIT_CONFIG)
    fld = synth_dgs((theta_vec[0], theta_vec[1]), cfg.coord_dims)
    save_field(fld, out)
    click.echo(f"wrote {out}")


@main.command("serve")
@_config_options
@click.option("--checkpoint", "model_path", required=True, type=click.Path())
@click.option("--dataset", "data_dir", type=click.Path(), default=None,
              help="gen-data dir backing the lerp engine (default: regenerate).")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve_cmd(config_path, task, seed, model_path, data_dir, host, port) -> None:
    """Serve the exploration API (and the UI bundle, if built)."""
    import uvicorn

    from .service import build_app

    cfg = _resolve_config(config_path, task, seed)
    app = build_app(cfg, model_path, data_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
