"""Experiment configuration: one JSON document describing a task end to end
— parameter space, dataset, encoder/MLP shapes, teacher hyperparameters,
atlas and distillation sampling plans.

Parsing is strict: unknown keys anywhere are an error, so a typo'd field
fails loudly instead of silently falling back to a default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .hash_encoding import HashEncoderConfig
from .hypernet import ParamSpace

__all__ = ["ExperimentConfig", "load_config", "default_config", "ConfigError"]

TASKS = ("tsr", "nvs", "dgs")


class ConfigError(ValueError):
    """Malformed experiment configuration."""


def _require_keys(section: str, d: dict, allowed: set[str], required: set[str]) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{section}: unknown keys {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise ConfigError(f"{section}: missing keys {sorted(missing)}")


@dataclass
class ExperimentConfig:
    task: str
    seed: int
    space: ParamSpace
    dataset: dict
    encoder: HashEncoderConfig
    mlp: dict
    teacher: dict
    atlas: dict
    distill: dict

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        expected_dim = 1 if self.task == "tsr" else 2
        if self.space.dim != expected_dim:
            raise ConfigError(
                f"{self.task} uses a {expected_dim}-D parameter space, "
                f"got {self.space.dim}-D"
            )
        coord_dim = 2 if self.task == "nvs" else 3
        if self.encoder.dim != coord_dim:
            raise ConfigError(
                f"{self.task} fields are {coord_dim}-D; encoder.dim is "
                f"{self.encoder.dim}"
            )

    @property
    def coord_dims(self) -> tuple[int, ...]:
        if self.task == "nvs":
            s = int(self.dataset["size"])
            return (s, s)
        return tuple(int(v) for v in self.dataset["dims"])

    @property
    def out_dim(self) -> int:
        return 3 if self.task == "nvs" else 1

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "seed": self.seed,
            "space": self.space.to_dict(),
            "dataset": self.dataset,
            "encoder": self.encoder.to_dict(),
            "mlp": self.mlp,
            "teacher": self.teacher,
            "atlas": self.atlas,
            "distill": self.distill,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        _require_keys(
            "config",
            d,
            allowed={
                "task",
                "seed",
                "space",
                "dataset",
                "encoder",
                "mlp",
                "teacher",
                "atlas",
                "distill",
            },
            required={"task", "space", "dataset", "encoder"},
        )
        task = d["task"]
        defaults = default_config(task).to_dict() if task in TASKS else None
        if defaults is None:
            raise ConfigError(f"task must be one of {TASKS}, got {task!r}")

        def merged(name: str) -> dict:
            base = dict(defaults[name])
            override = d.get(name, {})
            _require_keys(name, override, allowed=set(base), required=set())
            base.update(override)
            return base

        _require_keys(
            "space",
            d["space"],
            allowed={"names", "lower", "upper"},
            required={"names", "lower", "upper"},
        )
        dataset_keys = {"size", "train_count"} if task == "nvs" else {"dims", "train_count"}
        _require_keys("dataset", d["dataset"], allowed=dataset_keys, required=set())
        dataset = dict(defaults["dataset"])
        dataset.update(d["dataset"])

        return cls(
            task=task,
            seed=int(d.get("seed", defaults["seed"])),
            space=ParamSpace.from_dict(d["space"]),
            dataset=dataset,
            encoder=HashEncoderConfig.from_dict(d["encoder"]),
            mlp=merged("mlp"),
            teacher=merged("teacher"),
            atlas=merged("atlas"),
            distill=merged("distill"),
        )


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return ExperimentConfig.from_dict(raw)


def save_config(cfg: ExperimentConfig, path: str) -> None:
    with open(path, "w") as f:
        json.dump(cfg.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def default_config(task: str) -> ExperimentConfig:
    """Desk-scale defaults per task; every field overridable from JSON."""
    if task == "tsr":
        space = ParamSpace(("time",), (0.0,), (1.0,))
        dataset = {"dims": [24, 24, 24], "train_count": 9}
        encoder = HashEncoderConfig(dim=3, base_resolution=4)
        atlas = {"plan": [{"kind": "even_1d", "count": 16}]}
        distill_plan = [{"kind": "even_1d", "count": 33}]
    elif task == "nvs":
        space = ParamSpace(
            ("polar", "azimuth"), (0.35, 0.0), (1.25, 2.0 * np.pi)
        )
        dataset = {"size": 48, "train_count": 25}
        encoder = HashEncoderConfig(dim=2, base_resolution=8)
        atlas = {"plan": [{"kind": "poisson", "radius": 0.085}]}
        distill_plan = [
            {"kind": "poisson", "radius": 0.06},
            {"kind": "gaussian", "anchors": "train", "sigma": 0.05, "count": 48},
        ]
    elif task == "dgs":
        space = ParamSpace(
            ("light_polar", "light_azimuth"), (0.15, 0.0), (1.25, 2.0 * np.pi)
        )
        dataset = {"dims": [24, 24, 24], "train_count": 25}
        encoder = HashEncoderConfig(dim=3, base_resolution=4)
        atlas = {"plan": [{"kind": "poisson", "radius": 0.08}]}
        distill_plan = [
            {"kind": "poisson", "radius": 0.06},
            {"kind": "gaussian", "anchors": "train", "sigma": 0.05, "count": 48},
        ]
    else:
        raise ConfigError(f"task must be one of {TASKS}, got {task!r}")

    return ExperimentConfig(
        task=task,
        seed=7,
        space=space,
        dataset=dataset,
        encoder=encoder,
        mlp={"width": 64, "hidden": 4},
        teacher={
            "width": 256,
            "encoder_blocks": 3,
            "trunk_blocks": 10,
            "decoder_blocks": 1,
            "epochs": 2000,
            "batch": 2048,
            # well above the conservative production rate: these synthetic
            # sets are tiny, and 1e-5 underfits badly within the epoch budget
            "lr": 3e-4,
        },
        atlas=atlas,
        distill={
            "plan": distill_plan,
            "epochs": 3000,
            "batch": 4096,
            "lr": 1e-3,
            "k": 0,
            "p": 1.0,
        },
    )
