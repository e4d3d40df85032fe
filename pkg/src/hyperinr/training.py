"""Training: losses, the stateless INR evaluator with exact gradients on
both weight buffers, gradient routing back through the interpolation
weights, teacher fitting, distillation-set construction, the distillation
loop itself, and the non-neural interpolation baseline.

One "epoch" is one optimizer step on one sampled minibatch. A distillation
minibatch holds a single parameter sample and many coordinates, so the
neighbor set (and therefore the routing weights) is constant within a step.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass

import numpy as np

from .fields import (
    ImageRGB,
    ScalarField,
    grid_coordinates,
    load_field,
    save_field,
)
from .hash_encoding import HashEncoder, HashEncoderConfig, encode_backward, encode_forward
from .hypernet import (
    HyperINRModel,
    ParamSpace,
    fast_path_1d,
    idw_weights,
    knn_query,
)
from .knn import build_knn_index
from .networks import (
    CoordNet,
    MLPConfig,
    SynthesisMLP,
    coordnet_backward,
    coordnet_forward,
    mlp_backward,
    mlp_forward,
)
from .numerics import AdamState, DivergenceError, Rng, adam_step

__all__ = [
    "TrainingSet",
    "DistillationSet",
    "TrainReport",
    "loss_l1",
    "loss_l2",
    "loss_for",
    "stateless_evaluate",
    "route_gradients_to_atlas",
    "train_teacher",
    "build_distillation_set",
    "distill_hyperinr",
    "lerp_baseline",
]

_DIVERGE_FACTOR = 10.0
_DIVERGE_PATIENCE = 100


# ---------------------------------------------------------------------------
# Losses (value + gradient on predictions)
# ---------------------------------------------------------------------------


def _check_lengths(pred: np.ndarray, truth: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    return p, t


def loss_l1(pred, truth) -> float:
    p, t = _check_lengths(pred, truth)
    return float(np.abs(p - t).mean())


def loss_l2(pred, truth) -> float:
    p, t = _check_lengths(pred, truth)
    return float(((p - t) ** 2).mean())


def _l1_grad(pred, truth) -> np.ndarray:
    p, t = _check_lengths(pred, truth)
    return np.sign(p - t) / p.size


def _l2_grad(pred, truth) -> np.ndarray:
    p, t = _check_lengths(pred, truth)
    return 2.0 * (p - t) / p.size


def loss_for(kind: str):
    """Volumes train under L1, images under L2. Returns (loss, grad) fns."""
    if kind == "volume":
        return loss_l1, _l1_grad
    if kind == "image":
        return loss_l2, _l2_grad
    raise ValueError(f"unknown field kind {kind!r}")


# ---------------------------------------------------------------------------
# Parameter/field collections
# ---------------------------------------------------------------------------


def _field_kind(f) -> str:
    return "image" if isinstance(f, ImageRGB) else "volume"


def _field_values(f) -> np.ndarray:
    """Flat (n_coords, channels) view of a stored field."""
    if isinstance(f, ImageRGB):
        return f.pixels.reshape(-1, 3)
    return f.values.reshape(-1, 1)


def _field_coord_dims(f) -> tuple[int, ...]:
    if isinstance(f, ImageRGB):
        return (f.height, f.width)
    return f.dims


@dataclass
class TrainingSet:
    """Sparse supervision: native parameter vectors and the fields observed
    there. All fields must share shape and kind."""

    space: ParamSpace
    thetas: list[tuple[float, ...]]
    fields: list

    def __post_init__(self) -> None:
        if len(self.thetas) != len(self.fields) or not self.fields:
            raise ValueError("need one field per theta, at least one")
        d0 = _field_coord_dims(self.fields[0])
        k0 = _field_kind(self.fields[0])
        for f in self.fields:
            if _field_coord_dims(f) != d0 or _field_kind(f) != k0:
                raise ValueError("all fields must share dims and kind")

    def __len__(self) -> int:
        return len(self.thetas)

    @property
    def kind(self) -> str:
        return _field_kind(self.fields[0])

    @property
    def coord_dims(self) -> tuple[int, ...]:
        return _field_coord_dims(self.fields[0])

    def field(self, i: int):
        return self.fields[i]

    def normalized_thetas(self) -> np.ndarray:
        return np.stack([self.space.normalize(t) for t in self.thetas])

    def save(self, out_dir: str) -> None:
        _save_set(self, out_dir, role="training")

    @classmethod
    def load(cls, out_dir: str) -> "TrainingSet":
        space, thetas, fields, _ = _load_set(out_dir)
        return cls(space, thetas, fields)


class DistillationSet:
    """Teacher-generated supervision, either held in memory or as one raw
    field file per parameter sample behind a manifest. Both storage modes
    produce identical bytes on access."""

    def __init__(
        self,
        space: ParamSpace,
        thetas: list[tuple[float, ...]],
        fields: list | None = None,
        paths: list[str] | None = None,
        kind: str = "volume",
        coord_dims: tuple[int, ...] | None = None,
    ):
        if (fields is None) == (paths is None):
            raise ValueError("exactly one of fields/paths must be given")
        if len(thetas) != len(fields if fields is not None else paths):
            raise ValueError("need one field per theta")
        self.space = space
        self.thetas = thetas
        self._fields = fields
        self._paths = paths
        if fields is not None:
            self.kind = _field_kind(fields[0])
            self.coord_dims = _field_coord_dims(fields[0])
        else:
            self.kind = kind
            if coord_dims is None:
                raise ValueError("on-disk sets need coord_dims")
            self.coord_dims = tuple(coord_dims)

    def __len__(self) -> int:
        return len(self.thetas)

    def field(self, i: int):
        if self._fields is not None:
            return self._fields[i]
        raw = load_field(self._paths[i])
        if self.kind == "image":
            return ImageRGB(raw.values)
        return raw

    def normalized_thetas(self) -> np.ndarray:
        return np.stack([self.space.normalize(t) for t in self.thetas])

    def save(self, out_dir: str) -> None:
        _save_set(self, out_dir, role="distillation")

    @classmethod
    def load(cls, out_dir: str) -> "DistillationSet":
        space, thetas, _, meta = _load_set(out_dir, lazy=True)
        return cls(
            space,
            thetas,
            paths=meta["paths"],
            kind=meta["kind"],
            coord_dims=tuple(meta["coord_dims"]),
        )


def _save_set(dataset, out_dir: str, role: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    files = []
    for i in range(len(dataset)):
        f = dataset.field(i)
        name = f"field_{i:05d}.raw"
        blob = ScalarField(_raw_values(f), theta=tuple(dataset.thetas[i]))
        save_field(blob, os.path.join(out_dir, name))
        files.append(name)
    manifest = {
        "role": role,
        "space": dataset.space.to_dict(),
        "kind": dataset.kind if hasattr(dataset, "kind") else _field_kind(dataset.field(0)),
        "coord_dims": list(dataset.coord_dims),
        "thetas": [list(t) for t in dataset.thetas],
        "files": files,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def _raw_values(f) -> np.ndarray:
    return f.pixels if isinstance(f, ImageRGB) else f.values


def _load_set(out_dir: str, lazy: bool = False):
    with open(os.path.join(out_dir, "manifest.json")) as f:
        manifest = json.load(f)
    space = ParamSpace.from_dict(manifest["space"])
    thetas = [tuple(t) for t in manifest["thetas"]]
    paths = [os.path.join(out_dir, name) for name in manifest["files"]]
    meta = {
        "kind": manifest["kind"],
        "coord_dims": manifest["coord_dims"],
        "paths": paths,
        "role": manifest["role"],
    }
    if lazy:
        return space, thetas, None, meta
    fields = []
    for p in paths:
        raw = load_field(p)
        fields.append(ImageRGB(raw.values) if manifest["kind"] == "image" else raw)
    return space, thetas, fields, meta


@dataclass
class TrainReport:
    """Loss trace plus enough context to reproduce the run. Wall-clock is
    reported here but never serialized into artifacts, so outputs stay
    byte-identical across runs."""

    losses: list[float]
    probe_psnr: list[tuple[int, float]]
    wall_clock_s: float
    seed: int
    config_hash: str
    diverged: bool = False

    @property
    def epochs(self) -> int:
        return len(self.losses)

    def write_log(self, path: str) -> None:
        with open(path, "w") as f:
            for i, v in enumerate(self.losses):
                f.write(json.dumps({"epoch": i, "loss": v}, sort_keys=True) + "\n")
            for epoch, val in self.probe_psnr:
                f.write(
                    json.dumps(
                        {"epoch": epoch, "probe_psnr": val}, sort_keys=True
                    )
                    + "\n"
                )


def _config_hash(payload: dict) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode("utf-8")
    ).hexdigest()[:16]


class _DivergenceWatch:
    """Abort on non-finite loss, or on loss stuck above 10x its initial
    value for 100 consecutive steps."""

    def __init__(self):
        self.initial: float | None = None
        self.high_streak = 0

    def check(self, loss: float) -> None:
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite loss {loss}")
        if self.initial is None:
            self.initial = max(loss, 1e-12)
            return
        if loss > _DIVERGE_FACTOR * self.initial:
            self.high_streak += 1
            if self.high_streak >= _DIVERGE_PATIENCE:
                raise DivergenceError(
                    f"loss {loss:.3g} above 10x initial {self.initial:.3g} "
                    f"for {_DIVERGE_PATIENCE} consecutive steps"
                )
        else:
            self.high_streak = 0


# ---------------------------------------------------------------------------
# Stateless evaluation and gradient routing
# ---------------------------------------------------------------------------


def stateless_evaluate(
    coords: np.ndarray,
    enc_params: np.ndarray,
    mlp_weights: np.ndarray,
    enc_config: HashEncoderConfig,
    mlp_config: MLPConfig,
):
    """Evaluate encoder+MLP purely from flat buffers.

    Returns (values, backward) where backward(upstream) gives exact
    gradients on the encoder buffer and the MLP buffer, in that order.
    """
    encoder = HashEncoder(enc_config, np.asarray(enc_params).reshape(-1))
    mlp = SynthesisMLP.from_buffer(mlp_weights, mlp_config)
    feats = encode_forward(encoder, coords)
    values = mlp_forward(mlp, feats)

    def backward(upstream: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        mlp_grad, dfeat = mlp_backward(mlp, feats, upstream)
        enc_grad = encode_backward(encoder, coords, dfeat)
        return enc_grad, mlp_grad

    return values, backward


def route_gradients_to_atlas(
    enc_grad: np.ndarray, pairs: list[tuple[int, float]]
) -> dict[int, np.ndarray]:
    """Chain rule through the convex combination: neighbor j receives
    w_j * enc_grad; everyone else receives nothing."""
    total = sum(w for _, w in pairs)
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"weights must sum to 1, got {total}")
    return {j: w * enc_grad for j, w in pairs}


# ---------------------------------------------------------------------------
# Teacher
# ---------------------------------------------------------------------------


def _assign_coordnet(dst: CoordNet, flat: np.ndarray) -> None:
    src = CoordNet.from_buffer(flat, dst.config)
    dst.first[0][:] = src.first[0]
    dst.first[1][:] = src.first[1]
    for dblk, sblk in zip(dst.blocks, src.blocks):
        for a, b in zip(dblk, sblk):
            a[:] = b
    dst.final[0][:] = src.final[0]
    dst.final[1][:] = src.final[1]


def train_teacher(
    net: CoordNet,
    data: TrainingSet,
    epochs: int,
    batch_size: int = 2048,
    rng: Rng | None = None,
    lr: float = 1e-5,
) -> TrainReport:
    """Fit the teacher on (coordinate, parameter) -> value pairs drawn
    uniformly over every stored field. Adam with lr 1e-5, eps 1e-8, weight
    decay 1e-6."""
    rng = rng or Rng(0)
    t_start = time.perf_counter()

    coords = grid_coordinates(data.coord_dims)
    n_per_field = coords.shape[0]
    thetas = data.normalized_thetas()
    values = np.stack([_field_values(data.field(i)) for i in range(len(data))])
    expect_in = coords.shape[1] + thetas.shape[1]
    if net.config.in_dim != expect_in:
        raise ValueError(
            f"teacher in_dim {net.config.in_dim} != coords+params {expect_in}"
        )
    loss_fn, grad_fn = loss_for(data.kind)

    flat = net.to_buffer()
    view = CoordNet.from_buffer(flat, net.config)
    state = AdamState.for_params(flat, lr=lr, eps=1e-8)
    watch = _DivergenceWatch()
    losses: list[float] = []
    diverged = False

    total = len(data) * n_per_field
    try:
        for _ in range(epochs):
            pick = rng.integers(0, total, size=batch_size)
            fi = pick // n_per_field
            ci = pick % n_per_field
            x = np.concatenate(
                [coords[ci], thetas[fi]], axis=1
            ).astype(np.float32)
            truth = values[fi, ci].astype(np.float32)
            pred = coordnet_forward(view, x)
            loss = loss_fn(pred, truth)
            losses.append(loss)
            watch.check(loss)
            upstream = grad_fn(pred, truth).astype(np.float32)
            grads = coordnet_backward(view, x, upstream)
            adam_step(flat, grads, state, weight_decay=1e-6)
    except DivergenceError:
        diverged = True

    _assign_coordnet(net, flat)
    return TrainReport(
        losses=losses,
        probe_psnr=[],
        wall_clock_s=time.perf_counter() - t_start,
        seed=rng.seed,
        config_hash=_config_hash(
            {
                "op": "train_teacher",
                "net": net.config.to_dict(),
                "epochs": epochs,
                "batch": batch_size,
                "lr": lr,
            }
        ),
        diverged=diverged,
    )


def build_distillation_set(
    teacher: CoordNet,
    space: ParamSpace,
    params: np.ndarray,
    coord_dims: tuple[int, ...],
    out_dir: str | None = None,
    chunk: int = 16384,
) -> DistillationSet:
    """Evaluate the teacher over the full lattice at each normalized
    parameter point; clamp to [0,1]. Pre-computed, optionally to disk."""
    params = np.atleast_2d(np.asarray(params, dtype=np.float64))
    coords = grid_coordinates(coord_dims)
    kind = "image" if teacher.config.out_dim == 3 else "volume"
    fields = []
    thetas = []
    for theta in params:
        out = np.empty((coords.shape[0], teacher.config.out_dim), dtype=np.float32)
        for lo in range(0, coords.shape[0], chunk):
            hi = min(lo + chunk, coords.shape[0])
            x = np.concatenate(
                [coords[lo:hi], np.tile(theta, (hi - lo, 1))], axis=1
            ).astype(np.float32)
            out[lo:hi] = coordnet_forward(teacher, x)
        out = np.clip(out, 0.0, 1.0)
        native = tuple(float(v) for v in space.denormalize(theta))
        thetas.append(native)
        if kind == "image":
            fields.append(ImageRGB(out.reshape(*coord_dims, 3)))
        else:
            fields.append(ScalarField(out.reshape(coord_dims), theta=native))
    dset = DistillationSet(space, thetas, fields=fields)
    if out_dir is not None:
        dset.save(out_dir)
        return DistillationSet.load(out_dir)
    return dset


# ---------------------------------------------------------------------------
# Distillation
# ---------------------------------------------------------------------------


def _neighbor_pairs(model: HyperINRModel, theta_norm: np.ndarray) -> list[tuple[int, float]]:
    """The same neighbor/weight selection assembly uses, shared so training
    and inference cannot drift apart."""
    atlas = model.atlas
    if atlas.space.dim == 1 and model.k == 2 and len(atlas) >= 2:
        lo, hi, u = fast_path_1d(atlas, float(theta_norm[0]))
        return [(lo, 1.0)] if lo == hi else [(lo, 1.0 - u), (hi, u)]
    neighbors = knn_query(atlas, theta_norm, model.k)
    w = idw_weights(neighbors, model.p)
    return [(j, float(wj)) for (j, _), wj in zip(neighbors, w)]


def distill_hyperinr(
    model: HyperINRModel,
    dset: DistillationSet,
    epochs: int,
    batch: int = 4096,
    rng: Rng | None = None,
    lr: float = 1e-3,
    probe_every: int = 0,
    train_mlp: bool = True,
) -> TrainReport:
    """Knowledge distillation: each step samples one parameter point and a
    coordinate minibatch, assembles the interpolated encoder, evaluates
    statelessly, and routes gradients back onto the K neighbor encoders
    (scaled by their interpolation weights) and the shared MLP.

    Encoders use lazy per-encoder Adam states: an encoder's moments and
    step count advance only when it participates in a step. Adam runs with
    lr 1e-3 and eps 1e-10.
    """
    rng = rng or Rng(0)
    t_start = time.perf_counter()
    atlas = model.atlas
    enc_cfg = atlas.encoder_config

    mlp_flat = model.shared_mlp.to_buffer()
    model.shared_mlp = SynthesisMLP.from_buffer(mlp_flat, model.shared_mlp.config)
    mlp_state = AdamState.for_params(mlp_flat, lr=lr, eps=1e-10)
    enc_states = [
        AdamState.for_params(e.params, lr=lr, eps=1e-10) for e in atlas.encoders
    ]

    coords = grid_coordinates(dset.coord_dims)
    n_coords = coords.shape[0]
    thetas = dset.normalized_thetas()
    values = [_field_values(dset.field(i)) for i in range(len(dset))]
    loss_fn, grad_fn = loss_for(dset.kind)

    watch = _DivergenceWatch()
    losses: list[float] = []
    probes: list[tuple[int, float]] = []
    diverged = False

    try:
        for step_i in range(epochs):
            ti = int(rng.integers(0, len(dset)))
            ci = rng.integers(0, n_coords, size=batch)
            pairs = _neighbor_pairs(model, thetas[ti])

            table = np.zeros(enc_cfg.total_params, dtype=np.float64)
            for j, w in pairs:
                table += w * atlas.encoders[j].params.astype(np.float64, copy=False)
            table = table.astype(atlas.encoders[0].params.dtype)

            x = coords[ci]
            truth = values[ti][ci]
            pred, backward = stateless_evaluate(
                x, table, mlp_flat, enc_cfg, model.shared_mlp.config
            )
            loss = loss_fn(pred, truth)
            losses.append(loss)
            watch.check(loss)

            upstream = grad_fn(pred, truth).astype(pred.dtype)
            enc_grad, mlp_grad = backward(upstream)
            for j, g in route_gradients_to_atlas(enc_grad, pairs).items():
                adam_step(atlas.encoders[j].params, g, enc_states[j])
            if train_mlp:
                adam_step(mlp_flat, mlp_grad, mlp_state)

            if probe_every and (step_i + 1) % probe_every == 0:
                probes.append((step_i + 1, _probe_psnr(model, dset, coords, values)))
    except DivergenceError:
        diverged = True

    return TrainReport(
        losses=losses,
        probe_psnr=probes,
        wall_clock_s=time.perf_counter() - t_start,
        seed=rng.seed,
        config_hash=_config_hash(
            {
                "op": "distill",
                "encoder": enc_cfg.to_dict(),
                "mlp": model.shared_mlp.config.to_dict(),
                "atlas_size": len(atlas),
                "k": model.k,
                "epochs": epochs,
                "batch": batch,
                "lr": lr,
            }
        ),
        diverged=diverged,
    )


def _probe_psnr(model, dset, coords, values) -> float:
    """Mean PSNR over up to 4 distillation entries, full lattice."""
    from .hypernet import assemble_inr, eval_inr
    from .metrics import psnr as psnr_fn

    take = np.linspace(0, len(dset) - 1, min(4, len(dset))).astype(int)
    scores = []
    for i in take:
        inst = assemble_inr(model, np.asarray(dset.thetas[i]))
        pred = np.clip(eval_inr(inst, coords), 0.0, 1.0)
        scores.append(psnr_fn(pred, values[i]))
    finite = [s for s in scores if np.isfinite(s)]
    return float(np.mean(finite)) if finite else float("inf")


# ---------------------------------------------------------------------------
# Non-neural baseline
# ---------------------------------------------------------------------------


def lerp_baseline(data, theta_raw: np.ndarray, k: int = 4, p: float = 1.0):
    """Interpolate the stored fields themselves (voxel-wise IDW over the K
    nearest parameters; plain linear interpolation in 1-D). The classic
    non-neural competitor."""
    theta_raw = np.atleast_1d(np.asarray(theta_raw, dtype=np.float64))
    space = data.space
    theta = np.clip(space.normalize(theta_raw), 0.0, 1.0)
    positions = data.normalized_thetas()

    if space.dim == 1 and len(data) >= 2:
        order = np.argsort(positions[:, 0], kind="stable")
        vals = positions[order, 0]
        t = float(theta[0])
        if t <= vals[0]:
            pairs = [(int(order[0]), 1.0)]
        elif t >= vals[-1]:
            pairs = [(int(order[-1]), 1.0)]
        else:
            hi = int(np.searchsorted(vals, t, side="left"))
            if vals[hi] == t:
                pairs = [(int(order[hi]), 1.0)]
            else:
                u = (t - vals[hi - 1]) / (vals[hi] - vals[hi - 1])
                pairs = [(int(order[hi - 1]), 1.0 - u), (int(order[hi]), u)]
    else:
        index = build_knn_index(positions)
        idx, d2 = index.query(theta, min(k, len(data)))
        neighbors = [(int(i), float(np.sqrt(d))) for i, d in zip(idx, d2)]
        w = idw_weights(neighbors, p)
        pairs = [(j, float(wj)) for (j, _), wj in zip(neighbors, w)]

    for j, w in pairs:
        if w == 1.0:
            return data.field(j)
    acc = np.zeros_like(_raw_values(data.field(pairs[0][0])), dtype=np.float64)
    for j, w in pairs:
        acc += w * _raw_values(data.field(j)).astype(np.float64)
    out = acc.astype(np.float32)
    if data.kind == "image":
        return ImageRGB(out)
    return ScalarField(out, theta=tuple(float(v) for v in theta_raw))
