"""Hypernetwork core: an atlas of hash encoders laid out over a parameter
space, and assembly of self-contained INRs by inverse-distance-weighted
interpolation of the K nearest encoder tables (linear interpolation between
bracketing encoders when the space is one-dimensional).

Because every encoder shares one table layout, interpolation is a plain
element-wise convex combination of flat buffers.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .hash_encoding import HashEncoder, HashEncoderConfig, encode_forward
from .knn import SortedLine, build_knn_index
from .networks import MLPConfig, SynthesisMLP, mlp_forward_with_weights

__all__ = [
    "ParamSpace",
    "EncoderAtlas",
    "HyperINRModel",
    "INRInstance",
    "AssemblyInfo",
    "default_k",
    "knn_query",
    "idw_weights",
    "interpolate_encoders",
    "fast_path_1d",
    "assemble_inr",
    "eval_inr",
]

EXACT_HIT_DISTANCE = 1e-12


@dataclass(frozen=True)
class ParamSpace:
    """Named axes with native-unit bounds; all internal math uses positions
    normalized to the unit cube."""

    names: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (len(self.names) == len(self.lower) == len(self.upper) >= 1):
            raise ValueError("names/lower/upper must be equal-length and nonempty")
        for name, lo, hi in zip(self.names, self.lower, self.upper):
            if not lo < hi:
                raise ValueError(f"axis {name!r}: need lower < upper, got [{lo}, {hi}]")

    @property
    def dim(self) -> int:
        return len(self.names)

    def normalize(self, raw: np.ndarray) -> np.ndarray:
        raw = np.asarray(raw, dtype=np.float64)
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        return (raw - lo) / (hi - lo)

    def denormalize(self, unit: np.ndarray) -> np.ndarray:
        unit = np.asarray(unit, dtype=np.float64)
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        return lo + unit * (hi - lo)

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "lower": list(self.lower),
            "upper": list(self.upper),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParamSpace":
        return cls(tuple(d["names"]), tuple(d["lower"]), tuple(d["upper"]))

    @classmethod
    def unit(cls, names: tuple[str, ...]) -> "ParamSpace":
        n = len(names)
        return cls(tuple(names), (0.0,) * n, (1.0,) * n)


class EncoderAtlas:
    """Immutable set of hash encoders pinned at distinct normalized
    positions, with an exact KNN index built once at construction."""

    def __init__(
        self,
        space: ParamSpace,
        positions: np.ndarray,
        encoders: list[HashEncoder],
    ):
        positions = np.asarray(positions, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[1] != space.dim:
            raise ValueError(
                f"positions must be (n, {space.dim}), got {positions.shape}"
            )
        if len(encoders) != positions.shape[0] or len(encoders) < 1:
            raise ValueError("need one encoder per position, at least one")
        cfg = encoders[0].config
        if any(e.config != cfg for e in encoders):
            raise ValueError("all atlas encoders must share one config")
        if np.unique(positions, axis=0).shape[0] != positions.shape[0]:
            raise ValueError("atlas positions must be pairwise distinct")
        self.space = space
        self.positions = positions
        self.positions.setflags(write=False)
        self.encoders = encoders
        self.index = build_knn_index(positions)

    def __len__(self) -> int:
        return len(self.encoders)

    @property
    def encoder_config(self) -> HashEncoderConfig:
        return self.encoders[0].config


def default_k(dim: int) -> int:
    """Two bracketing encoders on a line; a four-neighbor stencil above."""
    return 2 if dim == 1 else 4


@dataclass
class HyperINRModel:
    atlas: EncoderAtlas
    shared_mlp: SynthesisMLP
    k: int = 0  # 0 -> dimension default, clamped to atlas size
    p: float = 1.0

    def __post_init__(self) -> None:
        if self.k == 0:
            self.k = default_k(self.atlas.space.dim)
        self.k = min(self.k, len(self.atlas))
        if self.k < 1:
            raise ValueError("neighborhood size must be >= 1")


@dataclass(frozen=True)
class AssemblyInfo:
    """Where an assembled INR came from, and what the interpolation cost."""

    theta_raw: tuple[float, ...]
    theta: tuple[float, ...]
    neighbors: tuple[int, ...]
    weights: tuple[float, ...]
    assemble_ms: float


@dataclass
class INRInstance:
    """A self-contained field: one interpolated encoder table plus a copy of
    the shared MLP weights. Evaluable with no reference back to the atlas."""

    encoder_params: np.ndarray
    encoder_config: HashEncoderConfig
    mlp_weights: np.ndarray
    mlp_config: MLPConfig
    provenance: AssemblyInfo

    @property
    def encoder(self) -> HashEncoder:
        return HashEncoder(self.encoder_config, self.encoder_params)


def knn_query(
    atlas: EncoderAtlas, theta: np.ndarray, k: int
) -> list[tuple[int, float]]:
    """K nearest atlas positions to a normalized query, ascending by
    (distance, index). Exact — matches a brute-force scan bit for bit."""
    if k > len(atlas):
        raise ValueError(f"K={k} exceeds atlas size {len(atlas)}")
    idx, d2 = atlas.index.query(np.asarray(theta, dtype=np.float64), k)
    return [(int(i), float(np.sqrt(d))) for i, d in zip(idx, d2)]


def idw_weights(
    neighbors: list[tuple[int, float]], p: float = 1.0
) -> np.ndarray:
    """Inverse-distance weights, normalized to sum 1. A (near-)zero distance
    short-circuits to a one-hot on the first such neighbor."""
    if not neighbors:
        raise ValueError("need at least one neighbor")
    d = np.array([dist for _, dist in neighbors], dtype=np.float64)
    if np.any(d < 0):
        raise ValueError("distances must be non-negative")
    w = np.zeros_like(d)
    hit = np.nonzero(d < EXACT_HIT_DISTANCE)[0]
    if hit.size:
        w[hit[0]] = 1.0
        return w
    w = d**-p
    return w / w.sum()


def interpolate_encoders(
    atlas: EncoderAtlas, pairs: list[tuple[int, float]]
) -> np.ndarray:
    """Element-wise convex combination of neighbor tables, relying on the
    shared flat layout. A one-hot weight copies that table exactly."""
    if not pairs:
        raise ValueError("need at least one (index, weight) pair")
    total = sum(w for _, w in pairs)
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"weights must sum to 1, got {total}")
    for j, w in pairs:
        if w == 1.0:
            return atlas.encoders[j].params.copy()
    dtype = atlas.encoders[pairs[0][0]].params.dtype
    out = np.zeros(atlas.encoder_config.total_params, dtype=np.float64)
    for j, w in pairs:
        out += w * atlas.encoders[j].params.astype(np.float64, copy=False)
    return out.astype(dtype)


def fast_path_1d(atlas: EncoderAtlas, t: float) -> tuple[int, int, float]:
    """Bracketing pair and right-hand weight for a 1-D atlas. Outside the
    hull (or on an exact hit) both indices collapse onto one encoder."""
    line = atlas.index
    if not isinstance(line, SortedLine):
        raise ValueError("fast path requires a 1-D atlas")
    vals = line.sorted_vals
    order = line.order
    t = float(t)
    if t <= vals[0]:
        j = int(order[0])
        return j, j, 1.0
    if t >= vals[-1]:
        j = int(order[-1])
        return j, j, 1.0
    hi = int(np.searchsorted(vals, t, side="left"))
    if vals[hi] == t:
        j = int(order[hi])
        return j, j, 1.0
    lo = hi - 1
    u = (t - vals[lo]) / (vals[hi] - vals[lo])
    return int(order[lo]), int(order[hi]), float(u)


def assemble_inr(model: HyperINRModel, theta_raw: np.ndarray) -> INRInstance:
    """Build a self-contained INR at a parameter point: normalize, find
    neighbors, blend their tables, attach the shared MLP weights."""
    atlas = model.atlas
    space = atlas.space
    raw = np.atleast_1d(np.asarray(theta_raw, dtype=np.float64))
    if raw.shape != (space.dim,):
        raise ValueError(f"expected {space.dim} parameters, got shape {raw.shape}")
    theta = space.normalize(raw)
    if np.any(theta < 0) or np.any(theta > 1):
        warnings.warn(
            f"parameters {raw.tolist()} outside space bounds; clamping",
            stacklevel=2,
        )
        theta = np.clip(theta, 0.0, 1.0)

    start = time.perf_counter()
    if space.dim == 1 and model.k == 2 and len(atlas) >= 2:
        lo, hi, u = fast_path_1d(atlas, float(theta[0]))
        pairs = [(lo, 1.0)] if lo == hi else [(lo, 1.0 - u), (hi, u)]
    else:
        neighbors = knn_query(atlas, theta, model.k)
        w = idw_weights(neighbors, model.p)
        pairs = [(j, float(wj)) for (j, _), wj in zip(neighbors, w)]
    table = interpolate_encoders(atlas, pairs)
    elapsed_ms = (time.perf_counter() - start) * 1e3

    return INRInstance(
        encoder_params=table,
        encoder_config=atlas.encoder_config,
        mlp_weights=model.shared_mlp.to_buffer(),
        mlp_config=model.shared_mlp.config,
        provenance=AssemblyInfo(
            theta_raw=tuple(float(v) for v in raw),
            theta=tuple(float(v) for v in theta),
            neighbors=tuple(j for j, _ in pairs),
            weights=tuple(w for _, w in pairs),
            assemble_ms=elapsed_ms,
        ),
    )


def eval_inr(instance: INRInstance, x: np.ndarray) -> np.ndarray:
    """Field value(s) at coordinate(s) in the unit cube."""
    feats = encode_forward(instance.encoder, x)
    return mlp_forward_with_weights(instance.mlp_weights, instance.mlp_config, feats)
