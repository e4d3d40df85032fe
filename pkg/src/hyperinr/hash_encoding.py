"""Multiresolution hash encoding over the unit cube.

Coordinates in [0,1]^d map to an L*F feature vector: each level scales the
coordinate to a virtual grid, interpolates the 2^d surrounding vertex
features d-linearly, and the per-level results are concatenated. Small
levels store one feature row per grid vertex; once the vertex count
exceeds the table size, vertices are folded together with a spatial hash.

Parameters for one encoder live in a single flat buffer with a frozen
layout (level-major, entry-major, feature-minor) so that buffers from
different encoders with the same config are element-wise alignable. That
alignment is what makes weight interpolation between encoders meaningful.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

__all__ = [
    "HASH_PRIMES",
    "HashEncoderConfig",
    "HashEncoder",
    "level_resolution",
    "table_entries",
    "vertex_index",
    "encode_forward",
    "encode_backward",
]

# Per-axis hash multipliers; axis 0 is intentionally 1.
HASH_PRIMES = (1, 2654435761, 805459861)

_U32_MASK = 0xFFFFFFFF


@dataclass(frozen=True)
class HashEncoderConfig:
    """Static shape of one encoder: d input dims, L levels, up to T rows of
    F features per level, base resolution R1, doubling per level."""

    dim: int
    levels: int = 8
    table_size: int = 2**15
    features: int = 4
    base_resolution: int = 4
    growth: int = 2

    def __post_init__(self) -> None:
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.table_size < 1 or self.table_size & (self.table_size - 1):
            raise ValueError("table_size must be a power of two")
        if self.features < 1:
            raise ValueError("features must be >= 1")
        if self.base_resolution < 1:
            raise ValueError("base_resolution must be >= 1")
        if self.growth != 2:
            raise ValueError("per-level growth is fixed at 2")

    @property
    def out_dim(self) -> int:
        return self.levels * self.features

    @property
    def total_params(self) -> int:
        return sum(table_entries(self, l) for l in range(1, self.levels + 1)) * self.features

    def level_offsets(self) -> np.ndarray:
        """Start offset of each level's block in the flat buffer (plus end)."""
        sizes = [table_entries(self, l) * self.features for l in range(1, self.levels + 1)]
        return np.concatenate([[0], np.cumsum(sizes)])

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "levels": self.levels,
            "table_size": self.table_size,
            "features": self.features,
            "base_resolution": self.base_resolution,
            "growth": self.growth,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HashEncoderConfig":
        return cls(**d)


def level_resolution(config: HashEncoderConfig, level: int) -> int:
    """Grid resolution R_l = R1 * 2^(l-1); levels are 1-indexed."""
    if not 1 <= level <= config.levels:
        raise ValueError(f"level {level} out of range 1..{config.levels}")
    return config.base_resolution * 2 ** (level - 1)


def table_entries(config: HashEncoderConfig, level: int) -> int:
    """Rows stored at a level: the full (R_l+1)^d vertex count while it
    fits in the table, hashed down to table_size once it does not."""
    r = level_resolution(config, level)
    return min((r + 1) ** config.dim, config.table_size)


def _is_dense(config: HashEncoderConfig, level: int) -> bool:
    r = level_resolution(config, level)
    return (r + 1) ** config.dim <= config.table_size


def vertex_index(cell, resolution: int, table_size: int, dim: int) -> int:
    """Table row for one integer lattice point (components in [0, R_l]).

    Dense levels use the row-major linear index with the first axis
    slowest; hashed levels multiply each component by its per-axis prime
    in 32-bit wraparound arithmetic, XOR the products, and reduce mod the
    (power-of-two) table size.
    """
    cell = np.asarray(cell, dtype=np.int64).reshape(-1)
    if cell.size != dim:
        raise ValueError(f"cell has {cell.size} components, expected {dim}")
    if (resolution + 1) ** dim <= table_size:
        idx = 0
        for c in cell:
            idx = idx * (resolution + 1) + int(c)
        return idx
    acc = 0
    for i in range(dim):
        acc ^= (int(cell[i]) * HASH_PRIMES[i]) & _U32_MASK
    return acc & (table_size - 1)


def _vertex_index_batch(cells: np.ndarray, resolution: int, dense: bool, config: HashEncoderConfig) -> np.ndarray:
    """Vectorized vertex_index for an (..., d) int array of lattice points."""
    if dense:
        idx = cells[..., 0].astype(np.int64)
        for i in range(1, config.dim):
            idx = idx * (resolution + 1) + cells[..., i]
        return idx
    acc = np.zeros(cells.shape[:-1], dtype=np.uint64)
    for i in range(config.dim):
        acc ^= (cells[..., i].astype(np.uint64) * np.uint64(HASH_PRIMES[i])) & np.uint64(_U32_MASK)
    return (acc & np.uint64(config.table_size - 1)).astype(np.int64)


@dataclass
class HashEncoder:
    """Config plus the flat parameter buffer for one encoder."""

    config: HashEncoderConfig
    params: np.ndarray

    def __post_init__(self) -> None:
        self.params = np.asarray(self.params).reshape(-1)
        if self.params.size != self.config.total_params:
            raise ValueError(
                f"buffer has {self.params.size} values, config wants "
                f"{self.config.total_params}"
            )

    @classmethod
    def zeros(cls, config: HashEncoderConfig, dtype=np.float32) -> "HashEncoder":
        return cls(config, np.zeros(config.total_params, dtype=dtype))

    def level_table(self, level: int) -> np.ndarray:
        """(entries, F) view of one level's block; no copy."""
        offsets = self.config.level_offsets()
        block = self.params[offsets[level - 1] : offsets[level]]
        return block.reshape(table_entries(self.config, level), self.config.features)


def _corner_data(config: HashEncoderConfig, x: np.ndarray, level: int):
    """Corner table indices (N, 2^d) and interpolation weights for a level.

    Weights come from the fractional part of x*R_l + 0.5; the base corner is
    the floor, so the right/upper cell owns exact lattice hits. Corners are
    clamped to the vertex range [0, R_l].
    """
    r = level_resolution(config, level)
    xl = x * r + 0.5
    base = np.floor(xl)
    frac = xl - base
    base = base.astype(np.int64)

    bits = np.array(list(itertools.product((0, 1), repeat=config.dim)), dtype=np.int64)
    corners = np.minimum(base[:, None, :] + bits[None, :, :], r)

    w = np.ones((x.shape[0], bits.shape[0]), dtype=np.float64)
    for axis in range(config.dim):
        w *= np.where(bits[None, :, axis] == 1, frac[:, None, axis], 1.0 - frac[:, None, axis])

    idx = _vertex_index_batch(corners, r, _is_dense(config, level), config)
    return idx, w


def _as_batch(x: np.ndarray, dim: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(f"coordinates must have shape (n, {dim})")
    return np.clip(x, 0.0, 1.0), single


def encode_forward(encoder: HashEncoder, x: np.ndarray) -> np.ndarray:
    """Encode coordinates (n, d) or (d,) into (n, L*F) or (L*F,) features.

    Out-of-range coordinates are clamped to the unit cube.
    """
    cfg = encoder.config
    x, single = _as_batch(x, cfg.dim)
    dtype = encoder.params.dtype
    out = np.empty((x.shape[0], cfg.out_dim), dtype=dtype)
    for level in range(1, cfg.levels + 1):
        idx, w = _corner_data(cfg, x, level)
        vals = encoder.level_table(level)[idx]  # (n, 2^d, F)
        col = (level - 1) * cfg.features
        out[:, col : col + cfg.features] = np.einsum(
            "nc,ncf->nf", w.astype(dtype), vals
        )
    return out[0] if single else out


def encode_backward(encoder: HashEncoder, x: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Gradient of encode_forward w.r.t. the flat parameter buffer.

    Each corner row receives the upstream feature gradient scaled by its
    interpolation weight; hash collisions accumulate additively. Returns a
    dense buffer shaped like encoder.params.
    """
    cfg = encoder.config
    x, single = _as_batch(x, cfg.dim)
    upstream = np.asarray(upstream)
    if single:
        upstream = upstream.reshape(1, -1)
    if upstream.shape != (x.shape[0], cfg.out_dim):
        raise ValueError(f"upstream must have shape ({x.shape[0]}, {cfg.out_dim})")

    dtype = encoder.params.dtype
    offsets = cfg.level_offsets()
    grad = np.zeros(cfg.total_params, dtype=dtype)
    f = cfg.features
    for level in range(1, cfg.levels + 1):
        idx, w = _corner_data(cfg, x, level)
        up = upstream[:, (level - 1) * f : level * f]
        # contribution[n, corner, feat] = w[n, corner] * up[n, feat]
        contrib = w[:, :, None].astype(dtype) * up[:, None, :]
        keys = (idx[:, :, None] * f + np.arange(f)[None, None, :]).reshape(-1)
        block = np.bincount(
            keys, weights=contrib.reshape(-1), minlength=table_entries(cfg, level) * f
        )
        grad[offsets[level - 1] : offsets[level]] += block.astype(dtype)
    return grad
