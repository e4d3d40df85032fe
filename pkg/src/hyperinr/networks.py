"""The synthesis MLP shared by assembled INRs, and the sinusoidal-resblock
teacher network, with explicit forward/backward passes and initialization.

Both networks serialize to flat buffers with a frozen layout (layer-major,
row-major weights, then bias) so evaluation can run from an externally
supplied weight buffer. The teacher works internally in [-1, 1]; every
other value in this package lives in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hash_encoding import HashEncoder
from .numerics import Rng

__all__ = [
    "MLPConfig",
    "SynthesisMLP",
    "mlp_forward",
    "mlp_backward",
    "mlp_forward_with_weights",
    "CoordNetConfig",
    "CoordNet",
    "coordnet_forward",
    "coordnet_backward",
    "range_convert",
    "range_invert",
    "init_hash_encoder",
    "init_mlp",
    "init_siren",
]


def range_convert(x: np.ndarray) -> np.ndarray:
    """[0,1] -> [-1,1]."""
    return 2.0 * x - 1.0


def range_invert(y: np.ndarray) -> np.ndarray:
    """[-1,1] -> [0,1]."""
    return (y + 1.0) * 0.5


# ---------------------------------------------------------------------------
# Synthesis MLP
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MLPConfig:
    """Affine stack: in_dim -> width, `hidden` layers of width -> width,
    width -> out_dim. Hidden activation applies to all but the last layer."""

    in_dim: int
    out_dim: int
    width: int = 64
    hidden: int = 4
    activation: str = "relu"

    def __post_init__(self) -> None:
        if self.activation not in ("relu", "linear"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if min(self.in_dim, self.out_dim, self.width) < 1 or self.hidden < 0:
            raise ValueError("invalid MLP dimensions")

    def layer_shapes(self) -> list[tuple[int, int]]:
        shapes = [(self.width, self.in_dim)]
        shapes += [(self.width, self.width)] * self.hidden
        shapes.append((self.out_dim, self.width))
        return shapes

    @property
    def param_count(self) -> int:
        return sum(o * i + o for o, i in self.layer_shapes())

    def to_dict(self) -> dict:
        return {
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "width": self.width,
            "hidden": self.hidden,
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MLPConfig":
        return cls(**d)


@dataclass
class SynthesisMLP:
    """Weights for one MLPConfig, held as (W, b) pairs per layer."""

    config: MLPConfig
    layers: list[tuple[np.ndarray, np.ndarray]]

    @classmethod
    def zeros(cls, config: MLPConfig, dtype=np.float32) -> "SynthesisMLP":
        layers = [
            (np.zeros((o, i), dtype=dtype), np.zeros(o, dtype=dtype))
            for o, i in config.layer_shapes()
        ]
        return cls(config, layers)

    @classmethod
    def from_buffer(cls, buffer: np.ndarray, config: MLPConfig) -> "SynthesisMLP":
        """Alias layers into a flat buffer; views, not copies."""
        buffer = np.asarray(buffer).reshape(-1)
        if buffer.size != config.param_count:
            raise ValueError(
                f"buffer has {buffer.size} values, config wants {config.param_count}"
            )
        layers = []
        pos = 0
        for o, i in config.layer_shapes():
            w = buffer[pos : pos + o * i].reshape(o, i)
            pos += o * i
            b = buffer[pos : pos + o]
            pos += o
            layers.append((w, b))
        return cls(config, layers)

    def to_buffer(self) -> np.ndarray:
        parts = []
        for w, b in self.layers:
            parts.append(w.reshape(-1))
            parts.append(b)
        return np.concatenate(parts)


def _batch(x: np.ndarray, dim: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(f"expected inputs of width {dim}, got shape {x.shape}")
    return x, single


def mlp_forward(mlp: SynthesisMLP, features: np.ndarray, want_cache: bool = False):
    """Run the affine stack; the last layer has no activation."""
    x, single = _batch(features, mlp.config.in_dim)
    relu = mlp.config.activation == "relu"
    acts = [x]
    pres = []
    n = len(mlp.layers)
    for i, (w, b) in enumerate(mlp.layers):
        pre = x @ w.T + b
        pres.append(pre)
        x = np.maximum(pre, 0) if (relu and i < n - 1) else pre
        acts.append(x)
    out = x[0] if single else x
    if want_cache:
        return out, (acts, pres, single)
    return out


def mlp_backward(
    mlp: SynthesisMLP, features: np.ndarray, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Backprop through the stack.

    Returns (flat gradient buffer aligned with to_buffer(), gradient on the
    input features). The feature gradient is what chains into the encoder.
    """
    out, (acts, pres, single) = mlp_forward(mlp, features, want_cache=True)
    up = np.asarray(upstream)
    if single:
        up = up.reshape(1, -1)
    if up.shape != (acts[0].shape[0], mlp.config.out_dim):
        raise ValueError(f"upstream shape {upstream.shape} does not match output")

    relu = mlp.config.activation == "relu"
    n = len(mlp.layers)
    grads: list[np.ndarray] = []
    d = up
    for i in range(n - 1, -1, -1):
        w, _ = mlp.layers[i]
        dw = d.T @ acts[i]
        db = d.sum(axis=0)
        grads.append(db)
        grads.append(dw.reshape(-1))
        d = d @ w
        if i > 0 and relu:
            d = d * (pres[i - 1] > 0)
    grads.reverse()
    dfeat = d[0] if single else d
    return np.concatenate(grads), dfeat


def mlp_forward_with_weights(
    buffer: np.ndarray, config: MLPConfig, features: np.ndarray
) -> np.ndarray:
    """Stateless evaluation from a flat weight buffer; identical arithmetic
    to mlp_forward on the deserialized network."""
    return mlp_forward(SynthesisMLP.from_buffer(buffer, config), features)


# ---------------------------------------------------------------------------
# Sinusoidal teacher network
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoordNetConfig:
    """First sinusoidal layer (frequency omega0), then resblocks of the form
    y = x + sin(W2 sin(W1 x + b1) + b2), then a linear output layer."""

    in_dim: int
    out_dim: int
    width: int = 256
    encoder_blocks: int = 3
    trunk_blocks: int = 10
    decoder_blocks: int = 1
    omega0: float = 30.0

    @property
    def blocks(self) -> int:
        return self.encoder_blocks + self.trunk_blocks + self.decoder_blocks

    @property
    def param_count(self) -> int:
        w = self.width
        return (
            (w * self.in_dim + w)
            + self.blocks * 2 * (w * w + w)
            + (self.out_dim * w + self.out_dim)
        )

    def to_dict(self) -> dict:
        return {
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "width": self.width,
            "encoder_blocks": self.encoder_blocks,
            "trunk_blocks": self.trunk_blocks,
            "decoder_blocks": self.decoder_blocks,
            "omega0": self.omega0,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CoordNetConfig":
        return cls(**d)


@dataclass
class CoordNet:
    config: CoordNetConfig
    first: tuple[np.ndarray, np.ndarray]
    blocks: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]
    final: tuple[np.ndarray, np.ndarray]

    @classmethod
    def zeros(cls, config: CoordNetConfig, dtype=np.float32) -> "CoordNet":
        w = config.width

        def lin(o, i):
            return np.zeros((o, i), dtype=dtype), np.zeros(o, dtype=dtype)

        first = lin(w, config.in_dim)
        blocks = [lin(w, w) + lin(w, w) for _ in range(config.blocks)]
        final = lin(config.out_dim, w)
        return cls(config, first, blocks, final)

    def to_buffer(self) -> np.ndarray:
        parts = [self.first[0].reshape(-1), self.first[1]]
        for w1, b1, w2, b2 in self.blocks:
            parts += [w1.reshape(-1), b1, w2.reshape(-1), b2]
        parts += [self.final[0].reshape(-1), self.final[1]]
        return np.concatenate(parts)

    @classmethod
    def from_buffer(cls, buffer: np.ndarray, config: CoordNetConfig) -> "CoordNet":
        buffer = np.asarray(buffer).reshape(-1)
        if buffer.size != config.param_count:
            raise ValueError(
                f"buffer has {buffer.size} values, config wants {config.param_count}"
            )
        pos = 0

        def take(o, i):
            nonlocal pos
            w = buffer[pos : pos + o * i].reshape(o, i)
            pos += o * i
            b = buffer[pos : pos + o]
            pos += o
            return w, b

        wdt = config.width
        first = take(wdt, config.in_dim)
        blocks = [take(wdt, wdt) + take(wdt, wdt) for _ in range(config.blocks)]
        final = take(config.out_dim, wdt)
        return cls(config, first, blocks, final)


def coordnet_forward(net: CoordNet, inputs: np.ndarray, want_cache: bool = False):
    """Evaluate on [0,1]-normalized inputs, returning [0,1]-range outputs.

    Inputs and outputs are converted through [-1,1] at the boundary; all
    internal activations are sinusoidal.
    """
    x, single = _batch(inputs, net.config.in_dim)
    x = range_convert(x)

    w0, b0 = net.first
    pre0 = net.config.omega0 * (x @ w0.T + b0)
    h = np.sin(pre0)

    block_pres = []
    for w1, b1, w2, b2 in net.blocks:
        pre1 = h @ w1.T + b1
        s1 = np.sin(pre1)
        pre2 = s1 @ w2.T + b2
        h = h + np.sin(pre2)
        block_pres.append((pre1, s1, pre2))

    wf, bf = net.final
    y = range_invert(h @ wf.T + bf)
    out = y[0] if single else y
    if want_cache:
        return out, (x, pre0, block_pres, h, single)
    return out


def coordnet_backward(
    net: CoordNet, inputs: np.ndarray, upstream: np.ndarray
) -> np.ndarray:
    """Gradient of the [0,1]-range output w.r.t. all weights, as a flat
    buffer aligned with to_buffer()."""
    out, (x, pre0, block_pres, h_final, single) = coordnet_forward(
        net, inputs, want_cache=True
    )
    up = np.asarray(upstream)
    if single:
        up = up.reshape(1, -1)
    d = up * 0.5  # output range conversion

    wf, _ = net.final
    dwf = d.T @ h_final
    dbf = d.sum(axis=0)
    dh = d @ wf

    # Replay the residual chain; h entering block k is reconstructed by
    # subtracting the block outputs above it.
    hs = [np.sin(pre0)]
    for pre1, s1, pre2 in block_pres:
        hs.append(hs[-1] + np.sin(pre2))

    block_grads: list[list[np.ndarray]] = []
    for k in range(len(net.blocks) - 1, -1, -1):
        w1, b1, w2, b2 = net.blocks[k]
        pre1, s1, pre2 = block_pres[k]
        h_in = hs[k]
        dpre2 = dh * np.cos(pre2)
        dw2 = dpre2.T @ s1
        db2 = dpre2.sum(axis=0)
        ds1 = dpre2 @ w2
        dpre1 = ds1 * np.cos(pre1)
        dw1 = dpre1.T @ h_in
        db1 = dpre1.sum(axis=0)
        block_grads.append([dw1.reshape(-1), db1, dw2.reshape(-1), db2])
        dh = dh + dpre1 @ w1

    dpre0 = dh * np.cos(pre0) * net.config.omega0
    dw0 = dpre0.T @ x
    db0 = dpre0.sum(axis=0)

    parts = [dw0.reshape(-1), db0]
    for g in reversed(block_grads):
        parts += g
    parts += [dwf.reshape(-1), dbf]
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------


def init_hash_encoder(encoder: HashEncoder, rng: Rng) -> HashEncoder:
    """Table entries i.i.d. uniform on (-1e-4, 1e-4)."""
    encoder.params[:] = rng.uniform(
        -1e-4, 1e-4, size=encoder.params.size, dtype=encoder.params.dtype
    )
    return encoder


def init_mlp(mlp: SynthesisMLP, rng: Rng) -> SynthesisMLP:
    """He-uniform fan-in weights, zero biases, drawn in layer order."""
    for w, b in mlp.layers:
        bound = np.sqrt(6.0 / w.shape[1])
        w[:] = rng.uniform(-bound, bound, size=w.shape, dtype=w.dtype)
        b[:] = 0
    return mlp


def init_siren(net: CoordNet, rng: Rng) -> CoordNet:
    """First layer U(-1/n, 1/n) with the frequency applied in the forward
    pass; every later layer U(-sqrt(6/n)/omega0, +sqrt(6/n)/omega0) with n
    the fan-in; biases zero. Draws happen in buffer-layout order."""
    w0, b0 = net.first
    n = w0.shape[1]
    w0[:] = rng.uniform(-1.0 / n, 1.0 / n, size=w0.shape, dtype=w0.dtype)
    b0[:] = 0

    def hidden(w, b):
        bound = np.sqrt(6.0 / w.shape[1]) / net.config.omega0
        w[:] = rng.uniform(-bound, bound, size=w.shape, dtype=w.dtype)
        b[:] = 0

    for w1, b1, w2, b2 in net.blocks:
        hidden(w1, b1)
        hidden(w2, b2)
    hidden(*net.final)
    return net
