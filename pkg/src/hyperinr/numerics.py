"""Deterministic numerics: flat parameter buffers, Adam, seeded RNG streams,
and a finite-difference gradient oracle used by the test suite.

All trainable parameters live in 32-bit buffers; oracles run in 64-bit.
Networks in this package define explicit backward passes, so there is no
autodiff graph here.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ParamBuffer",
    "AdamState",
    "Rng",
    "DivergenceError",
    "linear_forward",
    "adam_step",
    "finite_diff_grad",
]


class DivergenceError(RuntimeError):
    """Raised when an optimizer update sees non-finite gradients."""


@dataclass
class ParamBuffer:
    """A flat parameter array plus the logical shape it unflattens to.

    The flat layout is what checkpoints and the stateless evaluator operate
    on; `view()` gives the shaped alias without copying.
    """

    values: np.ndarray
    shape: tuple[int, ...]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values).reshape(-1)
        self.shape = tuple(int(s) for s in self.shape)
        if int(np.prod(self.shape)) != self.values.size:
            raise ValueError(
                f"shape {self.shape} does not match {self.values.size} values"
            )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ParamBuffer":
        arr = np.asarray(arr)
        return cls(arr.reshape(-1), arr.shape)

    def view(self) -> np.ndarray:
        return self.values.reshape(self.shape)

    def validate(self) -> None:
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite values in parameter buffer")

    def copy(self) -> "ParamBuffer":
        return ParamBuffer(self.values.copy(), self.shape)


@dataclass
class AdamState:
    """First/second moment buffers and hyperparameters for one Adam stream."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-10
    lr: float = 1e-3

    @classmethod
    def for_params(
        cls,
        params: np.ndarray,
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-10,
    ) -> "AdamState":
        params = np.asarray(params)
        return cls(
            m=np.zeros(params.size, dtype=params.dtype),
            v=np.zeros(params.size, dtype=params.dtype),
            step=0,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            lr=lr,
        )


def linear_forward(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Affine map W @ x + b for a single vector x."""
    x = np.asarray(x)
    W = np.asarray(W)
    b = np.asarray(b)
    if W.ndim != 2:
        raise ValueError(f"weight matrix must be 2-D, got shape {W.shape}")
    out_dim, in_dim = W.shape
    if x.shape != (in_dim,):
        raise ValueError(f"input shape {x.shape} does not match W {W.shape}")
    if b.shape != (out_dim,):
        raise ValueError(f"bias shape {b.shape} does not match W {W.shape}")
    return W @ x + b


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    weight_decay: float = 0.0,
) -> tuple[np.ndarray, AdamState]:
    """One in-place Adam update with bias correction.

    Weight decay is the additive L2 form: g <- g + wd * p. Rejects
    non-finite gradients with DivergenceError, leaving params and state
    untouched. Caller must hold exclusive access to `params` and `state`.
    """
    params = np.asarray(params)
    grads = np.asarray(grads)
    if params.shape != grads.shape or params.size != state.m.size:
        raise ValueError(
            f"param/grad/state sizes disagree: {params.shape}, {grads.shape}, "
            f"{state.m.shape}"
        )
    if state.lr <= 0:
        raise ValueError("learning rate must be positive")
    if not np.all(np.isfinite(grads)):
        raise DivergenceError("non-finite gradient in adam_step")

    g = grads if weight_decay == 0.0 else grads + weight_decay * params
    state.step += 1
    t = state.step
    state.m *= state.beta1
    state.m += ((1.0 - state.beta1) * g).astype(state.m.dtype, copy=False)
    state.v *= state.beta2
    state.v += ((1.0 - state.beta2) * g * g).astype(state.v.dtype, copy=False)
    m_hat = state.m / (1.0 - state.beta1**t)
    v_hat = state.v / (1.0 - state.beta2**t)
    params -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(
        params.dtype, copy=False
    )
    return params, state


def finite_diff_grad(f, params: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of a scalar function, in 64-bit.

    The test-suite oracle: (f(p + h e_i) - f(p - h e_i)) / 2h per coordinate.
    `f` must be pure.
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    p = np.array(params, dtype=np.float64)
    grad = np.zeros_like(p)
    flat = p.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(f(p))
        flat[i] = orig - h
        fm = float(f(p))
        flat[i] = orig
        out[i] = (fp - fm) / (2.0 * h)
    return grad


@dataclass
class Rng:
    """Counter-based random stream (Philox), reproducible across platforms.

    `spawn(tag)` derives an independent stream from the same seed so that
    parallel consumers never overlap.
    """

    seed: int
    stream: int = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._gen = np.random.Generator(
            np.random.Philox(key=np.array([self.seed, self.stream], dtype=np.uint64))
        )

    def spawn(self, tag: int | str) -> "Rng":
        """Derive an independent stream; string tags hash to a stable id."""
        if isinstance(tag, str):
            digest = hashlib.sha256(tag.encode("utf-8")).digest()
            tag = int.from_bytes(digest[:8], "little")
        if tag == self.stream:
            raise ValueError("spawned stream must use a fresh tag")
        return Rng(self.seed, tag)

    def uniform(
        self, lo: float = 0.0, hi: float = 1.0, size=None, dtype=np.float32
    ) -> np.ndarray:
        return np.asarray(self._gen.uniform(lo, hi, size=size), dtype=dtype)

    def normal(self, scale: float = 1.0, size=None, dtype=np.float32) -> np.ndarray:
        return np.asarray(self._gen.standard_normal(size=size) * scale, dtype=dtype)

    def integers(self, lo: int, hi: int, size=None) -> np.ndarray:
        return self._gen.integers(lo, hi, size=size)

    def shuffle(self, arr: np.ndarray) -> None:
        self._gen.shuffle(arr)
