"""CPU volume renderer: front-to-back ray marching of scalar fields or
assembled INRs through a piecewise-linear transfer function, with one
directional light and three shadow modes — unshadowed, secondary rays
marched toward the light, or a lookup into a shadow INR.

Conventions: the volume occupies the unit cube; DirectionalLight.direction
points from the scene toward the light source; opacity is corrected for
step size against a reference step of 1/256; rows are processed in fixed
blocks so the image never depends on how work is scheduled.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .fields import ImageRGB, ScalarField, grid_coordinates
from .hypernet import INRInstance, eval_inr
from .metrics import psnr

__all__ = [
    "Camera",
    "TransferFunction",
    "DirectionalLight",
    "ShadowMode",
    "field_sampler",
    "inr_sampler",
    "grid_cache_sampler",
    "raymarch",
    "bake_shadow_volume",
    "render_compare",
    "CompareResult",
    "STEP_REF",
]

STEP_REF = 1.0 / 256.0
_EXIT_TRANSMITTANCE = 1e-3
_AMBIENT = 0.2
_ROW_BLOCK = 16


@dataclass(frozen=True)
class Camera:
    eye: tuple[float, float, float]
    look_at: tuple[float, float, float] = (0.5, 0.5, 0.5)
    up: tuple[float, float, float] = (0.0, 0.0, 1.0)
    fov_deg: float = 45.0
    width: int = 64
    height: int = 64

    def __post_init__(self) -> None:
        if np.allclose(self.eye, self.look_at):
            raise ValueError("eye must differ from look_at")
        if not 0.0 < self.fov_deg < 180.0:
            raise ValueError("vertical fov must be in (0, 180)")
        if min(self.width, self.height) < 1:
            raise ValueError("image must be at least 1x1")

    def rays(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel-center ray directions, shape (h*w, 3), row 0 at the top."""
        eye = np.asarray(self.eye, dtype=np.float64)
        fwd = np.asarray(self.look_at, dtype=np.float64) - eye
        fwd /= np.linalg.norm(fwd)
        up_ref = np.asarray(self.up, dtype=np.float64)
        right = np.cross(fwd, up_ref)
        nrm = np.linalg.norm(right)
        if nrm < 1e-9:
            raise ValueError("up vector is parallel to the view direction")
        right /= nrm
        up = np.cross(right, fwd)

        half_v = np.tan(np.deg2rad(self.fov_deg) / 2.0)
        half_u = half_v * self.width / self.height
        us = ((np.arange(self.width) + 0.5) / self.width * 2.0 - 1.0) * half_u
        vs = (1.0 - (np.arange(self.height) + 0.5) / self.height * 2.0) * half_v
        u, v = np.meshgrid(us, vs, indexing="xy")
        dirs = fwd + u[..., None] * right + v[..., None] * up
        dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
        return eye, dirs.reshape(-1, 3)


@dataclass(frozen=True)
class TransferFunction:
    """Ordered (scalar, rgba) control points, piecewise-linear in between.
    Scalars must strictly increase from 0 to 1; alpha stays in [0, 1]."""

    points: tuple[tuple[float, tuple[float, float, float, float]], ...]

    def __post_init__(self) -> None:
        s = [p[0] for p in self.points]
        if len(s) < 2 or s[0] != 0.0 or s[-1] != 1.0:
            raise ValueError("control points must span [0, 1]")
        if any(b <= a for a, b in zip(s, s[1:])):
            raise ValueError("control-point scalars must strictly increase")
        if any(not 0.0 <= p[1][3] <= 1.0 for p in self.points):
            raise ValueError("alpha must lie in [0, 1]")

    @classmethod
    def default(cls) -> "TransferFunction":
        return cls(
            (
                (0.0, (0.03, 0.05, 0.30, 0.00)),
                (0.25, (0.10, 0.55, 0.80, 0.04)),
                (0.60, (0.90, 0.85, 0.20, 0.30)),
                (1.0, (0.95, 0.25, 0.10, 0.85)),
            )
        )

    @classmethod
    def constant_alpha(cls, alpha: float, rgb=(1.0, 1.0, 1.0)) -> "TransferFunction":
        r, g, b = rgb
        return cls(((0.0, (r, g, b, alpha)), (1.0, (r, g, b, alpha))))

    def apply(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
        xs = np.array([p[0] for p in self.points])
        ys = np.array([p[1] for p in self.points])  # (n, 4)
        rgba = np.stack([np.interp(v, xs, ys[:, c]) for c in range(4)], axis=-1)
        return rgba[..., :3], rgba[..., 3]

    def to_dict(self) -> dict:
        return {"points": [[s, list(rgba)] for s, rgba in self.points]}

    @classmethod
    def from_dict(cls, d: dict) -> "TransferFunction":
        return cls(tuple((float(s), tuple(rgba)) for s, rgba in d["points"]))


@dataclass(frozen=True)
class DirectionalLight:
    """`direction` points from the scene toward the light source."""

    direction: tuple[float, float, float] = (0.4, 0.3, 0.866)
    intensity: float = 1.0

    def __post_init__(self) -> None:
        d = np.asarray(self.direction, dtype=np.float64)
        n = np.linalg.norm(d)
        if n < 1e-12:
            raise ValueError("light direction must be nonzero")
        object.__setattr__(self, "direction", tuple(d / n))

    @property
    def vec(self) -> np.ndarray:
        return np.asarray(self.direction, dtype=np.float64)


@dataclass(frozen=True)
class ShadowMode:
    """One of: no shadows, secondary rays marched toward the light, or a
    scalar shadow-field lookup (typically an INR fit to a baked volume)."""

    kind: str
    shadow_sampler: object = None

    @classmethod
    def none(cls) -> "ShadowMode":
        return cls("none")

    @classmethod
    def secondary_rays(cls) -> "ShadowMode":
        return cls("secondary_rays")

    @classmethod
    def shadow_inr(cls, source) -> "ShadowMode":
        sampler = inr_sampler(source) if isinstance(source, INRInstance) else source
        if not callable(sampler):
            raise ValueError("shadow_inr needs an INRInstance or a sampler")
        return cls("shadow_inr", sampler)


# ---------------------------------------------------------------------------
# Samplers: (n, 3) coordinates in the unit cube -> (n,) scalars
# ---------------------------------------------------------------------------


def field_sampler(fld: ScalarField):
    """D-linear interpolation on the node-centered lattice."""
    vals = fld.values.astype(np.float64)
    dims = np.array(vals.shape, dtype=np.int64)
    flat = vals.reshape(-1)
    strides = np.ones(len(dims), dtype=np.int64)
    for axis in range(len(dims) - 2, -1, -1):
        strides[axis] = strides[axis + 1] * dims[axis + 1]
    d = len(dims)
    bits = np.array(list(itertools.product((0, 1), repeat=d)), dtype=np.int64)

    def sample(x: np.ndarray) -> np.ndarray:
        x = np.clip(np.atleast_2d(np.asarray(x, dtype=np.float64)), 0.0, 1.0)
        pos = x * (dims - 1)
        base = np.minimum(np.floor(pos).astype(np.int64), dims - 2)
        base = np.maximum(base, 0)
        frac = pos - base
        out = np.zeros(x.shape[0], dtype=np.float64)
        for bit in bits:
            corner = base + bit
            w = np.ones(x.shape[0], dtype=np.float64)
            for axis in range(d):
                w *= frac[:, axis] if bit[axis] else 1.0 - frac[:, axis]
            out += w * flat[corner @ strides]
        return out

    return sample


def inr_sampler(instance: INRInstance):
    """Direct scalar evaluation of an assembled INR."""
    if instance.mlp_config.out_dim != 1:
        raise ValueError("volume sampling needs a scalar-output INR")

    def sample(x: np.ndarray) -> np.ndarray:
        y = eval_inr(instance, np.atleast_2d(np.asarray(x, dtype=np.float64)))
        return np.clip(np.asarray(y, dtype=np.float64).reshape(-1), 0.0, 1.0)

    return sample


def grid_cache_sampler(instance: INRInstance, dims: tuple[int, int, int] = (64, 64, 64)):
    """Sample the INR once on a lattice, then interpolate from the cache.
    Trades a bounded bake cost for constant-time ray samples."""
    coords = grid_coordinates(dims)
    out = np.empty(coords.shape[0], dtype=np.float64)
    chunk = 65536
    for lo in range(0, coords.shape[0], chunk):
        hi = min(lo + chunk, coords.shape[0])
        out[lo:hi] = np.asarray(
            eval_inr(instance, coords[lo:hi]), dtype=np.float64
        ).reshape(-1)
    cache = ScalarField(out.reshape(dims).astype(np.float32))
    return field_sampler(cache)


# ---------------------------------------------------------------------------
# Marching
# ---------------------------------------------------------------------------


def _slab_intersect(eye: np.ndarray, dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Entry/exit distances of rays against the unit cube; entry clamped to 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = (0.0 - eye) / dirs
        hi = (1.0 - eye) / dirs
    near = np.minimum(lo, hi)
    far = np.maximum(lo, hi)
    near = np.where(np.isnan(near), -np.inf, near)
    far = np.where(np.isnan(far), np.inf, far)
    t0 = np.maximum(near.max(axis=1), 0.0)
    t1 = far.min(axis=1)
    return t0, t1


def _corrected_alpha(alpha: np.ndarray, step: float) -> np.ndarray:
    return 1.0 - (1.0 - alpha) ** (step / STEP_REF)


def _light_transmittance(
    sampler, pts: np.ndarray, tf: TransferFunction, light: DirectionalLight, step: float
) -> np.ndarray:
    """March from each point toward the light to the cube boundary,
    accumulating corrected opacity; returns transmittance per point."""
    trans = np.ones(pts.shape[0], dtype=np.float64)
    lv = light.vec
    i = 0
    while True:
        q = pts + ((i + 0.5) * step) * lv
        live = ((q >= 0.0) & (q <= 1.0)).all(axis=1) & (trans >= _EXIT_TRANSMITTANCE)
        if not live.any():
            return trans
        _, a = tf.apply(sampler(q[live]))
        trans[live] *= 1.0 - _corrected_alpha(a, step)
        i += 1


def _shadow_coefficient(
    mode: ShadowMode, sampler, pts: np.ndarray, tf, light, step: float
) -> np.ndarray:
    if mode.kind == "none":
        return np.ones(pts.shape[0], dtype=np.float64)
    if mode.kind == "secondary_rays":
        return _light_transmittance(sampler, pts, tf, light, step)
    return np.clip(mode.shadow_sampler(pts), 0.0, 1.0)


def raymarch(
    sampler,
    camera: Camera,
    tf: TransferFunction,
    light: DirectionalLight | None = None,
    mode: ShadowMode | None = None,
    step: float = STEP_REF,
) -> ImageRGB:
    """Front-to-back compositing over the unit cube; black background."""
    if not 0.0 < step <= 0.1:
        raise ValueError("step must be in (0, 0.1]")
    light = light or DirectionalLight()
    mode = mode or ShadowMode.none()
    eye, dirs = camera.rays()
    n = dirs.shape[0]
    img = np.zeros((n, 3), dtype=np.float64)

    block = _ROW_BLOCK * camera.width
    for start in range(0, n, block):
        stop = min(start + block, n)
        d = dirs[start:stop]
        t0, t1 = _slab_intersect(eye, d)
        color = np.zeros((d.shape[0], 3), dtype=np.float64)
        trans = np.ones(d.shape[0], dtype=np.float64)
        i = 0
        while True:
            t = t0 + (i + 0.5) * step
            live = (t < t1) & (trans >= _EXIT_TRANSMITTANCE)
            if not live.any():
                break
            pts = np.clip(eye + t[live, None] * d[live], 0.0, 1.0)
            rgb, a = tf.apply(sampler(pts))
            a = _corrected_alpha(a, step)
            s = _shadow_coefficient(mode, sampler, pts, tf, light, step)
            shaded = rgb * (_AMBIENT + (1.0 - _AMBIENT) * s)[:, None] * light.intensity
            color[live] += (trans[live] * a)[:, None] * shaded
            trans[live] *= 1.0 - a
            i += 1
        img[start:stop] = color

    return ImageRGB(img.reshape(camera.height, camera.width, 3).astype(np.float32))


def bake_shadow_volume(
    fld,
    tf: TransferFunction,
    light: DirectionalLight,
    dims: tuple[int, int, int],
    step: float = STEP_REF,
) -> ScalarField:
    """Transmittance toward the light at every lattice point of `dims`.
    Accepts a ScalarField or any sampler callable."""
    sampler = field_sampler(fld) if isinstance(fld, ScalarField) else fld
    centers = grid_coordinates(dims)
    trans = _light_transmittance(sampler, centers, tf, light, step)
    return ScalarField(trans.reshape(dims).astype(np.float32))


@dataclass
class CompareResult:
    image_hyper: ImageRGB
    image_lerp: ImageRGB
    image_reference: ImageRGB
    psnr_hyper: float
    psnr_lerp: float


def render_compare(
    sampler_hyper,
    sampler_lerp,
    sampler_reference,
    camera: Camera,
    tf: TransferFunction,
    light: DirectionalLight | None = None,
    mode: ShadowMode | None = None,
    step: float = STEP_REF,
) -> CompareResult:
    """Render the model, the interpolation baseline, and ground truth under
    one scene; image-space fidelity is scored against the reference."""
    image_h = raymarch(sampler_hyper, camera, tf, light, mode, step)
    image_l = raymarch(sampler_lerp, camera, tf, light, mode, step)
    image_r = raymarch(sampler_reference, camera, tf, light, mode, step)
    return CompareResult(
        image_hyper=image_h,
        image_lerp=image_l,
        image_reference=image_r,
        psnr_hyper=psnr(image_h, image_r),
        psnr_lerp=psnr(image_l, image_r),
    )
