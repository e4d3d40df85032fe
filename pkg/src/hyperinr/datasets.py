"""Analytic synthetic datasets. Each generator is a pure function of its
parameters, so ground truth exists at any parameter value — not just the
training set — which is what makes generalization measurable.

Tasks:
  tsr — time-varying volume: two orbiting Gaussian blobs, parameter t.
  nvs — Lambertian sphere-and-plane scene, parameters (polar, azimuth).
  dgs — shadow volumes of one fixed density field under a moving light,
        parameters (polar, azimuth) of the light direction.
"""

from __future__ import annotations

import numpy as np

from .fields import ImageRGB, ScalarField, grid_coordinates

__all__ = [
    "synth_tsr",
    "synth_nvs",
    "dgs_density",
    "synth_dgs",
    "spherical_direction",
]

_TSR_SIGMA = 0.15
_TSR_RADIUS = 0.25
_TSR_AMPLITUDES = (1.0, 0.6)


def synth_tsr(t: float, dims: tuple[int, int, int] = (24, 24, 24)) -> ScalarField:
    """Two Gaussian blobs (unequal amplitudes, so the field has no extra
    symmetry) orbiting the domain center in the xy-plane with phase 2*pi*t,
    normalized so the lattice maximum is exactly 1."""
    if max(dims) > 64:
        raise ValueError("tsr fields are capped at 64 per axis")
    phase = 2.0 * np.pi * float(t)
    offset = _TSR_RADIUS * np.array([np.cos(phase), np.sin(phase), 0.0])
    center = np.array([0.5, 0.5, 0.5])
    c1 = center + offset
    c2 = center - offset

    coords = grid_coordinates(dims)
    inv = 1.0 / (2.0 * _TSR_SIGMA**2)
    a1, a2 = _TSR_AMPLITUDES
    d1 = ((coords - c1) ** 2).sum(axis=1)
    d2 = ((coords - c2) ** 2).sum(axis=1)
    vals = a1 * np.exp(-d1 * inv) + a2 * np.exp(-d2 * inv)
    vals /= vals.max()
    return ScalarField(vals.reshape(dims).astype(np.float32), theta=(float(t),))


def spherical_direction(polar: float, azimuth: float) -> np.ndarray:
    """Unit vector at inclination `polar` from +z, rotated `azimuth` about z."""
    sp = np.sin(polar)
    return np.array(
        [sp * np.cos(azimuth), sp * np.sin(azimuth), np.cos(polar)], dtype=np.float64
    )


_NVS_LIGHT = spherical_direction(0.45, 0.6)
_SPHERE_ALBEDO = np.array([0.80, 0.32, 0.25])
_PLANE_ALBEDO = np.array([0.38, 0.42, 0.47])
_SKY_TOP = np.array([0.60, 0.70, 0.90])
_SKY_BOTTOM = np.array([0.16, 0.20, 0.34])
_AMBIENT = 0.18


def synth_nvs(theta: tuple[float, float], size: int = 64) -> ImageRGB:
    """Analytic render of a Lambertian sphere over a ground plane, with a
    hard cast shadow, viewed from camera angles (polar, azimuth) on an orbit
    of fixed radius. The world light never moves, so mean image brightness
    genuinely depends on the view."""
    polar, azimuth = float(theta[0]), float(theta[1])
    eye = 3.0 * spherical_direction(polar, azimuth)

    fwd = -eye / np.linalg.norm(eye)
    up_ref = np.array([0.0, 0.0, 1.0])
    if abs(fwd @ up_ref) > 0.999:
        up_ref = np.array([0.0, 1.0, 0.0])
    right = np.cross(fwd, up_ref)
    right /= np.linalg.norm(right)
    up = np.cross(right, fwd)

    half = np.tan(np.deg2rad(45.0) / 2.0)
    px = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    u, v = np.meshgrid(px, -px, indexing="xy")  # row 0 at the top
    dirs = fwd + half * (u[..., None] * right + v[..., None] * up)
    dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
    d = dirs.reshape(-1, 3)
    n_rays = d.shape[0]

    # Sphere of radius 1 at the origin.
    b = d @ eye
    disc = b * b - (eye @ eye - 1.0)
    hit_s = disc > 0
    t_s = np.full(n_rays, np.inf)
    sq = np.sqrt(np.maximum(disc, 0.0))
    t_cand = -b - sq
    t_s[hit_s & (t_cand > 1e-6)] = t_cand[hit_s & (t_cand > 1e-6)]

    # Ground plane z = -1.
    dz = d[:, 2]
    t_p = np.where(np.abs(dz) > 1e-9, (-1.0 - eye[2]) / dz, np.inf)
    t_p = np.where(t_p > 1e-6, t_p, np.inf)

    light = _NVS_LIGHT
    img = np.empty((n_rays, 3))

    sky_mix = np.clip(0.5 * (d[:, 2] + 1.0), 0.0, 1.0)[:, None]
    img[:] = _SKY_BOTTOM + sky_mix * (_SKY_TOP - _SKY_BOTTOM)

    plane_first = t_p < t_s
    if np.any(plane_first):
        tp = t_p[plane_first, None]
        pt = eye + tp * d[plane_first]
        # Shadow: does the ray from pt toward the light hit the sphere?
        b2 = pt @ light
        c2 = (pt * pt).sum(axis=1) - 1.0
        occluded = (b2 * b2 - c2 > 0) & (-b2 > 0)
        lam = max(float(light[2]), 0.0) * np.where(occluded, 0.0, 1.0)
        img[plane_first] = _PLANE_ALBEDO * (_AMBIENT + (1 - _AMBIENT) * lam)[:, None]

    sphere_first = t_s <= t_p
    sphere_first &= np.isfinite(t_s)
    if np.any(sphere_first):
        ts = t_s[sphere_first, None]
        pt = eye + ts * d[sphere_first]
        n = pt / np.linalg.norm(pt, axis=1, keepdims=True)
        lam = np.maximum(n @ light, 0.0)
        img[sphere_first] = _SPHERE_ALBEDO * (_AMBIENT + (1 - _AMBIENT) * lam)[:, None]

    return ImageRGB(img.reshape(size, size, 3).astype(np.float32))


def dgs_density(dims: tuple[int, int, int] = (24, 24, 24)) -> ScalarField:
    """The fixed density volume whose shadows the dgs task learns: an
    off-phase snapshot of the orbiting-blob field (asymmetric on purpose)."""
    f = synth_tsr(0.15, dims)
    return ScalarField(f.values, theta=None)


def synth_dgs(
    theta: tuple[float, float], dims: tuple[int, int, int] = (24, 24, 24)
) -> ScalarField:
    """Ground-truth shadow volume for light angles (polar, azimuth): the
    transmittance toward that light at every lattice point of the fixed
    density field."""
    from .renderer import DirectionalLight, TransferFunction, bake_shadow_volume

    polar, azimuth = float(theta[0]), float(theta[1])
    light = DirectionalLight(direction=spherical_direction(polar, azimuth))
    baked = bake_shadow_volume(
        dgs_density(dims), TransferFunction.default(), light, dims
    )
    return ScalarField(baked.values, theta=(polar, azimuth))
