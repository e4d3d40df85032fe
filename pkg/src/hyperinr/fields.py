"""Scalar-field and RGB-image containers with raw-blob + JSON-sidecar file
I/O. Values live in [0,1] as 32-bit floats; blobs are little-endian so files
travel across platforms.

Grid convention: a field of n samples per axis is node-centered, sample i at
coordinate i/(n-1), endpoints on the domain boundary.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

__all__ = [
    "ScalarField",
    "ImageRGB",
    "grid_coordinates",
    "save_field",
    "load_field",
    "load_sidecar",
    "save_image",
    "load_image",
    "encode_png",
    "save_ppm",
]


def _clamped(values: np.ndarray) -> np.ndarray:
    return np.clip(np.asarray(values, dtype=np.float32), 0.0, 1.0)


@dataclass
class ScalarField:
    """Dense scalar samples on a node-centered lattice over the unit square
    or cube; values shape (nx, ny) or (nx, ny, nz), C-ordered in the blob."""

    values: np.ndarray
    theta: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.values.ndim not in (2, 3):
            raise ValueError(f"fields are 2-D or 3-D, got {self.values.ndim}-D")
        self.values = _clamped(self.values)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.values.shape

    @classmethod
    def from_function(
        cls, fn, dims: tuple[int, ...], theta: tuple[float, ...] | None = None
    ) -> "ScalarField":
        """Sample fn over the lattice; fn maps (n, d) coords to n values."""
        coords = grid_coordinates(dims)
        vals = np.asarray(fn(coords), dtype=np.float32).reshape(dims)
        return cls(vals, theta)


@dataclass
class ImageRGB:
    """RGB raster, pixels shape (height, width, 3), row 0 at the top."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) pixels, got {self.pixels.shape}")
        self.pixels = _clamped(self.pixels)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def luma(self) -> np.ndarray:
        """Equal-weight channel average, shape (h, w)."""
        return self.pixels.mean(axis=2)


def grid_coordinates(dims: tuple[int, ...]) -> np.ndarray:
    """Node-centered lattice coordinates, shape (prod(dims), len(dims)),
    C-ordered to match ScalarField.values.reshape(-1)."""
    axes = [
        np.linspace(0.0, 1.0, n) if n > 1 else np.array([0.0]) for n in dims
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


# ---------------------------------------------------------------------------
# Field files: raw float32 blob + JSON sidecar
# ---------------------------------------------------------------------------


def _sidecar_path(path: str) -> str:
    return path + ".json"


def save_field(field: ScalarField, path: str) -> None:
    blob = field.values.astype("<f4").tobytes(order="C")
    meta = {
        "dims": list(field.dims),
        "dtype": "float32",
        "byte_order": "little",
        "value_range": [0.0, 1.0],
        "theta": None if field.theta is None else list(field.theta),
    }
    with open(path, "wb") as f:
        f.write(blob)
    with open(_sidecar_path(path), "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")


def load_sidecar(path: str) -> dict:
    """Metadata only; never touches the blob."""
    with open(_sidecar_path(path)) as f:
        meta = json.load(f)
    if "dims" not in meta:
        raise ValueError(f"sidecar {_sidecar_path(path)} missing dims")
    return meta


def load_field(path: str) -> ScalarField:
    meta = load_sidecar(path)
    dims = tuple(int(n) for n in meta["dims"])
    expected = int(np.prod(dims)) * 4
    actual = os.path.getsize(path)
    if actual != expected:
        raise ValueError(
            f"{path}: blob is {actual} bytes, sidecar dims {dims} want {expected}"
        )
    data = np.fromfile(path, dtype="<f4").reshape(dims)
    theta = meta.get("theta")
    return ScalarField(data, None if theta is None else tuple(theta))


# ---------------------------------------------------------------------------
# Images: PNG (via Pillow) and binary PPM
# ---------------------------------------------------------------------------


def _to_u8(pixels: np.ndarray) -> np.ndarray:
    return (np.clip(pixels, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def encode_png(image: ImageRGB) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(_to_u8(image.pixels), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def save_image(image: ImageRGB, path: str) -> None:
    if path.endswith(".ppm"):
        save_ppm(image, path)
        return
    with open(path, "wb") as f:
        f.write(encode_png(image))


def load_image(path: str) -> ImageRGB:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    return ImageRGB(arr)


def save_ppm(image: ImageRGB, path: str) -> None:
    u8 = _to_u8(image.pixels)
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header)
        f.write(u8.tobytes(order="C"))
