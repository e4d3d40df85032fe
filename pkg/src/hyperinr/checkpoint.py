"""Binary checkpoint container: magic "HINR", a version word, a JSON header
describing configs and blob layout, then raw little-endian parameter blobs.

Everything numeric rides in the blobs (float32 weights, float64 atlas
positions), so load(save(x)) is bit-exact and files are portable across
platforms. Headers carry no timestamps — identical inputs produce
identical bytes.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .hash_encoding import HashEncoder, HashEncoderConfig
from .hypernet import EncoderAtlas, HyperINRModel, ParamSpace
from .networks import CoordNet, CoordNetConfig, MLPConfig, SynthesisMLP

__all__ = [
    "save_model",
    "load_model",
    "save_teacher",
    "load_teacher",
    "peek_kind",
    "FORMAT_VERSION",
]

MAGIC = b"HINR"
FORMAT_VERSION = 1


def _write_container(path: str, header: dict, blobs: list[tuple[str, np.ndarray]]) -> None:
    layout = []
    payload = bytearray()
    for name, arr in blobs:
        dtype = "<f8" if arr.dtype == np.float64 else "<f4"
        data = np.ascontiguousarray(arr.reshape(-1)).astype(dtype, copy=False)
        layout.append({"name": name, "count": int(data.size), "dtype": dtype})
        payload += data.tobytes()
    header = dict(header, blobs=layout, format_version=FORMAT_VERSION)
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<Q", len(head)))
        f.write(head)
        f.write(payload)


def _read_container(path: str) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        (version,) = struct.unpack("<I", f.read(4))
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        (head_len,) = struct.unpack("<Q", f.read(8))
        header = json.loads(f.read(head_len).decode("utf-8"))
        blobs = {}
        for entry in header["blobs"]:
            raw = f.read(entry["count"] * (8 if entry["dtype"] == "<f8" else 4))
            arr = np.frombuffer(raw, dtype=entry["dtype"]).copy()
            blobs[entry["name"]] = arr.astype(
                np.float64 if entry["dtype"] == "<f8" else np.float32
            )
        trailing = f.read(1)
        if trailing:
            raise ValueError(f"{path}: trailing bytes after blobs")
    return header, blobs


def peek_kind(path: str) -> str:
    header, _ = _read_container(path)
    return header["kind"]


def save_model(model: HyperINRModel, path: str) -> None:
    atlas = model.atlas
    header = {
        "kind": "hyperinr",
        "space": atlas.space.to_dict(),
        "encoder_config": atlas.encoder_config.to_dict(),
        "mlp_config": model.shared_mlp.config.to_dict(),
        "k": model.k,
        "p": model.p,
        "n_encoders": len(atlas),
    }
    blobs: list[tuple[str, np.ndarray]] = [
        ("positions", atlas.positions.astype(np.float64)),
        ("mlp", model.shared_mlp.to_buffer().astype(np.float32)),
    ]
    for i, enc in enumerate(atlas.encoders):
        blobs.append((f"encoder_{i:05d}", enc.params.astype(np.float32)))
    _write_container(path, header, blobs)


def load_model(path: str) -> HyperINRModel:
    header, blobs = _read_container(path)
    if header["kind"] != "hyperinr":
        raise ValueError(f"{path}: expected a hyperinr checkpoint")
    space = ParamSpace.from_dict(header["space"])
    enc_cfg = HashEncoderConfig.from_dict(header["encoder_config"])
    mlp_cfg = MLPConfig.from_dict(header["mlp_config"])
    n = header["n_encoders"]
    positions = blobs["positions"].reshape(n, space.dim)
    encoders = [
        HashEncoder(enc_cfg, blobs[f"encoder_{i:05d}"].copy()) for i in range(n)
    ]
    atlas = EncoderAtlas(space, positions, encoders)
    mlp = SynthesisMLP.from_buffer(blobs["mlp"].copy(), mlp_cfg)
    return HyperINRModel(atlas=atlas, shared_mlp=mlp, k=header["k"], p=header["p"])


def save_teacher(net: CoordNet, path: str) -> None:
    header = {"kind": "coordnet", "config": net.config.to_dict()}
    _write_container(path, header, [("weights", net.to_buffer().astype(np.float32))])


def load_teacher(path: str) -> CoordNet:
    header, blobs = _read_container(path)
    if header["kind"] != "coordnet":
        raise ValueError(f"{path}: expected a coordnet checkpoint")
    cfg = CoordNetConfig.from_dict(header["config"])
    return CoordNet.from_buffer(blobs["weights"].copy(), cfg)
