import numpy as np
import pytest

from hyperinr.hash_encoding import HashEncoder, HashEncoderConfig
from hyperinr.hypernet import EncoderAtlas, HyperINRModel, ParamSpace
from hyperinr.networks import MLPConfig, SynthesisMLP, init_hash_encoder, init_mlp
from hyperinr.numerics import Rng


def tiny_encoder_config(dim: int = 2, **overrides) -> HashEncoderConfig:
    kw = dict(dim=dim, levels=2, table_size=64, features=2, base_resolution=2)
    kw.update(overrides)
    return HashEncoderConfig(**kw)


def unit_space(dim: int = 1) -> ParamSpace:
    names = tuple(f"p{i}" for i in range(dim))
    return ParamSpace(names=names, lower=(0.0,) * dim, upper=(1.0,) * dim)


def make_atlas(positions, enc_config=None, seed: int = 0) -> EncoderAtlas:
    positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    cfg = enc_config or tiny_encoder_config(dim=positions.shape[1] if False else 2)
    rng = Rng(seed)
    encoders = [
        init_hash_encoder(HashEncoder.zeros(cfg), rng.spawn(f"enc-{i}"))
        for i in range(positions.shape[0])
    ]
    return EncoderAtlas(unit_space(positions.shape[1]), positions, encoders)


def make_model(positions, enc_config=None, k: int = 0, seed: int = 0) -> HyperINRModel:
    atlas = make_atlas(positions, enc_config=enc_config, seed=seed)
    mlp_cfg = MLPConfig(
        in_dim=atlas.encoders[0].config.out_dim, out_dim=1, width=16, hidden=2
    )
    mlp = init_mlp(SynthesisMLP.zeros(mlp_cfg), Rng(seed).spawn("mlp"))
    return HyperINRModel(atlas=atlas, shared_mlp=mlp, k=k)


@pytest.fixture
def rng() -> Rng:
    return Rng(1234)
