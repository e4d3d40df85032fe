"""The encoding's integer arithmetic is checked against a big-integer
oracle: products and XORs computed in unbounded Python ints, truncated to
32 bits only at the end. Any deviation in wraparound behaviour shows up as
an index mismatch."""

import numpy as np
import pytest

from hyperinr.hash_encoding import (
    HASH_PRIMES,
    HashEncoder,
    HashEncoderConfig,
    encode_backward,
    encode_forward,
    level_resolution,
    table_entries,
    vertex_index,
)
from hyperinr.networks import init_hash_encoder
from hyperinr.numerics import Rng, finite_diff_grad

from conftest import tiny_encoder_config


def oracle_index(cell, resolution: int, table_size: int, dim: int) -> int:
    dense_rows = (resolution + 1) ** dim
    if dense_rows <= table_size:
        idx = 0
        for c in cell:
            idx = idx * (resolution + 1) + int(c)
        return idx
    acc = 0
    for c, prime in zip(cell, HASH_PRIMES[:dim]):
        acc ^= int(c) * prime
    return (acc & 0xFFFFFFFF) % table_size


class TestLevelResolution:
    def test_base_level(self):
        cfg = HashEncoderConfig(dim=3, base_resolution=4)
        assert level_resolution(cfg, 1) == 4

    def test_geometric_growth(self):
        cfg = HashEncoderConfig(dim=3, base_resolution=4)
        assert level_resolution(cfg, 3) == 16

    def test_base_eight(self):
        cfg = HashEncoderConfig(dim=2, base_resolution=8)
        assert level_resolution(cfg, 2) == 16


class TestVertexIndex:
    def test_origin_hashes_to_zero(self):
        assert vertex_index((0, 0, 0), 64, 2**15, 3) == 0

    def test_second_prime_fixture(self):
        # (0,1,0) leaves only the second prime: 2654435761 mod 32768
        assert vertex_index((0, 1, 0), 64, 2**15, 3) == 31153

    def test_dense_row_major(self):
        # resolution 4 -> 5 vertices per axis, slowest axis first
        assert vertex_index((2, 3), 4, 2**15, 2) == 2 * 5 + 3

    def test_matches_big_integer_oracle(self):
        rng = Rng(101)
        for dim in (1, 2, 3):
            res = 512  # (513)^dim overflows any practical table: hashed
            cells = rng.integers(0, res + 1, size=(2000, dim))
            for cell in cells:
                got = vertex_index(tuple(cell), res, 2**15, dim)
                assert got == oracle_index(cell, res, 2**15, dim)

    def test_dense_vs_hashed_switch(self):
        cfg = tiny_encoder_config(dim=2, table_size=64, base_resolution=2, levels=3)
        # R=2 -> 9 dense rows; R=4 -> 25 dense rows; R=8 -> 81 > 64 hashed
        assert table_entries(cfg, 1) == 9
        assert table_entries(cfg, 2) == 25
        assert table_entries(cfg, 3) == 64


class TestEncodeForward:
    def test_zero_tables(self):
        cfg = tiny_encoder_config()
        enc = HashEncoder.zeros(cfg)
        out = encode_forward(enc, np.array([[0.3, 0.7]], dtype=np.float64))
        np.testing.assert_array_equal(out, 0.0)
        assert out.shape == (1, cfg.out_dim)

    def test_partition_of_unity(self):
        # constant tables -> constant output, for any coordinate
        cfg = tiny_encoder_config(levels=1)
        enc = HashEncoder.zeros(cfg)
        enc.params[:] = 0.625
        xs = Rng(3).uniform(size=(64, 2), dtype=np.float64)
        out = encode_forward(enc, xs)
        np.testing.assert_allclose(out, 0.625, rtol=1e-6)

    def test_1d_midpoint(self):
        cfg = HashEncoderConfig(
            dim=1, levels=1, table_size=64, features=1, base_resolution=1
        )
        enc = HashEncoder.zeros(cfg)
        enc.params[0] = 0.0
        enc.params[1] = 1.0
        # x*R + 0.5 must land on fractional part 0.5 -> x = 0 with R = 1
        out = encode_forward(enc, np.array([[0.0]], dtype=np.float64))
        assert out[0, 0] == pytest.approx(0.5)

    def test_linearity_in_params(self):
        cfg = tiny_encoder_config()
        rng = Rng(4)
        a = init_hash_encoder(HashEncoder.zeros(cfg), rng.spawn("a"))
        xs = rng.spawn("x").uniform(size=(32, 2), dtype=np.float64)
        doubled = HashEncoder(cfg, a.params * 2.0)
        np.testing.assert_allclose(
            encode_forward(doubled, xs), 2.0 * encode_forward(a, xs), rtol=1e-5
        )


class TestEncodeBackward:
    def test_zero_upstream(self):
        cfg = tiny_encoder_config()
        enc = init_hash_encoder(HashEncoder.zeros(cfg), Rng(5))
        xs = Rng(6).uniform(size=(8, 2), dtype=np.float64)
        g = encode_backward(enc, xs, np.zeros((8, cfg.out_dim)))
        np.testing.assert_array_equal(g, 0.0)

    def test_corner_weights_sum_to_upstream(self):
        # per level/feature, the scattered gradient mass equals the upstream
        cfg = tiny_encoder_config(levels=2, features=1)
        enc = HashEncoder.zeros(cfg)
        xs = Rng(7).uniform(size=(5, 2), dtype=np.float64)
        up = np.ones((5, cfg.out_dim))
        g = encode_backward(enc, xs, up)
        for lvl in range(cfg.levels):
            offsets = cfg.level_offsets()
            lo, hi = offsets[lvl], offsets[lvl + 1]
            assert g[lo:hi].sum() == pytest.approx(5.0, rel=1e-6)

    def test_matches_finite_differences(self):
        cfg = tiny_encoder_config()
        rng = Rng(8)
        enc = init_hash_encoder(HashEncoder.zeros(cfg), rng)
        params = enc.params.astype(np.float64)
        xs = rng.spawn("x").uniform(size=(6, 2), dtype=np.float64)
        up = rng.spawn("u").uniform(-1, 1, size=(6, cfg.out_dim), dtype=np.float64)

        def objective(p):
            return float((encode_forward(HashEncoder(cfg, p), xs) * up).sum())

        grad = encode_backward(HashEncoder(cfg, params), xs, up)
        fd = finite_diff_grad(objective, params)
        denom = np.abs(fd).max() + 1e-12
        assert np.abs(grad - fd).max() / denom < 1e-3


class TestInit:
    def test_entries_within_bound(self):
        cfg = HashEncoderConfig(dim=3)
        enc = init_hash_encoder(HashEncoder.zeros(cfg), Rng(9))
        assert np.all(np.abs(enc.params) < 1e-4)
        assert np.any(enc.params != 0.0)

    def test_mean_near_zero(self):
        cfg = HashEncoderConfig(dim=3, levels=1, table_size=2**15, features=4)
        enc = init_hash_encoder(HashEncoder.zeros(cfg), Rng(10))
        n = enc.params.size
        sigma = (1e-4 / np.sqrt(3.0)) / np.sqrt(n)
        assert abs(float(enc.params.mean())) < 3.0 * sigma

    def test_deterministic(self):
        cfg = tiny_encoder_config()
        a = init_hash_encoder(HashEncoder.zeros(cfg), Rng(11))
        b = init_hash_encoder(HashEncoder.zeros(cfg), Rng(11))
        np.testing.assert_array_equal(a.params, b.params)
