"""Acceptance gate: one test per release criterion, each at its stated
tolerance. Oracles are recomputed here from first principles (big-integer
hashing, lexicographic brute-force KNN, closed-form metrics) rather than
shared with the implementation.

Run with `pytest tests/test_acceptance.py -v` for the per-criterion
pass/fail listing. The distillation and determinism criteria execute real
training runs and dominate the wall time.
"""

import json
import os
import time

import numpy as np
import pytest
from click.testing import CliRunner
from scipy.spatial import cKDTree

from hyperinr.cli import main as cli_main
from hyperinr.config import ExperimentConfig, default_config, save_config
from hyperinr.datasets import synth_tsr
from hyperinr.experiments import (
    atlas_positions,
    build_training_set,
    distill_positions,
    evaluate_instance_field,
    held_out_thetas,
    new_model,
    new_teacher,
)
from hyperinr.fields import ScalarField, grid_coordinates
from hyperinr.hash_encoding import (
    HashEncoder,
    HashEncoderConfig,
    encode_forward,
    vertex_index,
)
from hyperinr.hypernet import (
    EncoderAtlas,
    HyperINRModel,
    ParamSpace,
    assemble_inr,
    eval_inr,
    fast_path_1d,
    idw_weights,
)
from hyperinr.knn import KDTree
from hyperinr.metrics import psnr, ssim
from hyperinr.networks import (
    MLPConfig,
    SynthesisMLP,
    init_hash_encoder,
    init_mlp,
    mlp_forward,
)
from hyperinr.numerics import Rng
from hyperinr.renderer import (
    Camera,
    DirectionalLight,
    ShadowMode,
    TransferFunction,
    bake_shadow_volume,
    field_sampler,
    inr_sampler,
    raymarch,
)
from hyperinr.sampling import poisson_disk
from hyperinr.training import (
    DistillationSet,
    build_distillation_set,
    distill_hyperinr,
    lerp_baseline,
    loss_l1,
    stateless_evaluate,
    train_teacher,
)

UNIT = ParamSpace(("t",), (0.0,), (1.0,))


# ---------------------------------------------------------------------------
# 1. analytic gradients vs 64-bit central finite differences
# ---------------------------------------------------------------------------


def test_gradients_match_central_finite_differences():
    started = time.perf_counter()
    enc_cfg = HashEncoderConfig(dim=2, levels=3, table_size=128, features=2,
                                base_resolution=2)
    mlp_cfg = MLPConfig(in_dim=enc_cfg.out_dim, out_dim=1, width=8, hidden=2)
    rng = Rng(91)
    # O(1)-scale parameters keep ReLU pre-activations away from their kinks,
    # where central differences are meaningless
    enc_buf = rng.uniform(-0.5, 0.5, size=enc_cfg.total_params, dtype=np.float64)
    mlp_buf = rng.uniform(-0.6, 0.6, size=mlp_cfg.param_count, dtype=np.float64)
    coords = rng.uniform(size=(32, 2), dtype=np.float64)
    targets = rng.uniform(size=(32, 1), dtype=np.float64)

    def chain_loss(eb, mb):
        values, _ = stateless_evaluate(coords, eb, mb, enc_cfg, mlp_cfg)
        return loss_l1(values, targets)

    values, backward = stateless_evaluate(coords, enc_buf, mlp_buf, enc_cfg, mlp_cfg)
    upstream = np.sign(values - targets) / values.size
    g_enc, g_mlp = backward(upstream)

    h = 1e-6
    probes = 0
    pick = Rng(92)
    for buf, grad, which in ((enc_buf, g_enc, "enc"), (mlp_buf, g_mlp, "mlp")):
        idx = pick.integers(0, buf.size, size=60)
        for i in np.unique(idx):
            keep = buf[i]
            buf[i] = keep + h
            up = chain_loss(enc_buf, mlp_buf)
            buf[i] = keep - h
            dn = chain_loss(enc_buf, mlp_buf)
            buf[i] = keep
            fd = (up - dn) / (2.0 * h)
            denom = max(abs(fd), abs(grad[i]), 1e-6)
            assert abs(grad[i] - fd) / denom < 1e-3, (which, i, grad[i], fd)
            probes += 1

    assert probes >= 100
    assert time.perf_counter() - started < 60.0


# ---------------------------------------------------------------------------
# 2. assembling exactly at an atlas position reproduces that encoder
# ---------------------------------------------------------------------------


def test_assembled_inr_equals_standalone_encoder_at_atlas_positions():
    enc_cfg = HashEncoderConfig(dim=2, levels=4, table_size=1024, features=2,
                                base_resolution=2)
    mlp_cfg = MLPConfig(in_dim=enc_cfg.out_dim, out_dim=1, width=16, hidden=2)
    rng = Rng(7)
    positions = np.clip(0.05 + 0.9 * rng.uniform(size=(8, 2), dtype=np.float64),
                        0.0, 1.0)
    encoders = [init_hash_encoder(HashEncoder.zeros(enc_cfg), rng.spawn(f"e{i}"))
                for i in range(len(positions))]
    mlp = init_mlp(SynthesisMLP.zeros(mlp_cfg), rng.spawn("mlp"))
    space = ParamSpace(("a", "b"), (0.0, 0.0), (1.0, 1.0))
    model = HyperINRModel(atlas=EncoderAtlas(space, positions, encoders),
                          shared_mlp=mlp, k=4, p=1.0)

    coords = Rng(8).uniform(size=(1000, 2), dtype=np.float64)
    for j, pos in enumerate(positions):
        instance = assemble_inr(model, space.denormalize(pos))
        assembled = eval_inr(instance, coords)
        standalone = mlp_forward(mlp, encode_forward(encoders[j], coords))
        assert np.abs(assembled - standalone).max() < 1e-6


# ---------------------------------------------------------------------------
# 3. KD-tree equals an independent brute-force scan, exactly
# ---------------------------------------------------------------------------


def _brute_oracle(points: np.ndarray, query: np.ndarray, k: int):
    d2 = ((points - query) ** 2).sum(axis=1)
    order = np.lexsort((np.arange(len(points)), d2))[:k]
    return order, d2[order]


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_kdtree_matches_brute_force_exactly(dim):
    rng = Rng(100 + dim)
    points = rng.uniform(size=(100, dim), dtype=np.float64)
    tree = KDTree(points)
    queries = rng.uniform(-0.2, 1.2, size=(1000, dim), dtype=np.float64)
    for k in (1, 4):
        for q in queries:
            got_idx, got_d2 = tree.query(q, k)
            want_idx, want_d2 = _brute_oracle(points, q, k)
            np.testing.assert_array_equal(got_idx, want_idx)
            np.testing.assert_array_equal(got_d2, want_d2)


# ---------------------------------------------------------------------------
# 4. Poisson-disk sets: separated by construction, maximal in practice
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("dim,radius", [(1, 0.04), (2, 0.1), (3, 0.22)])
def test_poisson_disk_separation_and_maximality(dim, radius):
    pts = poisson_disk(dim, radius, Rng(50 + dim))
    tree = cKDTree(pts)
    pairs = tree.query_pairs(radius * (1.0 - 1e-12))
    assert not pairs, f"{len(pairs)} pairs closer than the radius"

    probes = Rng(51).uniform(size=(10_000, dim), dtype=np.float64)
    dist, _ = tree.query(probes, k=1)
    assert dist.max() < radius, "an empty disk survived; the set is not maximal"


# ---------------------------------------------------------------------------
# 5. lattice hashing against a big-integer reference
# ---------------------------------------------------------------------------

_PRIMES = (1, 2654435761, 805459861)


def _oracle_index(cell, resolution, table_size, dim):
    if (resolution + 1) ** dim <= table_size:
        idx = 0
        for c in cell:
            idx = idx * (resolution + 1) + int(c)
        return idx
    acc = 0
    for c, prime in zip(cell, _PRIMES[:dim]):
        acc ^= int(c) * prime
    return (acc & 0xFFFFFFFF) % table_size


def test_vertex_hashing_matches_big_integer_oracle():
    table = 2**15
    assert vertex_index((0, 1, 0), 65536, table, 3) == 31153
    assert vertex_index((0, 0, 0), 65536, table, 3) == 0

    rng = Rng(60)
    checked = 0
    for dim, resolution in ((1, 40_000), (2, 4096), (3, 512),
                            (2, 128), (3, 15)):
        cells = rng.integers(0, resolution + 1, size=(2000, dim))
        for cell in cells:
            got = vertex_index(tuple(cell), resolution, table, dim)
            assert got == _oracle_index(cell, resolution, table, dim)
            checked += 1
    assert checked >= 10_000


# ---------------------------------------------------------------------------
# 6. desk-scale time-series distillation beats the stored-frame baseline
# ---------------------------------------------------------------------------


@pytest.mark.slow
def test_tsr_distillation_reaches_quality_bar():
    started = time.perf_counter()
    cfg = default_config("tsr")
    dims = tuple(cfg.dataset["dims"])
    training = build_training_set(cfg)

    teacher = new_teacher(cfg)
    train_teacher(
        teacher,
        training,
        epochs=int(cfg.teacher["epochs"]),
        batch_size=int(cfg.teacher["batch"]),
        rng=Rng(cfg.seed).spawn("teacher-train"),
        lr=float(cfg.teacher["lr"]),
    )
    frames = build_distillation_set(
        teacher, cfg.space, distill_positions(cfg, training), cfg.coord_dims
    )

    model = new_model(cfg, atlas_positions(cfg, training))
    assert len(model.atlas) == 16
    distill_hyperinr(
        model,
        frames,
        epochs=int(cfg.distill["epochs"]),
        batch=int(cfg.distill["batch"]),
        rng=Rng(cfg.seed).spawn("distill-train"),
        lr=float(cfg.distill["lr"]),
    )

    ours, stored = [], []
    for theta in held_out_thetas(cfg, training):
        truth = synth_tsr(float(theta[0]), dims)
        instance = assemble_inr(model, theta)
        ours.append(psnr(evaluate_instance_field(cfg, instance), truth))
        stored.append(psnr(lerp_baseline(training, theta), truth))
    mean_ours = float(np.mean(ours))
    mean_stored = float(np.mean(stored))
    elapsed = time.perf_counter() - started

    assert mean_ours >= 25.0, f"held-out PSNR {mean_ours:.2f} dB"
    assert mean_ours >= mean_stored - 0.5, (
        f"{mean_ours:.2f} dB vs stored-frame interpolation {mean_stored:.2f} dB"
    )
    assert elapsed <= 30 * 60.0, f"pipeline took {elapsed:.0f}s"


# ---------------------------------------------------------------------------
# 7. 1-D bracket weights: inverse-distance equals linear interpolation
# ---------------------------------------------------------------------------


def test_bracket_idw_weights_equal_linear_weights():
    enc_cfg = HashEncoderConfig(dim=1, levels=2, table_size=64, features=1,
                                base_resolution=2)
    positions = np.sort(Rng(70).uniform(size=(16, 1), dtype=np.float64), axis=0)
    positions[0, 0], positions[-1, 0] = 0.0, 1.0
    encoders = [HashEncoder.zeros(enc_cfg) for _ in range(len(positions))]
    atlas = EncoderAtlas(UNIT, positions, encoders)

    ts = Rng(71).uniform(size=20_000, dtype=np.float64)
    flat = positions[:, 0]
    interior = ts[(ts > 0.0) & (ts < 1.0)]
    interior = interior[np.abs(interior[:, None] - flat[None, :]).min(axis=1) > 1e-12]
    assert len(interior) >= 10_000
    for t in interior[:10_000]:
        lo, hi, u = fast_path_1d(atlas, float(t))
        w = idw_weights([(lo, float(t) - flat[lo]), (hi, flat[hi] - float(t))],
                        p=1.0)
        assert abs(w[0] - (1.0 - u)) < 1e-9
        assert abs(w[1] - u) < 1e-9


# ---------------------------------------------------------------------------
# 8. renderer: analytic transmittance; baked-shadow INR vs secondary rays
# ---------------------------------------------------------------------------


@pytest.mark.slow
def test_renderer_transmittance_and_shadow_inr():
    # (a) homogeneous volume: unit-length chord, analytic compositing limit
    cam = Camera(eye=(0.5, 0.5, -2.0), up=(0.0, 1.0, 0.0), fov_deg=1.0,
                 width=1, height=1)
    for alpha in (0.01, 0.05):
        img = raymarch(
            field_sampler(ScalarField(np.full((4, 4, 4), 1.0, np.float32))),
            cam,
            TransferFunction.constant_alpha(alpha),
        )
        transmitted = 1.0 - float(img.pixels[0, 0, 0])
        assert abs(transmitted - (1.0 - alpha) ** 256) < 1e-3

    # (b) fit an INR to the baked shadow volume, then weigh its lookups
    # against full secondary-ray marching
    xs = np.linspace(0.0, 1.0, 20)
    gx, gy, gz = np.meshgrid(xs, xs, xs, indexing="ij")
    d2 = (gx - 0.5) ** 2 + (gy - 0.5) ** 2 + (gz - 0.5) ** 2
    density = ScalarField(np.exp(-d2 / 0.02).astype(np.float32))
    tf = TransferFunction(((0.0, (1.0, 1.0, 1.0, 0.0)),
                           (1.0, (1.0, 1.0, 1.0, 0.08))))
    light = DirectionalLight(direction=(0.3, 0.2, 0.93))
    baked = bake_shadow_volume(density, tf, light, (32, 32, 32))

    enc_cfg = HashEncoderConfig(dim=3, levels=8, table_size=2**15, features=4,
                                base_resolution=4)
    mlp_cfg = MLPConfig(in_dim=enc_cfg.out_dim, out_dim=1, width=32, hidden=2)
    rng = Rng(81)
    shadow_model = HyperINRModel(
        atlas=EncoderAtlas(
            UNIT,
            np.array([[0.0]]),
            [init_hash_encoder(HashEncoder.zeros(enc_cfg), rng.spawn("enc"))],
        ),
        shared_mlp=init_mlp(SynthesisMLP.zeros(mlp_cfg), rng.spawn("mlp")),
        k=1,
        p=1.0,
    )
    frames = DistillationSet(UNIT, [(0.0,)], fields=[baked])
    distill_hyperinr(shadow_model, frames, epochs=1500, batch=4096,
                     rng=Rng(82), lr=1e-2)
    instance = assemble_inr(shadow_model, np.array([0.0]))

    fit = np.clip(
        eval_inr(instance, grid_coordinates((32, 32, 32))), 0.0, 1.0
    ).reshape(32, 32, 32)
    fit_db = psnr(ScalarField(fit.astype(np.float32)), baked)
    assert fit_db >= 40.0, f"shadow INR fit {fit_db:.1f} dB"

    cam = Camera(eye=(1.9, 1.35, 1.55), width=24, height=24)
    ref = raymarch(field_sampler(density), cam, tf, light,
                   ShadowMode.secondary_rays())
    via = raymarch(field_sampler(density), cam, tf, light,
                   ShadowMode.shadow_inr(inr_sampler(instance)))
    diff = np.abs(ref.pixels.astype(np.float64) - via.pixels).mean()
    assert diff < 0.02, f"mean abs pixel difference {diff:.4f}"


# ---------------------------------------------------------------------------
# 9. assembly latency: bounded, and flat in the atlas size
# ---------------------------------------------------------------------------


@pytest.mark.slow
def test_assembly_latency_bounded_and_size_independent():
    enc_cfg = HashEncoderConfig(dim=2, levels=8, table_size=2**15, features=4,
                                base_resolution=16)
    mlp_cfg = MLPConfig(in_dim=enc_cfg.out_dim, out_dim=1, width=64, hidden=4)
    space = ParamSpace(("a", "b"), (0.0, 0.0), (1.0, 1.0))
    rng = Rng(90)
    positions = rng.uniform(size=(400, 2), dtype=np.float64)
    encoders = [
        init_hash_encoder(HashEncoder.zeros(enc_cfg), rng.spawn(f"e{i}"))
        for i in range(400)
    ]
    mlp = init_mlp(SynthesisMLP.zeros(mlp_cfg), rng.spawn("mlp"))

    def best_assembly_ms(count: int) -> float:
        model = HyperINRModel(
            atlas=EncoderAtlas(space, positions[:count], encoders[:count]),
            shared_mlp=mlp, k=4, p=1.0,
        )
        thetas = Rng(91).uniform(size=(12, 2), dtype=np.float64)
        assemble_inr(model, thetas[0])  # warm-up
        times = []
        for theta in thetas:
            t0 = time.perf_counter()
            assemble_inr(model, theta)
            times.append((time.perf_counter() - t0) * 1e3)
        return float(np.min(times))

    at_200 = best_assembly_ms(200)
    assert at_200 <= 50.0, f"assembly took {at_200:.2f} ms"

    at_50 = best_assembly_ms(50)
    at_400 = best_assembly_ms(400)
    ratio = at_400 / at_50
    assert 0.8 <= ratio <= 1.2, (
        f"assembly scales with atlas size: {at_50:.2f} ms at 50 vs "
        f"{at_400:.2f} ms at 400"
    )


# ---------------------------------------------------------------------------
# 10. metric closed forms
# ---------------------------------------------------------------------------


def test_metric_closed_forms():
    a = np.zeros((32, 32), dtype=np.float64)
    b = np.full((32, 32), 0.1, dtype=np.float64)
    assert abs(psnr(a, b) - 20.0) < 1e-9  # MSE exactly 0.01

    field = Rng(17).uniform(size=(24, 24), dtype=np.float64)
    assert abs(ssim(field, field) - 1.0) < 1e-9

    mu_a, mu_b, c1 = 0.25, 0.75, 0.01**2
    closed = (2 * mu_a * mu_b + c1) / (mu_a**2 + mu_b**2 + c1)
    got = ssim(np.full((16, 16), mu_a), np.full((16, 16), mu_b))
    assert abs(got - closed) < 1e-9


# ---------------------------------------------------------------------------
# 11. the whole pipeline is bit-deterministic under a fixed seed
# ---------------------------------------------------------------------------


def _tiny_pipeline_config() -> ExperimentConfig:
    d = default_config("tsr").to_dict()
    d["dataset"] = {"dims": [10, 10, 10], "train_count": 3}
    d["encoder"].update(levels=3, table_size=512, features=2, base_resolution=2)
    d["mlp"] = {"width": 16, "hidden": 1}
    d["teacher"].update(width=24, encoder_blocks=1, trunk_blocks=1,
                        decoder_blocks=1, epochs=40, batch=256, lr=1e-4)
    d["atlas"] = {"plan": [{"kind": "even_1d", "count": 4}]}
    d["distill"].update(plan=[{"kind": "even_1d", "count": 5}], epochs=30,
                        batch=512)
    return ExperimentConfig.from_dict(d)


@pytest.mark.slow
def test_pipeline_bit_identical_across_runs(tmp_path):
    cfg_path = os.path.join(tmp_path, "cfg.json")
    save_config(_tiny_pipeline_config(), cfg_path)
    runner = CliRunner()

    def run(tag: str) -> dict[str, bytes]:
        root = os.path.join(tmp_path, tag)
        os.makedirs(root)
        teacher = os.path.join(root, "teacher.hinr")
        dset = os.path.join(root, "dset")
        model = os.path.join(root, "model.hinr")
        metrics = os.path.join(root, "metrics.json")
        steps = [
            ["gen-data", "--config", cfg_path, "--out", os.path.join(root, "data")],
            ["train-teacher", "--config", cfg_path, "--data",
             os.path.join(root, "data"), "--out", teacher],
            ["build-distill", "--config", cfg_path, "--teacher", teacher,
             "--out", dset],
            ["distill", "--config", cfg_path, "--distill-set", dset,
             "--out", model],
            ["eval", "--config", cfg_path, "--model", model,
             "--thetas", "0.2;0.8", "--out", metrics],
        ]
        for argv in steps:
            result = runner.invoke(cli_main, argv)
            assert result.exit_code == 0, (argv, result.output)
        return {
            "teacher": open(teacher, "rb").read(),
            "model": open(model, "rb").read(),
            "metrics": open(metrics, "rb").read(),
        }

    first = run("one")
    second = run("two")
    assert first["teacher"] == second["teacher"]
    assert first["model"] == second["model"]
    assert first["metrics"] == second["metrics"]
    table = json.loads(first["metrics"])
    assert {"psnr_hyperinr", "psnr_lerp"} <= set(table["rows"][0])
