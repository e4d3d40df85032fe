"""End-to-end command-line checks on a deliberately tiny experiment so the
whole gen-data -> train-teacher -> build-distill -> distill -> eval loop runs
in seconds."""

import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from hyperinr.cli import main
from hyperinr.config import ExperimentConfig, default_config, save_config
from hyperinr.fields import ScalarField, load_field, save_field

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def tiny_tsr_config() -> ExperimentConfig:
    d = default_config("tsr").to_dict()
    d["dataset"] = {"dims": [10, 10, 10], "train_count": 3}
    d["encoder"].update(levels=3, table_size=512, features=2, base_resolution=2)
    d["mlp"] = {"width": 16, "hidden": 1}
    d["teacher"].update(width=24, encoder_blocks=1, trunk_blocks=1,
                        decoder_blocks=1, epochs=5, batch=256, lr=1e-4)
    d["atlas"] = {"plan": [{"kind": "even_1d", "count": 4}]}
    d["distill"].update(plan=[{"kind": "even_1d", "count": 5}], epochs=5,
                        batch=512)
    return ExperimentConfig.from_dict(d)


@pytest.fixture
def cfg_path(tmp_path):
    path = os.path.join(tmp_path, "tiny.json")
    save_config(tiny_tsr_config(), path)
    return path


def read_tree(root: str) -> dict[str, bytes]:
    out = {}
    for dirpath, _, names in os.walk(root):
        for name in names:
            full = os.path.join(dirpath, name)
            out[os.path.relpath(full, root)] = open(full, "rb").read()
    return out


class TestGenData:
    def test_writes_train_dir_and_config(self, cfg_path, tmp_path):
        out = os.path.join(tmp_path, "data")
        result = CliRunner().invoke(main, ["gen-data", "--config", cfg_path,
                                           "--out", out])
        assert result.exit_code == 0, result.output
        assert os.path.isdir(os.path.join(out, "train"))
        assert os.path.exists(os.path.join(out, "config.json"))
        assert "3 training fields" in result.output

    def test_two_runs_byte_identical(self, cfg_path, tmp_path):
        a = os.path.join(tmp_path, "a")
        b = os.path.join(tmp_path, "b")
        for out in (a, b):
            result = CliRunner().invoke(main, ["gen-data", "--config", cfg_path,
                                               "--out", out])
            assert result.exit_code == 0, result.output
        assert read_tree(a) == read_tree(b)

    def test_requires_config_or_task(self, tmp_path):
        result = CliRunner().invoke(main, ["gen-data", "--out",
                                           os.path.join(tmp_path, "x")])
        assert result.exit_code == 2

    def test_rejects_bad_config_file(self, tmp_path):
        bad = os.path.join(tmp_path, "bad.json")
        with open(bad, "w") as f:
            json.dump({"task": "tsr", "volume": {}}, f)
        result = CliRunner().invoke(main, ["gen-data", "--config", bad,
                                           "--out", os.path.join(tmp_path, "x")])
        assert result.exit_code == 2


class TestPipeline:
    def test_full_loop(self, cfg_path, tmp_path):
        runner = CliRunner()
        teacher = os.path.join(tmp_path, "teacher.hinr")
        dset = os.path.join(tmp_path, "dset")
        model = os.path.join(tmp_path, "model.hinr")
        metrics = os.path.join(tmp_path, "metrics.json")

        result = runner.invoke(main, ["train-teacher", "--config", cfg_path,
                                      "--out", teacher])
        assert result.exit_code == 0, result.output
        assert os.path.exists(teacher)
        assert os.path.exists(teacher + ".log.jsonl")

        result = runner.invoke(main, ["build-distill", "--config", cfg_path,
                                      "--teacher", teacher, "--out", dset])
        assert result.exit_code == 0, result.output
        assert "5 teacher fields" in result.output

        result = runner.invoke(main, ["distill", "--config", cfg_path,
                                      "--distill-set", dset, "--out", model])
        assert result.exit_code == 0, result.output
        assert "4 encoders" in result.output

        result = runner.invoke(main, ["eval", "--config", cfg_path,
                                      "--model", model,
                                      "--thetas", "0.25;0.75",
                                      "--out", metrics])
        assert result.exit_code == 0, result.output
        table = json.load(open(metrics))
        assert table["task"] == "tsr"
        assert len(table["rows"]) == 2
        row = table["rows"][0]
        assert row["theta"] == [0.25]
        for key in ("psnr_hyperinr", "psnr_lerp", "ssim_hyperinr", "ssim_lerp"):
            assert key in row
        assert "psnr_hyper" in result.output  # human-readable table header

        img = os.path.join(tmp_path, "frame.png")
        result = runner.invoke(main, ["render", "--config", cfg_path,
                                      "--model", model, "--theta", "0.4",
                                      "--size", "24", "--out", img])
        assert result.exit_code == 0, result.output
        assert open(img, "rb").read()[:8] == PNG_MAGIC

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_teacher_divergence_exits_3(self, tmp_path):
        cfg = tiny_tsr_config()
        cfg.teacher["lr"] = 1e12
        cfg.teacher["epochs"] = 150
        path = os.path.join(tmp_path, "hot.json")
        save_config(cfg, path)
        result = CliRunner().invoke(main, ["train-teacher", "--config", path,
                                           "--out", os.path.join(tmp_path, "t.hinr")])
        assert result.exit_code == 3


class TestRender:
    def test_reference_engine_needs_no_model(self, cfg_path, tmp_path):
        img = os.path.join(tmp_path, "ref.png")
        result = CliRunner().invoke(main, ["render", "--config", cfg_path,
                                           "--engine", "reference",
                                           "--theta", "0.5", "--size", "24",
                                           "--out", img])
        assert result.exit_code == 0, result.output
        assert open(img, "rb").read()[:8] == PNG_MAGIC

    def test_hyperinr_engine_requires_model(self, cfg_path, tmp_path):
        result = CliRunner().invoke(main, ["render", "--config", cfg_path,
                                           "--theta", "0.5",
                                           "--out", os.path.join(tmp_path, "x.png")])
        assert result.exit_code == 2

    def test_bad_theta_exits_2(self, cfg_path, tmp_path):
        result = CliRunner().invoke(main, ["render", "--config", cfg_path,
                                           "--engine", "reference",
                                           "--theta", "zero",
                                           "--out", os.path.join(tmp_path, "x.png")])
        assert result.exit_code == 2

    def test_field_render_is_deterministic(self, tmp_path):
        xs = np.linspace(0.0, 1.0, 12)
        gx, gy, gz = np.meshgrid(xs, xs, xs, indexing="ij")
        d2 = (gx - 0.5) ** 2 + (gy - 0.5) ** 2 + (gz - 0.5) ** 2
        fld = ScalarField(np.exp(-d2 / 0.05).astype(np.float32))
        raw = os.path.join(tmp_path, "blob.field")
        save_field(fld, raw)

        outs = []
        for name in ("one.png", "two.png"):
            img = os.path.join(tmp_path, name)
            result = CliRunner().invoke(main, ["render", "--field", raw,
                                               "--size", "20", "--out", img])
            assert result.exit_code == 0, result.output
            outs.append(open(img, "rb").read())
        assert outs[0][:8] == PNG_MAGIC
        assert outs[0] == outs[1]

    def test_ppm_extension_dispatch(self, tmp_path):
        fld = ScalarField(np.full((8, 8, 8), 0.5, dtype=np.float32))
        raw = os.path.join(tmp_path, "blob.field")
        save_field(fld, raw)
        img = os.path.join(tmp_path, "frame.ppm")
        result = CliRunner().invoke(main, ["render", "--field", raw,
                                           "--size", "8", "--out", img])
        assert result.exit_code == 0, result.output
        assert open(img, "rb").read()[:2] == b"P6"


class TestBakeShadows:
    def test_writes_unit_range_volume(self, tmp_path):
        out = os.path.join(tmp_path, "shadow.field")
        result = CliRunner().invoke(main, ["bake-shadows", "--theta", "0.6,0.8",
                                           "--out", out])
        assert result.exit_code == 0, result.output
        fld = load_field(out)
        assert fld.values.shape == (24, 24, 24)
        assert fld.values.min() >= 0.0 and fld.values.max() <= 1.0

    def test_rejects_wrong_theta_arity(self, tmp_path):
        result = CliRunner().invoke(main, ["bake-shadows", "--theta", "0.5",
                                           "--out", os.path.join(tmp_path, "s.field")])
        assert result.exit_code == 2
