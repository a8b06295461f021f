import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from latres import serialization
from latres.cli import build_parser, main, parse_grid
from latres.config import RunConfig, dump_run_config, load_run_config
from latres.errors import ConfigurationError, ValidationError


class TestGridParsing:
    def test_colon_grid_inclusive(self):
        assert parse_grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_comma_list_and_scalar(self):
        assert parse_grid("0,0.5,1") == [0.0, 0.5, 1.0]
        assert parse_grid("0.5") == [0.5]

    def test_bad_grid(self):
        with pytest.raises(ValidationError):
            parse_grid("0:1:0")
        with pytest.raises(ValidationError):
            parse_grid("a:b:c")


class TestRunConfig:
    def test_round_trip(self, tmp_path):
        cfg = RunConfig().with_seed(7)
        path = tmp_path / "cfg.json"
        dump_run_config(cfg, path)
        loaded = load_run_config(path)
        assert loaded == cfg
        # serialize -> parse -> serialize is stable
        dump_run_config(loaded, tmp_path / "cfg2.json")
        assert (tmp_path / "cfg.json").read_text() == (tmp_path / "cfg2.json").read_text()

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"seed": 1, "learning_rate": 2}))
        with pytest.raises(ConfigurationError, match="unknown keys"):
            load_run_config(path)

    def test_nested_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"vae": {"stepz": 5}}))
        with pytest.raises(ConfigurationError, match="stepz"):
            load_run_config(path)

    def test_type_errors_reported(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"seed": "five"}))
        with pytest.raises(ConfigurationError, match="seed"):
            load_run_config(path)


class TestCLISmoke:
    def test_help_everywhere(self, capsys):
        parser = build_parser()
        for cmd in (
            ["dataset"], ["train-vae"], ["train-restorer"], ["train-lora"],
            ["infer"], ["sweep-alpha"], ["serve"],
            ["analyze", "cdcs"], ["analyze", "spectrum"], ["analyze", "encode"],
        ):
            with pytest.raises(SystemExit) as exc:
                parser.parse_args(cmd + ["--help"])
            assert exc.value.code == 0
            out = capsys.readouterr().out
            assert "--seed" in out

    def test_unknown_subcommand_exits_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["frobnicate"])
        assert exc.value.code == 1
        assert "error" in capsys.readouterr().err

    def test_missing_required_flag_exits_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["dataset"])  # --out missing
        assert exc.value.code == 1

    def test_validation_error_exit_code(self, tmp_path, capsys):
        rc = main(["train-vae", "--dataset", str(tmp_path / "nope"), "--out", str(tmp_path / "x.ckpt")])
        assert rc == 1


class TestDatasetCommand:
    def test_build_and_reproducibility(self, tmp_path, capsys):
        out1, out2 = tmp_path / "d1", tmp_path / "d2"
        args = ["dataset", "--count", "4", "--resolution", "32", "--seed", "9",
                "--kinds", "gaussian_noise,low_light"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0

        def tree_hash(root: Path) -> str:
            digest = hashlib.sha256()
            for p in sorted(root.rglob("*.png")):
                digest.update(p.read_bytes())
            return digest.hexdigest()

        assert tree_hash(out1) == tree_hash(out2)
        assert (out1 / "resolved_config.json").exists()
        manifest = json.loads((out1 / "manifest.json").read_text())
        assert manifest["count"] == 4 and manifest["seed"] == 9


@pytest.mark.slow
class TestEndToEndCommands:
    def test_full_pipeline(self, tmp_path, capsys):
        ds = tmp_path / "ds"
        assert main(["dataset", "--out", str(ds), "--count", "6", "--resolution", "64", "--seed", "4"]) == 0
        vae = tmp_path / "vae.ckpt"
        assert main(["train-vae", "--dataset", str(ds), "--out", str(vae), "--steps", "8", "--seed", "1"]) == 0
        assert vae.exists() and Path(str(vae) + ".log.json").exists()
        res = tmp_path / "res.ckpt"
        assert main(["train-restorer", "--dataset", str(ds), "--ckpt", str(vae), "--out", str(res), "--steps", "6", "--seed", "1"]) == 0
        lora = tmp_path / "lora.ckpt"
        assert main(["train-lora", "--dataset", str(ds), "--ckpt", str(res), "--out", str(lora), "--steps", "3", "--seed", "1"]) == 0

        capsys.readouterr()
        out_png = tmp_path / "restored.png"
        rc = main([
            "infer", "--ckpt", str(lora),
            "--in", str(ds / "deg" / "gaussian_noise" / "0000.png"),
            "--out", str(out_png), "--alpha", "0.6",
            "--ref", str(ds / "clean" / "0000.png"),
        ])
        assert rc == 0 and out_png.exists()
        metrics = json.loads(capsys.readouterr().out.strip())
        assert {"psnr", "ssim", "lpips_proxy", "hf_energy_gap"} <= set(metrics)

        sweep_dir = tmp_path / "sweep"
        rc = main([
            "sweep-alpha", "--ckpt", str(lora), "--dataset", str(ds),
            "--grid", "0:1:0.5", "--out", str(sweep_dir),
        ])
        assert rc == 0
        rows = json.loads((sweep_dir / "sweep.json").read_text())
        assert [r["alpha"] for r in rows] == [0.0, 0.5, 1.0]
        csv_lines = (sweep_dir / "sweep.csv").read_text().strip().splitlines()
        assert len(csv_lines) == 4  # header + 3 rows

        lat_dir = tmp_path / "latents"
        assert main(["analyze", "encode", "--ckpt", str(lora), "--dataset", str(ds), "--out", str(lat_dir)]) == 0
        capsys.readouterr()
        assert main(["analyze", "cdcs", "--latents", str(lat_dir), "--bands"]) == 0
        report = json.loads(capsys.readouterr().out.strip())
        assert -1.0 <= report["overall"] <= 1.0
        assert set(report["per_band"]) == {"low", "high"}

        capsys.readouterr()
        assert main(["analyze", "spectrum", "--input", str(ds / "clean" / "0000.png")]) == 0
        spec = json.loads(capsys.readouterr().out.strip())
        assert 0.0 < spec["hf_energy_proportion"] < 1.0

    def test_seeded_training_reproducible(self, tmp_path):
        ds = tmp_path / "ds"
        main(["dataset", "--out", str(ds), "--count", "4", "--resolution", "64", "--seed", "2"])
        c1, c2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        main(["train-vae", "--dataset", str(ds), "--out", str(c1), "--steps", "5", "--seed", "3"])
        main(["train-vae", "--dataset", str(ds), "--out", str(c2), "--steps", "5", "--seed", "3"])
        assert c1.read_bytes() == c2.read_bytes()
