import json

import pytest

from scenediff.cli import main


@pytest.fixture(scope="module")
def cli_env(tmp_path_factory):
    """One tiny gen-data -> train -> predict chain driven entirely via the CLI."""
    root = tmp_path_factory.mktemp("cli")
    cfg = {
        "latent_dim": 16, "vae_width": 32, "vae_layers": 1,
        "krp_width": 32, "krp_layers": 1, "mae_width": 32, "mae_layers": 1,
        "denoiser_width": 32, "denoiser_layers": 1,
        "region_points": 32, "diffusion_steps": 12, "beta_end": 0.85,
        "stage1_steps": 6, "stage2_steps": 4, "batch_size": 4,
        "train_samples": 6, "test_samples": 3, "scene_density": 25.0,
    }
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(cfg))
    data_dir = root / "data"
    run_dir = root / "run"
    assert main(["gen-data", "--config", str(cfg_path), "--out", str(data_dir)]) == 0
    assert main(["train-vae", "--config", str(cfg_path), "--data", str(data_dir / "train.jsonl"),
                 "--out", str(run_dir)]) == 0
    assert main(["train-diffusion", "--config", str(cfg_path), "--data", str(data_dir / "train.jsonl"),
                 "--vae-ckpt", str(run_dir / "vae.ckpt"), "--out", str(run_dir)]) == 0
    return {"root": root, "cfg": cfg_path, "data": data_dir, "run": run_dir}


class TestCliChain:
    def test_gen_data_outputs(self, cli_env):
        assert (cli_env["data"] / "train.jsonl").exists()
        assert (cli_env["data"] / "test.jsonl").exists()
        assert (cli_env["data"] / "train.jsonl.header.json").exists()

    def test_training_outputs(self, cli_env):
        assert (cli_env["run"] / "vae.ckpt").exists()
        assert (cli_env["run"] / "model.ckpt").exists()
        assert json.loads((cli_env["run"] / "stage1_log.json").read_text())

    def test_predict_command(self, cli_env, tmp_path):
        code = main(["predict", "--config", str(cli_env["cfg"]),
                     "--ckpt", str(cli_env["run"] / "model.ckpt"),
                     "--data", str(cli_env["data"] / "test.jsonl"),
                     "--index", "0", "--n-samples", "2", "--out", str(tmp_path)])
        assert code == 0
        doc = json.loads((tmp_path / "predictions.json").read_text())
        assert len(doc["predictions"]) == 2

    def test_evaluate_command(self, cli_env, tmp_path):
        code = main(["evaluate", "--config", str(cli_env["cfg"]),
                     "--ckpt", str(cli_env["run"] / "model.ckpt"),
                     "--data", str(cli_env["data"] / "test.jsonl"),
                     "--runs", "2", "--out", str(tmp_path)])
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["n_runs"] == 2

    def test_viz_command(self, cli_env, tmp_path):
        code = main(["viz", "--config", str(cli_env["cfg"]),
                     "--ckpt", str(cli_env["run"] / "model.ckpt"),
                     "--data", str(cli_env["data"] / "test.jsonl"),
                     "--index", "0", "--n-samples", "1", "--out", str(tmp_path / "viz")])
        assert code == 0
        assert (tmp_path / "viz" / "coords.json").exists()


class TestCliErrors:
    def test_missing_stage1_prints_error_json(self, cli_env, tmp_path, capsys):
        code = main(["train-diffusion", "--config", str(cli_env["cfg"]),
                     "--data", str(cli_env["data"] / "train.jsonl"),
                     "--vae-ckpt", str(tmp_path / "missing.ckpt"), "--out", str(tmp_path)])
        assert code != 0
        err = json.loads(capsys.readouterr().err.strip())
        assert err["error"] == "MissingStage1"

    def test_bad_sample_index_fails(self, cli_env, tmp_path, capsys):
        code = main(["predict", "--ckpt", str(cli_env["run"] / "model.ckpt"),
                     "--data", str(cli_env["data"] / "test.jsonl"),
                     "--index", "99", "--out", str(tmp_path)])
        assert code != 0
        err = json.loads(capsys.readouterr().err.strip())
        assert "99" in err["message"]

    def test_unknown_config_key_fails(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"no_such_field": 1}')
        code = main(["gen-data", "--config", str(bad), "--out", str(tmp_path / "d")])
        assert code != 0
        err = json.loads(capsys.readouterr().err.strip())
        assert "no_such_field" in err["message"]
