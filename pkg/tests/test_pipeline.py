import json

import numpy as np
import pytest
import torch

from scenediff.checkpoint import load_checkpoint
from scenediff.domain import RngHandle
from scenediff.errors import InsufficientRuns, MissingStage1
from scenediff.metrics import ade
from scenediff.predict import Predictor, evaluate_with
from scenediff.synthdata import read_dataset
from scenediff.training import train_diffusion, train_vae
from scenediff.viz import export_viz


class TestStageOrdering:
    def test_diffusion_without_stage1_file_raises(self, mini_cfg, tiny_dataset, tmp_path):
        with pytest.raises(MissingStage1):
            train_diffusion(mini_cfg, tiny_dataset, tmp_path / "nope.ckpt")

    def test_diffusion_rejects_wrong_stage(self, mini_ckpts, mini_cfg, tiny_dataset):
        model_ckpt = load_checkpoint(mini_ckpts["model"])
        with pytest.raises(MissingStage1):
            train_diffusion(mini_cfg, tiny_dataset, model_ckpt)


class TestTrainingDeterminism:
    def test_same_seed_identical_checkpoints(self, mini_cfg, tiny_dataset, tmp_path):
        cfg = mini_cfg.with_overrides({"stage1_steps": 8})
        a, _ = train_vae(cfg, tiny_dataset, out_path=tmp_path / "a.ckpt")
        b, _ = train_vae(cfg, tiny_dataset, out_path=tmp_path / "b.ckpt")
        assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()

    def test_vae_frozen_during_stage2(self, mini_ckpts):
        vae_params = load_checkpoint(mini_ckpts["vae"]).params
        model_params = load_checkpoint(mini_ckpts["model"]).params
        for name, arr in vae_params.items():
            assert np.array_equal(arr, model_params[name]), f"{name} changed in stage 2"

    def test_resume_reproduces_loss_trajectory(self, mini_cfg, tiny_dataset, tmp_path):
        cfg = mini_cfg.with_overrides({"stage1_steps": 12})
        _, full_history = train_vae(cfg, tiny_dataset)

        cfg_half = mini_cfg.with_overrides({"stage1_steps": 6})
        half_ckpt, _ = train_vae(cfg_half, tiny_dataset)
        resumed_ckpt, resumed_history = train_vae(cfg, tiny_dataset, resume_from=half_ckpt)

        tail = full_history[6:]
        assert len(resumed_history) == len(tail)
        for a, b in zip(tail, resumed_history):
            assert abs(a["total"] - b["total"]) <= 1e-5 * max(1.0, abs(a["total"]))

    def test_stage2_resume_reproduces_loss_trajectory(self, mini_cfg, tiny_dataset, mini_ckpts):
        cfg = mini_cfg.with_overrides({"stage2_steps": 8})
        _, full_history = train_diffusion(cfg, tiny_dataset, mini_ckpts["vae"])

        cfg_half = mini_cfg.with_overrides({"stage2_steps": 4})
        half_ckpt, _ = train_diffusion(cfg_half, tiny_dataset, mini_ckpts["vae"])
        _, resumed = train_diffusion(cfg, tiny_dataset, mini_ckpts["vae"], resume_from=half_ckpt)
        tail = full_history[4:]
        assert len(resumed) == len(tail)
        for a, b in zip(tail, resumed):
            assert abs(a["loss"] - b["loss"]) <= 1e-5 * max(1.0, abs(a["loss"]))


class TestPredict:
    def test_prediction_shapes_and_diversity(self, mini_ckpts):
        predictor = Predictor.from_path(mini_ckpts["model"])
        sample = read_dataset(mini_ckpts["data"])[0]
        preds = predictor.predict(sample, n_samples=3, rng=RngHandle(5))
        assert len(preds) == 3
        for p in preds:
            assert p.frames.shape == (10, 18, 3)
            assert np.isfinite(p.frames).all()
        assert ade(preds[0], preds[1]) > 0
        assert ade(preds[0], preds[2]) > 0

    def test_fixed_seed_reproducible(self, mini_ckpts):
        predictor = Predictor.from_path(mini_ckpts["model"])
        sample = read_dataset(mini_ckpts["data"])[1]
        a = predictor.predict(sample, n_samples=2, rng=RngHandle(9))
        b = predictor.predict(sample, n_samples=2, rng=RngHandle(9))
        for x, y in zip(a, b):
            assert np.array_equal(x.frames, y.frames)

    def test_krp_disabled_variant_predicts(self, mini_cfg, tiny_dataset, tmp_path):
        cfg = mini_cfg.with_overrides({"use_krp": False, "stage1_steps": 5, "stage2_steps": 3})
        vae_ckpt, _ = train_vae(cfg, tiny_dataset, out_path=tmp_path / "v.ckpt")
        train_diffusion(cfg, tiny_dataset, tmp_path / "v.ckpt", out_path=tmp_path / "m.ckpt")
        predictor = Predictor.from_path(tmp_path / "m.ckpt")
        sample = read_dataset(tiny_dataset)[0]
        preds = predictor.predict(sample, n_samples=1, rng=RngHandle(0))
        assert preds[0].frames.shape == (10, 18, 3)


class TestEvaluate:
    def test_single_run_raises_insufficient(self, mini_ckpts, tiny_dataset):
        predictor = Predictor.from_path(mini_ckpts["model"])
        with pytest.raises(InsufficientRuns):
            predictor.evaluate(tiny_dataset, n_runs=1, rng=RngHandle(0))

    def test_report_horizons_and_ci(self, mini_ckpts, tiny_dataset, tmp_path):
        predictor = Predictor.from_path(mini_ckpts["model"])
        out = tmp_path / "report.json"
        report = predictor.evaluate(tiny_dataset, n_runs=3, rng=RngHandle(0), out_path=out)
        assert sorted(report.pose_error_by_horizon) == [0.5, 1.0, 1.5, 2.0]
        assert sorted(report.path_error_by_horizon) == [0.5, 1.0, 1.5, 2.0]
        assert report.n_runs == 3
        assert all(np.isfinite(v) for v in report.to_json().values())
        assert all(v >= 0 for k, v in report.ci95.items())
        saved = json.loads(out.read_text())
        assert saved == {k: v for k, v in report.to_json().items()}

    def test_ground_truth_against_itself_is_zero(self, tiny_dataset):
        samples = read_dataset(tiny_dataset)[:4]
        report = evaluate_with(lambda s, rng: s.future, samples, root_index=0, n_runs=2)
        assert report.ade == 0.0
        assert report.fde == 0.0
        assert all(v == 0.0 for v in report.pose_error_by_horizon.values())


class TestViz:
    def test_file_counts_and_bitwise_coords(self, mini_ckpts, tmp_path):
        predictor = Predictor.from_path(mini_ckpts["model"])
        sample = read_dataset(mini_ckpts["data"])[0]
        preds = predictor.predict(sample, n_samples=2, rng=RngHandle(1))
        files = export_viz(sample, preds, tmp_path / "viz")
        names = sorted(f.name for f in files)
        assert names.count("trajectory.png") == 1
        assert names.count("coords.json") == 1
        assert sum(n.startswith("frame_") for n in names) == 10  # one per future frame
        coords = json.loads((tmp_path / "viz" / "coords.json").read_text())
        stored = np.asarray(coords["predictions"][0], dtype=np.float32)
        assert np.array_equal(stored, preds[0].frames.astype(np.float32))

    def test_empty_predictions_writes_history_only(self, mini_ckpts, tmp_path):
        sample = read_dataset(mini_ckpts["data"])[0]
        files = export_viz(sample, [], tmp_path / "viz2")
        names = sorted(f.name for f in files)
        assert names == ["coords.json", "trajectory.png"]
        coords = json.loads((tmp_path / "viz2" / "coords.json").read_text())
        assert coords["predictions"] == []


class TestSpecExamples:
    def test_step0_loss_matches_fresh_model(self, mini_cfg, tiny_dataset):
        # the loss logged at step 0 is reproducible from a newly built model,
        # because initialization and batching derive from the seed alone
        import torch

        from scenediff.data import batch_indices, load_training_set
        from scenediff.training import STREAM_STAGE1, build_vae
        from scenediff.vae import reparameterize, vae_loss

        cfg = mini_cfg.with_overrides({"stage1_steps": 3})
        _, history = train_vae(cfg, tiny_dataset)

        ts = load_training_set(tiny_dataset)
        model = build_vae(cfg, ts.skeleton)
        rng = RngHandle(cfg.seed, (STREAM_STAGE1,))
        idx = batch_indices(rng.child(0, 0), len(ts), cfg.batch_size)
        batch = ts.future[idx]
        eps = torch.randn(len(idx), cfg.latent_dim, generator=rng.child(0, 1).torch())
        mu, sigma = model.encode(batch)
        recon = model.decode(reparameterize(mu, sigma, eps))
        losses = vae_loss(batch, recon, mu, sigma, cfg.vae_config())
        assert losses["total"].item() == history[0]["total"]

    def test_ancestral_sampler_predicts(self, mini_ckpts):
        predictor = Predictor.from_path(mini_ckpts["model"])
        sample = read_dataset(mini_ckpts["data"])[0]
        preds = predictor.predict(sample, n_samples=2, rng=RngHandle(3), method="ancestral")
        assert len(preds) == 2
        assert all(np.isfinite(p.frames).all() for p in preds)
        literal = predictor.predict(sample, n_samples=2, rng=RngHandle(3), method="literal")
        assert ade(preds[0], literal[0]) > 0

    def test_paper_profile_constructs(self):
        from scenediff.config import RunConfig

        cfg = RunConfig.paper()
        assert cfg.latent_dim == 512
        assert cfg.denoiser_layers == 9
        schedule = cfg.schedule()
        assert schedule.K == 1000
        assert schedule.alpha_bar_at(1000) < 1e-3
        cfg.vae_config(), cfg.krp_config(), cfg.mae_config(), cfg.denoiser_config()
