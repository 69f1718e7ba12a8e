"""Inference and evaluation on trained checkpoints.

Prediction runs the full pipeline: canonicalize the sample (center at the
last-history root, face +x), propose and hard-mask the key region, subsample
it, encode conditions, reverse-diffuse latents, decode, and map back into the
world frame. Evaluation repeats stochastic prediction over a test set and
aggregates metrics with confidence intervals.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from .checkpoint import Checkpoint, load_checkpoint, load_module_arrays
from .config import RunConfig
from .conditions import ConditionBundle
from .diffusion import sample_latents
from .data import canonicalize_sample, decanonicalize_frames
from .domain import MotionSequence, RngHandle, Sample
from .errors import EmptyRegion, IoFailure, MissingStage1
from .metrics import EvalReport, aggregate_runs, sample_metrics
from .region import hard_box_mask, propose_region, subsample_indices
from .synthdata import read_dataset
from .training import build_diffusion_models, build_vae, skeleton_from_dict

log = logging.getLogger(__name__)

STREAM_SUBSAMPLE = 41
STREAM_LATENT = 42
STREAM_EVAL = 43


class Predictor:
    """A trained model stack rebuilt from a stage-2 checkpoint."""

    def __init__(self, ckpt: Checkpoint):
        if ckpt.stage != "diffusion":
            raise MissingStage1(f"prediction needs a stage-2 checkpoint, got {ckpt.stage!r}")
        self.cfg = RunConfig.from_dict(ckpt.config)
        self.skeleton = skeleton_from_dict(ckpt.extra["skeleton"])
        self.schedule = self.cfg.schedule()
        self.vae = build_vae(self.cfg, self.skeleton)
        krp, mae, fusion, denoiser = build_diffusion_models(self.cfg, self.skeleton)
        self.krp, self.mae, self.fusion, self.denoiser = krp, mae, fusion, denoiser
        load_module_arrays(self.vae, ckpt.params, "vae")
        if self.cfg.use_krp:
            load_module_arrays(self.krp, ckpt.params, "krp")
        load_module_arrays(self.mae, ckpt.params, "mae")
        load_module_arrays(self.fusion, ckpt.params, "fusion")
        load_module_arrays(self.denoiser, ckpt.params, "denoiser")
        for m in (self.vae, self.krp, self.mae, self.fusion, self.denoiser):
            m.eval()
            m.requires_grad_(False)

    @classmethod
    def from_path(cls, path: str | Path) -> "Predictor":
        return cls(load_checkpoint(path))

    def _region_points(self, sample: Sample, rng: RngHandle) -> np.ndarray:
        """Hard-masked, fixed-size region subsample (whole scene when empty or KRP off)."""
        points = sample.scene.points
        if self.cfg.use_krp:
            box = propose_region(self.krp, sample.history, scene=sample.scene)
            weights = hard_box_mask(points, box.origin, box.dims)
        else:
            weights = np.ones(len(points))
        gen = rng.child(STREAM_SUBSAMPLE).numpy()
        try:
            sel = subsample_indices(weights, self.cfg.region_points, gen)
        except EmptyRegion:
            log.warning("key region contains no scene points; falling back to the whole scene")
            sel = subsample_indices(np.ones(len(points)), self.cfg.region_points, gen)
        return points[sel]

    def _condition_bundle(self, sample: Sample, rng: RngHandle) -> ConditionBundle:
        region = self._region_points(sample, rng)
        dtype = next(self.mae.parameters()).dtype
        with torch.no_grad():
            return self.mae(
                torch.tensor(sample.history.frames, dtype=dtype),
                torch.tensor(region, dtype=dtype),
            )

    def predict(self, sample: Sample, n_samples: int = 1, rng: RngHandle | None = None,
                method: str | None = None) -> list[MotionSequence]:
        """Draw n_samples futures for one input; rng fixes both region subsampling
        and the latent draws, so a given handle reproduces its outputs exactly."""
        rng = rng or RngHandle(0)
        canonical, offset, angle = canonicalize_sample(sample, self.skeleton)
        bundle = self._condition_bundle(canonical, rng)
        expanded = ConditionBundle(
            body=bundle.body.expand(n_samples, -1),
            scene=bundle.scene.expand(n_samples, -1),
            interaction=bundle.interaction.expand(n_samples, -1),
        )
        z = sample_latents(self.fusion, self.denoiser, expanded, self.schedule,
                           rng.child(STREAM_LATENT), method=method or self.cfg.sampler_method)
        with torch.no_grad():
            frames = self.vae.decode(z).numpy().astype(np.float64)
        fps = sample.history.fps
        return [MotionSequence(decanonicalize_frames(frames[i], offset, angle), fps=fps)
                for i in range(n_samples)]

    def evaluate(self, dataset_path: str | Path, n_runs: int = 20,
                 rng: RngHandle | None = None, out_path: str | Path | None = None,
                 method: str | None = None) -> EvalReport:
        """Repeat stochastic prediction n_runs times over the test set and aggregate.

        Condition bundles are deterministic given the rng, so they are computed
        once per sample and shared across runs; only the latent draws differ.
        """
        rng = rng or RngHandle(0)
        samples = read_dataset(dataset_path)
        canonical = [canonicalize_sample(s, self.skeleton) for s in samples]
        bundles = [self._condition_bundle(c, rng.child(STREAM_EVAL, i))
                   for i, (c, _, _) in enumerate(canonical)]
        batch_bundle = ConditionBundle(
            body=torch.cat([b.body for b in bundles]),
            scene=torch.cat([b.scene for b in bundles]),
            interaction=torch.cat([b.interaction for b in bundles]),
        )
        reports = []
        for run in range(n_runs):
            z = sample_latents(self.fusion, self.denoiser, batch_bundle, self.schedule,
                               rng.child(STREAM_EVAL, run, 1),
                               method=method or self.cfg.sampler_method)
            with torch.no_grad():
                frames = self.vae.decode(z).numpy().astype(np.float64)
            per_sample = []
            for i, sample in enumerate(samples):
                _, offset, angle = canonical[i]
                pred = MotionSequence(decanonicalize_frames(frames[i], offset, angle),
                                      fps=sample.future.fps)
                per_sample.append(sample_metrics(pred, sample.future, self.skeleton.root_index))
            reports.append({k: float(np.mean([m[k] for m in per_sample])) for k in per_sample[0]})
        report = aggregate_runs(reports)
        if out_path is not None:
            write_report(report, out_path)
        return report


def write_report(report: EvalReport, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write report {path}: {exc}") from exc
    return path


def evaluate_with(predict_fn: Callable[[Sample, RngHandle], MotionSequence],
                  samples: Sequence[Sample], root_index: int, n_runs: int,
                  rng: RngHandle | None = None) -> EvalReport:
    """Evaluation harness over an arbitrary per-sample predictor (used for oracles)."""
    rng = rng or RngHandle(0)
    reports = []
    for run in range(n_runs):
        per_sample = [
            sample_metrics(predict_fn(s, rng.child(run, i)), s.future, root_index)
            for i, s in enumerate(samples)
        ]
        reports.append({k: float(np.mean([m[k] for m in per_sample])) for k in per_sample[0]})
    return aggregate_runs(reports)
