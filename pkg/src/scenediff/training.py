"""Two-stage training: motion VAE first, then the conditional latent
diffusion stack (region proposer, condition encoder, fusion, denoiser)
with the VAE frozen.

All per-step randomness (batch composition, reparameterization noise,
diffusion step indices) is derived from (seed, stage, step), so resuming
from a checkpoint reproduces the uninterrupted run exactly.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Callable

import numpy as np
import torch

from .checkpoint import (Checkpoint, load_checkpoint, load_module_arrays, load_optimizer_arrays,
                         module_arrays, optimizer_arrays, save_checkpoint)
from .conditions import ConditionEncoder
from .config import RunConfig
from .data import batch_indices, load_training_set
from .diffusion import ConditionFusion, NoiseDenoiser, diffusion_loss
from .domain import RngHandle, SkeletonSpec
from .errors import EmptyRegion, MissingStage1, NonFiniteLoss
from .nn import init_parameters
from .region import (RegionProposer, soft_box_weights, straight_through_box_weights,
                     subsample_indices)
from .vae import MotionVae, reparameterize, vae_loss

log = logging.getLogger(__name__)

# rng stream ids; never reuse one for two purposes
STREAM_INIT_VAE = 11
STREAM_INIT_KRP = 12
STREAM_INIT_MAE = 13
STREAM_INIT_FUSION = 14
STREAM_INIT_DENOISER = 15
STREAM_STAGE1 = 21
STREAM_STAGE2 = 22

StopFn = Callable[[list[dict]], bool]


def lr_at(step: int, total_steps: int, peak: float, warmup: int) -> float:
    """Linear warmup into a cosine decay to zero; a pure function of the step,
    so resumed runs see the identical schedule."""
    if warmup > 0 and step < warmup:
        return peak * (step + 1) / warmup
    span = max(total_steps - warmup, 1)
    return peak * 0.5 * (1.0 + math.cos(math.pi * min(step - warmup, span) / span))


def skeleton_to_dict(skeleton: SkeletonSpec) -> dict:
    return {
        "joint_count": skeleton.joint_count,
        "joint_names": list(skeleton.joint_names),
        "root_index": skeleton.root_index,
        "bone_edges": [list(e) for e in skeleton.bone_edges],
    }


def skeleton_from_dict(raw: dict) -> SkeletonSpec:
    return SkeletonSpec(
        joint_count=raw["joint_count"],
        joint_names=tuple(raw["joint_names"]),
        root_index=raw["root_index"],
        bone_edges=tuple(tuple(e) for e in raw["bone_edges"]),
    )


def build_vae(cfg: RunConfig, skeleton: SkeletonSpec) -> MotionVae:
    model = MotionVae(cfg.vae_config(), cfg.future_frames, skeleton.joint_count)
    init_parameters(model, RngHandle(cfg.seed, (STREAM_INIT_VAE,)).torch())
    return model


def build_diffusion_models(cfg: RunConfig, skeleton: SkeletonSpec):
    rng = RngHandle(cfg.seed)
    krp = RegionProposer(cfg.krp_config(), cfg.history_frames, skeleton.joint_count,
                         skeleton.root_index)
    init_parameters(krp, rng.child(STREAM_INIT_KRP).torch())
    mae = ConditionEncoder(cfg.mae_config(), cfg.history_frames, skeleton.joint_count)
    init_parameters(mae, rng.child(STREAM_INIT_MAE).torch())
    fusion = ConditionFusion(cfg.latent_dim, branches=cfg.branches(), mode=cfg.fusion_mode,
                             use_step_embedding=cfg.fusion_step_embedding)
    init_parameters(fusion, rng.child(STREAM_INIT_FUSION).torch())
    denoiser = NoiseDenoiser(cfg.denoiser_config(), cond_dim=fusion.fused_dim)
    init_parameters(denoiser, rng.child(STREAM_INIT_DENOISER).torch())
    return krp, mae, fusion, denoiser


def _named_params(modules: dict[str, torch.nn.Module]) -> tuple[list[str], list[torch.nn.Parameter]]:
    names, params = [], []
    for prefix, module in modules.items():
        for name, p in module.named_parameters():
            names.append(f"{prefix}.{name}")
            params.append(p)
    return names, params


def train_vae(cfg: RunConfig, dataset_path: str | Path, out_path: str | Path | None = None,
              resume_from: Checkpoint | None = None,
              stop_fn: StopFn | None = None) -> tuple[Checkpoint, list[dict]]:
    """Stage 1: optimize the motion VAE on future clips; returns (checkpoint, loss history)."""
    ts = load_training_set(dataset_path)
    model = build_vae(cfg, ts.skeleton)
    names, params = _named_params({"vae": model})
    peak_lr = cfg.stage1_lr if cfg.stage1_lr is not None else cfg.lr
    optimizer = torch.optim.AdamW(params, lr=peak_lr, weight_decay=cfg.weight_decay,
                                  betas=(0.9, cfg.adam_beta2))
    start_step = 0
    if resume_from is not None:
        load_module_arrays(model, resume_from.params, "vae")
        if resume_from.optimizer:
            load_optimizer_arrays(optimizer, names, resume_from.optimizer)
        start_step = resume_from.step

    rng = RngHandle(cfg.seed, (STREAM_STAGE1,))
    vcfg = cfg.vae_config()
    history: list[dict] = []

    def snapshot(step: int) -> Checkpoint:
        return Checkpoint(
            stage="vae", step=step, config=cfg.to_dict(),
            params=module_arrays(model, "vae"),
            optimizer=optimizer_arrays(optimizer, names),
            extra={"skeleton": skeleton_to_dict(ts.skeleton)},
        )

    step = start_step
    for step in range(start_step, cfg.stage1_steps):
        lr = lr_at(step, cfg.stage1_steps, peak_lr, cfg.lr_warmup_steps)
        for group in optimizer.param_groups:
            group["lr"] = lr
        idx = batch_indices(rng.child(step, 0), len(ts), cfg.batch_size)
        batch = ts.future[idx]
        eps = torch.randn(len(idx), vcfg.latent_dim, generator=rng.child(step, 1).torch())
        mu, sigma = model.encode(batch)
        recon = model.decode(reparameterize(mu, sigma, eps))
        try:
            losses = vae_loss(batch, recon, mu, sigma, vcfg)
        except NonFiniteLoss:
            if out_path is not None:
                save_checkpoint(snapshot(step), out_path)
            raise
        optimizer.zero_grad()
        losses["total"].backward()
        torch.nn.utils.clip_grad_norm_(params, cfg.grad_clip)
        optimizer.step()
        history.append({"step": step, "total": losses["total"].item(),
                        "l_mr": losses["l_mr"].item(), "l_kl": losses["l_kl"].item()})
        if stop_fn is not None and stop_fn(history):
            step += 1
            break
    else:
        step = cfg.stage1_steps

    ckpt = snapshot(step)
    if out_path is not None:
        save_checkpoint(ckpt, out_path)
    return ckpt, history


def _region_batch(cfg: RunConfig, krp: RegionProposer | None, histories: torch.Tensor,
                  scenes: list[torch.Tensor], volumes: torch.Tensor,
                  rng: RngHandle) -> tuple[torch.Tensor, torch.Tensor]:
    """Per-sample masked region points (B, region_points, 3) plus the box regularizer.

    The mask is straight-through: interior points enter untouched, gradients
    flow through the soft surrogate. The regularizer (anchor + coverage
    hinge) keeps the box over the scene — otherwise training can reduce the
    noise-prediction loss by emptying the box and muting the scene branch.
    """
    regions = []
    penalty = torch.zeros((), dtype=histories.dtype)
    if krp is not None:
        origins, dims = krp(histories, scene_volume=volumes)
        roots = histories[:, -1, krp.root_index, :]
        anchor = (origins + dims / 2 - roots).pow(2).sum(dim=-1).mean()
        penalty = penalty + cfg.krp_anchor_weight * anchor
    for i, scene in enumerate(scenes):
        gen = rng.child(i).numpy()
        if krp is None:
            sel = subsample_indices(np.ones(len(scene)), cfg.region_points, gen)
            regions.append(scene[sel])
            continue
        weights, soft = straight_through_box_weights(scene, origins[i], dims[i], cfg.soft_tau)
        # two coverage hinges: the sharp one enforces real interior mass, the
        # wide one keeps a recovery gradient alive when the box has strayed
        floor = torch.as_tensor(cfg.krp_min_coverage, dtype=soft.dtype)
        wide = soft_box_weights(scene, origins[i], dims[i], cfg.krp_coverage_tau).mean()
        penalty = penalty + cfg.krp_coverage_weight * (
            torch.relu(floor - soft.mean()) + torch.relu(floor - wide)
        ) / len(scenes)
        try:
            sel = subsample_indices(weights.detach().numpy(), cfg.region_points, gen)
        except EmptyRegion:
            # empty box: take the points nearest the box (highest soft weight)
            # so the mask gradient can pull it back over the scene; they enter
            # muted (hard weight 0), never as a clean whole-scene substitute
            sel = torch.topk(soft.detach(), min(cfg.region_points, len(scene))).indices.numpy()
            if len(sel) < cfg.region_points:
                sel = np.resize(sel, cfg.region_points)
        regions.append(scene[sel] * weights[sel, None])
    return torch.stack(regions), penalty


def train_diffusion(cfg: RunConfig, dataset_path: str | Path,
                    vae_ckpt: Checkpoint | str | Path,
                    out_path: str | Path | None = None,
                    resume_from: Checkpoint | None = None,
                    stop_fn: StopFn | None = None) -> tuple[Checkpoint, list[dict]]:
    """Stage 2: freeze the VAE and jointly optimize region proposal, condition
    encoding, fusion, and the denoiser with the noise-prediction loss."""
    if isinstance(vae_ckpt, (str, Path)):
        if not Path(vae_ckpt).exists():
            raise MissingStage1(f"stage-1 checkpoint {vae_ckpt} does not exist")
        vae_ckpt = load_checkpoint(vae_ckpt)
    if vae_ckpt.stage != "vae":
        raise MissingStage1(f"expected a stage-1 checkpoint, got stage {vae_ckpt.stage!r}")

    ts = load_training_set(dataset_path)
    vae = build_vae(cfg, ts.skeleton)
    load_module_arrays(vae, vae_ckpt.params, "vae")
    vae.eval()
    vae.requires_grad_(False)

    krp, mae, fusion, denoiser = build_diffusion_models(cfg, ts.skeleton)
    modules = {"mae": mae, "fusion": fusion, "denoiser": denoiser}
    if cfg.use_krp:
        modules = {"krp": krp, **modules}
    names, params = _named_params(modules)
    peak_lr = cfg.stage2_lr if cfg.stage2_lr is not None else cfg.lr
    optimizer = torch.optim.AdamW(params, lr=peak_lr, weight_decay=cfg.weight_decay,
                                  betas=(0.9, cfg.adam_beta2))
    start_step = 0
    if resume_from is not None:
        for prefix, module in modules.items():
            load_module_arrays(module, resume_from.params, prefix)
        if resume_from.optimizer:
            load_optimizer_arrays(optimizer, names, resume_from.optimizer)
        start_step = resume_from.step

    schedule = cfg.schedule()
    rng = RngHandle(cfg.seed, (STREAM_STAGE2,))
    history: list[dict] = []

    def snapshot(step: int) -> Checkpoint:
        arrays = module_arrays(vae, "vae")
        for prefix, module in modules.items():
            arrays.update(module_arrays(module, prefix))
        return Checkpoint(
            stage="diffusion", step=step, config=cfg.to_dict(), params=arrays,
            schedule=schedule.to_config(),
            optimizer=optimizer_arrays(optimizer, names),
            extra={"skeleton": skeleton_to_dict(ts.skeleton)},
        )

    step = start_step
    for step in range(start_step, cfg.stage2_steps):
        lr = lr_at(step, cfg.stage2_steps, peak_lr, cfg.lr_warmup_steps)
        for group in optimizer.param_groups:
            group["lr"] = lr
        step_rng = rng.child(step)
        idx = batch_indices(step_rng.child(0), len(ts), cfg.batch_size)
        histories = ts.history[idx]
        regions, box_penalty = _region_batch(cfg, krp if cfg.use_krp else None, histories,
                                             [ts.scenes[i] for i in idx], ts.scene_volumes[idx],
                                             step_rng.child(1))
        bundle = mae(histories, regions)
        with torch.no_grad():
            z0 = vae.encode(ts.future[idx])[0]
        gen = step_rng.child(2).torch()
        k = torch.randint(1, schedule.K + 1, (len(idx),), generator=gen)
        eps = torch.randn(z0.shape, generator=gen, dtype=z0.dtype)
        try:
            loss = diffusion_loss(fusion, denoiser, bundle, z0, schedule, k=k, eps=eps)
        except NonFiniteLoss:
            if out_path is not None:
                save_checkpoint(snapshot(step), out_path)
            raise
        optimizer.zero_grad()
        (loss + box_penalty).backward()
        torch.nn.utils.clip_grad_norm_(params, cfg.grad_clip)
        optimizer.step()
        history.append({"step": step, "loss": loss.item(), "box_penalty": box_penalty.item()})
        if stop_fn is not None and stop_fn(history):
            step += 1
            break
    else:
        step = cfg.stage2_steps

    ckpt = snapshot(step)
    if out_path is not None:
        save_checkpoint(ckpt, out_path)
    return ckpt, history
