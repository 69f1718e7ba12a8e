"""Flat run configuration covering every module, with desk and paper profiles.

The desk profile keeps the full architecture but shrinks widths, layer
counts, diffusion steps, and region size so the whole train/sample/evaluate
loop runs in minutes on a CPU. The paper profile carries the published
configuration (6/3/6/9 transformer layers, 512-dim latent, K=1000,
AdamW at 1e-4) and is not meant to be trained here.

Config files are flat JSON key/value documents mirroring the field names
below.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .conditions import MaeConfig
from .diffusion import DenoiserConfig, DiffusionSchedule, build_schedule
from .errors import IoFailure
from .region import KrpConfig
from .vae import VaeConfig

PROFILES = ("desk", "paper")


@dataclass
class RunConfig:
    profile: str = "desk"
    seed: int = 0

    # data
    history_frames: int = 5
    future_frames: int = 10
    fps: float = 5.0
    train_samples: int = 256
    test_samples: int = 32
    room_extent: float = 4.0
    obstacle_count: int = 2
    scene_density: float = 60.0
    region_points: int = 128

    # latent + condition width (C_e)
    latent_dim: int = 64

    # stage 1 (motion VAE)
    vae_layers: int = 3
    vae_heads: int = 4
    vae_width: int = 96
    lambda_mr: float = 1.0
    lambda_kl: float = 1e-5  # paper profile restores 1e-4

    # key region proposal
    use_krp: bool = True
    krp_layers: int = 2
    krp_heads: int = 4
    krp_width: int = 64
    soft_tau: float = 0.1
    # stage-2 regularizers keeping the proposed box over the scene: an anchor
    # pulling the box center toward the root and a hinge on soft coverage
    # (evaluated at a wide temperature so its gradient reaches a strayed box)
    krp_anchor_weight: float = 0.05
    krp_coverage_weight: float = 10.0
    krp_min_coverage: float = 0.10
    krp_coverage_tau: float = 0.5

    # condition encoder
    mae_layers: int = 2
    mae_heads: int = 4
    mae_width: int = 64

    # condition fusion and its ablations
    cond_body: bool = True
    cond_scene: bool = True
    cond_interaction: bool = True
    fusion_mode: str = "mcf"  # mcf | concat | add
    fusion_step_embedding: bool = True

    # denoiser + schedule
    denoiser_layers: int = 4
    denoiser_heads: int = 4
    denoiser_width: int = 96
    diffusion_steps: int = 50
    beta_start: float = 1e-4
    beta_end: float = 0.3
    sampler_method: str = "literal"

    # optimization
    optimizer: str = "adamw"
    lr: float = 1e-3
    stage1_lr: float | None = 5e-3  # None falls back to lr
    stage2_lr: float | None = None
    lr_warmup_steps: int = 100
    adam_beta2: float = 0.99
    weight_decay: float = 1e-4
    batch_size: int = 64
    grad_clip: float = 1.0
    stage1_steps: int = 2000
    stage2_steps: int = 5000

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.lr <= 0 or self.stage1_steps <= 0 or self.stage2_steps <= 0:
            raise ValueError("lr and step counts must be positive")
        if self.fusion_mode not in ("mcf", "concat", "add"):
            raise ValueError(f"unknown fusion_mode {self.fusion_mode!r}")
        if not (self.cond_body or self.cond_scene or self.cond_interaction):
            raise ValueError("at least one condition branch must be enabled")

    @classmethod
    def desk(cls, **overrides) -> "RunConfig":
        return cls(**{**{"profile": "desk"}, **overrides})

    @classmethod
    def paper(cls, **overrides) -> "RunConfig":
        base = dict(
            profile="paper",
            latent_dim=512,
            vae_layers=6, vae_width=512,
            krp_layers=3, krp_width=256,
            mae_layers=6, mae_width=512,
            denoiser_layers=9, denoiser_width=512,
            diffusion_steps=1000, beta_end=2e-2,
            region_points=6000,
            lambda_kl=1e-4,
            lr=1e-4, stage1_lr=None, stage2_lr=None,
            adam_beta2=0.999, batch_size=16,
            # the paper trains 1k VAE epochs and 4k diffusion epochs
            stage1_steps=16000, stage2_steps=64000,
        )
        base.update(overrides)
        return cls(**base)

    # --- derived module configs -------------------------------------------------
    def vae_config(self) -> VaeConfig:
        return VaeConfig(layers=self.vae_layers, heads=self.vae_heads, model_width=self.vae_width,
                         latent_dim=self.latent_dim, lambda_mr=self.lambda_mr, lambda_kl=self.lambda_kl)

    def krp_config(self) -> KrpConfig:
        return KrpConfig(layers=self.krp_layers, heads=self.krp_heads, width=self.krp_width,
                         soft_tau=self.soft_tau)

    def mae_config(self) -> MaeConfig:
        return MaeConfig(layers=self.mae_layers, heads=self.mae_heads, width=self.mae_width,
                         out_dim=self.latent_dim)

    def denoiser_config(self) -> DenoiserConfig:
        return DenoiserConfig(layers=self.denoiser_layers, heads=self.denoiser_heads,
                              width=self.denoiser_width, latent_dim=self.latent_dim)

    def schedule(self) -> DiffusionSchedule:
        return build_schedule(self.diffusion_steps, self.beta_start, self.beta_end)

    def branches(self) -> tuple[str, ...]:
        active = []
        if self.cond_body:
            active.append("body")
        if self.cond_scene:
            active.append("scene")
        if self.cond_interaction:
            active.append("interaction")
        return tuple(active)

    # --- (de)serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def with_overrides(self, overrides: dict) -> "RunConfig":
        merged = self.to_dict()
        merged.update(overrides)
        return RunConfig.from_dict(merged)


def load_config_file(path: str | Path) -> dict:
    """Flat JSON key/value overrides for a RunConfig."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoFailure(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise IoFailure(f"config {path} must be a JSON object")
    return raw


def config_for_profile(profile: str, **overrides) -> RunConfig:
    if profile == "desk":
        return RunConfig.desk(**overrides)
    if profile == "paper":
        return RunConfig.paper(**overrides)
    raise ValueError(f"unknown profile {profile!r}")
