"""Multi-branch condition encoder.

Three transformer branches digest the prediction conditions: scene
self-attention over region points (no positional encoding, so pooled
embeddings are permutation-invariant), body self-attention over history
frames (sinusoidal frame positions), and body-to-scene cross-attention for
the interaction embedding. Each branch mean-pools and projects to the
shared condition width.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import Tensor, nn

from .domain import MotionSequence, ScenePointCloud
from .errors import ShapeMismatch
from .nn import TransformerStack, sinusoidal_positions

BRANCHES = ("body", "scene", "interaction")


@dataclass(frozen=True)
class MaeConfig:
    layers: int = 6
    heads: int = 4
    width: int = 128
    out_dim: int = 512

    def __post_init__(self):
        if min(self.layers, self.heads, self.width, self.out_dim) <= 0:
            raise ValueError("MaeConfig fields must be positive")
        if self.width % self.heads != 0:
            raise ValueError("width must be divisible by heads")


@dataclass(frozen=True)
class ConditionBundle:
    """The three condition embeddings, each (B, out_dim)."""

    body: Tensor
    scene: Tensor
    interaction: Tensor

    def __post_init__(self):
        shapes = {t.shape for t in (self.body, self.scene, self.interaction)}
        if len(shapes) != 1:
            raise ShapeMismatch(f"condition embeddings disagree in shape: {shapes}")

    def get(self, branch: str) -> Tensor:
        return getattr(self, branch)

    def numpy(self) -> dict[str, np.ndarray]:
        return {name: self.get(name).detach().numpy() for name in BRANCHES}


class ConditionEncoder(nn.Module):
    def __init__(self, cfg: MaeConfig, n_history: int, n_joints: int):
        super().__init__()
        self.cfg = cfg
        self.n_history = n_history
        self.n_joints = n_joints
        width = cfg.width

        self.scene_embed = nn.Linear(3, width)
        self.scene_encoder = TransformerStack(cfg.layers, width, cfg.heads)
        self.scene_out = nn.Linear(width, cfg.out_dim)

        self.body_embed = nn.Linear(n_joints * 3, width)
        self.register_buffer("frame_positions", sinusoidal_positions(n_history, width), persistent=False)
        self.body_encoder = TransformerStack(cfg.layers, width, cfg.heads)
        self.body_out = nn.Linear(width, cfg.out_dim)

        self.inter_body_embed = nn.Linear(n_joints * 3, width)
        self.inter_scene_embed = nn.Linear(3, width)
        self.inter_encoder = TransformerStack(cfg.layers, width, cfg.heads)
        self.inter_out = nn.Linear(width, cfg.out_dim)

    def _body_tokens(self, history: Tensor, embed: nn.Linear) -> Tensor:
        b = history.shape[0]
        tokens = embed(history.reshape(b, self.n_history, -1))
        return tokens + self.frame_positions.to(tokens.dtype)

    def forward(self, history: Tensor, region_points: Tensor) -> ConditionBundle:
        if history.dim() == 3:
            history = history[None]
        if region_points.dim() == 2:
            region_points = region_points[None]
        if history.shape[1:] != (self.n_history, self.n_joints, 3):
            raise ShapeMismatch(
                f"expected history (B, {self.n_history}, {self.n_joints}, 3), got {tuple(history.shape)}"
            )
        if region_points.dim() != 3 or region_points.shape[-1] != 3:
            raise ShapeMismatch(f"expected region points (B, N, 3), got {tuple(region_points.shape)}")

        scene_tokens = self.scene_encoder(self.scene_embed(region_points))
        e_scene = self.scene_out(scene_tokens.mean(dim=1))

        body_tokens = self.body_encoder(self._body_tokens(history, self.body_embed))
        e_body = self.body_out(body_tokens.mean(dim=1))

        queries = self._body_tokens(history, self.inter_body_embed)
        memory = self.inter_scene_embed(region_points)
        inter_tokens = self.inter_encoder(queries, kv=memory)
        e_inter = self.inter_out(inter_tokens.mean(dim=1))

        return ConditionBundle(body=e_body, scene=e_scene, interaction=e_inter)


def encode_conditions(model: ConditionEncoder, history: MotionSequence,
                      region: ScenePointCloud) -> ConditionBundle:
    """Single-sample convenience wrapper over domain objects."""
    dtype = next(model.parameters()).dtype
    with torch.no_grad():
        return model(
            torch.tensor(history.frames, dtype=dtype),
            torch.tensor(region.points, dtype=dtype),
        )
