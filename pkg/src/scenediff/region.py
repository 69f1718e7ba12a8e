"""Key-region proposal: regress an axis-aligned box from motion history and
mask the scene to it.

Training uses a soft product-of-sigmoids mask so gradients reach the box
regressor; inference uses the exact binarized mask. The box origin is
anchored to the last-frame root position, which makes the proposal
translation-covariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import Tensor, nn

from .domain import MotionSequence, RngHandle, ScenePointCloud
from .errors import EmptyRegion, ShapeMismatch
from .nn import TransformerStack, sinusoidal_positions

DIM_FLOOR = 0.5
# raw dims are shifted so an untrained head proposes a ~3 m box around the
# body; a min-corner box at the root with small dims starts empty (misses the
# floor plane), which starves the proposer of gradients
DIM_RAW_BIAS = 2.4
# the box center may shift at most this far from the root; interaction
# regions live near the body, and an unbounded shift lets training mute the
# scene branch by parking the box in empty space
MAX_CENTER_SHIFT = 2.0
VOLUME_BOUND_FACTOR = 10.0
# each scene bounding-box extent is padded to at least this before computing
# the sanity volume, so degenerate (flat) scenes still yield a usable bound
MIN_SCENE_EXTENT = 0.5


@dataclass(frozen=True)
class KrpConfig:
    layers: int = 3
    heads: int = 4
    width: int = 128
    soft_tau: float = 0.1

    def __post_init__(self):
        if min(self.layers, self.heads, self.width) <= 0 or self.soft_tau <= 0:
            raise ValueError("KrpConfig fields must be positive")
        if self.width % self.heads != 0:
            raise ValueError("width must be divisible by heads")


@dataclass(frozen=True)
class KeyRegionBox:
    """Axis-aligned region {origin, dims}; origin is the minimum corner."""

    origin: np.ndarray
    dims: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        dims = np.asarray(self.dims, dtype=np.float64).reshape(3)
        if (dims <= 0).any():
            raise ValueError(f"box dims must be positive, got {dims}")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "dims", dims)

    @property
    def volume(self) -> float:
        return float(np.prod(self.dims))


def scene_volume_bound(points: np.ndarray) -> float:
    """10x the (padded) scene bounding-box volume — the box sanity bound."""
    extent = points.max(axis=0) - points.min(axis=0)
    extent = np.maximum(extent, MIN_SCENE_EXTENT)
    return VOLUME_BOUND_FACTOR * float(np.prod(extent))


class RegionProposer(nn.Module):
    """Transformer over history frames regressing the key-region box."""

    def __init__(self, cfg: KrpConfig, n_history: int, n_joints: int, root_index: int = 0):
        super().__init__()
        self.cfg = cfg
        self.n_history = n_history
        self.n_joints = n_joints
        self.root_index = root_index
        self.frame_embed = nn.Linear(n_joints * 3, cfg.width)
        self.register_buffer("frame_positions", sinusoidal_positions(n_history, cfg.width), persistent=False)
        self.encoder = TransformerStack(cfg.layers, cfg.width, cfg.heads)
        self.head = nn.Sequential(nn.Linear(cfg.width, cfg.width), nn.ReLU(), nn.Linear(cfg.width, 6))

    def forward(self, history: Tensor, scene_volume: Tensor | None = None) -> tuple[Tensor, Tensor]:
        """Box (origin, dims), each (B, 3); optionally clamped to the scene volume bound."""
        if history.dim() == 3:
            history = history[None]
        if history.shape[1:] != (self.n_history, self.n_joints, 3):
            raise ShapeMismatch(
                f"expected history of shape (B, {self.n_history}, {self.n_joints}, 3), got {tuple(history.shape)}"
            )
        b = history.shape[0]
        root = history[:, -1, self.root_index, :]
        centered = history - root[:, None, None, :]
        tokens = self.frame_embed(centered.reshape(b, self.n_history, -1))
        tokens = tokens + self.frame_positions.to(tokens.dtype)
        pooled = self.encoder(tokens).mean(dim=1)
        raw = self.head(pooled)
        dims = nn.functional.softplus(raw[:, 3:] + DIM_RAW_BIAS) + DIM_FLOOR
        if scene_volume is not None:
            volume = dims.prod(dim=-1)
            bound = VOLUME_BOUND_FACTOR * scene_volume.to(dims.dtype)
            factor = (bound / volume).clamp(max=1.0) ** (1.0 / 3.0)
            dims = dims * factor[:, None]
        # the box is centered on the root plus a bounded learned shift, so the
        # origin (minimum corner) stays translation-covariant with the history
        shift = MAX_CENTER_SHIFT * torch.tanh(raw[:, :3] / MAX_CENTER_SHIFT)
        origin = root + shift - dims / 2
        return origin, dims


def propose_region(model: RegionProposer, history: MotionSequence,
                   scene: ScenePointCloud | None = None) -> KeyRegionBox:
    """Inference-time box proposal for one sample."""
    dtype = next(model.parameters()).dtype
    vol = None
    if scene is not None:
        vol = torch.tensor([scene_volume_bound(scene.points) / VOLUME_BOUND_FACTOR], dtype=dtype)
    with torch.no_grad():
        origin, dims = model(torch.tensor(history.frames, dtype=dtype), scene_volume=vol)
    return KeyRegionBox(origin=origin[0].numpy().astype(np.float64), dims=dims[0].numpy().astype(np.float64))


def hard_box_mask(points: np.ndarray, origin: np.ndarray, dims: np.ndarray) -> np.ndarray:
    """Binary inside-box mask with closed intervals on every face."""
    lo = np.asarray(origin, dtype=np.float64)
    hi = lo + np.asarray(dims, dtype=np.float64)
    inside = (points >= lo) & (points <= hi)
    return inside.all(axis=-1).astype(np.float64)


def soft_box_weights(points: Tensor, origin: Tensor, dims: Tensor, tau: float) -> Tensor:
    """Differentiable inside-box weights: per-axis sigmoid(dist_to_face / tau) products.

    ``points`` is (..., N, 3) and ``origin``/``dims`` broadcast as (..., 3).
    """
    lo = origin[..., None, :]
    hi = lo + dims[..., None, :]
    w = torch.sigmoid((points - lo) / tau) * torch.sigmoid((hi - points) / tau)
    return w.prod(dim=-1)


def straight_through_box_weights(points: Tensor, origin: Tensor, dims: Tensor,
                                 tau: float) -> tuple[Tensor, Tensor]:
    """Exact binary mask in the forward pass, soft-sigmoid gradients backward.

    Returns (weights, soft). Scaling interior points by fractional soft
    weights distorts their coordinates, which rewards training for emptying
    the box; the straight-through form keeps interior points untouched while
    box parameters still receive mask gradients.
    """
    soft = soft_box_weights(points, origin, dims, tau)
    lo = origin[..., None, :]
    hi = lo + dims[..., None, :]
    hard = ((points >= lo) & (points <= hi)).all(dim=-1).to(soft.dtype)
    return hard + soft - soft.detach(), soft


def mask_scene(scene: ScenePointCloud, box: KeyRegionBox, mode: str = "hard",
               tau: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Apply the region mask: returns (points * weights, weights).

    Hard mode gives exact {0,1} membership (closed intervals); soft mode the
    sigmoid surrogate used during training.
    """
    if mode == "hard":
        weights = hard_box_mask(scene.points, box.origin, box.dims)
    elif mode == "soft":
        w = soft_box_weights(
            torch.tensor(scene.points, dtype=torch.float64),
            torch.tensor(box.origin, dtype=torch.float64),
            torch.tensor(box.dims, dtype=torch.float64),
            tau,
        )
        weights = w.numpy()
    else:
        raise ValueError(f"unknown mask mode {mode!r}")
    return scene.points * weights[:, None], weights


def subsample_indices(weights: np.ndarray, n_target: int, gen: np.random.Generator) -> np.ndarray:
    """Indices of ``n_target`` points drawn from those with weight > 0.5.

    Uniform without replacement when enough interior points exist; otherwise
    every interior point appears at least once and the remainder is drawn
    with replacement.
    """
    if n_target < 1:
        raise ValueError("n_target must be >= 1")
    interior = np.flatnonzero(weights > 0.5)
    if interior.size == 0:
        raise EmptyRegion("no scene point has mask weight > 0.5")
    if interior.size >= n_target:
        return gen.choice(interior, size=n_target, replace=False)
    extra = gen.choice(interior, size=n_target - interior.size, replace=True)
    return gen.permutation(np.concatenate([interior, extra]))


def subsample_region(points: np.ndarray, weights: np.ndarray, n_target: int = 6000,
                     rng: RngHandle | None = None) -> ScenePointCloud:
    """Fixed-size uniform subsample of the masked region."""
    gen = (rng or RngHandle(0)).numpy()
    idx = subsample_indices(np.asarray(weights), n_target, gen)
    return ScenePointCloud(np.asarray(points, dtype=np.float64)[idx])
