"""Transformer VAE embedding future motion clips into a single latent vector.

The encoder prepends two learned distribution tokens to the per-frame tokens
and reads them back as the posterior mean and log-std; the decoder lets
learned per-frame query tokens cross-attend to the latent projected into a
single memory token.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import Tensor, nn

from .domain import MotionSequence
from .errors import NonFiniteLoss, ShapeMismatch
from .nn import TransformerStack, sinusoidal_positions

LOG_STD_FLOOR = math.log(1e-6)


@dataclass(frozen=True)
class VaeConfig:
    layers: int = 6
    heads: int = 4
    model_width: int = 256
    latent_dim: int = 512
    lambda_mr: float = 1.0
    lambda_kl: float = 1e-4

    def __post_init__(self):
        if min(self.layers, self.heads, self.model_width, self.latent_dim) <= 0:
            raise ValueError("VaeConfig dimensions must be positive")
        if self.model_width % self.heads != 0:
            raise ValueError("model_width must be divisible by heads")


@dataclass(frozen=True)
class LatentCode:
    """Posterior parameters and a concrete reparameterized draw."""

    z: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.mu).all() and np.isfinite(self.sigma).all() and np.isfinite(self.z).all()):
            raise ValueError("latent code must be finite")
        if (self.sigma <= 0).any():
            raise ValueError("sigma must be positive elementwise")


class MotionVae(nn.Module):
    def __init__(self, cfg: VaeConfig, n_frames: int, n_joints: int):
        super().__init__()
        self.cfg = cfg
        self.n_frames = n_frames
        self.n_joints = n_joints
        width = cfg.model_width

        self.frame_embed = nn.Linear(n_joints * 3, width)
        self.register_buffer("frame_positions", sinusoidal_positions(n_frames, width), persistent=False)
        self.dist_tokens = nn.Parameter(torch.zeros(2, width))
        self.encoder = TransformerStack(cfg.layers, width, cfg.heads)
        self.mu_head = nn.Linear(width, cfg.latent_dim)
        self.log_std_head = nn.Linear(width, cfg.latent_dim)

        self.memory_proj = nn.Linear(cfg.latent_dim, width)
        self.query_tokens = nn.Parameter(torch.zeros(n_frames, width))
        self.decoder = TransformerStack(cfg.layers, width, cfg.heads)
        self.frame_head = nn.Linear(width, n_joints * 3)

    def _check_motion(self, x: Tensor) -> Tensor:
        if x.dim() == 3:
            x = x[None]
        if x.shape[1:] != (self.n_frames, self.n_joints, 3):
            raise ShapeMismatch(
                f"expected motion of shape (B, {self.n_frames}, {self.n_joints}, 3), got {tuple(x.shape)}"
            )
        return x

    def encode(self, motion: Tensor) -> tuple[Tensor, Tensor]:
        """Posterior (mu, sigma) of shape (B, latent_dim); sigma = exp(clamped log-std) > 0."""
        motion = self._check_motion(motion)
        b = motion.shape[0]
        tokens = self.frame_embed(motion.reshape(b, self.n_frames, -1))
        tokens = tokens + self.frame_positions.to(tokens.dtype)
        tokens = torch.cat([self.dist_tokens[None].expand(b, -1, -1), tokens], dim=1)
        out = self.encoder(tokens)
        mu = self.mu_head(out[:, 0])
        log_std = self.log_std_head(out[:, 1]).clamp(min=LOG_STD_FLOOR)
        return mu, torch.exp(log_std)

    def decode(self, z: Tensor) -> Tensor:
        """Deterministic reconstruction of shape (B, n_frames, n_joints, 3)."""
        if z.dim() == 1:
            z = z[None]
        if z.shape[-1] != self.cfg.latent_dim:
            raise ShapeMismatch(f"expected latent dim {self.cfg.latent_dim}, got {z.shape[-1]}")
        b = z.shape[0]
        memory = self.memory_proj(z)[:, None, :]
        tokens = self.query_tokens[None].expand(b, -1, -1)
        out = self.decoder(tokens, kv=memory)
        return self.frame_head(out).reshape(b, self.n_frames, self.n_joints, 3)

    def forward(self, motion: Tensor, eps: Tensor) -> tuple[Tensor, Tensor, Tensor]:
        mu, sigma = self.encode(motion)
        z = reparameterize(mu, sigma, eps)
        return self.decode(z), mu, sigma


def reparameterize(mu, sigma, eps):
    """z = mu + sigma ⊙ eps, exactly; works on torch tensors or numpy arrays."""
    if mu.shape != sigma.shape or mu.shape != eps.shape:
        raise ShapeMismatch(f"mismatched shapes {mu.shape}, {sigma.shape}, {eps.shape}")
    return mu + sigma * eps


def kl_standard_normal(mu: Tensor, sigma: Tensor) -> Tensor:
    """KL(N(mu, sigma^2) || N(0, 1)) summed over channels: sum 0.5(mu^2 + sigma^2 - 1 - ln sigma^2)."""
    return 0.5 * (mu.pow(2) + sigma.pow(2) - 1.0 - torch.log(sigma.pow(2))).sum(dim=-1)


def vae_loss(b_plus: Tensor, b_recon: Tensor, mu: Tensor, sigma: Tensor,
             cfg: VaeConfig) -> dict[str, Tensor]:
    """First-stage loss: lambda_mr * mean per-joint L2 distance + lambda_kl * KL."""
    if b_plus.shape != b_recon.shape:
        raise ShapeMismatch(f"reconstruction shape {tuple(b_recon.shape)} != target {tuple(b_plus.shape)}")
    joint_dist = torch.linalg.vector_norm(b_plus - b_recon, dim=-1)
    l_mr = joint_dist.mean()
    l_kl = kl_standard_normal(mu, sigma).mean()
    total = cfg.lambda_mr * l_mr + cfg.lambda_kl * l_kl
    if not torch.isfinite(total):
        raise NonFiniteLoss(f"VAE loss non-finite: l_mr={float(l_mr)}, l_kl={float(l_kl)}")
    return {"total": total, "l_mr": l_mr, "l_kl": l_kl}


def encode_sequence(model: MotionVae, seq: MotionSequence) -> tuple[np.ndarray, np.ndarray]:
    """Posterior of one motion sequence as numpy (latent_dim,) vectors."""
    with torch.no_grad():
        mu, sigma = model.encode(torch.tensor(seq.frames, dtype=next(model.parameters()).dtype))
    return mu[0].numpy(), sigma[0].numpy()


def decode_latent(model: MotionVae, z: np.ndarray, fps: float = 5.0) -> MotionSequence:
    """Deterministic decode of a latent vector back to a motion sequence."""
    with torch.no_grad():
        frames = model.decode(torch.tensor(np.asarray(z), dtype=next(model.parameters()).dtype))
    return MotionSequence(frames[0].numpy().astype(np.float64), fps=fps)
