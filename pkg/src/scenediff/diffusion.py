"""Latent diffusion: noising schedule, per-step condition fusion, the
transformer noise predictor, reverse sampling, and the training loss.

The reverse step implements the deterministic noise-elimination update
z_{k-1} = z_k / sqrt(alpha_k) - sqrt(1/alpha_k - 1) * eps_hat literally;
an ancestral DDPM step with posterior variance is available as an
alternative sampling method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import torch
from torch import Tensor, nn

from .conditions import BRANCHES, ConditionBundle
from .domain import RngHandle
from .errors import BadSchedule, NonFiniteLoss, ShapeMismatch
from .nn import TransformerStack, sinusoidal_scalar_embedding

TERMINAL_ALPHA_BAR = 1e-3


@dataclass(frozen=True)
class DiffusionSchedule:
    """Per-step retention coefficients alpha_k and their prefix products.

    Arrays are float64 and 0-indexed; step k in [1, K] reads index k-1.
    """

    beta: np.ndarray
    kind: str = "linear"

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        if beta.ndim != 1 or len(beta) < 1:
            raise ValueError("beta must be a nonempty 1-D array")
        if (beta <= 0).any() or (beta >= 1).any():
            raise ValueError("beta values must lie in (0, 1)")
        beta = beta.copy()
        beta.flags.writeable = False
        object.__setattr__(self, "beta", beta)

    @property
    def K(self) -> int:
        return len(self.beta)

    @property
    def alpha(self) -> np.ndarray:
        return 1.0 - self.beta

    @property
    def alpha_bar(self) -> np.ndarray:
        return np.cumprod(self.alpha)

    def alpha_at(self, k: int) -> float:
        self._check_step(k)
        return float(self.alpha[k - 1])

    def alpha_bar_at(self, k: int) -> float:
        self._check_step(k)
        return float(self.alpha_bar[k - 1])

    def _check_step(self, k: int) -> None:
        if not 1 <= k <= self.K:
            raise ValueError(f"step k={k} outside [1, {self.K}]")

    def to_config(self) -> dict:
        return {"K": self.K, "beta_start": float(self.beta[0]), "beta_end": float(self.beta[-1]),
                "kind": self.kind}


def build_schedule(K: int = 1000, beta_start: float = 1e-4, beta_end: float = 2e-2,
                   kind: str = "linear") -> DiffusionSchedule:
    """Linear beta schedule; raises BadSchedule if the terminal latent is not near-Gaussian."""
    if kind != "linear":
        raise ValueError(f"unsupported schedule kind {kind!r}")
    if not 0 < beta_start < beta_end < 1:
        raise ValueError(f"need 0 < beta_start < beta_end < 1, got {beta_start}, {beta_end}")
    schedule = DiffusionSchedule(beta=np.linspace(beta_start, beta_end, K), kind=kind)
    terminal = schedule.alpha_bar_at(K)
    if terminal >= TERMINAL_ALPHA_BAR:
        raise BadSchedule(
            f"alpha_bar at K={K} is {terminal:.3e} >= {TERMINAL_ALPHA_BAR}; "
            "increase K or beta_end"
        )
    return schedule


def forward_noise_step(schedule: DiffusionSchedule, z_prev, k: int, eps):
    """One Markov noising step: z_k = sqrt(alpha_k) z_{k-1} + sqrt(1 - alpha_k) eps."""
    a = schedule.alpha_at(k)
    return math.sqrt(a) * z_prev + math.sqrt(1.0 - a) * eps


def forward_noise_jump(schedule: DiffusionSchedule, z0, k: int, eps):
    """Closed-form jump to step k: z_k = sqrt(abar_k) z0 + sqrt(1 - abar_k) eps."""
    ab = schedule.alpha_bar_at(k)
    return math.sqrt(ab) * z0 + math.sqrt(1.0 - ab) * eps


def denoise_step(schedule: DiffusionSchedule, z_k, k: int, eps_hat):
    """Deterministic reverse update; exact inverse of forward_noise_step given the true noise."""
    a = schedule.alpha_at(k)
    return z_k / math.sqrt(a) - math.sqrt(1.0 / a - 1.0) * eps_hat


def ancestral_denoise_step(schedule: DiffusionSchedule, z_k, k: int, eps_hat, noise):
    """Standard DDPM posterior step with stochastic term (zero variance at k=1)."""
    a = schedule.alpha_at(k)
    ab = schedule.alpha_bar_at(k)
    beta = 1.0 - a
    mean = (z_k - beta / math.sqrt(1.0 - ab) * eps_hat) / math.sqrt(a)
    if k == 1:
        return mean
    ab_prev = schedule.alpha_bar_at(k - 1)
    sigma = math.sqrt((1.0 - ab_prev) / (1.0 - ab) * beta)
    return mean + sigma * noise


class StepEmbedding(nn.Module):
    """Sinusoidal encoding of the diffusion step index through one linear layer."""

    def __init__(self, out_dim: int, freq_dim: int = 64):
        super().__init__()
        self.freq_dim = freq_dim
        self.proj = nn.Linear(freq_dim, out_dim)

    def forward(self, k) -> Tensor:
        if not torch.is_tensor(k):
            k = torch.tensor([k])
        dtype = self.proj.weight.dtype
        feats = sinusoidal_scalar_embedding(k.reshape(-1), self.freq_dim).to(dtype)
        return self.proj(feats)


def add_step_to_bundle(bundle: ConditionBundle, theta_k: Tensor) -> ConditionBundle:
    """Shift every condition embedding by the step embedding, elementwise."""
    return ConditionBundle(
        body=bundle.body + theta_k,
        scene=bundle.scene + theta_k,
        interaction=bundle.interaction + theta_k,
    )


class ChannelAttention(nn.Module):
    """Channel-wise gating: weights = softmax(theta2(relu(theta1(e)))), gated = e * weights."""

    def __init__(self, dim: int):
        super().__init__()
        self.theta1 = nn.Linear(dim, dim)
        self.theta2 = nn.Linear(dim, dim)

    def weights(self, e: Tensor) -> Tensor:
        return torch.softmax(self.theta2(torch.relu(self.theta1(e))), dim=-1)

    def forward(self, e: Tensor) -> tuple[Tensor, Tensor]:
        w = self.weights(e)
        return e * w, w


def fuse_conditions(e_body: Tensor, e_scene: Tensor, e_interaction: Tensor) -> Tensor:
    """Channel-wise concatenation in the fixed order (body, scene, interaction)."""
    dims = {e_body.shape[-1], e_scene.shape[-1], e_interaction.shape[-1]}
    if len(dims) != 1:
        raise ShapeMismatch(f"condition dims disagree: {dims}")
    return torch.cat([e_body, e_scene, e_interaction], dim=-1)


@dataclass(frozen=True)
class FusedCondition:
    """A fused condition embedding bound to the diffusion step that produced it."""

    e_c: Tensor
    step: int
    total_steps: int

    def __post_init__(self):
        if not torch.isfinite(self.e_c).all():
            raise ValueError("fused condition must be finite")
        if not 0 <= self.step <= self.total_steps:
            raise ValueError(f"step {self.step} outside [0, {self.total_steps}]")


class ConditionFusion(nn.Module):
    """Per-step dynamic fusion of the condition embeddings.

    ``mode`` selects full dynamic fusion ("mcf"), plain concatenation
    ("concat"), or elementwise addition ("add"); ``branches`` restricts the
    condition subset. Step embedding injection can be disabled for ablation.
    """

    def __init__(self, dim: int, branches: Sequence[str] = BRANCHES, mode: str = "mcf",
                 use_step_embedding: bool = True):
        super().__init__()
        if mode not in ("mcf", "concat", "add"):
            raise ValueError(f"unknown fusion mode {mode!r}")
        unknown = set(branches) - set(BRANCHES)
        if unknown or not branches:
            raise ValueError(f"invalid branch subset {branches!r}")
        self.dim = dim
        self.mode = mode
        self.branches = tuple(b for b in BRANCHES if b in branches)
        self.use_step_embedding = use_step_embedding and mode == "mcf"
        if self.use_step_embedding:
            self.step_embed = StepEmbedding(dim)
        if mode == "mcf":
            self.gates = nn.ModuleDict({b: ChannelAttention(dim) for b in self.branches})

    @property
    def fused_dim(self) -> int:
        return self.dim if self.mode == "add" else self.dim * len(self.branches)

    def forward(self, bundle: ConditionBundle, k) -> Tensor:
        parts = [bundle.get(b) for b in self.branches]
        if self.mode == "mcf":
            if self.use_step_embedding:
                theta = self.step_embed(k)
                parts = [p + theta for p in parts]
            parts = [self.gates[b](p)[0] for b, p in zip(self.branches, parts)]
        if self.mode == "add":
            return torch.stack(parts, dim=0).sum(dim=0)
        return torch.cat(parts, dim=-1)

    def fuse_at(self, bundle: ConditionBundle, k: int, schedule: DiffusionSchedule) -> FusedCondition:
        """Step-stamped fusion result for callers that track provenance."""
        return FusedCondition(e_c=self(bundle, k), step=k, total_steps=schedule.K)

    def gate_weights(self, bundle: ConditionBundle, k) -> dict[str, Tensor]:
        """Channel-attention responses per branch (diagnostics and invariants)."""
        if self.mode != "mcf":
            return {}
        parts = {b: bundle.get(b) for b in self.branches}
        if self.use_step_embedding:
            theta = self.step_embed(k)
            parts = {b: p + theta for b, p in parts.items()}
        return {b: self.gates[b].weights(p) for b, p in parts.items()}


@dataclass(frozen=True)
class DenoiserConfig:
    layers: int = 9
    heads: int = 4
    width: int = 256
    latent_dim: int = 512

    def __post_init__(self):
        if min(self.layers, self.heads, self.width, self.latent_dim) <= 0:
            raise ValueError("DenoiserConfig fields must be positive")
        if self.width % self.heads != 0:
            raise ValueError("width must be divisible by heads")


class NoiseDenoiser(nn.Module):
    """Transformer over the two tokens (noised latent, fused condition) predicting the noise."""

    def __init__(self, cfg: DenoiserConfig, cond_dim: int):
        super().__init__()
        self.cfg = cfg
        self.cond_dim = cond_dim
        self.latent_proj = nn.Linear(cfg.latent_dim, cfg.width)
        self.cond_proj = nn.Linear(cond_dim, cfg.width)
        self.step_embed = StepEmbedding(cfg.width)
        self.blocks = TransformerStack(cfg.layers, cfg.width, cfg.heads)
        self.out = nn.Linear(cfg.width, cfg.latent_dim)

    def forward(self, z_k: Tensor, e_c: Tensor, k) -> Tensor:
        if z_k.dim() == 1:
            z_k = z_k[None]
        if e_c.dim() == 1:
            e_c = e_c[None]
        if z_k.shape[-1] != self.cfg.latent_dim:
            raise ShapeMismatch(f"latent dim {z_k.shape[-1]} != {self.cfg.latent_dim}")
        if e_c.shape[-1] != self.cond_dim:
            raise ShapeMismatch(f"condition dim {e_c.shape[-1]} != {self.cond_dim}")
        step = self.step_embed(k)
        tokens = torch.stack([self.latent_proj(z_k) + step, self.cond_proj(e_c) + step], dim=1)
        return self.out(self.blocks(tokens)[:, 0])


def sample_latents(fusion: ConditionFusion, denoiser: NoiseDenoiser, bundle: ConditionBundle,
                   schedule: DiffusionSchedule, rng: RngHandle,
                   method: str = "literal") -> Tensor:
    """Reverse-diffuse from z_K ~ N(0, I) to z_0' under the given conditions.

    Stochasticity enters only through rng (the z_K draw, plus per-step noise
    for the ancestral method).
    """
    if method not in ("literal", "ancestral"):
        raise ValueError(f"unknown sampling method {method!r}")
    gen = rng.torch()
    dtype = next(denoiser.parameters()).dtype
    batch = bundle.body.shape[0]
    z = torch.randn(batch, denoiser.cfg.latent_dim, generator=gen, dtype=dtype)
    with torch.no_grad():
        for k in range(schedule.K, 0, -1):
            e_c = fusion(bundle, k)
            eps_hat = denoiser(z, e_c, k)
            if method == "literal":
                z = denoise_step(schedule, z, k, eps_hat)
            else:
                noise = torch.randn(z.shape, generator=gen, dtype=dtype) if k > 1 else torch.zeros_like(z)
                z = ancestral_denoise_step(schedule, z, k, eps_hat, noise)
    return z


def diffusion_loss(fusion: ConditionFusion, denoiser: Callable[..., Tensor],
                   bundle: ConditionBundle, z0: Tensor, schedule: DiffusionSchedule,
                   rng: RngHandle | None = None, *, k: Tensor | None = None,
                   eps: Tensor | None = None) -> Tensor:
    """Noise-prediction objective: mean over the batch of ||eps - eps_hat||^2.

    k and eps are drawn from rng when not supplied (one step index per
    sample, uniform on [1, K]).
    """
    if z0.dim() == 1:
        z0 = z0[None]
    batch = z0.shape[0]
    if k is None or eps is None:
        if rng is None:
            raise ValueError("diffusion_loss needs rng when k/eps are not given")
        gen = rng.torch()
        if k is None:
            k = torch.randint(1, schedule.K + 1, (batch,), generator=gen)
        if eps is None:
            eps = torch.randn(z0.shape, generator=gen, dtype=z0.dtype)
    k = torch.as_tensor(k).reshape(-1)
    if k.shape[0] != batch:
        raise ShapeMismatch(f"k batch {k.shape[0]} != z0 batch {batch}")
    ab = torch.as_tensor(schedule.alpha_bar, dtype=z0.dtype)[k - 1][:, None]
    z_k = torch.sqrt(ab) * z0 + torch.sqrt(1.0 - ab) * eps
    e_c = fusion(bundle, k)
    eps_hat = denoiser(z_k, e_c, k)
    loss = (eps - eps_hat).pow(2).sum(dim=-1).mean()
    if not torch.isfinite(loss):
        raise NonFiniteLoss(f"diffusion loss non-finite at steps {k.tolist()[:8]}")
    return loss
