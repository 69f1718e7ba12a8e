"""Transformer building blocks shared by the motion VAE, region proposer,
condition encoder, and denoiser.

All attention goes through :func:`scaled_dot_attention` so tests can observe
every attention matrix produced during a forward pass via
:func:`record_attention`.
"""

from __future__ import annotations

import contextlib
import math
from typing import Iterator

import torch
from torch import Tensor, nn

from .errors import ShapeMismatch

_ACTIVE_RECORDERS: list[list[Tensor]] = []


@contextlib.contextmanager
def record_attention() -> Iterator[list[Tensor]]:
    """Collect every attention probability tensor computed inside the block."""
    sink: list[Tensor] = []
    _ACTIVE_RECORDERS.append(sink)
    try:
        yield sink
    finally:
        _ACTIVE_RECORDERS.remove(sink)


def qkv_project(tokens_q: Tensor, tokens_kv: Tensor, w_q: Tensor, w_k: Tensor, w_v: Tensor) -> tuple[Tensor, Tensor, Tensor]:
    """Bias-free query/key/value projections: Q = X W_Q, K = X W_K, V = X W_V."""
    if tokens_q.shape[-1] != w_q.shape[0] or tokens_kv.shape[-1] != w_k.shape[0]:
        raise ShapeMismatch(
            f"token width {tokens_q.shape[-1]}/{tokens_kv.shape[-1]} does not match "
            f"projection input {w_q.shape[0]}/{w_k.shape[0]}"
        )
    return tokens_q @ w_q, tokens_kv @ w_k, tokens_kv @ w_v


def scaled_dot_attention(q: Tensor, k: Tensor, v: Tensor) -> Tensor:
    """softmax(Q K^T / sqrt(d_K)) V with max-subtracted, row-stochastic softmax.

    Accepts any leading batch/head dimensions; the last two are (tokens, d).
    """
    d_k = k.shape[-1]
    if q.shape[-1] != d_k:
        raise ShapeMismatch(f"query dim {q.shape[-1]} != key dim {d_k}")
    scores = q @ k.transpose(-2, -1) / math.sqrt(d_k)
    scores = scores - scores.max(dim=-1, keepdim=True).values
    attn = torch.softmax(scores, dim=-1)
    for sink in _ACTIVE_RECORDERS:
        sink.append(attn.detach())
    return attn @ v


def sinusoidal_positions(n: int, dim: int, dtype=torch.float32) -> Tensor:
    """Classic fixed sine/cosine position table of shape (n, dim)."""
    positions = torch.arange(n, dtype=torch.float64)[:, None]
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float64) / max(half, 1))
    angles = positions * freqs[None, :]
    table = torch.zeros(n, dim, dtype=torch.float64)
    table[:, 0::2] = torch.sin(angles)[:, : (dim + 1) // 2]
    table[:, 1::2] = torch.cos(angles)[:, : dim // 2]
    return table.to(dtype)


def sinusoidal_scalar_embedding(values: Tensor, dim: int) -> Tensor:
    """Sine/cosine features of scalar inputs (diffusion step indices)."""
    values = values.to(torch.float64).reshape(-1, 1)
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float64) / max(half, 1))
    angles = values * freqs[None, :]
    emb = torch.cat([torch.sin(angles), torch.cos(angles)], dim=-1)
    if emb.shape[-1] < dim:
        emb = torch.cat([emb, torch.zeros(emb.shape[0], dim - emb.shape[-1], dtype=emb.dtype)], dim=-1)
    return emb


class MultiHeadAttention(nn.Module):
    """Multi-head attention: per-head slices, concat, and an output projection."""

    def __init__(self, width: int, heads: int):
        super().__init__()
        if width % heads != 0:
            raise ValueError(f"width {width} not divisible by heads {heads}")
        self.width = width
        self.heads = heads
        self.w_q = nn.Linear(width, width, bias=False)
        self.w_k = nn.Linear(width, width, bias=False)
        self.w_v = nn.Linear(width, width, bias=False)
        self.w_out = nn.Linear(width, width, bias=False)

    def forward(self, tokens_q: Tensor, tokens_kv: Tensor) -> Tensor:
        if tokens_q.shape[-1] != self.width or tokens_kv.shape[-1] != self.width:
            raise ShapeMismatch(f"expected token width {self.width}")
        q, k, v = qkv_project(tokens_q, tokens_kv, self.w_q.weight.T, self.w_k.weight.T, self.w_v.weight.T)
        batch_shape = q.shape[:-2]
        d_head = self.width // self.heads

        def split(x: Tensor) -> Tensor:
            x = x.reshape(*batch_shape, x.shape[-2], self.heads, d_head)
            return x.transpose(-3, -2)  # (..., heads, tokens, d_head)

        out = scaled_dot_attention(split(q), split(k), split(v))
        out = out.transpose(-3, -2).reshape(*batch_shape, tokens_q.shape[-2], self.width)
        return self.w_out(out)


class TransformerLayer(nn.Module):
    """Post-norm transformer layer: attention and feed-forward, each with residual + LayerNorm."""

    def __init__(self, width: int, heads: int, ffn_mult: int = 2):
        super().__init__()
        self.attn = MultiHeadAttention(width, heads)
        self.norm1 = nn.LayerNorm(width)
        self.norm2 = nn.LayerNorm(width)
        self.ffn = nn.Sequential(
            nn.Linear(width, ffn_mult * width),
            nn.ReLU(),
            nn.Linear(ffn_mult * width, width),
        )

    def forward(self, x: Tensor, kv: Tensor | None = None) -> Tensor:
        kv = x if kv is None else kv
        x = self.norm1(x + self.attn(x, kv))
        x = self.norm2(x + self.ffn(x))
        return x


class TransformerStack(nn.Module):
    """L layers sharing one (query, key/value) routing pattern."""

    def __init__(self, layers: int, width: int, heads: int, ffn_mult: int = 2):
        super().__init__()
        self.layers = nn.ModuleList(TransformerLayer(width, heads, ffn_mult) for _ in range(layers))

    def forward(self, x: Tensor, kv: Tensor | None = None) -> Tensor:
        for layer in self.layers:
            x = layer(x, kv)
        return x


def init_parameters(module: nn.Module, generator: torch.Generator) -> None:
    """Deterministic re-initialization from an explicit generator (no global RNG).

    Linear layers get the standard kaiming/uniform scheme, LayerNorms identity,
    and any remaining bare parameters (learned tokens) a small normal init.
    """
    seen: set[int] = set()
    for m in module.modules():
        if isinstance(m, nn.Linear):
            nn.init.kaiming_uniform_(m.weight, a=math.sqrt(5), generator=generator)
            seen.add(id(m.weight))
            if m.bias is not None:
                fan_in = m.weight.shape[1]
                bound = 1.0 / math.sqrt(fan_in) if fan_in > 0 else 0.0
                nn.init.uniform_(m.bias, -bound, bound, generator=generator)
                seen.add(id(m.bias))
        elif isinstance(m, nn.LayerNorm):
            nn.init.ones_(m.weight)
            nn.init.zeros_(m.bias)
            seen.update((id(m.weight), id(m.bias)))
    for _, param in sorted(module.named_parameters(), key=lambda kv: kv[0]):
        if id(param) not in seen:
            nn.init.normal_(param, mean=0.0, std=0.02, generator=generator)
