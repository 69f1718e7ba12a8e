"""Deterministic checkpoint container.

A checkpoint is one canonical-JSON file (sorted keys, fixed separators,
base64-encoded little-endian float32 arrays), so save -> load -> save is
byte-identical — unlike zip-based containers, which embed timestamps.
Optimizer moments ride along so training can resume mid-run exactly.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .errors import IoFailure

FORMAT = "scenediff-checkpoint"
FORMAT_VERSION = 1
STAGES = ("vae", "diffusion")


def _encode_array(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr)
    if not np.isfinite(arr).all():
        raise IoFailure("refusing to serialize non-finite parameter array")
    return {
        "shape": list(arr.shape),
        "dtype": str(arr.dtype),
        "data": base64.b64encode(arr.astype(arr.dtype.newbyteorder("<")).tobytes()).decode("ascii"),
    }


def _decode_array(spec: dict) -> np.ndarray:
    arr = np.frombuffer(base64.b64decode(spec["data"]), dtype=np.dtype(spec["dtype"]).newbyteorder("<"))
    arr = arr.reshape(spec["shape"]).astype(spec["dtype"])
    if not np.isfinite(arr).all():
        raise IoFailure("checkpoint contains non-finite parameter array")
    return arr


@dataclass
class Checkpoint:
    stage: str
    step: int
    config: dict
    params: dict[str, np.ndarray]
    schedule: dict | None = None
    optimizer: dict | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown checkpoint stage {self.stage!r}")


def module_arrays(module: nn.Module, prefix: str) -> dict[str, np.ndarray]:
    """Named float32 parameter arrays of a module, prefixed for the shared container."""
    return {
        f"{prefix}.{name}": p.detach().cpu().numpy().astype(np.float32)
        for name, p in module.named_parameters()
    }


def load_module_arrays(module: nn.Module, params: dict[str, np.ndarray], prefix: str) -> None:
    dtype = next(module.parameters()).dtype
    with torch.no_grad():
        for name, p in module.named_parameters():
            key = f"{prefix}.{name}"
            if key not in params:
                raise IoFailure(f"checkpoint is missing parameter {key}")
            arr = params[key]
            if tuple(arr.shape) != tuple(p.shape):
                raise IoFailure(f"parameter {key} has shape {arr.shape}, expected {tuple(p.shape)}")
            p.copy_(torch.as_tensor(arr, dtype=dtype))


def optimizer_arrays(optimizer: torch.optim.Optimizer, param_names: list[str]) -> dict:
    """AdamW state keyed by the same names as the parameter arrays."""
    state: dict = {}
    params = [p for group in optimizer.param_groups for p in group["params"]]
    if len(params) != len(param_names):
        raise ValueError("optimizer parameter count does not match provided names")
    for name, p in zip(param_names, params):
        s = optimizer.state.get(p)
        if not s:
            continue
        state[name] = {
            "step": int(s["step"]),
            "exp_avg": _encode_array(s["exp_avg"].numpy().astype(np.float32)),
            "exp_avg_sq": _encode_array(s["exp_avg_sq"].numpy().astype(np.float32)),
        }
    return state


def load_optimizer_arrays(optimizer: torch.optim.Optimizer, param_names: list[str],
                          state: dict) -> None:
    params = [p for group in optimizer.param_groups for p in group["params"]]
    for name, p in zip(param_names, params):
        if name not in state:
            continue
        s = state[name]
        optimizer.state[p] = {
            "step": torch.tensor(float(s["step"])),
            "exp_avg": torch.as_tensor(_decode_array(s["exp_avg"]), dtype=p.dtype),
            "exp_avg_sq": torch.as_tensor(_decode_array(s["exp_avg_sq"]), dtype=p.dtype),
        }


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> Path:
    path = Path(path)
    doc = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "stage": ckpt.stage,
        "step": ckpt.step,
        "config": ckpt.config,
        "schedule": ckpt.schedule,
        "params": {name: _encode_array(arr) for name, arr in sorted(ckpt.params.items())},
        "optimizer": ckpt.optimizer,
        "extra": ckpt.extra,
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write checkpoint {path}: {exc}") from exc
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read checkpoint {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoFailure(f"checkpoint {path} is not valid JSON: {exc}") from exc
    if doc.get("format") != FORMAT:
        raise IoFailure(f"{path} is not a {FORMAT} file")
    if doc.get("version") != FORMAT_VERSION:
        raise IoFailure(f"unrecognized checkpoint version {doc.get('version')!r}")
    return Checkpoint(
        stage=doc["stage"],
        step=doc["step"],
        config=doc["config"],
        params={name: _decode_array(spec) for name, spec in doc["params"].items()},
        schedule=doc.get("schedule"),
        optimizer=doc.get("optimizer"),
        extra=doc.get("extra", {}),
    )
