"""Prediction-quality metrics: per-joint position errors at fixed horizons,
displacement errors, and repeated-run aggregation with 95% confidence
intervals.

All errors are reported in millimeters. The per-joint distance defaults to
Euclidean (the conventional per-joint position error); an L1 option is
exposed for comparisons that require it — results must state which was used.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import MotionSequence
from .errors import InsufficientRuns, ShapeMismatch

STANDARD_HORIZONS = (0.5, 1.0, 1.5, 2.0, 3.0)
Z_95 = 1.96  # normal-approximation quantile; documented choice at n=20


def _joint_distances(pred: np.ndarray, gt: np.ndarray, distance: str) -> np.ndarray:
    if pred.shape != gt.shape:
        raise ShapeMismatch(f"prediction shape {pred.shape} != ground truth {gt.shape}")
    diff = pred - gt
    if distance == "l2":
        return np.linalg.norm(diff, axis=-1)
    if distance == "l1":
        return np.abs(diff).sum(axis=-1)
    raise ValueError(f"unknown distance {distance!r}")


def pose_error(pred: MotionSequence, gt: MotionSequence, upto_frame: int | None = None,
               distance: str = "l2") -> float:
    """Mean per-joint position error (mm) over frames 1..upto_frame and all joints."""
    upto = pred.n_frames if upto_frame is None else upto_frame
    if not 1 <= upto <= pred.n_frames:
        raise ShapeMismatch(f"upto_frame {upto} outside [1, {pred.n_frames}]")
    d = _joint_distances(pred.frames[:upto], gt.frames[:upto], distance)
    return float(d.mean() * 1000.0)


def path_error(pred: MotionSequence, gt: MotionSequence, root_index: int,
               upto_frame: int | None = None, distance: str = "l2") -> float:
    """Pose error restricted to the trajectory joint (mm)."""
    upto = pred.n_frames if upto_frame is None else upto_frame
    if not 1 <= upto <= pred.n_frames:
        raise ShapeMismatch(f"upto_frame {upto} outside [1, {pred.n_frames}]")
    d = _joint_distances(pred.frames[:upto, root_index:root_index + 1],
                         gt.frames[:upto, root_index:root_index + 1], distance)
    return float(d.mean() * 1000.0)


def ade(pred: MotionSequence, gt: MotionSequence, distance: str = "l2") -> float:
    """Average displacement error (mm): mean over all frames and joints."""
    return float(_joint_distances(pred.frames, gt.frames, distance).mean() * 1000.0)


def fde(pred: MotionSequence, gt: MotionSequence, distance: str = "l2") -> float:
    """Final displacement error (mm): mean over joints at the last frame only."""
    return float(_joint_distances(pred.frames[-1:], gt.frames[-1:], distance).mean() * 1000.0)


def horizons_for(n_future: int, fps: float) -> list[float]:
    """Standard horizons (seconds) that fit inside the prediction window."""
    out = []
    for h in STANDARD_HORIZONS:
        frames = int(round(h * fps))
        if 1 <= frames <= n_future:
            out.append(h)
    return out


def sample_metrics(pred: MotionSequence, gt: MotionSequence, root_index: int,
                   distance: str = "l2") -> dict[str, float]:
    """Flat metric dict for one (prediction, ground truth) pair."""
    fps = gt.fps
    out: dict[str, float] = {}
    for h in horizons_for(gt.n_frames, fps):
        upto = int(round(h * fps))
        out[f"pose_mm@{h}s"] = pose_error(pred, gt, upto, distance)
        out[f"path_mm@{h}s"] = path_error(pred, gt, root_index, upto, distance)
    out["ade_mm"] = ade(pred, gt, distance)
    out["fde_mm"] = fde(pred, gt, distance)
    return out


@dataclass
class EvalReport:
    """Aggregated metrics over repeated evaluation runs."""

    pose_error_by_horizon: dict[float, float]
    path_error_by_horizon: dict[float, float]
    ade: float
    fde: float
    n_runs: int
    ci95: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        flat: dict[str, float | int] = {"n_runs": self.n_runs}
        for h, v in sorted(self.pose_error_by_horizon.items()):
            flat[f"pose_mm@{h}s"] = v
        for h, v in sorted(self.path_error_by_horizon.items()):
            flat[f"path_mm@{h}s"] = v
        flat["ade_mm"] = self.ade
        flat["fde_mm"] = self.fde
        for key, v in sorted(self.ci95.items()):
            flat[f"ci95:{key}"] = v
        return flat


def aggregate_runs(per_run_reports: list[dict[str, float]], n: int | None = None) -> EvalReport:
    """Mean and 95% CI half-width (1.96 * sd / sqrt(n), sample sd) per metric."""
    runs = len(per_run_reports)
    if runs < 2:
        raise InsufficientRuns(f"need >= 2 runs to form a confidence interval, got {runs}")
    if n is not None and n != runs:
        raise InsufficientRuns(f"expected {n} runs, got {runs}")
    keys = sorted(per_run_reports[0].keys())
    means: dict[str, float] = {}
    ci: dict[str, float] = {}
    for key in keys:
        values = np.array([r[key] for r in per_run_reports], dtype=np.float64)
        means[key] = float(values.mean())
        ci[key] = float(Z_95 * values.std(ddof=1) / np.sqrt(runs))
    pose = {float(k.split("@")[1][:-1]): v for k, v in means.items() if k.startswith("pose_mm@")}
    path = {float(k.split("@")[1][:-1]): v for k, v in means.items() if k.startswith("path_mm@")}
    return EvalReport(
        pose_error_by_horizon=pose,
        path_error_by_horizon=path,
        ade=means.get("ade_mm", 0.0),
        fde=means.get("fde_mm", 0.0),
        n_runs=runs,
        ci95=ci,
    )
