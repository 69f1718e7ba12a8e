"""Scene-conditioned latent diffusion for 3D human motion prediction."""

from .config import RunConfig
from .domain import (MotionSequence, RngHandle, Sample, ScenePointCloud, SkeletonSpec,
                     center_sample, uncenter_sample, validate_sample)
from .synthdata import (DEFAULT_SKELETON, BehaviorKind, BehaviorSpec, RoomSpec,
                        generate_dataset, generate_motion, generate_scene,
                        read_dataset, write_dataset)

__version__ = "0.1.0"

__all__ = [
    "BehaviorKind",
    "BehaviorSpec",
    "DEFAULT_SKELETON",
    "MotionSequence",
    "RngHandle",
    "RoomSpec",
    "RunConfig",
    "Sample",
    "ScenePointCloud",
    "SkeletonSpec",
    "center_sample",
    "generate_dataset",
    "generate_motion",
    "generate_scene",
    "read_dataset",
    "uncenter_sample",
    "validate_sample",
    "write_dataset",
    "__version__",
]
