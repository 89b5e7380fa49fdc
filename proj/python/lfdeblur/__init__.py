"""Light field deblurring core.

Light fields are numpy arrays shaped (U, V, X, Y, C): u indexes horizontal
parallax (shifts along y), v vertical parallax (shifts along x), x is the
image row and y the column. Values are nominally in [0, 1].
"""

from _lfdeblur import (
    CameraPose,
    CameraTrajectory,
    LfdeblurError,
    ModelConfig,
    checkpoint_config,
    count_params,
    epi,
    evaluate_pair,
    infer,
    lmse_gray,
    load_scene,
    micro_lens,
    ncc,
    psnr,
    sai,
    sample_trajectory,
    save_scene,
    ssim_gray,
    synthesize_blur,
)

__all__ = [
    "CameraPose",
    "CameraTrajectory",
    "LfdeblurError",
    "ModelConfig",
    "checkpoint_config",
    "count_params",
    "epi",
    "evaluate_pair",
    "infer",
    "lmse_gray",
    "load_scene",
    "micro_lens",
    "ncc",
    "psnr",
    "sai",
    "sample_trajectory",
    "save_scene",
    "ssim_gray",
    "synthesize_blur",
]
