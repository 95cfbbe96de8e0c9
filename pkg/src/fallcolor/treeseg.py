"""Foreground tree isolation: sky color filter, depth clip, ground strip
removal, and stride downsampling, applied in that fixed order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ColoredPointCloud
from .errors import EmptyCloudError, ValidationError

_UP_AXES = {"x": 0, "y": 1}


@dataclass(frozen=True)
class SegmentationParams:
    """Field-season segmentation constants; defaults are the published values."""

    sky_blue_threshold: int = 153
    max_depth_m: float = 3.0
    ground_band_m: float = 0.5
    downsample_stride: int = 10
    up_axis: str = "x"  # camera axis along tree height
    up_sign: int = 1

    def __post_init__(self):
        if not 0 <= self.sky_blue_threshold <= 255:
            raise ValidationError(
                f"sky_blue_threshold must be in [0, 255], got {self.sky_blue_threshold}")
        if self.max_depth_m <= 0:
            raise ValidationError(f"max_depth_m must be > 0, got {self.max_depth_m}")
        if self.ground_band_m < 0:
            raise ValidationError(f"ground_band_m must be >= 0, got {self.ground_band_m}")
        if self.downsample_stride < 1:
            raise ValidationError(f"stride must be >= 1, got {self.downsample_stride}")
        if self.up_axis not in _UP_AXES:
            raise ValidationError(f"up_axis must be 'x' or 'y', got {self.up_axis!r}")
        if self.up_sign not in (1, -1):
            raise ValidationError(f"up_sign must be +1 or -1, got {self.up_sign}")


def heights(cloud: ColoredPointCloud, params: SegmentationParams) -> np.ndarray:
    """Per-point height along the configured up axis."""
    return params.up_sign * cloud.xyz[:, _UP_AXES[params.up_axis]].astype(np.float64)


def remove_sky(cloud: ColoredPointCloud,
               params: SegmentationParams = SegmentationParams()) -> ColoredPointCloud:
    """Keep points with blue channel <= threshold (boundary value kept)."""
    return cloud.select(cloud.rgb[:, 2] <= params.sky_blue_threshold)


def clip_depth(cloud: ColoredPointCloud,
               params: SegmentationParams = SegmentationParams()) -> ColoredPointCloud:
    """Keep points with depth 0 < z <= max_depth_m."""
    z = cloud.xyz[:, 2]
    return cloud.select((z > 0) & (z <= params.max_depth_m))


def remove_ground(cloud: ColoredPointCloud,
                  params: SegmentationParams = SegmentationParams()) -> ColoredPointCloud:
    """Drop the ground strip: points within ground_band_m above the lowest point."""
    if cloud.n_points == 0:
        raise EmptyCloudError("remove_ground needs a nonempty cloud")
    h = heights(cloud, params)
    return cloud.select(h >= h.min() + params.ground_band_m)


def downsample(cloud: ColoredPointCloud,
               params: SegmentationParams = SegmentationParams()) -> ColoredPointCloud:
    """Keep points at indices 0, stride, 2*stride, ... of the current order."""
    return cloud.select(slice(None, None, params.downsample_stride))


def segment_tree(cloud: ColoredPointCloud,
                 params: SegmentationParams = SegmentationParams()) -> ColoredPointCloud:
    """Full chain: remove_sky -> clip_depth -> remove_ground -> downsample."""
    return downsample(remove_ground(clip_depth(remove_sky(cloud, params), params),
                                    params), params)
