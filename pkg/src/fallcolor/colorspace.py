"""sRGB to CIE-L*a*b* (D65, 2-degree observer) and HSV, plus channel summaries.

Array functions operate on (..., 3) float or uint8 channel data in [0, 255]
and are what the pipeline uses; the scalar wrappers match the single-color
contracts.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import ColoredPointCloud
from .errors import EmptyCloudError, ValidationError

# Linear sRGB -> XYZ for D65 white (X=95.047, Y=100, Z=108.883), 2-deg observer,
# derived from the IEC 61966-2-1 primaries at full float precision so that
# neutral inputs land exactly on the white axis (a* = b* = 0).
_RGB_TO_XYZ = np.array([
    [0.41245643908969226, 0.3575760776439089, 0.1804374832663989],
    [0.21267285140562256, 0.7151521552878178, 0.07217499330655956],
    [0.019333895582329303, 0.11919202588130294, 0.9503040785363677],
])
_WHITE = np.array([0.95047, 1.0, 1.08883])
_LAB_EPS = 216.0 / 24389.0
_LAB_KAPPA = 24389.0 / 27.0


class LabColor(NamedTuple):
    L: float
    a_star: float
    b_star: float


class HsvColor(NamedTuple):
    h: float  # degrees in [0, 360)
    s: float
    v: float


def _check_range(rgb: np.ndarray) -> None:
    if rgb.size and (rgb.min() < 0 or rgb.max() > 255):
        raise ValidationError("color channels must be within [0, 255]")


def _linearize(c01: np.ndarray) -> np.ndarray:
    return np.where(c01 <= 0.04045, c01 / 12.92, ((c01 + 0.055) / 1.055) ** 2.4)


# 8-bit inputs hit a lookup table; identical values to the formula.
_LINEAR_LUT = _linearize(np.arange(256, dtype=np.float64) / 255.0)


def rgb_to_lab(rgb) -> np.ndarray:
    """(..., 3) channels in [0, 255] -> (..., 3) stacked [L, a*, b*]."""
    if isinstance(rgb, np.ndarray) and rgb.dtype == np.uint8:
        lin = _LINEAR_LUT[rgb]
    else:
        rgb = np.asarray(rgb, dtype=np.float64)
        _check_range(rgb)
        lin = _linearize(rgb / 255.0)
    xyz = lin @ _RGB_TO_XYZ.T
    t = xyz / _WHITE
    f = np.where(t > _LAB_EPS, np.cbrt(t), (_LAB_KAPPA * t + 16.0) / 116.0)
    L = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return np.stack([L, a, b], axis=-1)


def rgb_to_hsv(rgb) -> np.ndarray:
    """(..., 3) channels in [0, 255] -> (..., 3) stacked [h_deg, s, v].

    Hexcone model; hue of achromatic colors is 0 by convention, and hue is
    invariant under uniform scaling of the input channels.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    _check_range(rgb)
    c = rgb / 255.0
    v = c.max(axis=-1)
    delta = v - c.min(axis=-1)
    r, g, b = c[..., 0], c[..., 1], c[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where(v == r, (g - b) / delta,
                     np.where(v == g, 2.0 + (b - r) / delta, 4.0 + (r - g) / delta))
        s = np.where(v > 0, delta / v, 0.0)
    h = np.where(delta > 0, (h * 60.0) % 360.0, 0.0)
    h = np.where(h >= 360.0, 0.0, h)  # -eps % 360 can round up to exactly 360
    return np.stack([h, s, v], axis=-1)


def srgb_to_lab(r: float, g: float, b: float) -> LabColor:
    """One color in [0, 255] per channel to CIE-L*a*b* under D65."""
    return LabColor(*rgb_to_lab(np.array([r, g, b], dtype=np.float64)))


def srgb_to_hsv(r: float, g: float, b: float) -> HsvColor:
    """One color in [0, 255] per channel to hexcone HSV."""
    return HsvColor(*rgb_to_hsv(np.array([r, g, b], dtype=np.float64)))


def cloud_ab(cloud: ColoredPointCloud) -> np.ndarray:
    """(n, 2) a*/b* values of all points, the clustering feature plane."""
    return rgb_to_lab(cloud.rgb)[:, 1:]


@dataclass
class DistributionSummary:
    """Normalized histogram of one color channel over a cloud."""

    channel: str
    bin_edges: np.ndarray
    densities: np.ndarray

    def __post_init__(self):
        widths = np.diff(self.bin_edges)
        integral = float(np.sum(self.densities * widths))
        if np.any(self.densities < 0) or abs(integral - 1.0) > 1e-9:
            raise ValidationError(f"densities must be nonnegative with unit integral, "
                                  f"got integral {integral}")


_CHANNELS = ("hue", "a_star", "b_star")


def summarize_channel(cloud: ColoredPointCloud, channel: str,
                      bins: int) -> DistributionSummary:
    """Density histogram of hue, a*, or b* over all points of a cloud.

    Hue uses the fixed [0, 360) range; a*/b* span the observed data range.
    """
    if channel not in _CHANNELS:
        raise ValidationError(f"channel must be one of {_CHANNELS}, got {channel!r}")
    if bins < 2:
        raise ValidationError(f"bins must be >= 2, got {bins}")
    if cloud.n_points == 0:
        raise EmptyCloudError("cannot summarize an empty cloud")
    if channel == "hue":
        values = rgb_to_hsv(cloud.rgb)[:, 0]
        hist_range = (0.0, 360.0)
    else:
        lab = rgb_to_lab(cloud.rgb)
        values = lab[:, 1] if channel == "a_star" else lab[:, 2]
        lo, hi = float(values.min()), float(values.max())
        if hi == lo:  # constant channel still needs a nonzero-width support
            lo, hi = lo - 0.5, hi + 0.5
        hist_range = (lo, hi)
    densities, edges = np.histogram(values, bins=bins, range=hist_range, density=True)
    return DistributionSummary(channel, edges, densities)
