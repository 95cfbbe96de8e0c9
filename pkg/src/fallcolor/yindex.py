"""Yellowness index: normalized yellow/green point ratio per tree, the
mass-based ground-truth equivalent, band cropping, and estimate-vs-truth
validation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GREEN, YELLOW, ClassifiedCloud, ColoredPointCloud, TreeObservation
from .errors import InsufficientDataError, NoFoliageError, ValidationError
from .treeseg import SegmentationParams, heights


@dataclass(frozen=True)
class YellownessIndex:
    """(y - g) / (y + g): -1 fully green, +1 fully yellow."""

    value: float
    yellow_count: int
    green_count: int


def yellowness(classified: ClassifiedCloud) -> YellownessIndex:
    """Index over Yellow and Green labels only; Trunk/Unassigned are excluded."""
    y = classified.count(YELLOW)
    g = classified.count(GREEN)
    if y + g == 0:
        raise NoFoliageError("no Green or Yellow points; index undefined")
    return YellownessIndex((y - g) / (y + g), y, g)


def ground_truth_index(yellow_mass_g: float, green_mass_g: float) -> float:
    """Mass-based index from deleafed yellow/green leaf weights."""
    if yellow_mass_g < 0 or green_mass_g < 0:
        raise ValidationError("masses must be nonnegative")
    total = yellow_mass_g + green_mass_g
    if total == 0:
        raise NoFoliageError("both leaf masses are zero; index undefined")
    return (yellow_mass_g - green_mass_g) / total


def crop_band(cloud: ColoredPointCloud, low_height_m: float, high_height_m: float,
              up_axis: str = "x", up_sign: int = 1) -> ColoredPointCloud:
    """Keep points with height in [low, high); an empty result is fine."""
    if not low_height_m < high_height_m:
        raise ValidationError(
            f"band low {low_height_m} must be below high {high_height_m}")
    params = SegmentationParams(up_axis=up_axis, up_sign=up_sign)
    h = heights(cloud, params)
    return cloud.select((h >= low_height_m) & (h < high_height_m))


@dataclass
class ValidationSummary:
    r_squared: float
    residuals: dict[str, float]  # tree_id -> residual from the fitted line
    n_pairs: int


def validate(observations: list[TreeObservation]) -> ValidationSummary:
    """R-squared of estimated vs ground-truth index over paired observations.

    R-squared is that of the least-squares line relating the two (the squared
    Pearson correlation); a zero-variance side yields 0. Residuals are from
    the fitted line estimate = a + b * truth.
    """
    pairs = [(o.tree_id, o.week, o.index, o.ground_truth)
             for o in observations if o.ground_truth is not None]
    if len(pairs) < 3:
        raise InsufficientDataError(
            f"validation needs >= 3 paired observations, got {len(pairs)}")
    est = np.array([p[2] for p in pairs])
    truth = np.array([p[3] for p in pairs])
    var_e = float(np.var(est))
    var_t = float(np.var(truth))
    if var_e == 0.0 or var_t == 0.0:
        slope, intercept, r2 = 0.0, float(est.mean()), 0.0
    else:
        cov = float(np.mean((est - est.mean()) * (truth - truth.mean())))
        slope = cov / var_t
        intercept = float(est.mean()) - slope * float(truth.mean())
        r2 = cov * cov / (var_e * var_t)
    resid = est - (intercept + slope * truth)
    residuals = {f"{tid}:w{week}": float(r)
                 for (tid, week, _, _), r in zip(pairs, resid)}
    return ValidationSummary(r_squared=r2, residuals=residuals, n_pairs=len(pairs))


def first_zero_crossing(weeks, values) -> float | None:
    """Interpolated week at which an index series first reaches 0.

    Series are weekly samples; the crossing is linearly interpolated between
    the bracketing weeks. None when the series never reaches 0.
    """
    weeks = np.asarray(weeks, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return None
    if values[0] >= 0:
        return float(weeks[0])
    above = np.flatnonzero(values >= 0)
    if above.size == 0:
        return None
    i = int(above[0])
    w0, w1 = weeks[i - 1], weeks[i]
    v0, v1 = values[i - 1], values[i]
    return float(w0 + (0.0 - v0) / (v1 - v0) * (w1 - w0))
