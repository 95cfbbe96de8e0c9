"""Run configuration: one dotted-key text document, fully defaulted to the
published pipeline constants (blue 153, 3 m depth, 0.5 m band, stride 10,
20 clusters, 2023 merge windows, GBM lr 0.1 / depth 1 / 100 trees).

Syntax: `key.path = value` per line; values are numbers, quoted or bare
strings, or [comma, separated, lists]; '#' starts a comment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .cluster import WINDOWS_2023, MergeWindows, Window
from .core import FeatureSchema
from .errors import ParseError, ValidationError
from .gboost import GbmHyperparams
from .treeseg import SegmentationParams


def _parse_value(token: str, lineno: int):
    token = token.strip()
    if token.startswith("[") and token.endswith("]"):
        inner = token[1:-1].strip()
        if not inner:
            return []
        return [_parse_value(t, lineno) for t in inner.split(",")]
    if token.startswith('"') and token.endswith('"') and len(token) >= 2:
        return token[1:-1]
    lowered = token.lower()
    if lowered in ("inf", "+inf"):
        return math.inf
    if lowered == "-inf":
        return -math.inf
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        pass
    if not token:
        raise ParseError("empty value", line=lineno)
    return token  # bare string


def parse_config_text(text: str) -> dict:
    """Flat dict of dotted keys -> parsed values."""
    out: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ParseError(f"expected 'key = value', got {raw!r}", line=lineno)
        key = key.strip()
        if not key:
            raise ParseError("missing key", line=lineno)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", line=lineno)
        out[key] = _parse_value(value, lineno)
    return out


def _window_from_keys(cfg: dict, name: str, default: Window) -> Window:
    bounds = {"a_min": default.a_min, "a_max": default.a_max,
              "b_min": default.b_min, "b_max": default.b_max}
    for axis in ("a", "b"):
        pair = cfg.pop(f"{name}.{axis}", None)
        if pair is not None:
            if not isinstance(pair, list) or len(pair) != 2:
                raise ValidationError(f"{name}.{axis} must be [min, max]")
            bounds[f"{axis}_min"], bounds[f"{axis}_max"] = map(float, pair)
        for side in ("min", "max"):
            v = cfg.pop(f"{name}.{axis}_{side}", None)
            if v is not None:
                bounds[f"{axis}_{side}"] = float(v)
    return Window(**bounds)


_UP_SIGNS = {"+": 1, "-": -1, 1: 1, -1: -1}


@dataclass
class RunConfig:
    """Everything a batch run needs; exactly one classification method active."""

    seed: int = 0
    method: str = "gbm"  # kmeans | gbm
    out_dir: str = "out"
    workers: int = 1
    segmentation: SegmentationParams = field(default_factory=SegmentationParams)
    windows: MergeWindows = field(default_factory=lambda: WINDOWS_2023)
    n_clusters: int = 20
    schema: FeatureSchema = field(default_factory=FeatureSchema)
    gbm: GbmHyperparams = field(default_factory=GbmHyperparams)
    gbm_model_path: str | None = None
    gbm_split_fraction: float = 0.8
    gbm_grid: list[GbmHyperparams] | None = None
    band_low_m: float = 0.8
    band_high_m: float = 1.6
    timing_runs: int = 5
    timing_warmup: int = 1

    def __post_init__(self):
        if self.method not in ("kmeans", "gbm"):
            raise ValidationError(f"method must be kmeans or gbm, got {self.method!r}")
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")
        if not self.band_low_m < self.band_high_m:
            raise ValidationError("band.low_m must be below band.high_m")
        if self.timing_runs < 5:
            raise ValidationError("validate.timing_runs must be >= 5")


def _pop_typed(cfg: dict, key: str, default, caster):
    if key not in cfg:
        return default
    try:
        return caster(cfg.pop(key))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad value for {key}: {exc}") from exc


def config_from_dict(cfg: dict) -> RunConfig:
    cfg = dict(cfg)
    seg = SegmentationParams(
        sky_blue_threshold=_pop_typed(cfg, "segmentation.sky_blue_threshold", 153, int),
        max_depth_m=_pop_typed(cfg, "segmentation.max_depth_m", 3.0, float),
        ground_band_m=_pop_typed(cfg, "segmentation.ground_band_m", 0.5, float),
        downsample_stride=_pop_typed(cfg, "segmentation.downsample_stride", 10, int),
        up_axis=_pop_typed(cfg, "segmentation.up_axis", "x", str),
        up_sign=_UP_SIGNS.get(cfg.pop("segmentation.up_sign", "+"), 0),
    )
    windows = MergeWindows(
        green=_window_from_keys(cfg, "green", WINDOWS_2023.green),
        yellow=_window_from_keys(cfg, "yellow", WINDOWS_2023.yellow),
        trunk=_window_from_keys(cfg, "trunk", WINDOWS_2023.trunk),
    )
    channels = cfg.pop("features.channels", None)
    schema = FeatureSchema(
        channels=tuple(channels) if channels is not None else FeatureSchema().channels,
        neighbor_k=_pop_typed(cfg, "features.neighbor_k", 30, int),
    )
    seed = _pop_typed(cfg, "seed", 0, int)
    gbm = GbmHyperparams(
        learning_rate=_pop_typed(cfg, "gbm.learning_rate", 0.1, float),
        max_depth=_pop_typed(cfg, "gbm.max_depth", 1, int),
        n_estimators=_pop_typed(cfg, "gbm.n_estimators", 100, int),
        seed=seed,
    )
    grid = None
    grid_axes = {}
    for axis, caster in (("learning_rate", float), ("max_depth", int),
                         ("n_estimators", int)):
        vals = cfg.pop(f"gbm.grid.{axis}", None)
        if vals is not None:
            if not isinstance(vals, list) or not vals:
                raise ValidationError(f"gbm.grid.{axis} must be a nonempty list")
            grid_axes[axis] = [caster(v) for v in vals]
    if grid_axes:
        lrs = grid_axes.get("learning_rate", [gbm.learning_rate])
        depths = grid_axes.get("max_depth", [gbm.max_depth])
        ests = grid_axes.get("n_estimators", [gbm.n_estimators])
        grid = [GbmHyperparams(lr, d, n, seed)
                for lr in lrs for d in depths for n in ests]

    config = RunConfig(
        seed=seed,
        method=_pop_typed(cfg, "method", "gbm", str),
        out_dir=_pop_typed(cfg, "out_dir", "out", str),
        workers=_pop_typed(cfg, "workers", 1, int),
        segmentation=seg,
        windows=windows,
        n_clusters=_pop_typed(cfg, "cluster.n_clusters", 20, int),
        schema=schema,
        gbm=gbm,
        gbm_model_path=_pop_typed(cfg, "gbm.model_path", None, str),
        gbm_split_fraction=_pop_typed(cfg, "gbm.split_fraction", 0.8, float),
        gbm_grid=grid,
        band_low_m=_pop_typed(cfg, "band.low_m", 0.8, float),
        band_high_m=_pop_typed(cfg, "band.high_m", 1.6, float),
        timing_runs=_pop_typed(cfg, "validate.timing_runs", 5, int),
        timing_warmup=_pop_typed(cfg, "validate.warmup_runs", 1, int),
    )
    if cfg:
        raise ValidationError(f"unknown config keys: {sorted(cfg)}")
    return config


def load_config(path) -> RunConfig:
    return config_from_dict(parse_config_text(Path(path).read_text()))
