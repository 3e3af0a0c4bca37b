"""Pipeline configuration: one JSON document, every field optional.

Defaults: v_low 30 deg/s, v_high 100 deg/s, history window 2, at most 3
correction rounds, threshold 4.5.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from gazeinterp.backend import ProviderConfig
from gazeinterp.errors import InputError
from gazeinterp.integration import SegmentationPolicy
from gazeinterp.parser import ParserConfig
from gazeinterp.prompts import PromptAssets
from gazeinterp.refinement import GAZE_DIMENSIONS, INTEGRATED_DIMENSIONS, LoopConfig


@dataclass(frozen=True)
class AblationSwitches:
    """Component switches. All on reproduces the full method."""

    symbolic_parser: bool = True
    hierarchical: bool = True
    self_correction: bool = True
    gaze_dimensions: tuple[str, ...] = GAZE_DIMENSIONS
    integrated_dimensions: tuple[str, ...] = INTEGRATED_DIMENSIONS


@dataclass(frozen=True)
class PipelineConfig:
    parser: ParserConfig = ParserConfig()
    invalid_rows: str = "reject"
    smoothing_window: int = 0
    window: int = 2
    loop: LoopConfig = LoopConfig()
    generation: ProviderConfig = ProviderConfig()
    embedding: ProviderConfig = ProviderConfig()
    prompts: PromptAssets = PromptAssets()
    segmentation: SegmentationPolicy = SegmentationPolicy()
    ablation: AblationSwitches = AblationSwitches()
    scene_metadata: dict[str, str] = field(default_factory=dict)
    output_dir: str = "out"
    record_timing: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.window < 0:
            raise InputError("window size W must be >= 0")
        if self.invalid_rows not in ("reject", "drop_invalid"):
            raise InputError(f"invalid_rows must be 'reject' or 'drop_invalid', got {self.invalid_rows!r}")
        if self.smoothing_window < 0:
            raise InputError("smoothing_window must be >= 0")


def _build(cls, data: Any, where: str):
    if not isinstance(data, dict):
        raise InputError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise InputError(f"{where}: unknown key(s) {sorted(unknown)}")
    try:
        if cls is ParserConfig:
            return ParserConfig.from_dict(data)
        kwargs = dict(data)
        for key in ("gaze_dimensions", "integrated_dimensions"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise InputError(f"{where}: {exc}") from None
        raise InputError(f"{where}: {exc}") from exc


_NESTED = {
    "parser": ParserConfig,
    "loop": LoopConfig,
    "generation": ProviderConfig,
    "embedding": ProviderConfig,
    "prompts": PromptAssets,
    "segmentation": SegmentationPolicy,
    "ablation": AblationSwitches,
}


def config_from_dict(data: dict, base_dir: str | Path | None = None) -> PipelineConfig:
    """Build a config; relative prompt-asset paths resolve against ``base_dir``."""
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object")
    kwargs = dict(data)
    if "prompts" in kwargs and base_dir is not None:
        kwargs["prompts"] = {
            k: (str(Path(base_dir) / v) if isinstance(v, str) and not Path(v).is_absolute() else v)
            for k, v in kwargs["prompts"].items()
        }
    for key, cls in _NESTED.items():
        if key in kwargs:
            kwargs[key] = _build(cls, kwargs[key], key)
    return _build(PipelineConfig, kwargs, "config")


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read config {str(path)!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config {str(path)!r} is not valid JSON: {exc}") from exc
    return config_from_dict(data, base_dir=path.parent)


def config_to_dict(config: PipelineConfig) -> dict:
    return json.loads(json.dumps(dataclasses.asdict(config)))
